//! Holomorphic semigroups generated by the four fractional Black-Scholes
//! operators, and the classical `alpha = 1` log-normal kernel.
//!
//! `T(w) f = exp(w h_B)(J) f`, realized as the multiplier `e^{w h_B(delta + iu)}`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direct::{cell_weights, multiply_power, rl_derivative, weyl_derivative, FracOrder};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Warning};
use crate::multiplier::{apply_multiplier, apply_symbol, symbol_of_generator, GeneratorKind, GeneratorSpec};
use crate::quad::GaussLegendre;
use crate::special::{check_finite, gamma_real, ComplexScalar};

/// Largest admissible multiplier magnitude `|e^{w h}|`.
pub const MULTIPLIER_CAP: f64 = 1e12;

/// Margin kept inside the sector by `evolve`.
pub const SECTOR_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorAngle {
    pub theta: f64,
}

impl SectorAngle {
    /// `pi (1/2 - |alpha - n|)`, or `pi/2` for the mixed generator.
    pub fn of(spec: &GeneratorSpec) -> Self {
        let theta = match spec.kind {
            GeneratorKind::Mixed => PI / 2.0,
            _ => PI * (0.5 - (spec.alpha - spec.n() as f64).abs()),
        };
        Self { theta }
    }

    pub fn contains(&self, w: ComplexScalar, margin: f64) -> bool {
        w == ComplexScalar::new(0.0, 0.0) || w.arg().abs() <= self.theta - margin
    }
}

/// `max_k Re(w h_B(delta + i u_k))` over the grid frequencies with `|u_k| <= u_cut`.
pub fn max_log_multiplier(
    spec: &GeneratorSpec,
    grid: &crate::grid::LogGrid,
    w: ComplexScalar,
    u_cut: f64,
) -> Result<f64> {
    let h = symbol_of_generator(spec)?;
    let hv = h.values_on_line(grid, spec.delta())?;
    Ok(hv
        .iter()
        .enumerate()
        .filter(|(k, _)| grid.frequency(*k).abs() <= u_cut)
        .map(|(_, v)| (w * v).re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Whether `|e^{w h_B}|` stays below `MULTIPLIER_CAP` up to `u_cut`; usable for
/// any `w`, inside the sector or not.
pub fn multiplier_screen(
    spec: &GeneratorSpec,
    grid: &crate::grid::LogGrid,
    w: ComplexScalar,
    u_cut: f64,
) -> Result<bool> {
    Ok(max_log_multiplier(spec, grid, w, u_cut)? <= MULTIPLIER_CAP.ln())
}

/// `T(w) f`.
pub fn evolve(spec: &GeneratorSpec, f: &GridFunction, w: ComplexScalar) -> Result<GridFunction> {
    check_finite(w, "time")?;
    spec.validate()?;
    if w == ComplexScalar::new(0.0, 0.0) {
        return Ok(f.clone());
    }
    let sector = SectorAngle::of(spec);
    if !sector.contains(w, SECTOR_MARGIN) {
        return Err(Error::Contract(format!(
            "|arg w| = {} exceeds the sector half-angle {} minus margin {SECTOR_MARGIN}",
            w.arg().abs(),
            sector.theta
        )));
    }
    let h = symbol_of_generator(spec)?;
    let delta = spec.delta();
    let hv = h.values_on_line(&f.grid, delta)?;
    let max_re = hv.iter().map(|v| (w * v).re).fold(f64::NEG_INFINITY, f64::max);
    if max_re > MULTIPLIER_CAP.ln() {
        return Err(Error::Stability(format!(
            "multiplier magnitude e^{max_re:.3} exceeds {MULTIPLIER_CAP:e}"
        )));
    }
    let m: Vec<ComplexScalar> = hv.iter().map(|v| (w * v).exp()).collect();
    let mut out = apply_multiplier(f, &m, delta)?;
    if max_re > 1e-9 {
        out.warnings.push(Warning::Growth {
            max_log_multiplier: max_re,
        });
    }
    Ok(out)
}

/// `(4 pi w)^{-1/2} int exp(-(log x - log s)^2 / (4w)) f(s) ds / s` by the
/// rectangle rule on the grid.
pub fn classical_kernel_apply(f: &GridFunction, w: ComplexScalar) -> Result<GridFunction> {
    check_finite(w, "time")?;
    if !(w.re > 0.0) {
        return Err(Error::Contract(format!("classical kernel needs Re w > 0, got {w}")));
    }
    let n = f.len() as i64;
    let dy = f.grid.dy();
    let norm = 1.0 / (4.0 * PI * w).sqrt();
    let kernel: Vec<ComplexScalar> = (-(n - 1)..n)
        .map(|m| {
            let s = m as f64 * dy;
            (-(s * s) / (4.0 * w)).exp() * norm * dy
        })
        .collect();
    let values = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = ComplexScalar::new(0.0, 0.0);
            for (i, v) in f.values.iter().enumerate() {
                if *v != ComplexScalar::new(0.0, 0.0) {
                    acc += kernel[(j - i as i64 + n - 1) as usize] * v;
                }
            }
            acc
        })
        .collect();
    Ok(f.with_values(values))
}

/// Slow oracle for `T(w) f` at selected points: the transform is summed
/// directly at Gauss-Legendre frequencies and inverted by quadrature, with no
/// FFT and no grid frequencies involved.
pub fn evolve_direct_quadrature(
    spec: &GeneratorSpec,
    f: &GridFunction,
    w: ComplexScalar,
    xs: &[f64],
) -> Result<Vec<ComplexScalar>> {
    spec.validate()?;
    let h = symbol_of_generator(spec)?;
    let delta = spec.delta();
    let grid = f.grid;
    let dy = grid.dy();
    let samples: Vec<(f64, ComplexScalar)> = f
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != ComplexScalar::new(0.0, 0.0))
        .map(|(j, v)| (grid.y(j), v * (delta * grid.y(j)).exp() * dy))
        .collect();
    let y_extent = samples
        .iter()
        .map(|s| s.0.abs())
        .chain(xs.iter().map(|x| x.ln().abs()))
        .fold(0.0, f64::max);
    // cut-off where the multiplier falls below e^{-40}
    let mut u_cut = 1.0;
    while (w * h.eval(ComplexScalar::new(delta, u_cut))?).re > -40.0
        || (w * h.eval(ComplexScalar::new(delta, -u_cut))?).re > -40.0
    {
        u_cut *= 1.25;
        if u_cut > 1e5 {
            return Err(Error::Stability("semigroup multiplier does not decay".into()));
        }
    }
    let panel = 1.0 / (1.0 + y_extent);
    // even count puts a panel edge at u = 0, where z^{2 alpha} has its kink
    let panels = 2 * (u_cut / panel).ceil() as usize;
    let width = 2.0 * u_cut / panels as f64;
    let gl = GaussLegendre::sixteen();
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = -u_cut + (p as f64 + 0.5) * width;
            gl.nodes
                .iter()
                .zip(&gl.weights)
                .map(move |(&x, &wt)| (mid + 0.5 * width * x, 0.5 * width * wt))
        })
        .collect();
    let weighted: Vec<ComplexScalar> = nodes
        .par_iter()
        .map(|&(u, wt)| {
            let spectrum: ComplexScalar = samples
                .iter()
                .map(|(y, v)| v * ComplexScalar::from_polar(1.0, u * y))
                .sum();
            let m = (w * h.eval(ComplexScalar::new(delta, u))?).exp();
            Ok(m * spectrum * wt)
        })
        .collect::<Result<_>>()?;
    Ok(xs
        .iter()
        .map(|&x| {
            let y = x.ln();
            let s: ComplexScalar = nodes
                .iter()
                .zip(&weighted)
                .map(|((u, _), v)| v * ComplexScalar::from_polar(1.0, -u * y))
                .sum();
            s * (-delta * y).exp() / (2.0 * PI)
        })
        .collect())
}

/// Trajectory `u(t) = T(t) f` at a list of times.
#[derive(Debug, Clone)]
pub struct SemigroupSolution {
    pub spec: GeneratorSpec,
    pub datum: GridFunction,
    pub times: Vec<ComplexScalar>,
    pub states: Vec<GridFunction>,
    pub diagnostics: Vec<Vec<Warning>>,
}

impl SemigroupSolution {
    /// Long-format CSV `t,x,re_u,im_u` (real times).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,re_u,im_u")?;
        for (t, state) in self.times.iter().zip(&self.states) {
            for (j, v) in state.values.iter().enumerate() {
                writeln!(w, "{:?},{:?},{:?},{:?}", t.re, state.grid.x(j), v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Solves `u' = B u`, `u(0) = f` at the given (ascending, positive) times.
pub fn solve_acp(spec: &GeneratorSpec, f: &GridFunction, times: &[f64]) -> Result<SemigroupSolution> {
    if times.is_empty() {
        return Err(Error::Contract("no output times".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Contract("times must be positive and finite".into()));
    }
    if times.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::Contract("times must be sorted ascending".into()));
    }
    let states: Vec<GridFunction> = times
        .par_iter()
        .map(|&t| evolve(spec, f, ComplexScalar::new(t, 0.0)))
        .collect::<Result<_>>()?;
    let diagnostics = states.iter().map(|s| s.warnings.clone()).collect();
    Ok(SemigroupSolution {
        spec: *spec,
        datum: f.clone(),
        times: times.iter().map(|&t| ComplexScalar::new(t, 0.0)).collect(),
        states,
        diagnostics,
    })
}

/// `(J + eps)^alpha f` for `alpha in (0, 1)` from the integral
///
/// ```text
/// -1/Gamma(1 - alpha) int_0^inf r^{-alpha} e^{-eps r} [g'(y + r) - eps g(y + r)] dr,   g(y) = f(e^y),
/// ```
///
/// by product trapezoid in `r` against exact moments of `r^{-alpha}`; `g'` by
/// centered differences. Samples past `x_max` are taken as zero.
pub fn balakrishnan_apply(f: &GridFunction, alpha: f64, epsilon: f64) -> Result<GridFunction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Contract(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Contract(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let n = f.len();
    let dy = f.grid.dy();
    let g = &f.values;
    let phi: Vec<ComplexScalar> = (0..n)
        .map(|j| {
            let d = if j == 0 {
                (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * dy)
            } else if j == n - 1 {
                (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * dy)
            } else {
                (g[j + 1] - g[j - 1]) / (2.0 * dy)
            };
            d - epsilon * g[j]
        })
        .collect();
    // node weights c_m for r = m dy, from cells [m dy, (m+1) dy]
    let a1 = 1.0 - alpha;
    let mut c = vec![0.0; n];
    for m in 0..n - 1 {
        let (w_far, w_near) = cell_weights(a1, (m + 1) as f64 * dy, dy);
        c[m] += w_near;
        c[m + 1] += w_far;
    }
    let decay: Vec<f64> = (0..n).map(|m| (-epsilon * m as f64 * dy).exp()).collect();
    let scale = -1.0 / gamma_real(1.0 - alpha)?;
    let values = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = ComplexScalar::new(0.0, 0.0);
            for m in 0..n - j {
                acc += phi[j + m] * (c[m] * decay[m]);
            }
            acc * scale
        })
        .collect();
    let mut out = f.with_values(values);
    let peak = phi.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak > 0.0 && phi[n - 1].norm() > 1e-8 * peak {
        out.warnings.push(Warning::Tail {
            estimate: phi[n - 1].norm(),
            relative: phi[n - 1].norm() / peak,
        });
    }
    Ok(out)
}

/// `|dT/d(conj w)| / |T(w) f|` from centered differences of step `eta`,
/// in the grid `L^2` norm.
pub fn cauchy_riemann_residual(spec: &GeneratorSpec, f: &GridFunction, w: ComplexScalar, eta: f64) -> Result<f64> {
    let i = ComplexScalar::i();
    let at = |dw: ComplexScalar| evolve(spec, f, w + dw);
    let dx = at(ComplexScalar::new(eta, 0.0))?.sub(&at(ComplexScalar::new(-eta, 0.0))?)?;
    let dyy = at(i * eta)?.sub(&at(-i * eta)?)?;
    // d/d(conj w) = (d/da + i d/db) / 2
    let dbar = dx.add(&dyy.scale(i))?.scale(ComplexScalar::new(1.0 / (4.0 * eta), 0.0));
    Ok(dbar.norm_l2() / evolve(spec, f, w)?.norm_l2())
}

/// `du/dt` at real `t` by centered differences with one Richardson step.
pub fn time_derivative(spec: &GeneratorSpec, f: &GridFunction, t: f64, h: f64) -> Result<GridFunction> {
    if !(t > h) {
        return Err(Error::Contract("time_derivative needs t > h".into()));
    }
    let central = |step: f64| -> Result<GridFunction> {
        let plus = evolve(spec, f, ComplexScalar::new(t + step, 0.0))?;
        let minus = evolve(spec, f, ComplexScalar::new(t - step, 0.0))?;
        Ok(plus.sub(&minus)?.scale(ComplexScalar::new(1.0 / (2.0 * step), 0.0)))
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    fine.scale(ComplexScalar::new(4.0 / 3.0, 0.0))
        .sub(&coarse.scale(ComplexScalar::new(1.0 / 3.0, 0.0)))
}

/// `B u` applied through the multiplier engine.
pub fn generator_apply(spec: &GeneratorSpec, u: &GridFunction) -> Result<GridFunction> {
    let h = symbol_of_generator(spec)?;
    apply_symbol(u, &h, spec.delta())
}

/// `B u` assembled from direct fractional derivatives:
///
/// * `CesaroSq`: `u - (2/G) D^a(x^a u) + (1/G^2) D^a(x^a D^a(x^a u))`
/// * `AdjCesaroSq`: `(1/G^2) x^a W^a(x^a W^a u)`
/// * `Mixed`: `(1/G) x^a W^a u - (1/G^2) D^a(x^{2a} W^a u)`
///
/// with `G = Gamma(a + 1)`, each multiplied by `(-1)^{n+1}` where applicable.
pub fn generator_apply_direct(spec: &GeneratorSpec, u: &GridFunction) -> Result<GridFunction> {
    spec.validate()?;
    let a = spec.alpha;
    let ord = FracOrder::new(a)?;
    let g = gamma_real(a + 1.0)?;
    let c = |v: f64| ComplexScalar::new(v, 0.0);
    let d = |v: &GridFunction| rl_derivative(v, ord);
    let wd = |v: &GridFunction| weyl_derivative(v, ord);
    let xa = |v: &GridFunction, s: f64| multiply_power(v, s * a);
    match spec.kind {
        GeneratorKind::CesaroSq => {
            let inner = d(&xa(u, 1.0));
            let outer = d(&xa(&inner, 1.0));
            let v = u.sub(&inner.scale(c(2.0 / g)))?.add(&outer.scale(c(1.0 / (g * g))))?;
            Ok(v.scale(c(spec.sign())))
        }
        GeneratorKind::AdjCesaroSq => {
            let inner = xa(&wd(u), 1.0);
            let outer = xa(&wd(&inner), 1.0);
            Ok(outer.scale(c(spec.sign() / (g * g))))
        }
        GeneratorKind::Mixed => {
            let wu = wd(u);
            let first = xa(&wu, 1.0).scale(c(1.0 / g));
            let second = d(&xa(&wu, 2.0)).scale(c(1.0 / (g * g)));
            first.sub(&second)
        }
        GeneratorKind::FracPower => Err(Error::Contract(
            "no direct composition for the fractional power generator".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rel_l2_error, rel_l2_error_on, sample, InitialDatum, LogGrid};
    use crate::multiplier::{principal_pow, HoloSymbol, Strip};

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    fn grid() -> LogGrid {
        LogGrid::new(1e-5, 1e5, 2048).unwrap()
    }

    fn smooth(g: LogGrid) -> GridFunction {
        sample(&InitialDatum::LogGaussian { mu: 0.0, sigma: 0.7 }, g).unwrap()
    }

    #[test]
    fn sector_angles() {
        let a = SectorAngle::of(&GeneratorSpec::new(GeneratorKind::FracPower, 0.75)).theta;
        assert!((a - PI / 4.0).abs() < 1e-15);
        let m = SectorAngle::of(&GeneratorSpec::new(GeneratorKind::Mixed, 0.75)).theta;
        assert_eq!(m, PI / 2.0);
    }

    #[test]
    fn evolve_at_zero_is_identity_and_rejects_outside_sector() {
        let g = grid();
        let f = smooth(g);
        let spec = GeneratorSpec::new(GeneratorKind::FracPower, 0.75);
        assert_eq!(evolve(&spec, &f, c(0.0, 0.0)).unwrap().values, f.values);
        let w = ComplexScalar::from_polar(1.0, PI / 4.0);
        assert!(matches!(evolve(&spec, &f, w), Err(Error::Contract(_))));
    }

    #[test]
    fn classical_regression_all_kinds() {
        let g = grid();
        for datum in [
            InitialDatum::LogGaussian { mu: 0.0, sigma: 1.0 },
            InitialDatum::Indicator { a: 1.0, b: 2.0 },
        ] {
            let f = sample(&datum, g).unwrap();
            for t in [0.25, 0.5, 1.0] {
                let exact = classical_kernel_apply(&f, c(t, 0.0)).unwrap();
                for kind in [
                    GeneratorKind::FracPower,
                    GeneratorKind::CesaroSq,
                    GeneratorKind::AdjCesaroSq,
                ] {
                    let u = evolve(&GeneratorSpec::new(kind, 1.0), &f, c(t, 0.0)).unwrap();
                    let e = u.sub(&exact).unwrap().norm_l2() / f.norm_l2();
                    assert!(e < 1e-6, "{kind:?} t={t} {e}");
                }
            }
        }
    }

    #[test]
    fn classical_kernel_preserves_log_mass_and_eigenrelation() {
        let g = grid();
        let f = smooth(g);
        let u = classical_kernel_apply(&f, c(0.5, 0.0)).unwrap();
        let mass = |v: &GridFunction| v.values.iter().sum::<ComplexScalar>() * g.dy();
        assert!((mass(&u) - mass(&f)).norm() < 1e-12);
        let u0 = 8.0 * g.du();
        let p = sample(
            &InitialDatum::Power {
                delta0: 0.0,
                u0,
                x_lo: 1e-3,
                x_hi: 1e3,
                ramp: 1.5,
            },
            g,
        )
        .unwrap();
        let w = 0.3;
        let out = classical_kernel_apply(&p, c(w, 0.0)).unwrap();
        let ev = (-w * u0 * u0).exp();
        for j in p.index_range(0.1, 10.0) {
            assert!((out.values[j] - p.values[j] * ev).norm() < 1e-10);
        }
    }

    #[test]
    fn semigroup_law_all_kinds() {
        let g = grid();
        let f = smooth(g);
        for kind in GeneratorKind::ALL {
            let spec = GeneratorSpec::new(kind, 0.75);
            let (t1, t2) = (c(0.3, 0.05), c(0.2, -0.02));
            let a = evolve(&spec, &f, t1 + t2).unwrap();
            let b = evolve(&spec, &evolve(&spec, &f, t2).unwrap(), t1).unwrap();
            let e = a.sub(&b).unwrap().norm_l2() / f.norm_l2();
            assert!(e < 1e-10, "{kind:?} {e}");
        }
    }

    #[test]
    fn strong_continuity() {
        let g = grid();
        let f = smooth(g);
        for kind in GeneratorKind::ALL {
            let spec = GeneratorSpec::new(kind, 0.75);
            let mut prev = f64::INFINITY;
            for t in [1e-1, 1e-2, 1e-3, 1e-4] {
                let e = rel_l2_error(&evolve(&spec, &f, c(t, 0.0)).unwrap(), &f);
                assert!(e < prev, "{kind:?}");
                prev = e;
            }
            assert!(prev < 1e-3, "{kind:?} {prev}");
        }
    }

    #[test]
    fn direct_quadrature_oracle_matches() {
        let g = LogGrid::standard();
        let f = smooth(g);
        for (kind, alpha) in [(GeneratorKind::FracPower, 0.8), (GeneratorKind::Mixed, 0.75)] {
            let spec = GeneratorSpec::new(kind, alpha);
            let u = evolve(&spec, &f, c(0.5, 0.0)).unwrap();
            let js: Vec<usize> = [0.3, 1.0, 2.5].iter().map(|&x| f.index_range(x, 1e9).start).collect();
            let xs: Vec<f64> = js.iter().map(|&j| g.x(j)).collect();
            let slow = evolve_direct_quadrature(&spec, &f, c(0.5, 0.0), &xs).unwrap();
            // the fractional-power density has algebraic tails, which the periodic
            // FFT realization wraps; the wrap error decays like width^{-2 alpha}
            let tol = if kind == GeneratorKind::FracPower { 1e-3 } else { 1e-6 };
            for (j, v) in js.iter().zip(slow) {
                assert!((u.values[*j] - v).norm() < tol, "{kind:?} {} {v}", u.values[*j]);
            }
        }
    }

    #[test]
    fn holomorphy_residual_is_small() {
        let g = grid();
        let f = smooth(g);
        let spec = GeneratorSpec::new(GeneratorKind::CesaroSq, 0.75);
        let r = cauchy_riemann_residual(&spec, &f, c(0.5, 0.1), 1e-3).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn balakrishnan_against_multiplier() {
        let g = grid();
        let f = smooth(g);
        for alpha in [0.3, 0.5, 0.7] {
            for eps in [0.0, 0.1] {
                let b = balakrishnan_apply(&f, alpha, eps).unwrap();
                let h = HoloSymbol::new("(eps+z)^a", Strip::open(-eps, f64::INFINITY), alpha, move |z| {
                    Ok(principal_pow(z + eps, alpha))
                });
                let m = apply_symbol(&f, &h, 0.5).unwrap();
                assert!(
                    rel_l2_error(&b, &m) < 1e-3,
                    "alpha={alpha} eps={eps} {}",
                    rel_l2_error(&b, &m)
                );
            }
        }
    }

    #[test]
    fn balakrishnan_limits() {
        let g = grid();
        // one-sided operator: f constant on [x, inf) gives zero at x
        let f = GridFunction::from_real_fn(g, |x| crate::grid::plateau_window(x.ln(), 0.0, 100.0, 2.0)).unwrap();
        let b = balakrishnan_apply(&f, 0.5, 0.0).unwrap();
        assert!(f.index_range(1.0, 1e5).all(|j| b.values[j].norm() < 1e-12));
        let s = smooth(g);
        let eps = 0.1;
        let near_one = balakrishnan_apply(&s, 0.9999, eps).unwrap();
        let direct = GridFunction::from_fn(g, |x| {
            let l = x.ln();
            let v = (-l * l / (2.0 * 0.49)).exp();
            // -x f'(x) + eps f
            ComplexScalar::new(v * l / 0.49 + eps * v, 0.0)
        })
        .unwrap();
        assert!(
            rel_l2_error(&near_one, &direct) < 1e-3,
            "{}",
            rel_l2_error(&near_one, &direct)
        );
    }

    #[test]
    fn pde_residuals() {
        let g = LogGrid::new(1e-4, 1e4, 2048).unwrap();
        let f = smooth(g);
        for kind in [
            GeneratorKind::CesaroSq,
            GeneratorKind::AdjCesaroSq,
            GeneratorKind::Mixed,
        ] {
            let spec = GeneratorSpec::new(kind, 0.75);
            let t = 0.2;
            let u = evolve(&spec, &f, c(t, 0.0)).unwrap();
            let ut = time_derivative(&spec, &f, t, 1e-4).unwrap();
            let bu = generator_apply(&spec, &u).unwrap();
            assert!(rel_l2_error(&ut, &bu) < 1e-4, "{kind:?} {}", rel_l2_error(&ut, &bu));
            let direct = generator_apply_direct(&spec, &u).unwrap();
            let range = u.index_range(1e-2, 1e2);
            let e = rel_l2_error_on(&direct, &bu, range);
            assert!(e < 1e-2, "{kind:?} {e}");
        }
    }

    #[test]
    fn angle_sharpness_screen() {
        let g = LogGrid::standard();
        for alpha in [0.75, 1.3] {
            let spec = GeneratorSpec::new(GeneratorKind::FracPower, alpha);
            let theta = SectorAngle::of(&spec).theta;
            for s in [1.0, -1.0] {
                let inside = ComplexScalar::from_polar(1.0, s * (theta - SECTOR_MARGIN));
                assert!(multiplier_screen(&spec, &g, inside, g.nyquist()).unwrap());
                let outside = ComplexScalar::from_polar(1.0, s * (theta + 0.05));
                assert!(
                    !multiplier_screen(&spec, &g, outside, g.nyquist()).unwrap(),
                    "alpha={alpha}"
                );
            }
        }
    }

    #[test]
    fn solve_acp_contract() {
        let g = grid();
        let f = smooth(g);
        let spec = GeneratorSpec::new(GeneratorKind::Mixed, 0.75);
        assert!(solve_acp(&spec, &f, &[]).is_err());
        assert!(solve_acp(&spec, &f, &[0.5, 0.1]).is_err());
        let sol = solve_acp(&spec, &f, &[0.1, 0.5]).unwrap();
        assert_eq!(sol.states.len(), 2);
        let one = evolve(&spec, &f, c(0.5, 0.0)).unwrap();
        assert_eq!(sol.states[1].values, one.values);
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,re_u,im_u\n"));
        assert_eq!(text.lines().count(), 1 + 2 * g.len());
    }
}
