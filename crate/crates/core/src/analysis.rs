//! Numerical checks of the scalar estimates behind the sectoriality transfer:
//! sector distances, resolvent-type inequalities, the `dx/x` integral bound,
//! the bounding families near the singular points `a`, `-a`, `infinity`, and
//! resolvent/weak-continuity scans for the concrete generators.
//!
//! Every check returns a [`CheckReport`] with a fitted constant, the sampling
//! resolution and a refinement-stability flag. A check passes only when the
//! flag is set.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, LogGrid};
use crate::multiplier::{symbol_of_generator, GeneratorKind, GeneratorSpec, HoloSymbol};
use crate::quad::integrate_real_with_breaks;
use crate::semigroup::{evolve, SectorAngle};
use crate::special::{gamma_ratio_deviation, ComplexScalar};

type C = ComplexScalar;

/// Relative change allowed between a constant and its refined counterpart.
pub const STABILITY_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub constant: f64,
    pub resolution: usize,
    pub stable: bool,
    pub details: serde_json::Value,
}

impl CheckReport {
    /// `pass` is `ok && stable`.
    pub fn new(
        name: impl Into<String>,
        ok: bool,
        constant: f64,
        resolution: usize,
        stable: bool,
        details: serde_json::Value,
    ) -> Self {
        Self {
            name: name.into(),
            pass: ok && stable,
            constant,
            resolution,
            stable,
            details,
        }
    }

    /// Failed report for a check that could not run.
    pub fn errored(name: impl Into<String>, err: &Error) -> Self {
        Self::new(name, false, f64::NAN, 0, false, json!({ "error": err.to_string() }))
    }
}

/// `|coarse - fine| <= 5% max(|coarse|, |fine|)`, or below `floor`.
pub fn refinement_stable(coarse: f64, fine: f64, floor: f64) -> bool {
    if !coarse.is_finite() || !fine.is_finite() {
        return false;
    }
    let d = (coarse - fine).abs();
    d <= STABILITY_TOL * coarse.abs().max(fine.abs()) || d <= floor
}

/// Geometry shared by the scalar checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorGeometry {
    /// Sector angle.
    pub gamma: f64,
    /// Angular margin.
    pub epsilon: f64,
    /// Half-width of the bisector.
    pub a: f64,
    /// Bisector angle.
    pub omega: f64,
    /// Auxiliary point `b > a` of the bounding families.
    pub b: f64,
}

impl Default for SectorGeometry {
    fn default() -> Self {
        Self {
            gamma: 0.8,
            epsilon: 0.3,
            a: 1.0,
            omega: 0.5,
            b: 2.0,
        }
    }
}

impl SectorGeometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(0.0..PI).contains(&self.gamma) {
            return bad(format!("gamma = {} must lie in [0, pi)", self.gamma));
        }
        if !(self.epsilon > 0.0) || self.gamma + self.epsilon >= PI {
            return bad(format!(
                "epsilon = {} must be > 0 with gamma + epsilon < pi",
                self.epsilon
            ));
        }
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return bad(format!("a = {} must be >= 0", self.a));
        }
        if !(self.omega > 0.0 && self.omega <= PI / 2.0) {
            return bad(format!("omega = {} must lie in (0, pi/2]", self.omega));
        }
        if !(self.b > self.a) || !self.b.is_finite() {
            return bad(format!("b = {} must exceed a = {}", self.b, self.a));
        }
        Ok(())
    }

    /// `gamma + epsilon`.
    pub fn phi(&self) -> f64 {
        self.gamma + self.epsilon
    }

    /// Path angles `omega/4, omega/2, 3 omega/4`.
    pub fn path_angles(&self) -> [f64; 3] {
        [0.25 * self.omega, 0.5 * self.omega, 0.75 * self.omega]
    }
}

fn ray_distance(z: C, dir: C) -> f64 {
    let t = (z * dir.conj()).re.max(0.0);
    (z - dir * t).norm()
}

/// Distance from `w` to the closed sector `|arg| <= theta`, by projection onto
/// the two boundary rays.
pub fn dist_to_sector(w: C, theta: f64) -> f64 {
    if w.norm() == 0.0 || w.arg().abs() <= theta {
        return 0.0;
    }
    ray_distance(w, C::from_polar(1.0, theta)).min(ray_distance(w, C::from_polar(1.0, -theta)))
}

/// Distance from `z` to the complement of the closed sector `|arg| <= theta`.
pub fn dist_to_sector_complement(z: C, theta: f64) -> f64 {
    if z.norm() == 0.0 || z.arg().abs() > theta {
        return 0.0;
    }
    ray_distance(z, C::from_polar(1.0, theta)).min(ray_distance(z, C::from_polar(1.0, -theta)))
}

fn sin_formula(r: f64, gap: f64) -> f64 {
    if gap >= PI / 2.0 {
        r
    } else {
        r * gap.sin()
    }
}

fn sector_distance_worst(geom: &SectorGeometry, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (g, phi) = (geom.gamma, geom.phi());
    let se = geom.epsilon.sin();
    let mut worst = f64::INFINITY;
    let mut formula_err: f64 = 0.0;
    for _ in 0..samples {
        let r = 10f64.powf(rng.gen_range(-3.0..3.0));
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let psi_z = rng.gen_range(-g..=g);
        let z = C::from_polar(r, psi_z);
        let dz = dist_to_sector_complement(z, phi);
        formula_err = formula_err.max((dz - sin_formula(r, phi - psi_z.abs())).abs() / r);
        worst = worst.min(dz / (r * se));

        let psi_w = s * rng.gen_range(phi.min(PI)..=PI);
        let w = C::from_polar(r, psi_w);
        let dw = dist_to_sector(w, g);
        formula_err = formula_err.max((dw - sin_formula(r, psi_w.abs() - g)).abs() / r);
        worst = worst.min(dw / (r * se));
    }
    (worst, formula_err)
}

/// Random-sample check of `d(z, C \ S_{gamma+eps}) >= |z| sin eps` for
/// `z` in the closed sector and `d(w, S_gamma) >= |w| sin eps` outside the
/// larger one. The constant is the worst ratio (should be `>= 1`).
pub fn sector_distance_check(geom: &SectorGeometry, samples: usize, seed: u64) -> CheckReport {
    let name = "sector_distance";
    if let Err(e) = geom.validate() {
        return CheckReport::errored(name, &e);
    }
    if samples < 1000 {
        return CheckReport::errored(name, &Error::Precondition(format!("samples = {samples} < 1000")));
    }
    let (worst, ferr) = sector_distance_worst(geom, samples, seed);
    let (worst2, ferr2) = sector_distance_worst(geom, 2 * samples, seed);
    let origin_ok = dist_to_sector_complement(C::new(0.0, 0.0), geom.phi()) == 0.0
        && dist_to_sector(C::new(0.0, 0.0), geom.gamma) == 0.0;
    let formula_err = ferr.max(ferr2);
    let ok = worst2 >= 1.0 - 1e-12 && worst >= 1.0 - 1e-12 && formula_err <= 1e-12 && origin_ok;
    CheckReport::new(
        name,
        ok,
        worst2,
        samples,
        refinement_stable(worst, worst2, 1e-3),
        json!({
            "worst_ratio": worst,
            "worst_ratio_doubled": worst2,
            "max_formula_vs_projection": formula_err,
            "seed": seed,
        }),
    )
}

/// Where `ineq_lemma_check` samples `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SampleDomain {
    /// `z = delta + i u`, `|u| <= u_max`, `u` log-spaced from `u_max * 1e-6`.
    Line { delta: f64, u_max: f64 },
    /// `z = r e^{i angle}`, `r` log-spaced on `[r_min, r_max]`.
    Ray { angle: f64, r_min: f64, r_max: f64 },
}

impl SampleDomain {
    fn points(&self, n: usize) -> Vec<C> {
        let logspace = |lo: f64, hi: f64, k: usize| -> Vec<f64> {
            (0..k)
                .map(|i| lo * (hi / lo).powf(i as f64 / (k.max(2) - 1) as f64))
                .collect()
        };
        match *self {
            SampleDomain::Line { delta, u_max } => {
                let half = logspace(u_max * 1e-6, u_max, n / 2);
                let mut pts = vec![C::new(delta, 0.0)];
                for u in half {
                    pts.push(C::new(delta, u));
                    pts.push(C::new(delta, -u));
                }
                pts
            }
            SampleDomain::Ray { angle, r_min, r_max } => logspace(r_min, r_max, n)
                .into_iter()
                .map(|r| C::from_polar(r, angle))
                .collect(),
        }
    }
}

fn lambda_samples(phi: f64, n_arg: usize, n_mag: usize, lo: f64, hi: f64) -> Vec<C> {
    let mut out = Vec::with_capacity(2 * n_arg * n_mag);
    for i in 0..n_arg {
        let psi = if n_arg == 1 {
            phi
        } else {
            phi + (PI - phi) * i as f64 / (n_arg - 1) as f64
        };
        for j in 0..n_mag {
            let r = lo * (hi / lo).powf(j as f64 / (n_mag.max(2) - 1) as f64);
            out.push(C::from_polar(r, psi));
            if psi < PI {
                out.push(C::from_polar(r, -psi));
            }
        }
    }
    out
}

fn in_closed_sector(w: C, gamma: f64) -> bool {
    w.norm() == 0.0 || w.arg().abs() <= gamma + 1e-12
}

fn ratio(lhs: f64, bound: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if bound == 0.0 {
        f64::INFINITY
    } else {
        lhs / bound
    }
}

fn ineq_constants(h: &[C], lambdas: &[C], c: C) -> [f64; 3] {
    lambdas
        .par_iter()
        .map(|&l| {
            let mut m = [0.0f64; 3];
            let lc = l / (l - c);
            for &hz in h {
                let r = l / (l - hz);
                let hn = hz.norm();
                let b2 = if hn == 0.0 { 1.0 } else { (l.norm() / hn).min(1.0) };
                m[0] = m[0].max(ratio((r - lc).norm(), (hz - c).norm().min(1.0)));
                m[1] = m[1].max(ratio(r.norm(), b2));
                m[2] = m[2].max(ratio((r - 1.0).norm(), (hn / l.norm()).min(1.0)));
            }
            m
        })
        .reduce(|| [0.0; 3], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])])
}

/// Fitted constants for the three resolvent-type bounds
/// `|R - lambda/(lambda - c)| <= C min{1, |h - c|}`,
/// `|R| <= C min{1, |lambda|/|h|}` and `|R - 1| <= C min{1, |h|/|lambda|}`
/// with `R = lambda / (lambda - h(z))`, over `z` in `domain` and
/// `lambda` outside the closed sector of angle `gamma + epsilon`.
///
/// `samples` is the number of `z` points; `lambda` uses `samples / 4`
/// magnitudes on each of 9 arguments.
pub fn ineq_lemma_check(
    h: &HoloSymbol,
    geom: &SectorGeometry,
    c: C,
    domain: SampleDomain,
    samples: usize,
) -> Result<CheckReport> {
    geom.validate()?;
    if c.norm() == 0.0 || !in_closed_sector(c, geom.gamma) {
        return Err(Error::Precondition(format!(
            "c = {c} must lie in the closed sector minus 0"
        )));
    }
    let run = |n: usize| -> Result<[f64; 3]> {
        let zs = domain.points(n);
        let hv: Vec<C> = zs.iter().map(|&z| h.eval(z)).collect::<Result<_>>()?;
        if let Some((z, v)) = zs.iter().zip(&hv).find(|(_, v)| !in_closed_sector(**v, geom.gamma)) {
            return Err(Error::Precondition(format!(
                "h({z}) = {v} lies outside the closed sector of angle {}",
                geom.gamma
            )));
        }
        let lambdas = lambda_samples(geom.phi(), 9, (n / 4).max(8), 1e-6, 1e6);
        Ok(ineq_constants(&hv, &lambdas, c))
    };
    let coarse = run(samples)?;
    let fine = run(2 * samples)?;
    let stable = (0..3).all(|i| refinement_stable(coarse[i], fine[i], 1e-9));
    let constant = fine.iter().cloned().fold(0.0, f64::max);
    Ok(CheckReport::new(
        "ineq_lemma",
        constant.is_finite(),
        constant,
        samples,
        stable,
        json!({
            "symbol": h.label,
            "c": [c.re, c.im],
            "constants": fine,
            "constants_coarse": coarse,
        }),
    ))
}

type PosFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Majorant `min{F1 + sum (r x)^{s_n}, F2 + sum (r x)^{-t_m}}` on an interval
/// of `(0, inf)`. A branch whose function is `None` and whose exponent list is
/// empty is absent (treated as `+inf`).
#[derive(Clone)]
pub struct BoundFamily {
    pub f1: Option<PosFn>,
    pub f2: Option<PosFn>,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    /// `(lo, hi)` with `0 <= lo < hi <= inf`.
    pub interval: (f64, f64),
}

impl BoundFamily {
    /// `min{(r x)^s, (r x)^{-s}}` on `(0, inf)`.
    pub fn symmetric_power(s: f64) -> Self {
        Self {
            f1: None,
            f2: None,
            s: vec![s],
            t: vec![s],
            interval: (0.0, f64::INFINITY),
        }
    }

    fn eval(&self, x: f64, r: f64) -> f64 {
        let branch = |f: &Option<PosFn>, ex: &[f64], sign: f64| -> f64 {
            if f.is_none() && ex.is_empty() {
                return f64::INFINITY;
            }
            f.as_ref().map_or(0.0, |f| f(x)) + ex.iter().map(|&e| (r * x).powf(sign * e)).sum::<f64>()
        };
        branch(&self.f1, &self.s, 1.0).min(branch(&self.f2, &self.t, -1.0))
    }

    fn log_range(&self, r: f64) -> (f64, f64) {
        let min_exp = self.s.iter().chain(&self.t).cloned().fold(1.0, f64::min).max(1e-3);
        let span = r.ln().abs() + 50.0 / min_exp;
        let lo = if self.interval.0 > 0.0 {
            self.interval.0.ln()
        } else {
            -span
        };
        let hi = if self.interval.1.is_finite() {
            self.interval.1.ln()
        } else {
            span
        };
        (lo, hi)
    }
}

fn log_integral(f: impl Fn(f64) -> f64, lo: f64, hi: f64, mid: &[f64]) -> f64 {
    let mut breaks = vec![lo];
    breaks.extend(mid.iter().cloned().filter(|&m| m > lo && m < hi));
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    integrate_real_with_breaks(|s| f(s.exp()), &breaks, 1e-13, 1e-11).0
}

/// `int_I f_r(x) dx / x` for the majorant at scale `r`.
pub fn integral_bound_value(family: &BoundFamily, r: f64) -> f64 {
    let (lo, hi) = family.log_range(r);
    log_integral(|x| family.eval(x, r), lo, hi, &[-r.ln()])
}

fn sup_over(family: &BoundFamily, rs: &[f64]) -> (f64, Vec<f64>) {
    let vals: Vec<f64> = rs.par_iter().map(|&r| integral_bound_value(family, r)).collect();
    (vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max), vals)
}

/// Confirms `sup_r int_I f_r dx/x < inf`, stable when geometric midpoints are
/// inserted between consecutive `r_values`.
pub fn integral_bound_check(family: &BoundFamily, r_values: &[f64]) -> CheckReport {
    let name = "integral_bound";
    if r_values.is_empty() || r_values.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return CheckReport::errored(name, &Error::Precondition("r_values must be positive".into()));
    }
    let f_int = |f: &Option<PosFn>| -> f64 {
        f.as_ref().map_or(0.0, |f| {
            let lo = if family.interval.0 > 0.0 {
                family.interval.0.ln()
            } else {
                -200.0
            };
            let hi = if family.interval.1.is_finite() {
                family.interval.1.ln()
            } else {
                200.0
            };
            log_integral(|x| f(x), lo, hi, &[0.0])
        })
    };
    let (i1, i2) = (f_int(&family.f1), f_int(&family.f2));
    let f_ok = i1.is_finite() && i2.is_finite();

    let (sup, vals) = sup_over(family, r_values);
    let mut refined = r_values.to_vec();
    for w in r_values.windows(2) {
        refined.push((w[0] * w[1]).sqrt());
    }
    refined.sort_by(f64::total_cmp);
    let (sup2, _) = sup_over(family, &refined);
    let inf = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    CheckReport::new(
        name,
        f_ok && sup.is_finite(),
        sup2,
        r_values.len(),
        refinement_stable(sup, sup2, 1e-12),
        json!({
            "values": r_values.iter().zip(&vals).map(|(r, v)| [*r, *v]).collect::<Vec<_>>(),
            "spread": if sup > 0.0 { (sup - inf) / sup } else { 0.0 },
            "f1_integral": i1,
            "f2_integral": i2,
        }),
    )
}

/// Singular point of a bounding family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyPoint {
    PlusA,
    MinusA,
    Infinity,
}

/// One case of the bounding-family construction: steps 1-3 live at `+a`,
/// steps 4-6 at `-a` or infinity; steps 1/4 have a finite nonzero limit `c`,
/// steps 2/5 a zero and steps 3/6 an infinite limit of exact order `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyCase {
    pub step: u8,
    pub point: FamilyPoint,
    pub alpha: f64,
    pub c: C,
    /// Use `g = c` instead of `c + v^{+-alpha}` (steps 1 and 4 only).
    #[serde(default)]
    pub constant_symbol: bool,
}

impl FamilyCase {
    pub fn new(step: u8, point: FamilyPoint, alpha: f64) -> Self {
        Self {
            step,
            point,
            alpha,
            c: C::new(1.0, 0.0),
            constant_symbol: false,
        }
    }

    /// The nine (step, point) combinations.
    pub fn all(alpha: f64) -> Vec<Self> {
        let mut v: Vec<Self> = (1..=3).map(|s| Self::new(s, FamilyPoint::PlusA, alpha)).collect();
        for s in 4..=6 {
            v.push(Self::new(s, FamilyPoint::MinusA, alpha));
            v.push(Self::new(s, FamilyPoint::Infinity, alpha));
        }
        v
    }

    fn validate(&self, geom: &SectorGeometry) -> Result<()> {
        let ok_point = match self.step {
            1..=3 => self.point == FamilyPoint::PlusA,
            4..=6 => self.point != FamilyPoint::PlusA,
            _ => false,
        };
        if !ok_point {
            return Err(Error::Precondition(format!(
                "step {} is not defined at {:?}",
                self.step, self.point
            )));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Precondition(format!("alpha = {} must be > 0", self.alpha)));
        }
        if self.finite_limit() && (self.c.norm() == 0.0 || !in_closed_sector(self.c, geom.gamma)) {
            return Err(Error::Precondition(format!(
                "limit c = {} must lie in the closed sector minus 0",
                self.c
            )));
        }
        if self.constant_symbol && !self.finite_limit() {
            return Err(Error::Precondition("constant symbol needs a finite limit".into()));
        }
        Ok(())
    }

    fn finite_limit(&self) -> bool {
        self.step == 1 || self.step == 4
    }

    /// Model symbol with the prescribed exactly polynomial limit at the point.
    /// The folded variables `sqrt((z -+ a)^2)`, `sqrt(z^2)` keep the range in a
    /// sector on both sides of the bisector.
    fn model_symbol(&self, p: &PathPoint) -> C {
        let v = match self.point {
            FamilyPoint::PlusA => fold(p.zm),
            FamilyPoint::MinusA => fold(p.zp),
            FamilyPoint::Infinity => fold(p.z),
        };
        // exponent sign so that v^e -> 0 at the point
        let to_zero = if self.point == FamilyPoint::Infinity { -1.0 } else { 1.0 };
        match self.step {
            1 | 4 if self.constant_symbol => self.c,
            1 | 4 => self.c + v.powf(to_zero * self.alpha),
            2 | 5 => v.powf(to_zero * self.alpha),
            _ => v.powf(-to_zero * self.alpha),
        }
    }

    /// `f_d^lambda` written in the exact offsets of `p`, so that neither
    /// `a - z` near `a` nor `b^2 - z^2` near infinity loses precision.
    fn family(&self, p: &PathPoint, lambda: C, a: f64, b: f64) -> C {
        let l = lambda.norm().powf(1.0 / self.alpha);
        let inv_bz = 1.0 / p.bz;
        let inv_bpz = 1.0 / p.bpz;
        let k = if a > 0.0 { (b * b - a * a) / (2.0 * a) } else { 0.0 };
        let bump_plus = if a > 0.0 {
            k * (p.zp * inv_bpz) * inv_bz
        } else {
            (b * inv_bz) * (b * inv_bpz)
        };
        let bump_minus = if a > 0.0 {
            -k * (p.zm * inv_bz) * inv_bpz
        } else {
            (b * inv_bz) * (b * inv_bpz)
        };
        // (a^2 - z^2) / (b^2 - z^2)
        let bump_inf = -(p.zm * inv_bz) * (p.zp * inv_bpz);
        let lc = lambda / (lambda - self.c);
        match (self.step, self.point) {
            (1, _) => lc * bump_plus,
            (2, _) => l / (l - p.zm) * bump_plus,
            (3, _) => -p.zm / (1.0 / l - p.zm) * bump_plus,
            (4, FamilyPoint::MinusA) => lc * bump_minus,
            (4, _) => lc * bump_inf,
            (5, FamilyPoint::MinusA) => l / (l + p.zp) * bump_minus,
            (5, _) => p.bz / (1.0 / l + p.bz) * bump_inf,
            (6, FamilyPoint::MinusA) => p.zp / (1.0 / l + p.zp) * bump_minus,
            _ => l / (l + p.bz) * bump_inf,
        }
    }
}

/// `sqrt(w^2)` on the principal branch: `w` or `-w`, whichever has `Re > 0`.
fn fold(w: C) -> C {
    if w.re > 0.0 || (w.re == 0.0 && w.im >= 0.0) {
        w
    } else {
        -w
    }
}

/// A point `z = base + off` on a boundary ray with the differences
/// `z - a`, `z + a`, `b - z`, `b + z` formed from `off` directly.
struct PathPoint {
    z: C,
    zm: C,
    zp: C,
    bz: C,
    bpz: C,
}

impl PathPoint {
    fn new(base: f64, off: C, a: f64, b: f64) -> Self {
        Self {
            z: base + off,
            zm: (base - a) + off,
            zp: (base + a) + off,
            bz: (b - base) - off,
            bpz: (b + base) + off,
        }
    }

    fn weight(&self) -> f64 {
        self.zm.norm().min(self.zp.norm())
    }
}

/// Boundary rays of the bisector `BS_{w', a}`: `a + r e^{+-i w'}` and
/// `-a - r e^{+-i w'}`.
fn boundary_rays(a: f64, w: f64) -> [(f64, C); 4] {
    let e = C::from_polar(1.0, w);
    [(a, e), (a, e.conj()), (-a, -e), (-a, -e.conj())]
}

struct FamilyRun {
    sup_integral: f64,
    worst_lambda: C,
    sup_family: f64,
    range_violation: Option<(C, C)>,
}

fn family_run(case: &FamilyCase, geom: &SectorGeometry, lambdas: &[C], tol: f64) -> FamilyRun {
    let (a, b) = (geom.a, geom.b);
    let rho_near = if a > 0.0 { (0.5 * (b - a)).min(a) } else { 0.5 * b };
    let rho_far = 2.0 * b + 1.0;
    let steep = 60.0 / case.alpha.min(1.0);

    // rays used near the point
    let near_rays = |w: f64| -> Vec<(f64, C)> {
        let rays = boundary_rays(a, w);
        match case.point {
            FamilyPoint::Infinity => rays.to_vec(),
            _ if a == 0.0 => rays.to_vec(),
            FamilyPoint::PlusA => rays[..2].to_vec(),
            FamilyPoint::MinusA => rays[2..].to_vec(),
        }
    };

    // range precondition and |f| sup on path samples
    let mut range_violation = None;
    let mut sup_family: f64 = 0.0;
    for w in geom.path_angles() {
        for (base, dir) in boundary_rays(a, w) {
            for i in 0..=160 {
                let r = 10f64.powf(-8.0 + 16.0 * i as f64 / 160.0);
                let p = PathPoint::new(base, dir * r, a, b);
                let g = case.model_symbol(&p);
                let near = match case.point {
                    FamilyPoint::Infinity => r >= rho_far,
                    _ => r <= rho_near && (a == 0.0 || (base > 0.0) == (case.point == FamilyPoint::PlusA)),
                };
                if near && range_violation.is_none() && g.is_finite() && !in_closed_sector(g, geom.gamma) {
                    range_violation = Some((p.z, g));
                }
                for &l in lambdas.iter().step_by(3) {
                    let f = case.family(&p, l, a, b).norm();
                    if f.is_finite() {
                        sup_family = sup_family.max(f);
                    } else {
                        sup_family = f64::INFINITY;
                    }
                }
            }
        }
    }

    let results: Vec<(f64, C)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let ll = lambda.norm().ln() / case.alpha;
            let mut worst: f64 = 0.0;
            for w in geom.path_angles() {
                let mut total = 0.0;
                for (base, dir) in near_rays(w) {
                    let integrand = |r: f64| -> f64 {
                        let p = PathPoint::new(base, dir * r, a, b);
                        let g = case.model_symbol(&p);
                        let rg = if g.is_finite() {
                            lambda / (lambda - g)
                        } else {
                            C::new(0.0, 0.0)
                        };
                        let d = (rg - case.family(&p, lambda, a, b)).norm();
                        d * r / p.weight()
                    };
                    let (lo, hi) = match case.point {
                        FamilyPoint::Infinity => {
                            let lo = rho_far.ln();
                            (lo, lo.max(ll.abs()) + steep)
                        }
                        _ => {
                            let hi = rho_near.ln();
                            (hi.min(-ll.abs()) - steep, hi)
                        }
                    };
                    let mut breaks = vec![lo, hi, ll, -ll];
                    breaks.retain(|s| *s >= lo && *s <= hi);
                    breaks.sort_by(f64::total_cmp);
                    breaks.dedup();
                    let (v, _) = integrate_real_with_breaks(|s| integrand(s.exp()), &breaks, tol, tol);
                    total += v;
                }
                if !total.is_finite() {
                    return (f64::INFINITY, lambda);
                }
                worst = worst.max(total);
            }
            (worst, lambda)
        })
        .collect();
    let (sup_integral, worst_lambda) = results.into_iter().fold((0.0, C::new(0.0, 0.0)), |acc, x| {
        if x.0 > acc.0 || x.0.is_nan() {
            x
        } else {
            acc
        }
    });
    FamilyRun {
        sup_integral,
        worst_lambda,
        sup_family,
        range_violation,
    }
}

/// Divergence threshold for the family integrals.
const FAMILY_DIVERGENCE: f64 = 1e6;

/// Checks a bounding family: `sup |f^lambda(z)|` over path samples and
/// lambda, and `sup_lambda` of the near-point path integrals of
/// `|R_g^lambda - f^lambda| / min{|z - a|, |z + a|}` for the model symbol `g`.
/// `lambda_samples` magnitudes in `[1e-6, 1e6]` are used on each of six
/// arguments outside the sector of angle `gamma + epsilon`; the refined run
/// doubles them and tightens the quadrature tolerance.
pub fn uniform_family_check(case: &FamilyCase, geom: &SectorGeometry, lambda_samples_n: usize) -> Result<CheckReport> {
    geom.validate()?;
    case.validate(geom)?;
    let n = lambda_samples_n.max(3);
    let coarse = family_run(case, geom, &lambda_samples(geom.phi(), 3, n, 1e-6, 1e6), 1e-7);
    if let Some((z, g)) = coarse.range_violation {
        return Err(Error::Precondition(format!(
            "model symbol g({z}) = {g} leaves the closed sector of angle {}",
            geom.gamma
        )));
    }
    let fine = family_run(case, geom, &lambda_samples(geom.phi(), 3, 2 * n - 1, 1e-6, 1e6), 1e-10);
    let bounded = fine.sup_family.is_finite() && fine.sup_family < FAMILY_DIVERGENCE;
    let convergent = fine.sup_integral.is_finite() && fine.sup_integral < FAMILY_DIVERGENCE;
    let name = format!("uniform_family_step{}_{:?}", case.step, case.point).to_lowercase();
    Ok(CheckReport::new(
        name,
        bounded && convergent,
        fine.sup_integral,
        n,
        refinement_stable(coarse.sup_integral, fine.sup_integral, 1e-6),
        json!({
            "step": case.step,
            "point": case.point,
            "alpha": case.alpha,
            "a": geom.a,
            "b": geom.b,
            "constant_symbol": case.constant_symbol,
            "sup_integral_coarse": coarse.sup_integral,
            "sup_family": fine.sup_family,
            "worst_lambda": [fine.worst_lambda.re, fine.worst_lambda.im],
            "divergent": !convergent,
        }),
    ))
}

/// Options for [`resolvent_sectoriality_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Angular margin inside the predicted resolvent region.
    pub epsilon: f64,
    /// Number of `u` samples on `[-u_max, u_max]` (doubled for refinement).
    pub u_samples: usize,
    pub u_max: f64,
    /// `sup |lambda R|` beyond which the scan counts as blown up.
    pub blowup_threshold: f64,
    /// Smallest `|lambda|` scanned. Zero scans the whole sector; a positive
    /// value checks sectoriality up to a shift, needed when the spectral line
    /// `delta > 0` puts part of the symbol range in the right half-plane.
    #[serde(default)]
    pub lambda_min: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            u_samples: 4096,
            u_max: LogGrid::standard().nyquist(),
            blowup_threshold: 1.0 / 0.02f64.sin(),
            lambda_min: 0.0,
        }
    }
}

/// `sup_{|lambda| > 0} |lambda / (lambda - h)|` on the ray `arg lambda = psi`,
/// in closed form: `1 / sin(gap)` when the angle gap between the ray and `h`
/// is below `pi/2`, otherwise `1`.
pub fn ray_resolvent_sup(psi: f64, h: C) -> f64 {
    ray_resolvent_sup_from(psi, h, 0.0)
}

/// As [`ray_resolvent_sup`], restricted to `|lambda| >= rho_min`. Along the
/// ray `rho / |rho e^{i psi} - h|` rises to its maximum at
/// `rho* = |h| / cos(gap)` and then decreases to 1.
pub fn ray_resolvent_sup_from(psi: f64, h: C, rho_min: f64) -> f64 {
    let hn = h.norm();
    if hn == 0.0 {
        return 1.0;
    }
    let gap = (h.arg() - psi).rem_euclid(2.0 * PI);
    let gap = gap.min(2.0 * PI - gap);
    if gap >= PI / 2.0 {
        return 1.0;
    }
    let rho_star = hn / gap.cos();
    if rho_min <= rho_star {
        1.0 / gap.sin()
    } else {
        rho_min / (C::from_polar(rho_min, psi) - h).norm()
    }
}

fn scan_sup(hv: &[C], psi: f64, rho_min: f64) -> f64 {
    hv.iter()
        .map(|&h| ray_resolvent_sup_from(psi, h, rho_min).max(ray_resolvent_sup_from(-psi, h, rho_min)))
        .fold(0.0, f64::max)
}

fn symbol_samples(h: &HoloSymbol, delta: f64, m: usize, u_max: f64) -> Result<Vec<C>> {
    (0..m)
        .into_par_iter()
        .map(|i| {
            let u = -u_max + 2.0 * u_max * i as f64 / (m - 1) as f64;
            h.eval(C::new(delta, u))
        })
        .collect()
}

fn blowup_angle(hv: &[C], from: f64, threshold: f64, rho_min: f64) -> Option<f64> {
    let step = 0.005;
    let mut lo = from;
    if scan_sup(hv, lo, rho_min) > threshold {
        return None;
    }
    loop {
        let hi = (lo + step).min(PI);
        if scan_sup(hv, hi, rho_min) > threshold {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..50 {
                let m = 0.5 * (a + b);
                if scan_sup(hv, m, rho_min) > threshold {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Some(b);
        }
        if hi >= PI {
            return None;
        }
        lo = hi;
    }
}

/// Resolvent scan for the grid proxy of the generator `B`: `||lambda R(lambda, B)||`
/// is approximated by `sup_u |lambda / (lambda - h_B(delta + iu))|` (exact on
/// the `L^2` proxy, heuristic for `p != 2`). The sup is scanned over
/// `|arg lambda| <= pi/2 + theta - epsilon`, and the blow-up onset is located by
/// bisection on `arg lambda`; the measured angle is
/// `psi* + asin(1/threshold) - pi/2`.
///
/// For the fractional-power generator the measured angle must match
/// `theta = pi (1/2 - |alpha - n|)` within 0.05 rad.
pub fn resolvent_sectoriality_scan(spec: &GeneratorSpec, opts: &ScanOptions) -> Result<CheckReport> {
    spec.validate()?;
    let h = symbol_of_generator(spec)?;
    let theta = SectorAngle::of(spec).theta;
    let psi_in = (PI / 2.0 + theta - opts.epsilon).min(PI);
    let m = opts.u_samples.max(16);
    let coarse = symbol_samples(&h, spec.delta(), m, opts.u_max)?;
    let fine = symbol_samples(&h, spec.delta(), 2 * m - 1, opts.u_max)?;
    let rho_min = opts.lambda_min;
    let (s_coarse, s_fine) = (scan_sup(&coarse, psi_in, rho_min), scan_sup(&fine, psi_in, rho_min));
    let finite = s_fine.is_finite() && s_fine < opts.blowup_threshold;

    let expect_blowup = PI / 2.0 + theta < PI - 1e-9;
    let onset = blowup_angle(&fine, psi_in, opts.blowup_threshold, rho_min);
    let measured = onset.map(|p| p + (1.0 / opts.blowup_threshold).asin() - PI / 2.0);
    let angle_ok = match (spec.kind, measured) {
        (GeneratorKind::FracPower, Some(m)) if expect_blowup => (m - theta).abs() <= 0.05,
        (GeneratorKind::FracPower, None) => !expect_blowup,
        (GeneratorKind::FracPower, Some(_)) => true,
        _ => true,
    };
    let name = format!("resolvent_scan_{:?}_{}", spec.kind, spec.alpha).to_lowercase();
    Ok(CheckReport::new(
        name,
        finite && angle_ok,
        s_fine,
        m,
        refinement_stable(s_coarse, s_fine, 1e-9),
        json!({
            "theta_predicted": theta,
            "theta_measured": measured,
            "psi_scanned": psi_in,
            "sup_coarse": s_coarse,
            "bound_one_over_sin_eps": 1.0 / opts.epsilon.sin(),
            "delta": spec.delta(),
            "lambda_min": rho_min,
            "angle_ok": angle_ok,
            "operator_norm_proxy": if (spec.p - 2.0).abs() < 1e-12 { "exact (L2)" } else { "heuristic (p != 2)" },
        }),
    ))
}

/// `|<T(t) f - f, phi>|` for each `t`.
pub fn weak_pairing_defects(
    spec: &GeneratorSpec,
    f: &GridFunction,
    phi: &GridFunction,
    t_values: &[f64],
) -> Result<Vec<f64>> {
    f.check_same_grid(phi)?;
    let base = f.pairing(phi)?;
    t_values
        .par_iter()
        .map(|&t| {
            let u = evolve(spec, f, C::new(t, 0.0))?;
            Ok((u.pairing(phi)? - base).norm())
        })
        .collect()
}

/// Weak continuity at `t = 0`: the defects `|<T(t) f - f, phi>|` must not
/// increase as `t` decreases through `t_values`, and the last one must be at
/// most `1e-3 ||f||_p ||phi||_{p'}`. Stability: halving the smallest `t`
/// does not increase the final defect by more than 5%.
pub fn weak_pairing_continuity(
    spec: &GeneratorSpec,
    f: &GridFunction,
    phi: &GridFunction,
    t_values: &[f64],
) -> Result<CheckReport> {
    spec.validate()?;
    if t_values.is_empty() || t_values.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Precondition("t_values must be positive and nonempty".into()));
    }
    let mut ts = t_values.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    let t_min = *ts.last().expect("nonempty");
    ts.push(0.5 * t_min);
    let mut d = weak_pairing_defects(spec, f, phi, &ts)?;
    let extra = d.pop().expect("nonempty");
    ts.pop();
    let p = spec.p;
    let q = p / (p - 1.0);
    let scale = f.norm_p(p) * phi.norm_p(q);
    let rel: Vec<f64> = d.iter().map(|v| if scale > 0.0 { v / scale } else { *v }).collect();
    let last = *rel.last().expect("nonempty");
    let extra_rel = if scale > 0.0 { extra / scale } else { extra };
    let floor = 1e-12;
    let decreasing = rel.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6) + floor);
    Ok(CheckReport::new(
        format!("weak_pairing_{:?}_{}", spec.kind, spec.alpha).to_lowercase(),
        decreasing && last <= 1e-3,
        last,
        f.len(),
        extra_rel <= last * (1.0 + STABILITY_TOL) + floor,
        json!({
            "t": ts,
            "relative_defect": rel,
            "relative_defect_half_t": extra_rel,
            "norm_product": scale,
            "p": p,
        }),
    ))
}

/// `C = max |z| |Gamma(z + lambda) / Gamma(z) z^{-lambda} - 1|` over `|z|` in
/// `[10, 1e4]` on the rays `arg z in {0, +-pi/4, +-pi/2}`, with `mags`
/// log-spaced radii (doubled for the stability flag).
pub fn gamma_ratio_check(lambdas: &[f64], mags: usize) -> Result<CheckReport> {
    let args = [0.0, PI / 4.0, -PI / 4.0, PI / 2.0, -PI / 2.0];
    let run = |m: usize| -> Result<Vec<f64>> {
        lambdas
            .iter()
            .map(|&l| {
                let mut c: f64 = 0.0;
                for &th in &args {
                    for i in 0..m {
                        let r = 10.0 * 1e3f64.powf(i as f64 / (m - 1) as f64);
                        let z = C::from_polar(r, th);
                        c = c.max(r * gamma_ratio_deviation(z, C::new(l, 0.0))?);
                    }
                }
                Ok(c)
            })
            .collect()
    };
    let m = mags.max(2);
    let coarse = run(m)?;
    let fine = run(2 * m - 1)?;
    let (c1, c2) = (
        coarse.iter().cloned().fold(0.0, f64::max),
        fine.iter().cloned().fold(0.0, f64::max),
    );
    Ok(CheckReport::new(
        "gamma_ratio",
        c2.is_finite(),
        c2,
        m,
        refinement_stable(c1, c2, 1e-12),
        json!({
            "lambdas": lambdas,
            "per_lambda": fine,
            "per_lambda_coarse": coarse,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_formulas_match_projection() {
        let z = C::new(2.0, 0.0);
        let (g, e) = (PI / 4.0, PI / 8.0);
        let d = dist_to_sector_complement(z, g + e);
        assert!((d - 2.0 * (3.0 * PI / 8.0).sin()).abs() < 1e-14);
        assert!(d >= 2.0 * e.sin());
        assert_eq!(dist_to_sector_complement(C::new(0.0, 0.0), g + e), 0.0);

        // w = -1 against a sector of angle pi/3: brute minimization over the boundary
        let w = C::new(-1.0, 0.0);
        let th = PI / 3.0;
        let brute = (0..200_001)
            .map(|i| {
                let t = 3.0 * i as f64 / 200_000.0;
                (w - C::from_polar(t, th)).norm()
            })
            .fold(f64::INFINITY, f64::min);
        // gap pi - th exceeds pi/2, so the nearest point is the vertex
        let formula = sin_formula(1.0, PI - th);
        assert_eq!(formula, 1.0);
        assert!((dist_to_sector(w, th) - formula).abs() < 1e-14);
        assert!((brute - formula).abs() < 1e-9);
    }

    #[test]
    fn sector_distance_passes() {
        let r = sector_distance_check(&SectorGeometry::default(), 2000, 7);
        assert!(r.pass, "{r:?}");
        assert!(r.constant >= 1.0);
    }

    #[test]
    fn ineq_constant_symbol_first_bound_vanishes() {
        let geom = SectorGeometry::default();
        let c = C::new(0.5, 0.2);
        let h = HoloSymbol::constant(c);
        let dom = SampleDomain::Line {
            delta: 0.0,
            u_max: 10.0,
        };
        let r = ineq_lemma_check(&h, &geom, c, dom, 64).unwrap();
        assert_eq!(r.details["constants"][0].as_f64().unwrap(), 0.0);
        assert!(r.pass);
    }

    #[test]
    fn ineq_large_lambda_limit() {
        let h = C::new(2.0, 1.0);
        let geom = SectorGeometry::default();
        let l = C::from_polar(1e6, geom.phi() + 0.1);
        assert!((l / (l - h) - 1.0).norm() < 1e-5);
    }

    #[test]
    fn ineq_square_on_ray() {
        let psi = 0.05;
        let geom = SectorGeometry {
            gamma: 2.0 * psi + 1e-9,
            epsilon: 0.2,
            ..SectorGeometry::default()
        };
        let h = HoloSymbol::new("z^2", crate::multiplier::Strip::everywhere(), 2.0, |z| Ok(z * z));
        let dom = SampleDomain::Ray {
            angle: psi,
            r_min: 1e-3,
            r_max: 1e3,
        };
        let r = ineq_lemma_check(&h, &geom, C::new(1.0, 0.0), dom, 400).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.constant < 50.0, "{}", r.constant);
    }

    #[test]
    fn ineq_rejects_out_of_sector_range() {
        let geom = SectorGeometry::default();
        let h = HoloSymbol::constant(C::new(-1.0, 0.0));
        let dom = SampleDomain::Line { delta: 0.0, u_max: 1.0 };
        assert!(matches!(
            ineq_lemma_check(&h, &geom, C::new(1.0, 0.0), dom, 64),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn integral_bound_exact_values() {
        for (s, want) in [(1.0, 2.0), (2.0, 1.0)] {
            let fam = BoundFamily::symmetric_power(s);
            for r in [1e-3, 1.0, 1e3] {
                let v = integral_bound_value(&fam, r);
                assert!((v - want).abs() < 1e-9, "s={s} r={r} v={v}");
            }
        }
        let fam = BoundFamily {
            f1: Some(Arc::new(|x: f64| x * (-x).exp())),
            f2: None,
            s: vec![],
            t: vec![],
            interval: (0.0, f64::INFINITY),
        };
        let r = integral_bound_check(&fam, &[1e-3, 1.0, 1e3]);
        assert!(r.pass, "{r:?}");
        assert!((r.constant - 1.0).abs() < 1e-9);
        assert!(r.details["spread"].as_f64().unwrap() < 1e-12);
    }

    #[test]
    fn family_step1_constant_symbol() {
        let mut case = FamilyCase::new(1, FamilyPoint::PlusA, 0.6);
        case.constant_symbol = true;
        let r = uniform_family_check(&case, &SectorGeometry::default(), 5).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn family_steps_pass() {
        let geom = SectorGeometry::default();
        for case in [
            FamilyCase::new(2, FamilyPoint::PlusA, 0.6),
            FamilyCase::new(6, FamilyPoint::Infinity, 0.6),
            FamilyCase::new(3, FamilyPoint::PlusA, 1.4),
        ] {
            let r = uniform_family_check(&case, &geom, 5).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn family_rejects_wrong_point() {
        let case = FamilyCase::new(2, FamilyPoint::Infinity, 0.6);
        assert!(uniform_family_check(&case, &SectorGeometry::default(), 5).is_err());
    }

    #[test]
    fn resolvent_scan_gaussian_bound() {
        let spec = GeneratorSpec::new(GeneratorKind::FracPower, 1.0);
        let r = resolvent_sectoriality_scan(&spec, &ScanOptions::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.constant <= 1.0 / 0.1f64.sin() * (1.0 + 1e-9));
        assert!((r.constant - 1.0 / 0.1f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn resolvent_scan_angles() {
        for alpha in [0.75, 1.4, 2.3] {
            let spec = GeneratorSpec::new(GeneratorKind::FracPower, alpha);
            let r = resolvent_sectoriality_scan(&spec, &ScanOptions::default()).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn ray_sup_matches_brute_maximization() {
        for (psi, h, rho_min) in [
            (2.0, C::new(-1.0, 0.5), 0.0),
            (1.0, C::new(0.3, 2.0), 0.0),
            (2.5, C::new(-3.0, 1.0), 10.0),
        ] {
            let brute = (0..400_000)
                .map(|i| {
                    let rho = f64::max(rho_min, 1e-4) * 1e7f64.powf(i as f64 / 400_000.0);
                    let l = C::from_polar(rho, psi);
                    (l / (l - h)).norm()
                })
                .fold(0.0, f64::max);
            let exact = ray_resolvent_sup_from(psi, h, rho_min);
            assert!((brute - exact).abs() < 1e-6 * exact, "{brute} {exact}");
        }
    }

    #[test]
    fn ray_sup_negative_lambda_nonnegative_h() {
        assert_eq!(ray_resolvent_sup(PI, C::new(3.0, 0.0)), 1.0);
    }

    #[test]
    fn gamma_ratio_constant() {
        let r = gamma_ratio_check(&[0.5, 1.0, 1.5], 40).unwrap();
        assert!(r.pass, "{r:?}");
        // leading term |lambda (lambda - 1) / 2| = 0.375 for lambda = 1.5
        assert!((r.constant - 0.375).abs() < 0.05, "{}", r.constant);
    }

    #[test]
    fn weak_pairing_zero_phi() {
        let grid = LogGrid::new(1e-4, 1e4, 1024).unwrap();
        let f = GridFunction::from_real_fn(grid, |x| if (0.5..2.0).contains(&x) { 1.0 } else { 0.0 }).unwrap();
        let phi = GridFunction::zeros(f.grid);
        let spec = GeneratorSpec::new(GeneratorKind::FracPower, 1.0);
        let r = weak_pairing_continuity(&spec, &f, &phi, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(r.pass);
        assert_eq!(r.constant, 0.0);
    }
}
