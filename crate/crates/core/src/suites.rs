//! Verification suites driven by `fracbs verify` and the acceptance harness.
//!
//! Tolerance checks report the error as the constant; their stability flag
//! means the same tolerance still holds on a grid with twice the points.

use std::f64::consts::PI;
use std::time::Instant;

use serde_json::json;

use crate::analysis::{
    gamma_ratio_check, ineq_lemma_check, integral_bound_check, integral_bound_value, resolvent_sectoriality_scan,
    sector_distance_check, uniform_family_check, weak_pairing_continuity, BoundFamily, CheckReport, FamilyCase,
    FamilyPoint, SampleDomain, ScanOptions, SectorGeometry,
};
use crate::direct::{
    cesaro, cesaro_adjoint, group_orbit_apply, grunwald_letnikov_rl, grunwald_letnikov_weyl, rl_derivative,
    rl_integral, weyl_derivative, weyl_integral, DensityOnR, FracOrder,
};
use crate::error::{Error, Result};
use crate::grid::{
    from_spectral, group_shift, rel_l2_error, rel_l2_error_on, sample, to_spectral, GridFunction, InitialDatum, LogGrid,
};
use crate::multiplier::{
    apply_symbol, apply_via_hille, cesaro_adjoint_symbol, cesaro_symbol, principal_pow, regression_library,
    symbol_of_generator, GeneratorKind, GeneratorSpec, HoloSymbol, Strip,
};
use crate::semigroup::{
    balakrishnan_apply, classical_kernel_apply, evolve, generator_apply, generator_apply_direct, time_derivative,
};
use crate::special::{beta, gamma, ComplexScalar};

type C = ComplexScalar;

pub const SUITE_NAMES: [&str; 6] = ["special", "grid", "direct", "multiplier", "semigroup", "analysis"];

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn tolerance_report(
    name: &str,
    tol: f64,
    base: f64,
    refined: f64,
    resolution: usize,
    mut details: serde_json::Value,
) -> CheckReport {
    details["tolerance"] = json!(tol);
    details["refined_error"] = json!(refined);
    CheckReport::new(name, base <= tol, base, resolution, refined <= tol, details)
}

/// Runs `check` on `grid` and on its 2x refinement, returning the two errors.
fn on_both<F: Fn(LogGrid) -> Result<f64>>(grid: LogGrid, check: F) -> Result<(f64, f64)> {
    Ok((check(grid)?, check(grid.refined(2)?)?))
}

fn worst<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    let mut w: f64 = 0.0;
    for v in it {
        let v = v?;
        w = if v.is_nan() { f64::NAN } else { w.max(v) };
    }
    Ok(w)
}

fn or_errored(name: &str, r: Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| CheckReport::errored(name, &e))
}

/// Alpha = 1 against the log-normal heat kernel, three kinds, log-Gaussian
/// and indicator data, `t in {0.25, 0.5, 1}`; also times each `evolve`.
pub fn classical_regression() -> CheckReport {
    let name = "classical_regression";
    let kinds = [
        GeneratorKind::FracPower,
        GeneratorKind::CesaroSq,
        GeneratorKind::AdjCesaroSq,
    ];
    let data = [
        InitialDatum::LogGaussian { mu: 0.0, sigma: 1.0 },
        InitialDatum::Indicator { a: 1.0, b: 2.0 },
    ];
    let mut max_secs: f64 = 0.0;
    let mut run = |g: LogGrid| -> Result<f64> {
        let mut errs = Vec::new();
        for d in &data {
            let f = sample(d, g)?;
            for t in [0.25, 0.5, 1.0] {
                let exact = classical_kernel_apply(&f, c(t, 0.0))?;
                for kind in kinds {
                    let start = Instant::now();
                    let u = evolve(&GeneratorSpec::new(kind, 1.0), &f, c(t, 0.0))?;
                    if g.len() == LogGrid::standard().len() {
                        max_secs = max_secs.max(start.elapsed().as_secs_f64());
                    }
                    errs.push(Ok(u.sub(&exact)?.norm_l2() / f.norm_l2()));
                }
            }
        }
        worst(errs)
    };
    let g = LogGrid::standard();
    let res = (|| Ok::<_, Error>((run(g)?, run(g.refined(2)?)?)))();
    match res {
        Ok((base, refined)) => {
            let mut r = tolerance_report(
                name,
                1e-6,
                base,
                refined,
                g.len(),
                json!({ "max_evolve_seconds": max_secs, "time_budget_seconds": 1.0 }),
            );
            if max_secs > 1.0 {
                r.pass = false;
            }
            r
        }
        Err(e) => CheckReport::errored(name, &e),
    }
}

/// Cesaro multipliers against direct quadrature, and the group-orbit path.
pub fn cesaro_equivalence() -> CheckReport {
    let name = "cesaro_equivalence";
    let alphas = [0.5, 0.75, 1.0, 1.4];
    // adjoint kernel tends to alpha at -inf; delta = 0.45 in (0, 1/2) limits the wrap
    let delta_adj = 0.45;
    let check = |g: LogGrid| -> Result<f64> {
        let f = sample(&InitialDatum::LogGaussian { mu: 0.2, sigma: 0.8 }, g)?;
        worst(alphas.iter().flat_map(|&alpha| {
            let f = f.clone();
            [
                (|| {
                    Ok(rel_l2_error(
                        &apply_symbol(&f, &cesaro_symbol(alpha), 0.0)?,
                        &cesaro(&f, alpha)?,
                    ))
                })(),
                (|| {
                    Ok(rel_l2_error(
                        &apply_symbol(&f, &cesaro_adjoint_symbol(alpha), delta_adj)?,
                        &cesaro_adjoint(&f, alpha)?,
                    ))
                })(),
                (|| {
                    Ok(rel_l2_error(
                        &group_orbit_apply(&f, &DensityOnR::Cesaro { alpha })?,
                        &cesaro(&f, alpha)?,
                    ))
                })(),
                (|| {
                    Ok(rel_l2_error(
                        &group_orbit_apply(&f, &DensityOnR::CesaroAdjoint { alpha })?,
                        &cesaro_adjoint(&f, alpha)?,
                    ))
                })(),
            ]
        }))
    };
    let g = LogGrid::standard();
    match on_both(g, check) {
        Ok((b, r)) => tolerance_report(
            name,
            1e-4,
            b,
            r,
            g.len(),
            json!({ "alphas": alphas, "adjoint_delta": delta_adj }),
        ),
        Err(e) => CheckReport::errored(name, &e),
    }
}

/// `apply_via_hille` against `apply_symbol` on the regression library.
pub fn hille_two_path() -> CheckReport {
    let name = "hille_two_path";
    let lib = regression_library();
    let labels: Vec<String> = lib.iter().map(|(h, _)| h.label.clone()).collect();
    let check = |g: LogGrid| -> Result<f64> {
        let f = sample(&InitialDatum::LogGaussian { mu: 0.2, sigma: 0.8 }, g)?;
        worst(lib.iter().map(|(h, delta)| {
            Ok(rel_l2_error(
                &apply_via_hille(&f, h, *delta)?,
                &apply_symbol(&f, h, *delta)?,
            ))
        }))
    };
    let g = LogGrid::standard();
    match on_both(g, check) {
        Ok((b, r)) => tolerance_report(name, 1e-4, b, r, g.len(), json!({ "symbols": labels })),
        Err(e) => CheckReport::errored(name, &e),
    }
}

fn law_cases() -> Vec<GeneratorSpec> {
    let mut v = Vec::new();
    for kind in GeneratorKind::ALL {
        for alpha in [0.75, 1.0, 1.4] {
            v.push(GeneratorSpec::new(kind, alpha));
        }
    }
    v.push(GeneratorSpec::new(GeneratorKind::Mixed, 2.5));
    v
}

/// `||T(t1 + t2) f - T(t1) T(t2) f|| / ||f||` over all kinds.
pub fn semigroup_law() -> CheckReport {
    let name = "semigroup_law";
    let (t1, t2) = (c(0.3, 0.05), c(0.2, -0.02));
    let check = |g: LogGrid| -> Result<f64> {
        let f = sample(&InitialDatum::LogGaussian { mu: 0.0, sigma: 0.7 }, g)?;
        worst(law_cases().iter().map(|spec| {
            let a = evolve(spec, &f, t1 + t2)?;
            let b = evolve(spec, &evolve(spec, &f, t2)?, t1)?;
            Ok(a.sub(&b)?.norm_l2() / f.norm_l2())
        }))
    };
    let g = LogGrid::standard();
    match on_both(g, check) {
        Ok((b, r)) => tolerance_report(
            name,
            1e-10,
            b,
            r,
            g.len(),
            json!({ "t1": [t1.re, t1.im], "t2": [t2.re, t2.im] }),
        ),
        Err(e) => CheckReport::errored(name, &e),
    }
}

/// `||T(1e-4) f - f|| / ||f||` for smooth `f`.
pub fn strong_continuity() -> CheckReport {
    let name = "strong_continuity";
    let check = |g: LogGrid| -> Result<f64> {
        let f = sample(&InitialDatum::LogGaussian { mu: 0.0, sigma: 0.7 }, g)?;
        worst(
            law_cases()
                .iter()
                .map(|spec| Ok(rel_l2_error(&evolve(spec, &f, c(1e-4, 0.0))?, &f))),
        )
    };
    let g = LogGrid::standard();
    match on_both(g, check) {
        Ok((b, r)) => tolerance_report(name, 1e-3, b, r, g.len(), json!({ "t": 1e-4 })),
        Err(e) => CheckReport::errored(name, &e),
    }
}

/// Finite-difference `u_t` against the multiplier generator (all kinds) and
/// against the direct fractional compositions (three kinds, interior points),
/// `alpha = 0.75`, `t = 0.2`.
pub fn pde_residual() -> Vec<CheckReport> {
    let t = 0.2;
    let spectral = |g: LogGrid| -> Result<f64> {
        let f = sample(&InitialDatum::LogGaussian { mu: 0.0, sigma: 0.7 }, g)?;
        worst(GeneratorKind::ALL.iter().map(|&kind| {
            let spec = GeneratorSpec::new(kind, 0.75);
            let u = evolve(&spec, &f, c(t, 0.0))?;
            let ut = time_derivative(&spec, &f, t, 1e-4)?;
            Ok(rel_l2_error(&ut, &generator_apply(&spec, &u)?))
        }))
    };
    let direct = |g: LogGrid| -> Result<f64> {
        let f = sample(&InitialDatum::LogGaussian { mu: 0.0, sigma: 0.7 }, g)?;
        worst(
            [
                GeneratorKind::CesaroSq,
                GeneratorKind::AdjCesaroSq,
                GeneratorKind::Mixed,
            ]
            .iter()
            .map(|&kind| {
                let spec = GeneratorSpec::new(kind, 0.75);
                let u = evolve(&spec, &f, c(t, 0.0))?;
                let ut = time_derivative(&spec, &f, t, 1e-4)?;
                let d = generator_apply_direct(&spec, &u)?;
                Ok(rel_l2_error_on(&d, &ut, u.index_range(1e-2, 1e2)))
            }),
        )
    };
    let g = LogGrid::new(1e-4, 1e4, 2048).expect("valid grid");
    let a = match on_both(g, spectral) {
        Ok((b, r)) => tolerance_report(
            "pde_residual_multiplier",
            1e-4,
            b,
            r,
            g.len(),
            json!({ "t": t, "alpha": 0.75 }),
        ),
        Err(e) => CheckReport::errored("pde_residual_multiplier", &e),
    };
    let b = match on_both(g, direct) {
        Ok((b, r)) => tolerance_report(
            "pde_residual_direct",
            1e-2,
            b,
            r,
            g.len(),
            json!({ "t": t, "alpha": 0.75, "interior": [1e-2, 1e2] }),
        ),
        Err(e) => CheckReport::errored("pde_residual_direct", &e),
    };
    vec![a, b]
}

/// Balakrishnan quadrature against the multiplier `(eps + z)^alpha` on the
/// line `delta = 0.5`.
pub fn balakrishnan_consistency() -> CheckReport {
    let name = "balakrishnan";
    let check = |g: LogGrid| -> Result<f64> {
        let f = sample(&InitialDatum::LogGaussian { mu: 0.0, sigma: 0.7 }, g)?;
        let mut errs = Vec::new();
        for alpha in [0.3, 0.5, 0.7] {
            for eps in [0.0, 0.1] {
                let h = HoloSymbol::new("(eps+z)^a", Strip::open(-eps, f64::INFINITY), alpha, move |z| {
                    Ok(principal_pow(z + eps, alpha))
                });
                errs.push((|| {
                    Ok(rel_l2_error(
                        &balakrishnan_apply(&f, alpha, eps)?,
                        &apply_symbol(&f, &h, 0.5)?,
                    ))
                })());
            }
        }
        worst(errs)
    };
    let g = LogGrid::new(1e-5, 1e5, 2048).expect("valid grid");
    match on_both(g, check) {
        Ok((b, r)) => tolerance_report(name, 1e-3, b, r, g.len(), json!({ "delta": 0.5 })),
        Err(e) => CheckReport::errored(name, &e),
    }
}

/// Resolvent scans: fractional power at `alpha in {0.75, 1.4, 2.3}` with angle
/// bisection.
pub fn sector_angle_scans() -> Vec<CheckReport> {
    let opts = ScanOptions::default();
    [0.75, 1.4, 2.3]
        .iter()
        .map(|&a| {
            let spec = GeneratorSpec::new(GeneratorKind::FracPower, a);
            or_errored("resolvent_scan", resolvent_sectoriality_scan(&spec, &opts))
        })
        .collect()
}

/// Mixed generator at 0.75: its line `delta = 0.25` puts `h(delta) > 0`, so the
/// scan is restricted to `|lambda| >= 100` (sectoriality up to a shift).
pub fn mixed_scan() -> CheckReport {
    let opts = ScanOptions {
        lambda_min: 100.0,
        ..ScanOptions::default()
    };
    let spec = GeneratorSpec::new(GeneratorKind::Mixed, 0.75);
    or_errored("resolvent_scan", resolvent_sectoriality_scan(&spec, &opts))
}

/// Log-spaced values `lo..=hi`.
fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Integral-bound families: the symmetric powers `s = 1, 2` must reproduce
/// `2/s` for every `r in [1e-3, 1e3]`.
pub fn integral_bound_reports() -> Vec<CheckReport> {
    let rs = logspace(1e-3, 1e3, 13);
    let mut out = Vec::new();
    for s in [1.0, 2.0] {
        let fam = BoundFamily::symmetric_power(s);
        let mut r = integral_bound_check(&fam, &rs);
        let exact = 2.0 / s;
        let dev = rs
            .iter()
            .map(|&r| (integral_bound_value(&fam, r) - exact).abs())
            .fold(0.0, f64::max);
        r.name = format!("integral_bound_symmetric_s{s}");
        r.details["exact"] = json!(exact);
        r.details["max_deviation_from_exact"] = json!(dev);
        r.pass &= dev <= 1e-9;
        out.push(r);
    }
    let fam = BoundFamily {
        f1: Some(std::sync::Arc::new(|x: f64| x * (-x).exp())),
        f2: None,
        s: vec![],
        t: vec![],
        interval: (0.0, f64::INFINITY),
    };
    let mut r = integral_bound_check(&fam, &rs);
    r.name = "integral_bound_r_independent".into();
    out.push(r);
    let fam = BoundFamily {
        f1: Some(std::sync::Arc::new(|x: f64| (-x).exp() * x.sqrt())),
        f2: Some(std::sync::Arc::new(|x: f64| 1.0 / (1.0 + x * x))),
        s: vec![0.5, 2.0],
        t: vec![1.0],
        interval: (1e-2, f64::INFINITY),
    };
    let mut r = integral_bound_check(&fam, &rs);
    r.name = "integral_bound_mixed_exponents".into();
    out.push(r);
    out
}

/// Bounding families at every step and singular point, model symbols at
/// `alpha in {0.3, 0.6, 1.4}`, `a in {0, 1}`, plus the constant-symbol case.
pub fn uniform_family_reports() -> Vec<CheckReport> {
    let mut out = Vec::new();
    for a in [0.0, 1.0] {
        let geom = SectorGeometry {
            a,
            b: a + 1.0,
            ..SectorGeometry::default()
        };
        for alpha in [0.3, 0.6, 1.4] {
            for case in FamilyCase::all(alpha) {
                let mut r = or_errored("uniform_family", uniform_family_check(&case, &geom, 25));
                r.name = format!("{}_alpha{}_a{}", r.name, alpha, a);
                out.push(r);
            }
        }
    }
    let mut case = FamilyCase::new(1, FamilyPoint::PlusA, 0.6);
    case.constant_symbol = true;
    let mut r = or_errored(
        "uniform_family",
        uniform_family_check(&case, &SectorGeometry::default(), 25),
    );
    r.name = "uniform_family_step1_constant_symbol".into();
    out.push(r);
    out
}

/// Scalar lemma checks: sector distances, resolvent inequalities (`z^2` on a
/// ray, and the negated fractional-power symbol on the imaginary axis).
pub fn scalar_inequality_reports(seed: u64) -> Vec<CheckReport> {
    let mut out = vec![sector_distance_check(&SectorGeometry::default(), 4000, seed)];
    let psi = 0.05;
    let geom = SectorGeometry {
        gamma: 2.0 * psi + 1e-9,
        epsilon: 0.2,
        ..SectorGeometry::default()
    };
    let sq = HoloSymbol::new("z^2", Strip::everywhere(), 2.0, |z| Ok(z * z));
    let dom = SampleDomain::Ray {
        angle: psi,
        r_min: 1e-3,
        r_max: 1e3,
    };
    out.push(or_errored(
        "ineq_lemma",
        ineq_lemma_check(&sq, &geom, c(1.0, 0.0), dom, 400),
    ));

    // -h for the fractional power at alpha = 0.75 has range in the sector of angle pi/4
    let spec = GeneratorSpec::new(GeneratorKind::FracPower, 0.75);
    let r = symbol_of_generator(&spec)
        .map(|h| HoloSymbol::new("-h_B", h.valid_strip, h.growth_order, move |z| Ok(-h.eval(z)?)));
    let geom = SectorGeometry {
        gamma: PI / 4.0 + 1e-9,
        epsilon: 0.3,
        ..SectorGeometry::default()
    };
    let dom = SampleDomain::Line {
        delta: 0.0,
        u_max: 100.0,
    };
    out.push(or_errored(
        "ineq_lemma",
        r.and_then(|h| ineq_lemma_check(&h, &geom, c(1.0, 0.0), dom, 400)),
    ));
    out
}

/// Sector-distance, inequality, integral-bound and uniform-family reports.
pub fn scalar_lemma_reports(seed: u64) -> Vec<CheckReport> {
    let mut out = scalar_inequality_reports(seed);
    out.extend(integral_bound_reports());
    out.extend(uniform_family_reports());
    out
}

/// Gamma-ratio asymptotics on five rays.
pub fn gamma_asymptotics() -> CheckReport {
    or_errored("gamma_ratio", gamma_ratio_check(&[0.5, 1.0, 1.5, 2.8], 200))
}

/// Weak continuity at `t = 0` for an indicator datum and a smooth test
/// function, `p = 2`, every kind at `alpha = 0.75`.
pub fn weak_pairing_reports() -> Vec<CheckReport> {
    let g = LogGrid::standard();
    let data = (|| -> Result<_> {
        Ok((
            sample(&InitialDatum::Indicator { a: 1.0, b: 2.0 }, g)?,
            sample(&InitialDatum::LogGaussian { mu: 0.3, sigma: 0.5 }, g)?,
        ))
    })();
    let (f, phi) = match data {
        Ok(v) => v,
        Err(e) => return vec![CheckReport::errored("weak_pairing", &e)],
    };
    GeneratorKind::ALL
        .iter()
        .map(|&kind| {
            let spec = GeneratorSpec::new(kind, 0.75);
            or_errored(
                "weak_pairing",
                weak_pairing_continuity(&spec, &f, &phi, &[1e-1, 1e-2, 1e-3, 1e-4]),
            )
        })
        .collect()
}

fn special_reports() -> Vec<CheckReport> {
    let pts = [c(0.3, 2.0), c(-1.7, 0.4), c(-3.2, -5.0), c(0.1, 40.0), c(2.5, -0.5)];
    let rec = worst(pts.iter().map(|&z| {
        let lhs = gamma(z)?;
        let rhs = gamma(z + 1.0)? / z;
        Ok((lhs - rhs).norm() / rhs.norm())
    }));
    let refl = worst(pts.iter().filter(|z| z.im.abs() < 20.0).map(|&z| {
        let lhs = gamma(z)? * gamma(1.0 - z)?;
        let rhs = PI / (z * PI).sin();
        Ok((lhs - rhs).norm() / rhs.norm())
    }));
    let beta_frozen = beta(c(1.0, -1.0), 0.75).map(|b| {
        let expect = c(0.799_689_067_281_228_4, 0.584_640_716_173_327_2);
        (b - expect).norm() / expect.norm()
    });
    let mk = |name: &str, r: Result<f64>, tol: f64| match r {
        Ok(e) => CheckReport::new(name, e <= tol, e, pts.len(), true, json!({ "tolerance": tol })),
        Err(e) => CheckReport::errored(name, &e),
    };
    vec![
        mk("gamma_recurrence", rec, 1e-12),
        mk("gamma_reflection", refl, 1e-12),
        mk("beta_frozen_value", beta_frozen, 1e-12),
        gamma_asymptotics(),
    ]
}

fn grid_reports() -> Vec<CheckReport> {
    let check = |g: LogGrid| -> Result<(f64, f64, f64, f64)> {
        let f = sample(&InitialDatum::LogGaussian { mu: 0.4, sigma: 0.9 }, g)?;
        let spec = to_spectral(&f, 0.0);
        let back = from_spectral(&spec, 0.0)?;
        let roundtrip = rel_l2_error(&back, &f);
        let e_y: f64 = f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dy();
        let e_u: f64 = spec.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.du() / (2.0 * PI);
        let parseval = (e_y - e_u).abs() / e_y;
        let (s, t) = (0.37, -1.21);
        let law = rel_l2_error(&group_shift(&group_shift(&f, s), t), &group_shift(&f, s + t));
        let mut scaling: f64 = 0.0;
        for p in [1.0, 2.0, 3.0] {
            let tt = 10.0 * g.dy();
            let ratio = group_shift(&f, tt).norm_p(p) / f.norm_p(p);
            scaling = scaling.max((ratio - (tt / p).exp()).abs());
        }
        Ok((roundtrip, parseval, law, scaling))
    };
    let g = LogGrid::standard();
    let run = (|| Ok::<_, Error>((check(g)?, check(g.refined(2)?)?)))();
    match run {
        Ok((a, b)) => vec![
            tolerance_report("spectral_roundtrip", 1e-12, a.0, b.0, g.len(), json!({})),
            tolerance_report("parseval", 1e-12, a.1, b.1, g.len(), json!({})),
            tolerance_report("group_law", 1e-10, a.2, b.2, g.len(), json!({})),
            tolerance_report("lp_norm_scaling", 1e-12, a.3, b.3, g.len(), json!({ "p": [1, 2, 3] })),
        ],
        Err(e) => vec![CheckReport::errored("grid", &e)],
    }
}

fn direct_reports() -> Vec<CheckReport> {
    let g = LogGrid::new(1e-4, 1e4, 1024).expect("valid grid");
    let power = |g: LogGrid| -> Result<f64> {
        let f = GridFunction::from_real_fn(g, |x| x)?;
        let alpha = 0.5;
        let r = rl_integral(&f, FracOrder::new(alpha)?);
        let cst = 1.0 / crate::special::gamma_real(2.0 + alpha)?;
        Ok(f.index_range(1e-2, 1e4)
            .map(|j| {
                let e = cst * g.x(j).powf(1.0 + alpha);
                (r.values[j].re - e).abs() / e
            })
            .fold(0.0, f64::max))
    };
    let weyl = |g: LogGrid| -> Result<f64> {
        let f = GridFunction::from_real_fn(g, |x| (-x).exp())?;
        let r = weyl_integral(&f, FracOrder::new(1.0)?);
        Ok(rel_l2_error_on(&r, &f, f.index_range(1e-3, 3.0)))
    };
    let gl = |g: LogGrid| -> Result<f64> {
        let ord = FracOrder::new(0.5)?;
        let sq = GridFunction::from_real_fn(g, |x| x.sqrt())?;
        let ex = GridFunction::from_real_fn(g, |x| (-x).exp())?;
        let d = rl_derivative(&sq, ord);
        let w = weyl_derivative(&ex, ord);
        let mut e: f64 = 0.0;
        for x in [0.1, 1.0, 3.0] {
            let j = sq.index_range(x, 1e9).start;
            let xj = g.x(j);
            let a = grunwald_letnikov_rl(|y| y.max(0.0).sqrt(), 0.5, xj, 1e-5);
            e = e.max((d.values[j].re - a).abs() / a.abs());
            let b = grunwald_letnikov_weyl(|y| (-y).exp(), 0.5, xj, 1e-5, 60.0);
            e = e.max((w.values[j].re - b).abs() / b.abs());
        }
        Ok(e)
    };
    let mut out = Vec::new();
    for (name, tol, f) in [
        ("rl_integral_power_law", 1e-5, &power as &dyn Fn(LogGrid) -> Result<f64>),
        ("weyl_integral_exponential", 1e-3, &weyl),
        ("grunwald_letnikov_agreement", 1e-2, &gl),
    ] {
        out.push(match on_both(g, f) {
            Ok((a, b)) => tolerance_report(name, tol, a, b, g.len(), json!({})),
            Err(e) => CheckReport::errored(name, &e),
        });
    }
    out
}

/// Reports for one named suite.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckReport>> {
    Ok(match name {
        "special" => special_reports(),
        "grid" => grid_reports(),
        "direct" => direct_reports(),
        "multiplier" => vec![cesaro_equivalence(), hille_two_path()],
        "semigroup" => {
            let mut v = vec![classical_regression(), semigroup_law(), strong_continuity()];
            v.extend(pde_residual());
            v.push(balakrishnan_consistency());
            v
        }
        "analysis" => {
            let mut v = scalar_lemma_reports(seed);
            v.extend(sector_angle_scans());
            v.push(mixed_scan());
            v.extend(weak_pairing_reports());
            v
        }
        other => {
            return Err(Error::InvalidSpec(format!(
                "unknown suite '{other}', expected one of {SUITE_NAMES:?}"
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(run_suite("nope", 0), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn special_and_grid_suites_pass() {
        for name in ["special", "grid"] {
            for r in run_suite(name, 1).unwrap() {
                assert!(r.pass, "{r:?}");
            }
        }
    }
}
