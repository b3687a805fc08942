//! Complex Gamma and Beta functions.
//!
//! `log_gamma` uses a Lanczos approximation (g = 671/128, 14 terms) on
//! `Re z >= 1/2` and the reflection formula below that. Beta values are
//! assembled in log space so that evaluations along long vertical lines
//! (|Im z| in the hundreds) never overflow.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type ComplexScalar = Complex64;

const LANCZOS_G_HALF: f64 = 5.242_187_5;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_1;
const LANCZOS_COF: [f64; 14] = [
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Rejects NaN or infinite components.
pub fn check_finite(z: ComplexScalar, what: &'static str) -> Result<ComplexScalar> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(what))
    }
}

fn is_gamma_pole(z: ComplexScalar) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `log(sin(pi z))`, stable for large `|Im z|`.
fn ln_sin_pi(z: ComplexScalar) -> ComplexScalar {
    if z.im.abs() < 20.0 {
        return (z * PI).sin().ln();
    }
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    // sin(pi z) = (i/2) e^{-i pi z} (1 - e^{2 i pi z}), |e^{2 i pi z}| tiny here
    let i = ComplexScalar::i();
    let ln_half_i = ComplexScalar::new(0.5f64.ln(), PI / 2.0);
    let tail = (ComplexScalar::new(1.0, 0.0) - (i * 2.0 * PI * z).exp()).ln();
    ln_half_i - i * PI * z + tail
}

fn lanczos_ln_gamma(z: ComplexScalar) -> ComplexScalar {
    let tmp = z + LANCZOS_G_HALF;
    let head = (z + 0.5) * tmp.ln() - tmp;
    let mut ser = ComplexScalar::new(LANCZOS_C0, 0.0);
    let mut y = z;
    for c in LANCZOS_COF {
        y += 1.0;
        ser += c / y;
    }
    head + LN_SQRT_2PI + ser.ln() - z.ln()
}

/// Principal-branch `log Gamma(z)`.
pub fn log_gamma(z: ComplexScalar) -> Result<ComplexScalar> {
    check_finite(z, "log_gamma argument")?;
    if is_gamma_pole(z) {
        return Err(Error::Pole { re: z.re, im: z.im });
    }
    if z.re < 0.5 {
        let one_minus = ComplexScalar::new(1.0, 0.0) - z;
        let v = ComplexScalar::new(PI.ln(), 0.0) - ln_sin_pi(z) - lanczos_ln_gamma(one_minus);
        Ok(v)
    } else {
        Ok(lanczos_ln_gamma(z))
    }
}

/// `Gamma(z)`.
pub fn gamma(z: ComplexScalar) -> Result<ComplexScalar> {
    Ok(log_gamma(z)?.exp())
}

/// Real Gamma function.
pub fn gamma_real(x: f64) -> Result<f64> {
    let v = gamma(ComplexScalar::new(x, 0.0))?;
    Ok(v.re)
}

/// Euler Beta function `B(z, alpha) = Gamma(z) Gamma(alpha) / Gamma(z + alpha)`.
pub fn beta(z: ComplexScalar, alpha: f64) -> Result<ComplexScalar> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Contract(format!("beta requires alpha > 0, got {alpha}")));
    }
    let a = ComplexScalar::new(alpha, 0.0);
    let l = log_gamma(z)? + log_gamma(a)? - log_gamma(z + a)?;
    Ok(l.exp())
}

/// `1 / (alpha B(z, alpha)) = Gamma(z + alpha) / (Gamma(alpha + 1) Gamma(z))`.
///
/// Finite (zero) at the nonpositive integers, where `B` itself has poles.
pub fn inv_alpha_beta(z: ComplexScalar, alpha: f64) -> Result<ComplexScalar> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Contract(format!("beta requires alpha > 0, got {alpha}")));
    }
    check_finite(z, "inv_alpha_beta argument")?;
    if is_gamma_pole(z) {
        if is_gamma_pole(z + alpha) {
            // both poles: ratio of residues
            let m = (-z.re) as i64;
            let k = (-(z.re + alpha)) as i64;
            let ratio = ratio_of_pole_residues(m, k);
            return Ok(ComplexScalar::new(ratio / gamma_real(alpha + 1.0)?, 0.0));
        }
        return Ok(ComplexScalar::new(0.0, 0.0));
    }
    let a = ComplexScalar::new(alpha, 0.0);
    let l = log_gamma(z + a)? - log_gamma(a + 1.0)? - log_gamma(z)?;
    Ok(l.exp())
}

// lim Gamma(-k + e) / Gamma(-m + e) = (-1)^{k-m} m! / k!
fn ratio_of_pole_residues(m: i64, k: i64) -> f64 {
    let sign = if (k - m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let mut r = 1.0;
    if m >= k {
        for j in (k + 1)..=m {
            r *= j as f64;
        }
    } else {
        for j in (m + 1)..=k {
            r /= j as f64;
        }
    }
    sign * r
}

/// `|Gamma(z + lambda) / Gamma(z) * z^{-lambda} - 1|` with the principal branch of
/// `z^{-lambda}`.
pub fn gamma_ratio_deviation(z: ComplexScalar, lambda: ComplexScalar) -> Result<f64> {
    check_finite(lambda, "gamma_ratio_deviation lambda")?;
    if z.norm() < 2.0 {
        return Err(Error::Contract(format!(
            "gamma_ratio_deviation requires |z| >= 2, got {}",
            z.norm()
        )));
    }
    let l = log_gamma(z + lambda)? - log_gamma(z)? - lambda * z.ln();
    // exp(l) - 1 without cancellation for small l
    let d = if l.norm() < 1e-3 {
        let mut term = l;
        let mut sum = l;
        for k in 2..12 {
            term = term * l / k as f64;
            sum += term;
        }
        sum
    } else {
        l.exp() - 1.0
    };
    Ok(d.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    #[test]
    fn log_gamma_small_integers() {
        assert!(log_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-15);
        let v = log_gamma(c(5.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, 24f64.ln(), max_relative = 1e-14);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn log_gamma_half_via_reflection_oracle() {
        // Gamma(1/2)^2 = pi / sin(pi/2)
        let v = log_gamma(c(0.5, 0.0)).unwrap();
        assert_relative_eq!(v.re, 0.5 * PI.ln(), max_relative = 1e-14);
    }

    #[test]
    fn poles_are_rejected() {
        for k in 0..5 {
            let z = c(-(k as f64), 0.0);
            assert!(matches!(log_gamma(z), Err(Error::Pole { .. })));
        }
        assert!(log_gamma(c(-1.0, 1e-9)).is_ok());
    }

    #[test]
    fn reflection_against_recurrence() {
        // Gamma(z) = Gamma(z + 1) / z crosses the reflection threshold
        for &z in &[c(0.3, 2.0), c(-1.7, 0.4), c(-3.2, -5.0), c(0.1, 40.0)] {
            let lhs = gamma(z).unwrap();
            let rhs = gamma(z + 1.0).unwrap() / z;
            assert_relative_eq!((lhs - rhs).norm() / rhs.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn large_imaginary_part_does_not_overflow() {
        // |Gamma(1/4 + iy)| ~ sqrt(2 pi) |y|^{-1/4} e^{-pi |y| / 2}
        let y = 450.0;
        let l = log_gamma(c(0.25, y)).unwrap();
        let expect = LN_SQRT_2PI - 0.25 * y.ln() - PI * y / 2.0;
        assert!((l.re - expect).abs() < 1e-3);
        let b = beta(c(0.25, y), 0.75).unwrap();
        assert!(b.re.is_finite() && b.im.is_finite());
    }

    #[test]
    fn beta_trivial_values() {
        assert_relative_eq!(beta(c(1.0, 0.0), 1.0).unwrap().re, 1.0, max_relative = 1e-14);
        assert_relative_eq!(beta(c(1.0, 0.0), 2.0).unwrap().re, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn beta_complex_frozen_value() {
        // B(1 - i, 0.75): mpmath quadrature of t^{-i} (1-t)^{-1/4} over (0, 1)
        let b = beta(c(1.0, -1.0), 0.75).unwrap();
        let expect = c(0.799_689_067_281_228_4, 0.584_640_716_173_327_2);
        assert!((b - expect).norm() / expect.norm() < 1e-12, "{b}");
    }

    #[test]
    fn inv_alpha_beta_matches_reciprocal_and_zero_at_poles() {
        let z = c(0.3, 1.7);
        let a = 0.75;
        let direct = 1.0 / (beta(z, a).unwrap() * a);
        assert_relative_eq!((inv_alpha_beta(z, a).unwrap() - direct).norm(), 0.0, epsilon = 1e-13);
        assert_eq!(inv_alpha_beta(c(0.0, 0.0), 0.75).unwrap(), c(0.0, 0.0));
        // alpha = 1: 1/B(z,1) = z
        assert_relative_eq!((inv_alpha_beta(z, 1.0).unwrap() - z).norm(), 0.0, epsilon = 1e-13);
        // z = -1, alpha = 1: limit Gamma(0)/Gamma(-1) -> -1
        assert_relative_eq!(inv_alpha_beta(c(-1.0, 0.0), 1.0).unwrap().re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn gamma_ratio_examples() {
        assert!(gamma_ratio_deviation(c(10.0, 0.0), c(1.0, 0.0)).unwrap() < 1e-13);
        assert!(gamma_ratio_deviation(c(0.0, 10.0), c(0.0, 0.0)).unwrap() < 1e-15);
        // lambda (lambda - 1) / (2 z) leading term
        let d = gamma_ratio_deviation(c(50.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!(d * 50.0 < 0.13 && d * 50.0 > 0.12, "{d}");
        assert!(gamma_ratio_deviation(c(1.0, 0.0), c(0.5, 0.0)).is_err());
    }
}
