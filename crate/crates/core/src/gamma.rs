//! Complex Gamma function and the rising-factorial ratios built from it.
//!
//! The Lanczos approximation with `g = 7` and nine coefficients is accurate
//! to roughly 1e-15 relative error for `Re z >= 1/2`; the left half-plane is
//! reached through the reflection formula.

use std::f64::consts::PI;

use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the complex plane. Poles return a non-finite value.
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return Complex64::new(PI, 0.0) / (s * gamma(Complex64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * acc
}

/// `prod_{s=1}^{n} (s + z) / s`, which equals `Gamma(n+1+z) / (Gamma(n+1) Gamma(1+z))`.
///
/// Evaluated as a product so that it stays exact in structure for large `n`
/// and well defined when `1 + z` is a pole (the product then vanishes).
pub fn rising_ratio(z: Complex64, n: u64) -> Complex64 {
    let mut p = Complex64::new(1.0, 0.0);
    for s in 1..=n {
        let s = s as f64;
        p *= (z + s) / s;
    }
    p
}

/// Table of `rising_ratio(z, l)` for `l = 0..=n`.
pub fn rising_ratio_table(z: Complex64, n: u64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut p = Complex64::new(1.0, 0.0);
    out.push(p);
    for s in 1..=n {
        let s = s as f64;
        p *= (z + s) / s;
        out.push(p);
    }
    out
}

/// Principal power `x^z = exp(z log x)` for real `x >= 0`, with `0^z = 0`
/// whenever `Re z > 0`.
pub fn real_pow(x: f64, z: Complex64) -> Complex64 {
    if x == 0.0 {
        if z.re > 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        return Complex64::new(f64::NAN, f64::NAN);
    }
    (z * x.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn real_axis_values() {
        assert!(rel(gamma(Complex64::new(5.0, 0.0)), Complex64::new(24.0, 0.0)) < 1e-14);
        let half = gamma(Complex64::new(0.5, 0.0));
        assert!(rel(half, Complex64::new(PI.sqrt(), 0.0)) < 1e-14);
        // reflection branch
        let neg = gamma(Complex64::new(-0.5, 0.0));
        assert!(rel(neg, Complex64::new(-2.0 * PI.sqrt(), 0.0)) < 1e-13);
    }

    #[test]
    fn matches_reference_values() {
        // reference values from a 30-digit evaluation
        let cases = [
            (Complex64::new(0.0, 1.0), Complex64::new(-0.154_949_828_301_810_68, -0.498_015_668_118_356)),
            (Complex64::new(4.0, 10.0), Complex64::new(0.000_771_534_294_239_966_2, -0.001_019_082_799_041_7)),
        ];
        for (z, want) in cases {
            assert!(rel(gamma(z), want) < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn recurrence_identity() {
        for &(re, im) in &[(0.3, 0.9), (1.6, -0.8), (-0.4, 0.7), (0.62, 0.78)] {
            let z = Complex64::new(re, im);
            let lhs = gamma(z + 1.0);
            let rhs = z * gamma(z);
            assert!(rel(lhs, rhs) < 1e-13);
        }
    }

    #[test]
    fn rising_ratio_matches_gamma_quotient() {
        let z = Complex64::from_polar(1.0, 2.0 * PI / 7.0);
        for n in [0u64, 1, 5, 40] {
            let direct = gamma(z + (n as f64 + 1.0))
                / (gamma(Complex64::new(n as f64 + 1.0, 0.0)) * gamma(z + 1.0));
            assert!(rel(rising_ratio(z, n), direct) < 1e-12);
        }
        let t = rising_ratio_table(z, 40);
        assert_eq!(t.len(), 41);
        assert!(rel(t[40], rising_ratio(z, 40)) < 1e-15);
    }

    #[test]
    fn rising_ratio_at_pole_vanishes() {
        assert_eq!(rising_ratio(Complex64::new(-1.0, 0.0), 3), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn real_pow_edges() {
        let z = Complex64::new(0.6, 0.8);
        assert_eq!(real_pow(0.0, z), Complex64::new(0.0, 0.0));
        let v = real_pow(0.5, z);
        let alt = Complex64::new(0.5, 0.0).powc(z);
        assert!((v - alt).norm() < 1e-15);
    }
}
