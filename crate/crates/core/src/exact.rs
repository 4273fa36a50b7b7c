//! Exact and semi-exact moments of the cyclic urn.
//!
//! [`ExactDistribution`] enumerates the law of `R_n` in rational arithmetic and
//! serves as the oracle for the product and recursion formulas below.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Result, UrnError};
use crate::gamma::{gamma, rising_ratio, rising_ratio_table};
use crate::spectral::{EigenClass, SpectralBasis};

pub const MAX_EXACT_M: usize = 8;
pub const MAX_EXACT_N: u64 = 14;

/// Exact law of `R_n` for an urn started from one ball of type 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub m: usize,
    pub n: u64,
    pub law: BTreeMap<Vec<u64>, BigRational>,
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Forward dynamic program over compositions in rational arithmetic.
pub fn exact_distribution(m: usize, n: u64) -> Result<ExactDistribution> {
    if m < 2 {
        return Err(invalid(format!("m must be at least 2, got {m}")));
    }
    if m > MAX_EXACT_M || n > MAX_EXACT_N {
        return Err(UrnError::StateSpace(format!(
            "exact enumeration limited to m <= {MAX_EXACT_M}, n <= {MAX_EXACT_N}; got m = {m}, n = {n}"
        )));
    }
    let mut start = vec![0u64; m];
    start[0] = 1;
    let mut law = BTreeMap::new();
    law.insert(start, BigRational::one());
    for t in 0..n {
        let balls = BigInt::from(t + 1);
        let mut next: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
        for (state, p) in &law {
            for (j, &c) in state.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let mut succ = state.clone();
                succ[(j + 1) % m] += 1;
                let w = p * BigRational::new(BigInt::from(c), balls.clone());
                *next.entry(succ).or_insert_with(BigRational::zero) += w;
            }
        }
        law = next;
    }
    Ok(ExactDistribution { m, n, law })
}

impl ExactDistribution {
    pub fn total_probability(&self) -> BigRational {
        self.law.values().fold(BigRational::zero(), |a, p| a + p)
    }

    pub fn support_size(&self) -> usize {
        self.law.len()
    }

    /// `E[R_{n,t}]` as exact rationals.
    pub fn mean_counts(&self) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.m];
        for (state, p) in &self.law {
            for (o, &c) in out.iter_mut().zip(state) {
                *o += p * BigRational::from_integer(BigInt::from(c));
            }
        }
        out
    }

    /// `E[R_{n,s} R_{n,t}]` as exact rationals.
    pub fn second_counts(&self) -> Vec<Vec<BigRational>> {
        let mut out = vec![vec![BigRational::zero(); self.m]; self.m];
        for (state, p) in &self.law {
            for s in 0..self.m {
                for t in 0..self.m {
                    let c = BigInt::from(state[s] * state[t]);
                    out[s][t] += p * BigRational::from_integer(c);
                }
            }
        }
        out
    }

    /// `E[u_k(R_n)]`, converting the rational means to floating point last.
    pub fn mean_u(&self, basis: &SpectralBasis, k: usize) -> Complex64 {
        self.mean_counts()
            .iter()
            .enumerate()
            .map(|(t, c)| basis.omega(k * t) * to_f64(c))
            .sum()
    }

    /// `E[u_k(R_n) u_l(R_n)]` from the exact second moments of the counts.
    pub fn second_u(&self, basis: &SpectralBasis, k: usize, l: usize) -> Complex64 {
        let sc = self.second_counts();
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, row) in sc.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                acc += basis.omega(k * s + l * t) * to_f64(v);
            }
        }
        acc
    }

    /// Law of `u_k(R_n)` as (value, probability) pairs.
    pub fn projection_law(&self, basis: &SpectralBasis, k: usize) -> Vec<(Complex64, f64)> {
        self.law
            .iter()
            .map(|(state, p)| {
                let w: Vec<f64> = state.iter().map(|&c| c as f64).collect();
                (basis.project(k, &w), to_f64(p))
            })
            .collect()
    }
}

/// `E[u_k(R_n)] = prod_{s=1}^n (s + omega^k)/s`.
///
/// For `k = m/2` the factor at `s = 1` vanishes, so the mean is 0 for every
/// `n >= 1` (and 1 at `n = 0`, where `R_0 = e_0`).
pub fn mean_u(basis: &SpectralBasis, n: u64, k: usize) -> Complex64 {
    rising_ratio(basis.omega(k), n)
}

/// `E[u_k(R_n) u_l(R_n)]` via the one-step recursion
/// `a_s = (1 + (w^k + w^l)/s) a_{s-1} + (w^{k+l}/s) E[u_{k+l}(R_{s-1})]`, `a_0 = 1`.
pub fn second_moment_u(basis: &SpectralBasis, n: u64, k: usize, l: usize) -> Complex64 {
    let wk = basis.omega(k);
    let wl = basis.omega(l);
    let wkl = basis.omega(k + l);
    let mut a = Complex64::new(1.0, 0.0);
    let mut mean_kl = Complex64::new(1.0, 0.0);
    for s in 1..=n {
        let sf = s as f64;
        a = a * (1.0 + (wk + wl) / sf) + wkl / sf * mean_kl;
        mean_kl *= (wkl + sf) / sf;
    }
    a
}

/// First and second moments of all projections at one time.
#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub m: usize,
    pub n: u64,
    /// `E[u_k(R_n)]`.
    pub mean_u: Vec<Complex64>,
    /// `E[u_k(R_n) u_l(R_n)]`, row `k`, column `l`.
    pub second_u: Vec<Vec<Complex64>>,
    /// `E[R_n]`.
    pub mean_r: Vec<f64>,
}

impl MomentTable {
    /// `Cov(u_k, u_l) = E[u_k u_l] - E[u_k] E[u_l]` (bilinear, not Hermitian).
    pub fn cov(&self, k: usize, l: usize) -> Complex64 {
        let k = k % self.m;
        let l = l % self.m;
        self.second_u[k][l] - self.mean_u[k] * self.mean_u[l]
    }
}

/// Moment tables at each requested time, from a single pass of the all-pairs
/// recursion. `times` need not be sorted.
pub fn moment_tables(basis: &SpectralBasis, times: &[u64]) -> Vec<MomentTable> {
    let m = basis.m();
    let horizon = times.iter().copied().max().unwrap_or(0);
    let w = basis.omega_powers();
    let mut second = vec![vec![Complex64::new(1.0, 0.0); m]; m];
    let mut mean = vec![Complex64::new(1.0, 0.0); m];
    let mut by_time: BTreeMap<u64, MomentTable> = BTreeMap::new();
    let wanted: std::collections::BTreeSet<u64> = times.iter().copied().collect();
    let mut record = |s: u64, mean: &[Complex64], second: &[Vec<Complex64>]| {
        if wanted.contains(&s) {
            let mean_r = basis.reassemble(mean);
            by_time.insert(
                s,
                MomentTable {
                    m,
                    n: s,
                    mean_u: mean.to_vec(),
                    second_u: second.to_vec(),
                    mean_r,
                },
            );
        }
    };
    record(0, &mean, &second);
    for s in 1..=horizon {
        let sf = s as f64;
        let inv = 1.0 / sf;
        for k in 0..m {
            for l in k..m {
                let kl = (k + l) % m;
                let v = second[k][l] * (1.0 + (w[k] + w[l]) * inv) + w[kl] * inv * mean[kl];
                second[k][l] = v;
                second[l][k] = v;
            }
        }
        for (e, wk) in mean.iter_mut().zip(w) {
            *e *= 1.0 + wk * inv;
        }
        record(s, &mean, &second);
    }
    times.iter().map(|t| by_time[t].clone()).collect()
}

pub fn moment_table(basis: &SpectralBasis, n: u64) -> MomentTable {
    moment_tables(basis, &[n]).pop().expect("one table")
}

/// The special cases with closed-form second moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormCase {
    /// `E|u_0|^2 = (n+1)^2`.
    U0,
    /// `E|u_{m/2}|^2 = (n+1)/3`, for `n >= 2`.
    Half,
    /// `E|u_{m/3}|^2 = (n+1)/2`.
    Third,
    /// `E|u_{m/6}|^2 = (n+1) H_{n+1}`.
    Sixth,
}

impl ClosedFormCase {
    pub const ALL: [ClosedFormCase; 4] = [Self::U0, Self::Half, Self::Third, Self::Sixth];

    /// Divisor of `m` the case needs.
    pub fn divisor(self) -> usize {
        match self {
            Self::U0 => 1,
            Self::Half => 2,
            Self::Third => 3,
            Self::Sixth => 6,
        }
    }

    /// The `(k, l)` pair whose mixed moment the closed form describes.
    pub fn indices(self, m: usize) -> (usize, usize) {
        let k = if self == Self::U0 { 0 } else { m / self.divisor() };
        (k, (m - k) % m)
    }
}

pub fn closed_form(m: usize, n: u64, case: ClosedFormCase) -> Result<f64> {
    if m < 2 {
        return Err(invalid(format!("m must be at least 2, got {m}")));
    }
    if !m.is_multiple_of(case.divisor()) {
        return Err(invalid(format!(
            "case {case:?} needs {} | m, got m = {m}",
            case.divisor()
        )));
    }
    let n1 = (n + 1) as f64;
    Ok(match case {
        ClosedFormCase::U0 => n1 * n1,
        ClosedFormCase::Half => n1 / 3.0,
        ClosedFormCase::Third => n1 / 2.0,
        ClosedFormCase::Sixth => n1 * (1..=n + 1).map(|t| 1.0 / t as f64).sum::<f64>(),
    })
}

/// Mixed moments of real and imaginary parts of `u_k` and `u_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealMixedMoments {
    pub re_re: f64,
    pub im_im: f64,
    pub re_im: f64,
}

/// Converts complex second moments to real ones using `conj(u_l) = u_{m-l}`
/// for real compositions.
pub fn mixed_real_moments(basis: &SpectralBasis, n: u64, k: usize, l: usize) -> RealMixedMoments {
    let m = basis.m();
    let kl = second_moment_u(basis, n, k, l);
    let k_ml = second_moment_u(basis, n, k, (m - l % m) % m);
    let mk_l = second_moment_u(basis, n, (m - k % m) % m, l);
    RealMixedMoments {
        re_re: 0.5 * (kl + k_ml).re,
        im_im: 0.5 * (k_ml - kl).re,
        re_im: 0.5 * (kl + mk_l).im,
    }
}

/// `E[R_n]` assembled from the exact product means of every eigencoordinate.
pub fn exact_mean_composition(basis: &SpectralBasis, n: u64) -> Vec<f64> {
    let means: Vec<Complex64> = (0..basis.m()).map(|k| mean_u(basis, n, k)).collect();
    basis.reassemble(&means)
}

/// Order of the remainder left by [`mean_expansion`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RemainderOrder {
    /// `o(sqrt n)`, when `6 ∤ m`.
    LittleOSqrtN,
    /// `O(sqrt n)`, when `6 | m`.
    BigOSqrtN,
}

/// Drift plus periodic terms of the large eigenspaces for `E[R_n]`.
#[derive(Debug, Clone, Serialize)]
pub struct MeanExpansion {
    pub n: u64,
    /// `(n+1)/m`, the common drift entry.
    pub drift: f64,
    /// `xi_k = 2 v_k / Gamma(1 + omega^k)` for `k = 1..=r`.
    pub xi_vectors: Vec<Vec<Complex64>>,
    /// `Re(n^{i mu_k} xi_k) n^{lambda_k}` for `k = 1..=r`.
    pub terms: Vec<Vec<f64>>,
    /// Drift plus all terms.
    pub value: Vec<f64>,
    pub remainder: RemainderOrder,
}

pub fn mean_expansion(basis: &SpectralBasis, n: u64) -> Result<MeanExpansion> {
    if n == 0 {
        return Err(invalid("expansion needs n >= 1"));
    }
    let m = basis.m();
    let drift = (n + 1) as f64 / m as f64;
    let log_n = (n as f64).ln();
    let mut value = vec![drift; m];
    let mut xi_vectors = Vec::new();
    let mut terms = Vec::new();
    for k in basis.large_indices() {
        let w = basis.omega(k);
        let scale = 2.0 / gamma(w + 1.0);
        let xi: Vec<Complex64> = basis.eigvec(k).iter().map(|v| v * scale).collect();
        // n^{i mu} n^{lambda} = n^{omega}
        let n_pow = (w * log_n).exp();
        let term: Vec<f64> = xi.iter().map(|x| (n_pow * x).re).collect();
        for (v, t) in value.iter_mut().zip(&term) {
            *v += t;
        }
        xi_vectors.push(xi);
        terms.push(term);
    }
    Ok(MeanExpansion {
        n,
        drift,
        xi_vectors,
        terms,
        value,
        remainder: if basis.has_critical() {
            RemainderOrder::BigOSqrtN
        } else {
            RemainderOrder::LittleOSqrtN
        },
    })
}

/// Distance of the martingale `M_{k,n}` from its limit, in two forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSecondMoment {
    pub n: u64,
    pub k: usize,
    /// `E|M_{k,n} - Xi_k|^2` from the telescoping series.
    pub abs_sq: f64,
    /// `E[(M_{k,n} - Xi_k)^2]` from the same series.
    pub sq: Complex64,
    /// `n^{1 - 2 lambda_k} / (2 lambda_k - 1)`.
    pub asymptotic_abs_sq: f64,
    /// `n^{-1} / ((1 - 2 omega^{-k}) Gamma(2 omega^k))`.
    pub asymptotic_sq: Complex64,
    /// First index not summed explicitly.
    pub truncated_at: u64,
}

pub const SERIES_TOL: f64 = 1e-7;
const SERIES_MAX_TERMS: u64 = 200_000_000;

/// `E|M_{k,n} - Xi_k|^2 = sum_{z >= n} E|M_{k,z+1} - M_{k,z}|^2`, summed until
/// the summand falls below `tol` times the running sum, then closed with the
/// tail `Z^{1-2 lambda}/(2 lambda - 1)`.
pub fn residual_second_moment(
    basis: &SpectralBasis,
    n: u64,
    k: usize,
    tol: f64,
) -> Result<ResidualSecondMoment> {
    if basis.classify(k) != EigenClass::Large {
        return Err(invalid(format!(
            "index {k} is not large (lambda = {})",
            basis.lambda(k)
        )));
    }
    let w = basis.omega(k);
    let w2 = basis.omega(2 * k);
    let lam = w.re;
    let asym_sq_const = 1.0 / ((1.0 - 2.0 * w.conj()) * gamma(w * 2.0));

    // running quantities at time z
    let mut c = 1.0 / gamma(w + 1.0); // Gamma(z+1)/Gamma(z+1+w)
    let mut mean_2k = Complex64::new(1.0, 0.0); // E u_{2k}(R_z)
    let mut abs2 = 1.0f64; // E|u_k(R_z)|^2
    let mut sq = Complex64::new(1.0, 0.0); // E[u_k(R_z)^2]

    let mut sum_abs = 0.0f64;
    let mut sum_sq = Complex64::new(0.0, 0.0);
    let mut z = 0u64;
    loop {
        let z1 = (z + 1) as f64;
        let c_next = c * z1 / (w + z1);
        if z >= n {
            let cn2 = c_next.norm_sqr();
            let term_abs = cn2 * (1.0 - abs2 / (z1 * z1));
            let term_sq = c_next * c_next * w2 * (mean_2k / z1 - sq / (z1 * z1));
            sum_abs += term_abs;
            sum_sq += term_sq;
            if term_abs < tol * sum_abs || z - n >= SERIES_MAX_TERMS {
                z += 1;
                break;
            }
        }
        // advance the moments from time z to z + 1
        abs2 = abs2 * (1.0 + 2.0 * lam / z1) + 1.0;
        sq = sq * (1.0 + 2.0 * w / z1) + w2 / z1 * mean_2k;
        mean_2k *= 1.0 + w2 / z1;
        c = c_next;
        z += 1;
    }
    let zf = z as f64;
    sum_abs += zf.powf(1.0 - 2.0 * lam) / (2.0 * lam - 1.0);
    sum_sq += asym_sq_const / zf;
    let nf = (n.max(1)) as f64;
    Ok(ResidualSecondMoment {
        n,
        k,
        abs_sq: sum_abs,
        sq: sum_sq,
        asymptotic_abs_sq: nf.powf(1.0 - 2.0 * lam) / (2.0 * lam - 1.0),
        asymptotic_sq: asym_sq_const / nf,
        truncated_at: z,
    })
}

/// `Gamma(n+1) / Gamma(n+1+omega^k)`, the factor turning `u_k(R_n - E R_n)`
/// into the martingale `M_{k,n}`. For `k = m/2` this is `n`.
pub fn martingale_scale(basis: &SpectralBasis, k: usize, product: Complex64, n: u64) -> Complex64 {
    let w = basis.omega(k);
    if w == Complex64::new(-1.0, 0.0) {
        return Complex64::new(n as f64, 0.0);
    }
    1.0 / (gamma(w + 1.0) * product)
}

/// `E|M_{k,n}|^2` and `E[M_{k,n}^2]` from the exact moments at time `n`.
pub fn martingale_second_moments(basis: &SpectralBasis, n: u64, k: usize) -> (f64, Complex64) {
    let m = basis.m();
    let mu = mean_u(basis, n, k);
    let var_abs = second_moment_u(basis, n, k, m - k % m) - mu * mu.conj();
    let var_sq = second_moment_u(basis, n, k, k) - mu * mu;
    let c = martingale_scale(basis, k, mu, n);
    (c.norm_sqr() * var_abs.re, c * c * var_sq)
}

/// Semi-analytic `E|Xi_k|^2` and `E[Xi_k^2]`: exact martingale moments at `n`
/// plus the series for the remaining distance to the limit.
pub fn xi_second_moments(basis: &SpectralBasis, n: u64, k: usize) -> Result<(f64, Complex64)> {
    let tail = residual_second_moment(basis, n, k, SERIES_TOL)?;
    let (abs_n, sq_n) = martingale_second_moments(basis, n, k);
    Ok((abs_n + tail.abs_sq, sq_n + tail.sq))
}

/// Table of `E[u_k(R_l)]` for `l = 0..=n`.
pub fn mean_u_table(basis: &SpectralBasis, n: u64, k: usize) -> Vec<Complex64> {
    rising_ratio_table(basis.omega(k), n)
}
