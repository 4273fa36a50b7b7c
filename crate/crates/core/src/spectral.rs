//! Eigen-structure of the cyclic replacement matrix.
//!
//! For `m` types the replacement matrix is the cyclic shift, so its
//! eigenvectors form the discrete Fourier basis. Everything here is
//! deterministic and immutable once built.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result, UrnError};

/// How an eigen index contributes to the composition vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenClass {
    /// `k = 0`, the deterministic drift.
    Drift,
    /// `lambda_k > 1/2`: almost surely periodic contribution.
    Large,
    /// `lambda_k = 1/2`, only present when `6 | m`.
    Critical,
    /// `lambda_k < 1/2`: purely normal fluctuation.
    Small,
}

/// All spectral constants of the cyclic urn with `m` types.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    m: usize,
    omega_powers: Vec<Complex64>,
    lambdas: Vec<f64>,
    mus: Vec<f64>,
    eigvecs: Vec<Vec<Complex64>>,
    r: usize,
    critical: bool,
}

/// `exp(2 pi i t / m)`, snapped to the exact value on quarter turns.
fn unit_root(t: usize, m: usize) -> Complex64 {
    let t = t % m;
    if (4 * t).is_multiple_of(m) {
        return match 4 * t / m {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    if 6 * t == m || 6 * t == 5 * m {
        let s = if 6 * t == m { 1.0 } else { -1.0 };
        return Complex64::new(0.5, s * 0.75f64.sqrt());
    }
    let (s, c) = (2.0 * PI * t as f64 / m as f64).sin_cos();
    Complex64::new(c, s)
}

impl SpectralBasis {
    /// Builds the basis for `m >= 2` types.
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(invalid(format!("m must be at least 2, got {m}")));
        }
        let omega_powers: Vec<Complex64> = (0..m).map(|k| unit_root(k, m)).collect();
        let lambdas = omega_powers.iter().map(|w| w.re).collect();
        let mus = omega_powers.iter().map(|w| w.im).collect();
        let scale = 1.0 / m as f64;
        let eigvecs = (0..m)
            .map(|k| {
                (0..m)
                    .map(|t| unit_root((m - (k * t) % m) % m, m) * scale)
                    .collect()
            })
            .collect();
        Ok(Self {
            m,
            omega_powers,
            lambdas,
            mus,
            eigvecs,
            r: (m - 1) / 6,
            critical: m.is_multiple_of(6),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `omega^k`, index taken mod `m`.
    pub fn omega(&self, k: usize) -> Complex64 {
        self.omega_powers[k % self.m]
    }

    pub fn omega_powers(&self) -> &[Complex64] {
        &self.omega_powers
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.lambdas[k % self.m]
    }

    pub fn mu(&self, k: usize) -> f64 {
        self.mus[k % self.m]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mus(&self) -> &[f64] {
        &self.mus
    }

    /// Eigenvector `v_k` with entries `omega^{-kt} / m`.
    pub fn eigvec(&self, k: usize) -> &[Complex64] {
        &self.eigvecs[k % self.m]
    }

    /// Number of large pairs, `floor((m-1)/6)`.
    pub fn r(&self) -> usize {
        self.r
    }

    /// True iff `6 | m`.
    pub fn has_critical(&self) -> bool {
        self.critical
    }

    /// The critical index `m/6` when it exists.
    pub fn critical_index(&self) -> Option<usize> {
        self.critical.then_some(self.m / 6)
    }

    /// Classification by the sign of `lambda_k - 1/2`, decided in integer
    /// arithmetic: `lambda_k > 1/2` iff `6 * min(k, m-k) < m`.
    pub fn classify(&self, k: usize) -> EigenClass {
        let k = k % self.m;
        if k == 0 {
            return EigenClass::Drift;
        }
        let d = k.min(self.m - k);
        match (6 * d).cmp(&self.m) {
            std::cmp::Ordering::Less => EigenClass::Large,
            std::cmp::Ordering::Equal => EigenClass::Critical,
            std::cmp::Ordering::Greater => EigenClass::Small,
        }
    }

    pub fn is_large(&self, k: usize) -> bool {
        self.classify(k) == EigenClass::Large
    }

    /// Indices `1..=r`, one representative per conjugate pair of large eigenvalues.
    pub fn large_indices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.r
    }

    /// Number of complex coordinate pairs in the residual vector, `ceil(m/2) - 1`.
    pub fn pair_count(&self) -> usize {
        self.m.div_ceil(2) - 1
    }

    /// Dimension of the residual vector, `m - 1`.
    pub fn residual_dim(&self) -> usize {
        self.m - 1
    }

    /// Linear dual form `u_k(w) = sum_t omega^{kt} w_t` applied to a real vector.
    pub fn project(&self, k: usize, w: &[f64]) -> Complex64 {
        debug_assert_eq!(w.len(), self.m);
        w.iter()
            .enumerate()
            .map(|(t, &x)| self.omega(k * t) * x)
            .sum()
    }

    /// Linear dual form on a complex vector (no conjugation), so that
    /// `u_k(v_l) = delta_{kl}`.
    pub fn project_complex(&self, k: usize, w: &[Complex64]) -> Complex64 {
        debug_assert_eq!(w.len(), self.m);
        w.iter()
            .enumerate()
            .map(|(t, &x)| self.omega(k * t) * x)
            .sum()
    }

    /// Real part of `sum_k coeffs[k] v_k`.
    pub fn reassemble(&self, coeffs: &[Complex64]) -> Vec<f64> {
        (0..self.m)
            .map(|t| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * self.eigvecs[k][t])
                    .sum::<Complex64>()
                    .re
            })
            .collect()
    }
}

/// Deterministic covariance structure attached to a basis.
#[derive(Debug, Clone)]
pub struct CovarianceTarget {
    /// Limit covariance of the normalised composition residual, `m x m`.
    pub sigma_m: DMatrix<f64>,
    /// Block-diagonal limit covariance of the residual vector, `(m-1) x (m-1)`.
    pub m_m: DMatrix<f64>,
    /// Numerical rank of `sigma_m`.
    pub rank_sigma: usize,
    /// Rotation matrix relating the residual vectors of shifted urns.
    pub d: DMatrix<f64>,
}

/// The cyclic replacement matrix with `A[i][(i+1) mod m] = 1`.
pub fn replacement_matrix(m: usize) -> Result<DMatrix<i64>> {
    if m < 2 {
        return Err(invalid(format!("m must be at least 2, got {m}")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| i64::from(j == (i + 1) % m)))
}

/// Number of singular values above `rel_tol * max`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

const RANK_TOL: f64 = 1e-8;
const IMAG_RESIDUE_TOL: f64 = 1e-12;

/// Limit covariance of the composition residual together with `M_m` and `D`.
///
/// For `6 ∤ m` this is `sum_{k>=1} v_k v_k^* / |2 lambda_k - 1|`; for `6 | m`
/// only the two critical eigenspaces survive.
pub fn sigma_matrix(basis: &SpectralBasis) -> Result<CovarianceTarget> {
    let m = basis.m();
    let ks: Vec<(usize, f64)> = if let Some(c) = basis.critical_index() {
        vec![(c, 1.0), (5 * c, 1.0)]
    } else {
        (1..m)
            .map(|k| (k, 1.0 / (2.0 * basis.lambda(k) - 1.0).abs()))
            .collect()
    };
    let mut sigma = DMatrix::<f64>::zeros(m, m);
    let mut max_im = 0.0f64;
    for s in 0..m {
        for t in 0..m {
            let z: Complex64 = ks
                .iter()
                .map(|&(k, w)| basis.eigvec(k)[s] * basis.eigvec(k)[t].conj() * w)
                .sum();
            max_im = max_im.max(z.im.abs());
            sigma[(s, t)] = z.re;
        }
    }
    if max_im >= IMAG_RESIDUE_TOL {
        return Err(UrnError::Numerical(format!(
            "imaginary residue {max_im:e} in covariance target"
        )));
    }
    let rank_sigma = numerical_rank(&sigma, RANK_TOL);
    Ok(CovarianceTarget {
        sigma_m: sigma,
        m_m: limit_covariance(basis),
        rank_sigma,
        d: rotation_matrix_d(basis),
    })
}

/// Diagonal of `M_m`: `(1/2)/|2 lambda_k - 1|` per coordinate pair, `1/2` for
/// the critical pair, and `1/3` for the trailing scalar when `m` is even.
pub fn limit_covariance_diag(basis: &SpectralBasis) -> Vec<f64> {
    let mut diag = Vec::with_capacity(basis.residual_dim());
    for k in 1..=basis.pair_count() {
        let v = match basis.classify(k) {
            EigenClass::Critical => 0.5,
            _ => 0.5 / (2.0 * basis.lambda(k) - 1.0).abs(),
        };
        diag.push(v);
        diag.push(v);
    }
    if basis.m().is_multiple_of(2) {
        diag.push(1.0 / 3.0);
    }
    diag
}

pub fn limit_covariance(basis: &SpectralBasis) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(limit_covariance_diag(basis)))
}

/// Block rotation by `2 pi k / m` for each pair, `-1` on the scalar for even `m`.
pub fn rotation_matrix_d(basis: &SpectralBasis) -> DMatrix<f64> {
    let dim = basis.residual_dim();
    let mut d = DMatrix::<f64>::zeros(dim, dim);
    for k in 1..=basis.pair_count() {
        let w = basis.omega(k);
        let i = 2 * (k - 1);
        d[(i, i)] = w.re;
        d[(i, i + 1)] = -w.im;
        d[(i + 1, i)] = w.im;
        d[(i + 1, i + 1)] = w.re;
    }
    if basis.m().is_multiple_of(2) {
        d[(dim - 1, dim - 1)] = -1.0;
    }
    d
}

/// Diagonal of `sigma_n`: identity for `n <= 1`, otherwise `1/sqrt(n)` with an
/// extra `1/sqrt(log n)` on the critical pair.
pub fn sigma_n_scaling(basis: &SpectralBasis, n: u64) -> Vec<f64> {
    let dim = basis.residual_dim();
    if n <= 1 {
        return vec![1.0; dim];
    }
    let nf = n as f64;
    let mut diag = vec![1.0 / nf.sqrt(); dim];
    if let Some(c) = basis.critical_index() {
        let extra = 1.0 / nf.ln().sqrt();
        diag[2 * (c - 1)] *= extra;
        diag[2 * (c - 1) + 1] *= extra;
    }
    diag
}
