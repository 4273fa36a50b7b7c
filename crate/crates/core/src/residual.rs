//! From compositions to normalised residuals: martingales `M_{k,n}`, their
//! coupled limit proxies, the residual vector `Z_n`, its normaliser, and the
//! error term of the split recursion.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{contract, invalid, Result};
use crate::exact::{martingale_scale, moment_tables};
use crate::gamma::{gamma, real_pow, rising_ratio_table};
use crate::spectral::{sigma_n_scaling, SpectralBasis};
use crate::urn::{Snapshot, TrajectoryRecord};

pub const DEFAULT_HORIZON_MULTIPLIER: f64 = 50.0;

/// Coupling horizon `ceil(multiplier * n)`.
pub fn horizon(n: u64, multiplier: f64) -> Result<u64> {
    if !(multiplier >= 1.0) || !multiplier.is_finite() {
        return Err(invalid(format!("horizon multiplier must be >= 1, got {multiplier}")));
    }
    Ok((multiplier * n as f64).ceil() as u64)
}

/// `E[u_k(R_n)]` for an urn started from type `j`, given the product
/// `prod_{s<=n} (s + omega^k)/s`.
fn centred_mean(basis: &SpectralBasis, k: usize, j: usize, product: Complex64) -> Complex64 {
    basis.omega(k * j) * product
}

/// `M_{k,n}` for one snapshot.
pub fn martingale_value(basis: &SpectralBasis, k: usize, initial_type: usize, snap: &Snapshot) -> Complex64 {
    let p = snap.gamma_products[k];
    let w = snap.projections[k] - centred_mean(basis, k, initial_type, p);
    martingale_scale(basis, k, p, snap.time) * w
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingalePath {
    pub k: usize,
    pub times: Vec<u64>,
    pub values: Vec<Complex64>,
    /// `Gamma(n+1) / Gamma(n+1+omega^k)` at each time.
    pub gamma_ratio: Vec<Complex64>,
}

pub fn martingale_path(traj: &TrajectoryRecord, k: usize, basis: &SpectralBasis) -> MartingalePath {
    let j = traj.config.initial_type;
    let mut out = MartingalePath {
        k,
        times: Vec::with_capacity(traj.snapshots.len()),
        values: Vec::with_capacity(traj.snapshots.len()),
        gamma_ratio: Vec::with_capacity(traj.snapshots.len()),
    };
    for s in &traj.snapshots {
        out.times.push(s.time);
        out.gamma_ratio
            .push(martingale_scale(basis, k, s.gamma_products[k], s.time));
        out.values.push(martingale_value(basis, k, j, s));
    }
    out
}

/// `M_{k,N}` at the coupling horizon, standing in for the limit `Xi_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiProxy {
    pub k: usize,
    pub value: Complex64,
    pub horizon: u64,
}

pub fn xi_proxy(
    traj: &TrajectoryRecord,
    k: usize,
    n: u64,
    horizon_multiplier: f64,
    basis: &SpectralBasis,
) -> Result<XiProxy> {
    if !basis.is_large(k) {
        return Err(invalid(format!(
            "index {k} is not large (lambda = {})",
            basis.lambda(k)
        )));
    }
    let big_n = horizon(n, horizon_multiplier)?;
    let snap = traj
        .snapshot_at(big_n)
        .ok_or_else(|| contract(format!("trajectory has no checkpoint at horizon {big_n}")))?;
    Ok(XiProxy {
        k,
        value: martingale_value(basis, k, traj.config.initial_type, snap),
        horizon: big_n,
    })
}

/// The residual vector `Z_n`: (Re, Im) per coordinate pair `k = 1..ceil(m/2)-1`,
/// then `u_{m/2}` for even `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualVector {
    pub n: u64,
    pub coords: Vec<f64>,
    /// Per-coordinate scale, `1/sqrt(n)` or `1/sqrt(n log n)`.
    pub scaling: Vec<f64>,
}

/// Assembles `Z_n` from a snapshot at time `n`; `proxies` must cover exactly
/// the large indices.
pub fn assemble_z(
    snap: &Snapshot,
    initial_type: usize,
    proxies: &[XiProxy],
    basis: &SpectralBasis,
) -> Result<ResidualVector> {
    let n = snap.time;
    let scaling = sigma_n_scaling(basis, n);
    for p in proxies {
        if !basis.is_large(p.k) {
            return Err(contract(format!("proxy given for non-large index {}", p.k)));
        }
    }
    let log_n = (n.max(1) as f64).ln();
    let mut coords = Vec::with_capacity(basis.residual_dim());
    for k in 1..=basis.pair_count() {
        let mut y = snap.projections[k]
            - centred_mean(basis, k, initial_type, snap.gamma_products[k]);
        if basis.is_large(k) {
            let p = proxies
                .iter()
                .find(|p| p.k == k)
                .ok_or_else(|| contract(format!("missing proxy for large index {k}")))?;
            y -= (basis.omega(k) * log_n).exp() * p.value;
        }
        let i = coords.len();
        coords.push(y.re * scaling[i]);
        coords.push(y.im * scaling[i + 1]);
    }
    if basis.m().is_multiple_of(2) {
        let k = basis.m() / 2;
        let y = snap.projections[k] - centred_mean(basis, k, initial_type, snap.gamma_products[k]);
        let i = coords.len();
        coords.push(y.re * scaling[i]);
    }
    Ok(ResidualVector { n, coords, scaling })
}

/// Checkpoints a trajectory needs to yield `Z_n` with horizon multiplier `h`.
pub fn residual_checkpoints(basis: &SpectralBasis, n: u64, multiplier: f64) -> Result<Vec<u64>> {
    let big_n = horizon(n, multiplier)?;
    if basis.r() == 0 || big_n == n {
        Ok(vec![n])
    } else {
        Ok(vec![n, big_n])
    }
}

/// `Z_n` for a trajectory simulated with [`residual_checkpoints`].
pub fn residual_from_trajectory(
    traj: &TrajectoryRecord,
    n: u64,
    multiplier: f64,
    basis: &SpectralBasis,
) -> Result<ResidualVector> {
    let snap = traj
        .snapshot_at(n)
        .ok_or_else(|| contract(format!("trajectory has no checkpoint at {n}")))?;
    let proxies = basis
        .large_indices()
        .map(|k| xi_proxy(traj, k, n, multiplier, basis))
        .collect::<Result<Vec<_>>>()?;
    assemble_z(snap, traj.config.initial_type, &proxies, basis)
}

/// Exact covariance of `Z_n` built with the proxy `M_{k,N}` (type-0 start).
///
/// Mixed-time moments come from the martingale property
/// `E[u_l(R_N) | F_n] = prod_{s=n+1}^{N} (1 + omega^l/s) u_l(R_n)`.
pub fn exact_residual_covariance(basis: &SpectralBasis, n: u64, big_n: u64) -> Result<DMatrix<f64>> {
    if big_n < n {
        return Err(invalid(format!("horizon {big_n} is before n = {n}")));
    }
    let m = basis.m();
    let tabs = moment_tables(basis, &[n, big_n]);
    let (tn, tbig) = (&tabs[0], &tabs[1]);
    let log_n = (n.max(1) as f64).ln();

    // proxy weight per index; conjugate indices get the conjugate weight
    let mut weight = vec![Complex64::new(0.0, 0.0); m];
    for k in basis.large_indices() {
        let w = basis.omega(k);
        let a = (w * log_n).exp() / (gamma(w + 1.0) * tbig.mean_u[k]);
        weight[k] = a;
        weight[m - k] = a.conj();
    }
    let transfer: Vec<Complex64> = (0..m)
        .map(|l| {
            let w = basis.omega(l);
            ((n + 1)..=big_n).fold(Complex64::new(1.0, 0.0), |acc, s| acc * (1.0 + w / s as f64))
        })
        .collect();

    // bilinear moments E[Y_k Y_l] of Y_k = W_k(n) - weight_k W_k(N)
    let mut ey = DMatrix::<Complex64>::zeros(m, m);
    for k in 1..m {
        for l in 1..m {
            let cn = tn.cov(k, l);
            let cbig = tbig.cov(k, l);
            ey[(k, l)] = cn * (1.0 - weight[l] * transfer[l] - weight[k] * transfer[k])
                + weight[k] * weight[l] * cbig;
        }
    }

    // real coordinates as linear combinations of the Y_k
    let dim = basis.residual_dim();
    let scaling = sigma_n_scaling(basis, n);
    let mut t = DMatrix::<Complex64>::zeros(dim, m);
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, 0.5);
    for k in 1..=basis.pair_count() {
        let i = 2 * (k - 1);
        t[(i, k)] = half * scaling[i];
        t[(i, m - k)] = half * scaling[i];
        t[(i + 1, k)] = -half_i * scaling[i + 1];
        t[(i + 1, m - k)] = half_i * scaling[i + 1];
    }
    if m.is_multiple_of(2) {
        t[(dim - 1, m / 2)] = Complex64::new(scaling[dim - 1], 0.0);
    }
    let cov = &t * ey * t.transpose();
    let max_im = cov.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let max_re = cov.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if max_im > 1e-8 * max_re.max(1.0) {
        return Err(crate::error::UrnError::Numerical(format!(
            "residual covariance has imaginary residue {max_im:e}"
        )));
    }
    Ok(cov.map(|z| z.re))
}

/// Normalising matrix `Sigma_n = M^{1/2} C^{-1/2}` for an observed covariance `C`.
#[derive(Debug, Clone)]
pub struct NormalizerState {
    pub sigma_n: DMatrix<f64>,
    /// `C` was too ill-conditioned, so `Sigma_n = Id` (the pre-`n0` regime).
    pub before_n0: bool,
    pub condition: f64,
}

pub const MAX_CONDITION: f64 = 1e8;

fn sym_pow(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

pub fn normalizer(cov: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<NormalizerState> {
    if cov.shape() != target.shape() || !cov.is_square() {
        return Err(contract(format!(
            "shape mismatch: covariance {:?}, target {:?}",
            cov.shape(),
            target.shape()
        )));
    }
    let scale = cov.amax().max(f64::MIN_POSITIVE);
    if (cov - cov.transpose()).amax() > 1e-10 * scale {
        return Err(contract("covariance is not symmetric"));
    }
    let dim = cov.nrows();
    let eig = SymmetricEigen::new(cov.clone());
    let lo = eig.eigenvalues.min().max(0.0);
    let hi = eig.eigenvalues.max().max(0.0);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Ok(NormalizerState {
            sigma_n: DMatrix::identity(dim, dim),
            before_n0: true,
            condition,
        });
    }
    let inv_sqrt = sym_pow(&eig, |x| 1.0 / x.max(0.0).sqrt());
    let target_eig = SymmetricEigen::new(target.clone());
    let target_sqrt = sym_pow(&target_eig, |x| x.max(0.0).sqrt());
    Ok(NormalizerState {
        sigma_n: target_sqrt * inv_sqrt,
        before_n0: false,
        condition,
    })
}

/// Evaluates `sigma_n (F_n^(1) + F_n^(2))` for fixed `n`, caching the
/// rising-factorial tables behind `G_{k,n}`.
#[derive(Debug, Clone)]
pub struct ErrorTermEvaluator {
    n: u64,
    ws: Vec<Complex64>,
    tables: Vec<Vec<Complex64>>,
    gammas: Vec<Complex64>,
    n_pows: Vec<Complex64>,
    scaling: Vec<f64>,
    large: usize,
}

impl ErrorTermEvaluator {
    pub fn new(basis: &SpectralBasis, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("error term needs n >= 1"));
        }
        let ks: Vec<usize> = (1..=basis.pair_count()).collect();
        let ws: Vec<Complex64> = ks.iter().map(|&k| basis.omega(k)).collect();
        let log_n = (n as f64).ln();
        Ok(Self {
            n,
            tables: ws.iter().map(|&w| rising_ratio_table(w, n)).collect(),
            gammas: ws.iter().map(|&w| gamma(w + 1.0)).collect(),
            n_pows: ws.iter().map(|&w| (w * log_n).exp()).collect(),
            scaling: sigma_n_scaling(basis, n),
            large: basis.r(),
            ws,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `G_{k,n}(l)` for `1 <= k <= ceil(m/2) - 1`.
    pub fn g_split(&self, k: usize, l: u64) -> Complex64 {
        let t = &self.tables[k - 1];
        let w = self.ws[k - 1];
        t[l as usize] + w * t[(self.n - 1 - l) as usize] - t[self.n as usize]
    }

    /// Returns `sigma_n (F^(1) + F^(2))` for left size `left`, root key `u`,
    /// and limit draws `xi_left[k-1]`, `xi_right[k-1]` for the large indices.
    pub fn evaluate(
        &self,
        left: u64,
        u: f64,
        xi_left: &[Complex64],
        xi_right: &[Complex64],
    ) -> Result<Vec<f64>> {
        if left >= self.n {
            return Err(contract(format!("left size {left} outside [0, {})", self.n)));
        }
        if xi_left.len() < self.large || xi_right.len() < self.large {
            return Err(contract(format!("need {} limit draws per subtree", self.large)));
        }
        let right = self.n - 1 - left;
        let nf = self.n as f64;
        let mut out = vec![0.0; self.scaling.len()];
        for (idx, &w) in self.ws.iter().enumerate() {
            let k = idx + 1;
            let mut f = self.g_split(k, left);
            if k <= self.large {
                let g = (real_pow(u, w) + w * real_pow(1.0 - u, w) - 1.0) / self.gammas[idx];
                f -= self.n_pows[idx] * g;
                f += (real_pow(left as f64, w) - real_pow(nf * u, w)) * xi_left[idx]
                    + (real_pow(right as f64, w) - real_pow(nf * (1.0 - u), w)) * w * xi_right[idx];
            }
            out[2 * idx] = f.re * self.scaling[2 * idx];
            out[2 * idx + 1] = f.im * self.scaling[2 * idx + 1];
        }
        Ok(out)
    }
}

/// One-off evaluation of the error term; see [`ErrorTermEvaluator`].
pub fn error_term_bn(
    left: u64,
    u: f64,
    xi_left: &[Complex64],
    xi_right: &[Complex64],
    n: u64,
    basis: &SpectralBasis,
) -> Result<Vec<f64>> {
    ErrorTermEvaluator::new(basis, n)?.evaluate(left, u, xi_left, xi_right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_distribution, mean_u, second_moment_u};
    use crate::fixpoint::g_k;
    use crate::spectral::{limit_covariance, rotation_matrix_d};
    use crate::urn::{simulate, Composition, UrnConfig};

    fn basis(m: usize) -> SpectralBasis {
        SpectralBasis::new(m).unwrap()
    }

    fn snapshot_of(c: &Composition, b: &SpectralBasis) -> Snapshot {
        let w = c.as_f64();
        Snapshot {
            time: c.time,
            composition: c.clone(),
            projections: (0..b.m()).map(|k| b.project(k, &w)).collect(),
            gamma_products: (0..b.m()).map(|k| mean_u(b, c.time, k)).collect(),
        }
    }

    #[test]
    fn martingale_vanishes_at_zero_and_one() {
        for m in [2, 5, 7, 12] {
            let b = basis(m);
            let traj = simulate(&UrnConfig::new(m, 5, 1).with_checkpoints(vec![0, 1, 5]), &b).unwrap();
            for k in 0..m {
                let path = martingale_path(&traj, k, &b);
                assert!(path.values[0].norm() < 1e-12);
                assert!(path.values[1].norm() < 1e-12, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn one_step_martingale_property() {
        // average of M_{k,n+1} over all n+1 draws equals M_{k,n}
        let b = basis(7);
        let d = exact_distribution(7, 6).unwrap();
        for state in d.law.keys() {
            let c = Composition {
                counts: state.clone(),
                time: 6,
                initial_type: 0,
            };
            let here = snapshot_of(&c, &b);
            for k in 1..7 {
                let now = martingale_value(&b, k, 0, &here);
                let mut avg = Complex64::new(0.0, 0.0);
                for draw in 0..7 {
                    let next = snapshot_of(&c.step(draw).unwrap(), &b);
                    avg += martingale_value(&b, k, 0, &next);
                }
                avg /= 7.0;
                assert!((avg - now).norm() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn reassembly_of_centred_composition() {
        let b = basis(7);
        let traj = simulate(&UrnConfig::new(7, 300, 8).with_checkpoints(vec![300]), &b).unwrap();
        let s = &traj.snapshots[0];
        let centred: Vec<Complex64> = (0..7).map(|k| s.projections[k] - s.gamma_products[k]).collect();
        let back = b.reassemble(&centred);
        let mean = crate::exact::exact_mean_composition(&b, 300);
        for t in 0..7 {
            let direct = s.composition.counts[t] as f64 - mean[t];
            assert!((back[t] - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn horizon_multiplier_one_gives_zero_large_coordinate() {
        let b = basis(7);
        let traj = simulate(&UrnConfig::new(7, 200, 3).with_checkpoints(vec![200]), &b).unwrap();
        let p = xi_proxy(&traj, 1, 200, 1.0, &b).unwrap();
        assert_eq!(p.horizon, 200);
        let direct = martingale_value(&b, 1, 0, &traj.snapshots[0]);
        assert_eq!(p.value, direct);
        assert!(xi_proxy(&traj, 2, 200, 1.0, &b).is_err());
        assert!(horizon(10, 0.5).is_err());
    }

    #[test]
    fn assemble_requires_proxies() {
        let b = basis(7);
        let traj = simulate(&UrnConfig::new(7, 20, 3).with_checkpoints(vec![20]), &b).unwrap();
        let err = assemble_z(&traj.snapshots[0], 0, &[], &b);
        assert!(matches!(err, Err(crate::error::UrnError::ContractViolation(_))));
    }

    #[test]
    fn dimensions() {
        for (m, dim) in [(2, 1), (4, 3), (7, 6), (12, 11)] {
            let b = basis(m);
            let n = 50;
            let cps = residual_checkpoints(&b, n, 2.0).unwrap();
            let traj = simulate(&UrnConfig::new(m, 100, 5).with_checkpoints(cps), &b).unwrap();
            let z = residual_from_trajectory(&traj, n, 2.0, &b).unwrap();
            assert_eq!(z.coords.len(), dim);
        }
        assert_eq!(residual_checkpoints(&basis(4), 10, 50.0).unwrap(), vec![10]);
    }

    #[test]
    fn exact_covariance_small_m_without_proxies() {
        // m = 2: Var(u_1(R_n)/sqrt n) = E[u_1^2]/n
        let b = basis(2);
        let c = exact_residual_covariance(&b, 40, 40).unwrap();
        let want = second_moment_u(&b, 40, 1, 1).re / 40.0;
        assert!((c[(0, 0)] - want).abs() < 1e-12);
        // m = 3: Var(Re) + Var(Im) = E|u_1 - E u_1|^2 / n
        let b = basis(3);
        let c = exact_residual_covariance(&b, 30, 30).unwrap();
        let mu = mean_u(&b, 30, 1);
        let want = (second_moment_u(&b, 30, 1, 2) - mu * mu.conj()).re / 30.0;
        assert!((c[(0, 0)] + c[(1, 1)] - want).abs() < 1e-12);
    }

    #[test]
    fn exact_covariance_matches_enumeration() {
        // m = 7, n = 4, N = 9: compare with the exact law of (R_n, R_N)
        let b = basis(7);
        let (n, big_n) = (4u64, 9u64);
        let cov = exact_residual_covariance(&b, n, big_n).unwrap();
        // enumerate joint law by extending each R_n state exactly
        let dn = exact_distribution(7, n).unwrap();
        let mut second = DMatrix::<f64>::zeros(6, 6);
        for (state, p) in &dn.law {
            let p = num_traits::ToPrimitive::to_f64(p).unwrap();
            // law of R_N given R_n by forward enumeration
            let mut layer = vec![(state.clone(), 1.0f64)];
            for t in n..big_n {
                let mut next = Vec::new();
                for (s, q) in &layer {
                    for j in 0..7 {
                        if s[j] > 0 {
                            let mut s2 = s.clone();
                            s2[(j + 1) % 7] += 1;
                            next.push((s2, q * s[j] as f64 / (t + 1) as f64));
                        }
                    }
                }
                layer = next;
            }
            let cn = Composition { counts: state.clone(), time: n, initial_type: 0 };
            let sn = snapshot_of(&cn, &b);
            for (s, q) in layer {
                let cb = Composition { counts: s, time: big_n, initial_type: 0 };
                let sb = snapshot_of(&cb, &b);
                let proxy = XiProxy { k: 1, value: martingale_value(&b, 1, 0, &sb), horizon: big_n };
                let z = assemble_z(&sn, 0, &[proxy], &b).unwrap();
                for i in 0..6 {
                    for j in 0..6 {
                        second[(i, j)] += p * q * z.coords[i] * z.coords[j];
                    }
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                assert!((second[(i, j)] - cov[(i, j)]).abs() < 1e-10, "({i},{j})");
            }
        }
    }

    #[test]
    fn normalizer_examples() {
        let b = basis(7);
        let m7 = limit_covariance(&b);
        let s = normalizer(&m7, &m7).unwrap();
        assert!(!s.before_n0);
        assert!((s.sigma_n.clone() - DMatrix::identity(6, 6)).amax() < 1e-12);
        let s = normalizer(&(m7.clone() * 4.0), &m7).unwrap();
        assert!((s.sigma_n - DMatrix::identity(6, 6) * 0.5).amax() < 1e-12);
        let mut sing = m7.clone();
        sing[(0, 0)] = 0.0;
        let s = normalizer(&sing, &m7).unwrap();
        assert!(s.before_n0);
        assert_eq!(s.sigma_n, DMatrix::identity(6, 6));
        let mut asym = m7.clone();
        asym[(0, 1)] = 0.3;
        assert!(normalizer(&asym, &m7).is_err());
    }

    #[test]
    fn normalizer_maps_cov_to_target() {
        let b = basis(8);
        let target = limit_covariance(&b);
        let a = DMatrix::<f64>::from_fn(7, 7, |i, j| ((i * 7 + j) as f64 * 0.37).sin());
        let cov = &a * a.transpose() + DMatrix::identity(7, 7) * 0.5;
        let s = normalizer(&cov, &target).unwrap().sigma_n;
        let out = &s * cov * s.transpose();
        assert!((out - target).amax() < 1e-10);
    }

    #[test]
    fn d_preserves_quadratic_form() {
        for m in [5, 7, 12] {
            let b = basis(m);
            let d = rotation_matrix_d(&b);
            let mm = limit_covariance(&b);
            assert!((&d * &mm * d.transpose() - mm).amax() < 1e-12);
        }
    }

    #[test]
    fn error_term_matches_g_split_definition() {
        let b = basis(7);
        let ev = ErrorTermEvaluator::new(&b, 30).unwrap();
        let w = b.omega(2);
        let want = mean_u(&b, 11, 2) + w * mean_u(&b, 18, 2) - mean_u(&b, 30, 2);
        assert!((ev.g_split(2, 11) - want).norm() < 1e-12);
        assert!(ev.evaluate(30, 0.5, &[Complex64::new(0.0, 0.0)], &[Complex64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn error_term_is_deterministic_given_inputs() {
        let b = basis(7);
        let xi = [Complex64::new(0.3, -1.2)];
        let a = error_term_bn(17, 0.4, &xi, &xi, 40, &b).unwrap();
        let c = error_term_bn(17, 0.4, &xi, &xi, 40, &b).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.len(), 6);
        assert!(a.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn second_split_component_vanishes_without_limits() {
        // with zero limit draws only F^(1) remains
        let b = basis(7);
        let ev = ErrorTermEvaluator::new(&b, 50).unwrap();
        let zero = [Complex64::new(0.0, 0.0)];
        let u: f64 = 0.37;
        let left = 20;
        let f = ev.evaluate(left, u, &zero, &zero).unwrap();
        let w = b.omega(1);
        let g = g_k(u, 1, &b);
        let f1 = ev.g_split(1, left) - (w * 50f64.ln()).exp() * g;
        assert!((f[0] - f1.re / 50f64.sqrt()).abs() < 1e-12);
        assert!((f[1] - f1.im / 50f64.sqrt()).abs() < 1e-12);
    }
}
