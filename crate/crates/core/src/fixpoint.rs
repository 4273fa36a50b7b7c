//! Binary-search-tree split of the urn and the distributional fixed point of
//! the martingale limits.
//!
//! Inserting uniform keys into a binary search tree and labelling external
//! nodes by ball type realises the urn: the root's left subtree is an urn
//! started from type 0, the right one an urn started from type 1, and the
//! left subtree size is uniform on `{0, ..., n-1}`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exact::{exact_distribution, ExactDistribution};
use crate::gamma::{gamma, real_pow};
use crate::spectral::SpectralBasis;
use crate::urn::{replicate_seed, simulate, splitmix64, trajectory_rng, Composition, UrnConfig};

/// `(u^w + w (1-u)^w - 1) / Gamma(1 + w)` with `w = omega^k`; the endpoints
/// take their one-sided limits, which exist because `Re w > 0` is required.
pub fn g_k(u: f64, k: usize, basis: &SpectralBasis) -> Complex64 {
    let w = basis.omega(k);
    g_at(u, w, gamma(w + 1.0))
}

fn g_at(u: f64, w: Complex64, gamma_1w: Complex64) -> Complex64 {
    (real_pow(u, w) + w * real_pow(1.0 - u, w) - 1.0) / gamma_1w
}

/// Root split of a binary search tree with `n` internal nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitSample {
    pub n: u64,
    /// Root key.
    pub u: f64,
    /// Size of the left subtree.
    pub left: u64,
    /// Size of the right subtree, `n - 1 - left`.
    pub right: u64,
}

/// Uniform on the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Draws the root key `U` and then the left subtree size from `Binomial(n-1, U)`.
pub fn split_sample<R: Rng + ?Sized>(n: u64, rng: &mut R) -> Result<SplitSample> {
    if n == 0 {
        return Err(invalid("split needs n >= 1"));
    }
    let u = open_unit(rng);
    let left = if n == 1 {
        0
    } else {
        Binomial::new(n - 1, u)
            .map_err(|e| invalid(format!("binomial({}, {u}): {e}", n - 1)))?
            .sample(rng)
    };
    Ok(SplitSample {
        n,
        u,
        left,
        right: n - 1 - left,
    })
}

/// One realisation of the split construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BstSplit {
    pub split: SplitSample,
    /// Urn of the left subtree, started from type 0.
    pub left: Composition,
    /// Urn of the right subtree, started from type 1.
    pub right: Composition,
    /// `left + right`, which has the law of `R_n`.
    pub combined: Composition,
}

/// Builds `R_n` from two independent subtree urns. The right urn is simulated
/// from type 0 and rotated to type 1.
pub fn bst_split_check<R: Rng + ?Sized>(
    n: u64,
    basis: &SpectralBasis,
    rng: &mut R,
) -> Result<BstSplit> {
    let m = basis.m();
    let split = split_sample(n, rng)?;
    let left = simulate(&UrnConfig::new(m, split.left, rng.random()), basis)?.final_state;
    let right = simulate(&UrnConfig::new(m, split.right, rng.random()), basis)?
        .final_state
        .rotated(1);
    let counts = left
        .counts
        .iter()
        .zip(&right.counts)
        .map(|(a, b)| a + b)
        .collect();
    Ok(BstSplit {
        split,
        combined: Composition {
            counts,
            time: n,
            initial_type: 0,
        },
        left,
        right,
    })
}

/// Exact law of the split construction: `I` uniform on `{0..n-1}`, then the
/// sum of an exact type-0 law at `I` and a rotated type-0 law at `n-1-I`.
pub fn split_distribution(m: usize, n: u64) -> Result<ExactDistribution> {
    if n == 0 {
        return Err(invalid("split needs n >= 1"));
    }
    let laws: Vec<ExactDistribution> = (0..n)
        .map(|t| exact_distribution(m, t))
        .collect::<Result<_>>()?;
    let weight = BigRational::new(BigInt::from(1), BigInt::from(n));
    let mut law: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
    for i in 0..n as usize {
        let j = n as usize - 1 - i;
        for (a, pa) in &laws[i].law {
            for (b, pb) in &laws[j].law {
                let sum: Vec<u64> = (0..m).map(|t| a[t] + b[(t + m - 1) % m]).collect();
                let p = &weight * pa * pb;
                *law.entry(sum).or_insert_with(BigRational::zero) += p;
            }
        }
    }
    Ok(ExactDistribution { m, n, law })
}

/// How generation 0 of the fixed-point pool is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PoolInit {
    /// Every member is 0. The second moment then approaches its fixed point
    /// only geometrically, with deficit `rho^depth`.
    Zero,
    /// Complex Gaussian members whose first two moments equal those of the
    /// fixed point, so every generation already has the limiting second moments.
    #[default]
    MomentMatched,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XiSamplerConfig {
    pub depth: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub init: PoolInit,
    /// Subtract the pool mean after every generation (the fixed point is centred).
    pub recenter: bool,
}

impl XiSamplerConfig {
    pub fn new(depth: usize, pool_size: usize, seed: u64) -> Self {
        Self {
            depth,
            pool_size,
            seed,
            init: PoolInit::default(),
            recenter: true,
        }
    }
}

pub const DEFAULT_DEPTH: usize = 30;
pub const DEFAULT_POOL_SIZE: usize = 100_000;
const CHUNK: usize = 4096;

/// Final generation of the pooled iteration, jointly over several indices:
/// every member of a generation uses one root key `U` for all indices.
#[derive(Debug, Clone, Serialize)]
pub struct XiPool {
    pub ks: Vec<usize>,
    pub depth: usize,
    /// `samples[i][j]` is member `i` for index `ks[j]`.
    pub samples: Vec<Vec<Complex64>>,
}

impl XiPool {
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.samples.iter().map(|s| s[j]).collect()
    }
}

/// Analytic `E|Xi_k|^2` and `E[Xi_k^2]` of the centred fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointMoments {
    pub abs_sq: f64,
    pub sq: Complex64,
    /// `E|g_k(U)|^2`.
    pub g_abs_sq: f64,
    /// `E[g_k(U)^2]`.
    pub g_sq: Complex64,
    /// `2 / (2 lambda_k + 1)`.
    pub rho: f64,
    /// `(1 + omega^{2k}) / (1 + 2 omega^k)`.
    pub rho_sq: Complex64,
}

pub fn fixed_point_moments(basis: &SpectralBasis, k: usize) -> Result<FixedPointMoments> {
    require_large(basis, k)?;
    let w = basis.omega(k);
    let lam = w.re;
    let g1 = gamma(w + 1.0);
    let beta_abs = gamma(Complex64::new(2.0 + 2.0 * lam, 0.0)).re;
    let g_abs_sq = (2.0 / (1.0 + 2.0 * lam) - 1.0) / g1.norm_sqr() + 2.0 * lam / beta_abs;
    let rho_sq = (1.0 + w * w) / (1.0 + 2.0 * w);
    let g_sq = (rho_sq - 1.0 + 2.0 * w * g1 * g1 / gamma(2.0 * w + 2.0)) / (g1 * g1);
    let rho = 2.0 / (2.0 * lam + 1.0);
    Ok(FixedPointMoments {
        abs_sq: g_abs_sq / (1.0 - rho),
        sq: g_sq / (1.0 - rho_sq),
        g_abs_sq,
        g_sq,
        rho,
        rho_sq,
    })
}

fn require_large(basis: &SpectralBasis, k: usize) -> Result<()> {
    if !basis.is_large(k) {
        return Err(invalid(format!(
            "index {k} is not large (lambda = {})",
            basis.lambda(k)
        )));
    }
    Ok(())
}

/// Complex Gaussian with prescribed `E|Z|^2 = s` and `E[Z^2] = t`.
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, s: f64, t: Complex64) -> Complex64 {
    let vxx = (0.5 * (s + t.re)).max(0.0);
    let vyy = (0.5 * (s - t.re)).max(0.0);
    let cxy = 0.5 * t.im;
    let a = vxx.sqrt();
    let b = if a > 0.0 { cxy / a } else { 0.0 };
    let c = (vyy - b * b).max(0.0).sqrt();
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    Complex64::new(a * z1, b * z1 + c * z2)
}

fn chunk_rng(seed: u64, generation: usize, chunk: usize) -> rand_chacha::ChaCha8Rng {
    trajectory_rng(replicate_seed(splitmix64(seed ^ generation as u64), chunk as u64))
}

/// Samples the fixed point of `X = U^w X' + w (1-U)^w X'' + g_k(U)` by
/// population iteration. Deterministic for a given seed regardless of the
/// thread count.
pub fn sample_xi(basis: &SpectralBasis, ks: &[usize], config: &XiSamplerConfig) -> Result<XiPool> {
    if ks.is_empty() {
        return Err(invalid("no indices requested"));
    }
    for &k in ks {
        require_large(basis, k)?;
    }
    if config.depth == 0 {
        return Err(invalid("depth must be at least 1"));
    }
    if config.pool_size < 2 {
        return Err(invalid("pool size must be at least 2"));
    }
    let width = ks.len();
    let ws: Vec<Complex64> = ks.iter().map(|&k| basis.omega(k)).collect();
    let gammas: Vec<Complex64> = ws.iter().map(|&w| gamma(w + 1.0)).collect();
    let size = config.pool_size;
    let n_chunks = size.div_ceil(CHUNK);

    let mut pool: Vec<Complex64> = match config.init {
        PoolInit::Zero => vec![Complex64::new(0.0, 0.0); size * width],
        PoolInit::MomentMatched => {
            let moments: Vec<FixedPointMoments> = ks
                .iter()
                .map(|&k| fixed_point_moments(basis, k))
                .collect::<Result<_>>()?;
            (0..n_chunks)
                .into_par_iter()
                .flat_map_iter(|c| {
                    let mut rng = chunk_rng(config.seed, 0, c);
                    let len = CHUNK.min(size - c * CHUNK);
                    let mut out = Vec::with_capacity(len * width);
                    for _ in 0..len {
                        for fp in &moments {
                            out.push(complex_gaussian(&mut rng, fp.abs_sq, fp.sq));
                        }
                    }
                    out.into_iter()
                })
                .collect()
        }
    };
    if config.recenter {
        recenter(&mut pool, width);
    }

    for generation in 1..=config.depth {
        let prev = &pool;
        let next: Vec<Complex64> = (0..n_chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = chunk_rng(config.seed, generation, c);
                let len = CHUNK.min(size - c * CHUNK);
                let mut out = Vec::with_capacity(len * width);
                for _ in 0..len {
                    let u = open_unit(&mut rng);
                    let a = rng.random_range(0..size) * width;
                    let b = rng.random_range(0..size) * width;
                    for j in 0..width {
                        let w = ws[j];
                        let left = real_pow(u, w);
                        let right = w * real_pow(1.0 - u, w);
                        let g = (left + right - 1.0) / gammas[j];
                        out.push(left * prev[a + j] + right * prev[b + j] + g);
                    }
                }
                out.into_iter()
            })
            .collect();
        pool = next;
        if config.recenter {
            recenter(&mut pool, width);
        }
    }

    Ok(XiPool {
        ks: ks.to_vec(),
        depth: config.depth,
        samples: pool.chunks(width).map(|c| c.to_vec()).collect(),
    })
}

fn recenter(pool: &mut [Complex64], width: usize) {
    let rows = pool.len() / width;
    for j in 0..width {
        let mean = pool.iter().skip(j).step_by(width).sum::<Complex64>() / rows as f64;
        for x in pool.iter_mut().skip(j).step_by(width) {
            *x -= mean;
        }
    }
}

/// One more iteration of the fixed-point map applied to a finished pool,
/// used to check that the pool is (approximately) invariant.
pub fn iterate_once(basis: &SpectralBasis, pool: &XiPool, seed: u64) -> Result<XiPool> {
    let width = pool.ks.len();
    let flat: Vec<Complex64> = pool.samples.iter().flatten().copied().collect();
    let size = pool.samples.len();
    let ws: Vec<Complex64> = pool.ks.iter().map(|&k| basis.omega(k)).collect();
    let gammas: Vec<Complex64> = ws.iter().map(|&w| gamma(w + 1.0)).collect();
    let n_chunks = size.div_ceil(CHUNK);
    let next: Vec<Complex64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = chunk_rng(seed, usize::MAX, c);
            let len = CHUNK.min(size - c * CHUNK);
            let mut out = Vec::with_capacity(len * width);
            for _ in 0..len {
                let u = open_unit(&mut rng);
                let a = rng.random_range(0..size) * width;
                let b = rng.random_range(0..size) * width;
                for j in 0..width {
                    let w = ws[j];
                    let g = g_at(u, w, gammas[j]);
                    out.push(real_pow(u, w) * flat[a + j] + w * real_pow(1.0 - u, w) * flat[b + j] + g);
                }
            }
            out.into_iter()
        })
        .collect();
    Ok(XiPool {
        ks: pool.ks.clone(),
        depth: pool.depth + 1,
        samples: next.chunks(width).map(|c| c.to_vec()).collect(),
    })
}
