//! Ensemble summaries and pass/fail verdicts.
//!
//! Verdicts are pure functions of a summary: bands are three standard errors
//! (block jackknife over replicates) plus any explicit bias allowance.

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{contract, invalid, Result};

/// Replicate blocks used by the jackknife.
pub const JACKKNIFE_BLOCKS: usize = 100;
/// Minimum replicates for any verdict.
pub const MIN_REPS: usize = 100;
/// Minimum replicates for covariance and normality verdicts.
pub const MIN_REPS_VERDICT: usize = 1000;
/// Asymptotic 0.999 quantile of the Kolmogorov distribution.
pub const KS_CRIT_999: f64 = 1.949_5;
/// Extra factor on the skewness and kurtosis bands for finite-n drift.
pub const MOMENT_MARGIN: f64 = 2.0;

/// Mean, covariance with jackknife errors, and shape diagnostics of an
/// ensemble of real vectors.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub m: usize,
    pub n: u64,
    pub reps: usize,
    pub seed: u64,
    pub emp_mean: Vec<f64>,
    pub emp_cov: Vec<Vec<f64>>,
    pub se_cov: Vec<Vec<f64>>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    /// Kolmogorov-Smirnov distance of each coordinate from its fitted normal.
    pub ks: Vec<f64>,
}

fn cov_from_sums(s1: &[f64], s2: &DMatrix<f64>, count: f64) -> DMatrix<f64> {
    let d = s1.len();
    DMatrix::from_fn(d, d, |i, j| (s2[(i, j)] - s1[i] * s1[j] / count) / (count - 1.0))
}

impl EnsembleSummary {
    pub fn from_samples(samples: &[Vec<f64>], m: usize, n: u64, seed: u64) -> Result<Self> {
        let reps = samples.len();
        if reps < MIN_REPS {
            return Err(invalid(format!("need at least {MIN_REPS} replicates, got {reps}")));
        }
        let dim = samples[0].len();
        if samples.iter().any(|s| s.len() != dim) {
            return Err(contract("replicates have different dimensions"));
        }
        let blocks = JACKKNIFE_BLOCKS.min(reps);
        let block_of = |r: usize| r * blocks / reps;
        let mut bs1 = vec![vec![0.0; dim]; blocks];
        let mut bs2 = vec![DMatrix::<f64>::zeros(dim, dim); blocks];
        let mut bcount = vec![0.0f64; blocks];
        for (r, x) in samples.iter().enumerate() {
            let b = block_of(r);
            bcount[b] += 1.0;
            for i in 0..dim {
                bs1[b][i] += x[i];
                for j in 0..dim {
                    bs2[b][(i, j)] += x[i] * x[j];
                }
            }
        }
        let mut s1 = vec![0.0; dim];
        let mut s2 = DMatrix::<f64>::zeros(dim, dim);
        for b in 0..blocks {
            for i in 0..dim {
                s1[i] += bs1[b][i];
            }
            s2 += &bs2[b];
        }
        let total = reps as f64;
        let cov = cov_from_sums(&s1, &s2, total);

        let loo: Vec<DMatrix<f64>> = (0..blocks)
            .map(|b| {
                let t1: Vec<f64> = (0..dim).map(|i| s1[i] - bs1[b][i]).collect();
                cov_from_sums(&t1, &(&s2 - &bs2[b]), total - bcount[b])
            })
            .collect();
        let bf = blocks as f64;
        let mut se = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let avg = loo.iter().map(|c| c[(i, j)]).sum::<f64>() / bf;
                let ss = loo.iter().map(|c| (c[(i, j)] - avg).powi(2)).sum::<f64>();
                se[(i, j)] = ((bf - 1.0) / bf * ss).sqrt();
            }
        }

        let mean: Vec<f64> = s1.iter().map(|s| s / total).collect();
        let mut skewness = Vec::with_capacity(dim);
        let mut kurt = Vec::with_capacity(dim);
        let mut ks = Vec::with_capacity(dim);
        for i in 0..dim {
            let col: Vec<f64> = samples.iter().map(|x| x[i]).collect();
            let (sk, ku) = shape_moments(&col, mean[i]);
            skewness.push(sk);
            kurt.push(ku);
            ks.push(ks_normal(&col, mean[i], cov[(i, i)].sqrt()));
        }
        Ok(Self {
            m,
            n,
            reps,
            seed,
            emp_mean: mean,
            emp_cov: to_rows(&cov),
            se_cov: to_rows(&se),
            skewness,
            excess_kurtosis: kurt,
            ks,
        })
    }

    pub fn dim(&self) -> usize {
        self.emp_mean.len()
    }

    pub fn cov_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.emp_cov)
    }

    pub fn se_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.se_cov)
    }
}

pub fn to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows.len();
    let c = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(d, c, |i, j| rows[i][j])
}

/// Sample skewness and excess kurtosis (moment estimators).
pub fn shape_moments(xs: &[f64], mean: f64) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return (0.0, 0.0);
    }
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Kolmogorov-Smirnov distance between the sample and `N(mean, sd^2)`.
pub fn ks_normal(xs: &[f64], mean: f64, sd: f64) -> f64 {
    let Ok(dist) = Normal::new(mean, sd.max(f64::MIN_POSITIVE)) else {
        return 1.0;
    };
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Common spacing of a sample supported on an arithmetic grid, or `None`
/// when it takes more than `len / 4` distinct values or the gaps are not
/// integer multiples of the smallest one.
pub fn lattice_span(xs: &[f64]) -> Option<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * scale);
    if v.len() < 2 || v.len() > xs.len() / 4 {
        return None;
    }
    let gaps: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let span = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    gaps.iter()
        .all(|g| {
            let q = g / span;
            (q - q.round()).abs() <= 1e-6 * q.max(1.0)
        })
        .then_some(span)
}

/// Kolmogorov-Smirnov distance between a lattice sample with spacing `span`
/// and `N(mean, sd^2)` rounded to the same lattice (continuity corrected).
pub fn ks_normal_lattice(xs: &[f64], mean: f64, sd: f64, span: f64) -> f64 {
    let Ok(dist) = Normal::new(mean, sd.max(f64::MIN_POSITIVE)) else {
        return 1.0;
    };
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let tol = 1e-6 * span;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let a = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] - a <= tol {
            j += 1;
        }
        let below = dist.cdf(a - span / 2.0);
        let upto = dist.cdf(a + span / 2.0);
        worst = worst.max((below - i as f64 / n).abs()).max((upto - j as f64 / n).abs());
        i = j;
    }
    worst
}

/// Mean and its standard error over `blocks` contiguous blocks.
pub fn mean_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let blocks = JACKKNIFE_BLOCKS.min(n).max(1);
    let total: f64 = xs.iter().sum();
    let mut bsum = vec![0.0; blocks];
    let mut bcount = vec![0.0; blocks];
    for (r, x) in xs.iter().enumerate() {
        let b = r * blocks / n;
        bsum[b] += x;
        bcount[b] += 1.0;
    }
    let mean = total / n as f64;
    if blocks < 2 {
        return (mean, f64::NAN);
    }
    let loo: Vec<f64> = (0..blocks)
        .map(|b| (total - bsum[b]) / (n as f64 - bcount[b]))
        .collect();
    let bf = blocks as f64;
    let avg = loo.iter().sum::<f64>() / bf;
    let ss = loo.iter().map(|v| (v - avg).powi(2)).sum::<f64>();
    (mean, ((bf - 1.0) / bf * ss).sqrt())
}

/// One compared matrix entry.
#[derive(Debug, Clone, Serialize)]
pub struct EntryCheck {
    pub i: usize,
    pub j: usize,
    pub empirical: f64,
    pub target: f64,
    pub se: f64,
    pub bias: f64,
    pub band: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub entries: Vec<EntryCheck>,
    /// Entries coupling different coordinate blocks, tested at `3 se` around 0.
    pub off_block: Vec<EntryCheck>,
    pub failing: Vec<(usize, usize)>,
    pub pass: bool,
}

/// Block of a residual coordinate: pairs `(2c, 2c+1)` share a block, and the
/// trailing scalar of even `m` gets its own.
pub fn coordinate_block(i: usize) -> usize {
    i / 2
}

/// Entrywise `|emp - target| <= 3 se + bias` on the upper triangle, and
/// `|emp| <= 3 se` for every entry coupling different blocks.
pub fn covariance_verdict(
    summary: &EnsembleSummary,
    target: &DMatrix<f64>,
    bias_allowance: &DMatrix<f64>,
) -> Result<CovarianceReport> {
    let d = summary.dim();
    if target.shape() != (d, d) || bias_allowance.shape() != (d, d) {
        return Err(contract(format!(
            "dimension mismatch: summary {d}, target {:?}, bias {:?}",
            target.shape(),
            bias_allowance.shape()
        )));
    }
    if summary.reps < MIN_REPS_VERDICT {
        return Err(invalid(format!(
            "covariance verdict needs {MIN_REPS_VERDICT} replicates, got {}",
            summary.reps
        )));
    }
    let mut entries = Vec::new();
    let mut off_block = Vec::new();
    let mut failing = Vec::new();
    for i in 0..d {
        for j in i..d {
            let emp = summary.emp_cov[i][j];
            let se = summary.se_cov[i][j];
            let bias = bias_allowance[(i, j)];
            let band = 3.0 * se + bias;
            let pass = (emp - target[(i, j)]).abs() <= band;
            if !pass {
                failing.push((i, j));
            }
            entries.push(EntryCheck {
                i,
                j,
                empirical: emp,
                target: target[(i, j)],
                se,
                bias,
                band,
                pass,
            });
            if coordinate_block(i) != coordinate_block(j) {
                let band = 3.0 * se;
                let pass = emp.abs() <= band;
                if !pass && !failing.contains(&(i, j)) {
                    failing.push((i, j));
                }
                off_block.push(EntryCheck {
                    i,
                    j,
                    empirical: emp,
                    target: 0.0,
                    se,
                    bias: 0.0,
                    band,
                    pass,
                });
            }
        }
    }
    Ok(CovarianceReport {
        pass: failing.is_empty(),
        entries,
        off_block,
        failing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoordinateNormality {
    pub coordinate: usize,
    pub skewness: f64,
    pub skewness_band: f64,
    pub excess_kurtosis: f64,
    pub kurtosis_band: f64,
    pub ks: f64,
    pub ks_threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub coordinates: Vec<CoordinateNormality>,
    pub pass: bool,
}

pub fn normality_verdict(summary: &EnsembleSummary) -> Result<NormalityReport> {
    if summary.reps < MIN_REPS_VERDICT {
        return Err(invalid(format!(
            "normality verdict needs {MIN_REPS_VERDICT} replicates, got {}",
            summary.reps
        )));
    }
    let r = summary.reps as f64;
    let skew_band = 3.0 * (6.0 / r).sqrt() * MOMENT_MARGIN;
    let kurt_band = 3.0 * (24.0 / r).sqrt() * MOMENT_MARGIN;
    let ks_threshold = KS_CRIT_999 / r.sqrt();
    let coordinates: Vec<CoordinateNormality> = (0..summary.dim())
        .map(|i| {
            let sk = summary.skewness[i];
            let ku = summary.excess_kurtosis[i];
            let ks = summary.ks[i];
            CoordinateNormality {
                coordinate: i,
                skewness: sk,
                skewness_band: skew_band,
                excess_kurtosis: ku,
                kurtosis_band: kurt_band,
                ks,
                ks_threshold,
                pass: sk.abs() <= skew_band && ku.abs() <= kurt_band && ks <= ks_threshold,
            }
        })
        .collect();
    Ok(NormalityReport {
        pass: coordinates.iter().all(|c| c.pass),
        coordinates,
    })
}

/// Log-log least-squares fit of a decaying second moment.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub k: usize,
    pub grid: Vec<u64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub target_slope: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub const RATE_ABS_TOL: f64 = 0.05;

/// Fits `log value = a + slope log n`; passes iff
/// `|slope - target| <= max(2 se, 0.05)`.
pub fn rate_fit(k: usize, grid: &[u64], values: &[f64], target_slope: f64) -> Result<RateFit> {
    if grid.len() < 4 {
        return Err(invalid(format!("rate fit needs at least 4 grid points, got {}", grid.len())));
    }
    if grid.len() != values.len() {
        return Err(contract("grid and values differ in length"));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid("rate fit needs positive values"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        return Err(invalid("grid must be positive and strictly increasing"));
    }
    let xs: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let g = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / g;
    let ybar = ys.iter().sum::<f64>() / g;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = (rss / (g - 2.0) / sxx).sqrt();
    let tolerance = (2.0 * slope_se).max(RATE_ABS_TOL);
    Ok(RateFit {
        k,
        grid: grid.to_vec(),
        values: values.to_vec(),
        slope,
        slope_se,
        intercept,
        target_slope,
        tolerance,
        pass: (slope - target_slope).abs() <= tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendReport {
    pub values: Vec<f64>,
    pub strictly_decreasing: bool,
    pub halved: bool,
    pub pass: bool,
}

/// Passes iff strictly decreasing and the last value is below half the first.
pub fn trend_verdict(values: &[f64]) -> Result<TrendReport> {
    if values.len() < 3 {
        return Err(invalid(format!("trend needs at least 3 points, got {}", values.len())));
    }
    let strictly_decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let halved = values[values.len() - 1] < values[0] / 2.0;
    Ok(TrendReport {
        values: values.to_vec(),
        strictly_decreasing,
        halved,
        pass: strictly_decreasing && halved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Exp1, StandardNormal};

    fn gaussian(reps: usize, sds: &[f64], seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..reps)
            .map(|_| {
                sds.iter()
                    .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn too_few_replicates() {
        let xs = gaussian(50, &[1.0], 1);
        assert!(EnsembleSummary::from_samples(&xs, 2, 1, 1).is_err());
        let xs = gaussian(500, &[1.0], 1);
        let s = EnsembleSummary::from_samples(&xs, 2, 1, 1).unwrap();
        let t = DMatrix::from_element(1, 1, 1.0);
        assert!(covariance_verdict(&s, &t, &DMatrix::zeros(1, 1)).is_err());
        assert!(normality_verdict(&s).is_err());
    }

    #[test]
    fn target_equal_to_estimate_passes() {
        let xs = gaussian(2000, &[1.0, 2.0, 0.5], 3);
        let s = EnsembleSummary::from_samples(&xs, 4, 10, 3).unwrap();
        let r = covariance_verdict(&s, &s.cov_matrix(), &DMatrix::zeros(3, 3)).unwrap();
        assert!(r.entries.iter().all(|e| e.pass));
        let bad = covariance_verdict(&s, &DMatrix::zeros(2, 2), &DMatrix::zeros(3, 3));
        assert!(matches!(bad, Err(crate::error::UrnError::ContractViolation(_))));
    }

    #[test]
    fn summary_is_symmetric_and_positive() {
        let xs = gaussian(3000, &[1.0, 3.0, 0.2, 1.0], 5);
        let s = EnsembleSummary::from_samples(&xs, 5, 10, 5).unwrap();
        let c = s.cov_matrix();
        assert_eq!(c.clone(), c.transpose());
        assert!(s.se_cov.iter().flatten().all(|&v| v > 0.0));
        assert!((c[(1, 1)] - 9.0).abs() < 5.0 * s.se_cov[1][1]);
    }

    #[test]
    fn jackknife_matches_iid_formula() {
        // SE of a variance of N(0,1) draws is sqrt(2/reps)
        let xs = gaussian(20_000, &[1.0], 9);
        let s = EnsembleSummary::from_samples(&xs, 2, 1, 9).unwrap();
        let want = (2.0 / 20_000f64).sqrt();
        assert!((s.se_cov[0][0] / want - 1.0).abs() < 0.25, "{}", s.se_cov[0][0]);
    }

    #[test]
    fn jackknife_se_scales_with_reps() {
        let grid = [1000usize, 4000, 16_000, 64_000];
        let mut vals = Vec::new();
        for (i, &reps) in grid.iter().enumerate() {
            // average over a few seeds to tame the SE's own noise
            let mut acc = 0.0;
            for s in 0..4 {
                let xs = gaussian(reps, &[1.0, 1.0], 100 + 10 * i as u64 + s);
                acc += EnsembleSummary::from_samples(&xs, 3, 1, 0).unwrap().se_cov[0][1];
            }
            vals.push(acc / 4.0);
        }
        let grid_u: Vec<u64> = grid.iter().map(|&g| g as u64).collect();
        let fit = rate_fit(0, &grid_u, &vals, -0.5).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.05, "slope {}", fit.slope);
    }

    #[test]
    fn normality_controls() {
        let xs = gaussian(10_000, &[1.0, 2.0], 21);
        let s = EnsembleSummary::from_samples(&xs, 3, 1, 21).unwrap();
        assert!(normality_verdict(&s).unwrap().pass);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let ex: Vec<Vec<f64>> = (0..10_000).map(|_| vec![rng.sample::<f64, _>(Exp1)]).collect();
        let s = EnsembleSummary::from_samples(&ex, 2, 1, 22).unwrap();
        let r = normality_verdict(&s).unwrap();
        assert!(!r.pass);
        assert!((s.skewness[0] - 2.0).abs() < 0.3);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let dist = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..1000).map(|i| dist.inverse_cdf((i as f64 + 0.5) / 1000.0)).collect();
        assert!((ks_normal(&xs, 0.0, 1.0) - 0.0005).abs() < 1e-9);
    }

    #[test]
    fn rate_fit_examples() {
        let grid = [100u64, 200, 400, 800, 1600];
        let vals: Vec<f64> = grid.iter().map(|&n| 3.0 * (n as f64).powf(-0.5)).collect();
        let f = rate_fit(1, &grid, &vals, -0.5).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-6);
        assert!(f.pass);
        let f = rate_fit(1, &grid, &vals, -0.6).unwrap();
        assert!(!f.pass);
        assert!(rate_fit(1, &grid[..3], &vals[..3], -0.5).is_err());
        assert!(rate_fit(1, &grid, &[1.0, -1.0, 1.0, 1.0, 1.0], -0.5).is_err());
    }

    #[test]
    fn trend_examples() {
        assert!(trend_verdict(&[1.0, 0.5, 0.2]).unwrap().pass);
        assert!(!trend_verdict(&[1.0, 1.1, 0.9]).unwrap().pass);
        assert!(!trend_verdict(&[1.0, 0.9, 0.8]).unwrap().pass);
        assert!(trend_verdict(&[1.0, 0.5]).is_err());
    }

    #[test]
    fn mean_with_se_matches_iid() {
        let xs: Vec<f64> = gaussian(40_000, &[2.0], 4).into_iter().map(|v| v[0]).collect();
        let (mean, se) = mean_with_se(&xs);
        assert!((se / 0.01 - 1.0).abs() < 0.25);
        assert!(mean.abs() < 4.0 * se);
    }

    #[test]
    fn verdicts_are_pure() {
        let xs = gaussian(2000, &[1.0, 1.0], 8);
        let s = EnsembleSummary::from_samples(&xs, 3, 1, 8).unwrap();
        let t = DMatrix::identity(2, 2);
        let a = serde_json::to_string(&covariance_verdict(&s, &t, &DMatrix::zeros(2, 2)).unwrap()).unwrap();
        let b = serde_json::to_string(&covariance_verdict(&s, &t, &DMatrix::zeros(2, 2)).unwrap()).unwrap();
        assert_eq!(a, b);
    }
    #[test]
    fn lattice_detection_and_correction() {
        let xs: Vec<f64> = (0..4000).map(|i| 2.0 * ((i % 7) as f64) - 6.0).collect();
        assert_eq!(lattice_span(&xs), Some(2.0));
        let smooth: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.7).sin()).collect();
        assert_eq!(lattice_span(&smooth), None);
        // Normal quantiles rounded to a coarse grid: the corrected distance
        // is far smaller than the uncorrected one.
        let dist = Normal::new(0.0, 1.0).unwrap();
        let h = 0.25;
        let ys: Vec<f64> = (0..20000)
            .map(|i| {
                let x = dist.inverse_cdf((i as f64 + 0.5) / 20000.0);
                (x / h).round() * h
            })
            .collect();
        let span = lattice_span(&ys).unwrap();
        assert!((span - h).abs() < 1e-12);
        let raw = ks_normal(&ys, 0.0, 1.0);
        let corrected = ks_normal_lattice(&ys, 0.0, 1.0, span);
        assert!(raw > 0.04, "raw {raw}");
        assert!(corrected < 1e-3, "corrected {corrected}");
    }
}
