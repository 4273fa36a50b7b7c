//! Verification suites: each check compares an implementation against an
//! independent oracle or a limit law and yields a serialisable verdict.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};
use crate::exact::{
    closed_form, exact_distribution, exact_mean_composition, mean_expansion, mean_u,
    residual_second_moment, second_moment_u, xi_second_moments, ClosedFormCase, SERIES_TOL,
};
use crate::fixpoint::{bst_split_check, sample_xi, split_distribution, split_sample, XiSamplerConfig};
use crate::gamma::gamma;
use crate::residual::{
    exact_residual_covariance, horizon, martingale_value, residual_checkpoints,
    residual_from_trajectory, ErrorTermEvaluator,
};
use crate::spectral::{limit_covariance, sigma_matrix, EigenClass, SpectralBasis};
use crate::stats::{
    covariance_verdict, ks_normal_lattice, lattice_span, mean_with_se, normality_verdict,
    rate_fit, to_rows, trend_verdict, EnsembleSummary,
};
use crate::urn::{simulate_ensemble, splitmix64, UrnConfig};

/// Outcome of one named comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub details: Value,
}

impl Check {
    fn new(name: &str, pass: bool, details: Value) -> Self {
        Self {
            name: name.to_string(),
            pass,
            details,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Moments,
    Clt,
    Rates,
    Bn,
    All,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: VerifyConfig,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Parameters of the verification suites; defaults are the acceptance scales.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub m: usize,
    pub seed: u64,
    /// Evaluation time of the residual ensemble.
    pub n: u64,
    pub reps: usize,
    pub horizon_multiplier: f64,
    pub rate_k: usize,
    pub rate_grid: Vec<u64>,
    pub rate_reps: usize,
    /// Time at which the semi-analytic limit moment is evaluated.
    pub limit_n: u64,
    pub depth: usize,
    pub pool_size: usize,
    pub bn_grid: Vec<u64>,
    pub bn_samples: usize,
    pub split_reps: usize,
}

impl VerifyConfig {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            m,
            seed,
            n: 2000,
            reps: 10_000,
            horizon_multiplier: 50.0,
            rate_k: 1,
            rate_grid: vec![250, 500, 1000, 2000, 4000],
            rate_reps: 4000,
            limit_n: 1_000_000,
            depth: 30,
            pool_size: 100_000,
            bn_grid: vec![100, 1000, 10_000],
            bn_samples: 10_000,
            split_reps: 100_000,
        }
    }

    fn sub_seed(&self, tag: u64) -> u64 {
        splitmix64(self.seed ^ tag.wrapping_mul(0xA076_1D64_78BD_642F))
    }
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

/// Product and recursion moments against the rational enumeration.
pub fn oracle_equivalence(ms: &[usize], n_max: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for &m in ms {
        let b = SpectralBasis::new(m)?;
        for n in 0..=n_max {
            let d = exact_distribution(m, n)?;
            let means = d.mean_counts();
            let seconds = d.second_counts();
            let to_f = |r: &num_rational::BigRational| num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN);
            for k in 0..m {
                let oracle: Complex64 = means
                    .iter()
                    .enumerate()
                    .map(|(t, c)| b.omega(k * t) * to_f(c))
                    .sum();
                worst = worst.max((mean_u(&b, n, k) - oracle).norm());
                compared += 1;
                for l in 0..m {
                    let mut o = Complex64::new(0.0, 0.0);
                    for (s, row) in seconds.iter().enumerate() {
                        for (t, v) in row.iter().enumerate() {
                            o += b.omega(k * s + l * t) * to_f(v);
                        }
                    }
                    worst = worst.max((second_moment_u(&b, n, k, l) - o).norm());
                    compared += 1;
                }
            }
        }
    }
    let tol = 1e-10;
    Ok(Check::new(
        "oracle_equivalence",
        worst < tol,
        json!({ "ms": ms, "n_max": n_max, "compared": compared, "max_abs_error": worst, "tolerance": tol }),
    ))
}

/// Closed forms against the recursion, plus the documented `n = 1` deviation.
pub fn closed_forms_check(ms: &[usize], n_lo: u64, n_hi: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut cases = Vec::new();
    for &m in ms {
        let b = SpectralBasis::new(m)?;
        for case in ClosedFormCase::ALL {
            if m % case.divisor() != 0 {
                continue;
            }
            let (k, l) = case.indices(m);
            // one recursion pass, sampled at every n
            let wk = b.omega(k);
            let wl = b.omega(l);
            let wkl = b.omega(k + l);
            let mut a = Complex64::new(1.0, 0.0);
            let mut mean_kl = Complex64::new(1.0, 0.0);
            let mut case_worst = 0.0f64;
            for s in 1..=n_hi {
                let sf = s as f64;
                a = a * (1.0 + (wk + wl) / sf) + wkl / sf * mean_kl;
                mean_kl *= (wkl + sf) / sf;
                if s >= n_lo {
                    let c = closed_form(m, s, case)?;
                    case_worst = case_worst.max((a.re - c).abs().max(a.im.abs()) / c.abs());
                }
            }
            worst = worst.max(case_worst);
            cases.push(json!({ "m": m, "case": case, "k": k, "l": l, "max_rel_error": case_worst }));
        }
    }
    let tol = 1e-9;
    let b2 = SpectralBasis::new(2)?;
    let at_one = second_moment_u(&b2, 1, 1, 1);
    let deviation_ok = at_one.norm() == 0.0;
    Ok(Check::new(
        "closed_forms",
        worst < tol && deviation_ok,
        json!({
            "range": [n_lo, n_hi], "cases": cases, "max_rel_error": worst, "tolerance": tol,
            "half_case_at_n1": { "recursion": at_one.re, "closed_form": closed_form(2, 1, ClosedFormCase::Half)? }
        }),
    ))
}

/// Ranks of the composition covariance and rotation invariance of `M_m`.
pub fn rank_checks(ms: &[usize]) -> Result<Check> {
    let mut rows = Vec::new();
    let mut pass = true;
    for &m in ms {
        let b = SpectralBasis::new(m)?;
        let t = sigma_matrix(&b)?;
        let want = if m % 6 == 0 { 2 } else { m - 1 };
        let rot = (&t.d * &t.m_m * t.d.transpose() - &t.m_m).amax();
        let ok = t.rank_sigma == want && rot < 1e-12;
        pass &= ok;
        rows.push(json!({ "m": m, "rank": t.rank_sigma, "expected": want, "rotation_residual": rot, "pass": ok }));
    }
    Ok(Check::new("rank_checks", pass, json!({ "rows": rows })))
}

/// `||E[R_n] - expansion|| / sqrt(n)` over a grid of `n`.
pub fn expansion_ratios(b: &SpectralBasis, grid: &[u64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&n| {
            let exact = exact_mean_composition(b, n);
            let e = mean_expansion(b, n)?;
            let d: f64 = exact
                .iter()
                .zip(&e.value)
                .map(|(a, c)| (a - c).powi(2))
                .sum::<f64>()
                .sqrt();
            Ok(d / (n as f64).sqrt())
        })
        .collect()
}

/// Bound on the expansion ratio when `6 | m`: the critical pair contributes
/// at most `2 ||v_c|| / |Gamma(1 + omega^c)|`, and the small pairs at most
/// `2 ||v_k|| n^{lambda_k - 1/2} / |Gamma(1 + omega^k)|`, largest at the first grid point.
pub fn expansion_ratio_bound(b: &SpectralBasis, n_first: u64) -> f64 {
    let norm_v = 1.0 / (b.m() as f64).sqrt();
    let nf = n_first as f64;
    (1..=b.pair_count())
        .filter(|&k| !b.is_large(k))
        .map(|k| {
            let lam = b.lambda(k);
            let scale = if b.classify(k) == EigenClass::Critical { 1.0 } else { nf.powf(lam - 0.5) };
            2.0 * norm_v * scale / gamma(b.omega(k) + 1.0).norm()
        })
        .sum()
}

pub fn mean_expansion_check(grid: &[u64]) -> Result<Check> {
    let b7 = SpectralBasis::new(7)?;
    let r7 = expansion_ratios(&b7, grid)?;
    let decreasing = r7.windows(2).all(|w| w[1] < w[0]);
    let b12 = SpectralBasis::new(12)?;
    let r12 = expansion_ratios(&b12, grid)?;
    let bound = 1.05 * expansion_ratio_bound(&b12, grid[0]);
    let bounded = r12.iter().all(|&r| r <= bound);
    Ok(Check::new(
        "mean_expansion",
        decreasing && bounded,
        json!({
            "grid": grid,
            "m7": { "ratios": r7, "strictly_decreasing": decreasing },
            "m12": { "ratios": r12, "bound": bound, "bounded": bounded }
        }),
    ))
}

/// Split construction against the direct law: exact for small `(m, n)` and a
/// two-sample chi-square at `m = 5, n = 6`.
pub fn split_embedding_check(seed: u64, reps: usize) -> Result<Check> {
    let mut exact_ok = true;
    let mut mismatches = Vec::new();
    for m in 2..=5 {
        for n in 1..=6 {
            let ok = split_distribution(m, n)?.law == exact_distribution(m, n)?.law;
            if !ok {
                mismatches.push(json!([m, n]));
            }
            exact_ok &= ok;
        }
    }
    let (m, n) = (5usize, 6u64);
    let b = SpectralBasis::new(m)?;
    let split_counts = tally(reps, seed, |rng| {
        bst_split_check(n, &b, rng).map(|s| s.combined.counts)
    })?;
    let direct_counts = tally(reps, splitmix64(seed ^ 0x5EED), |rng| {
        let cfg = UrnConfig::new(m, n, rng.random());
        crate::urn::simulate(&cfg, &b).map(|t| t.final_state.counts)
    })?;
    let chi = two_sample_chi_square(&split_counts, &direct_counts, 5.0);
    let crit = ChiSquared::new(chi.dof as f64)
        .map_err(|e| invalid(e.to_string()))?
        .inverse_cdf(0.999);
    let chi_ok = chi.statistic <= crit;
    Ok(Check::new(
        "split_embedding",
        exact_ok && chi_ok,
        json!({
            "exact_pairs_checked": "m in 2..=5, n in 1..=6",
            "exact_mismatches": mismatches,
            "chi_square": { "m": m, "n": n, "reps": reps, "statistic": chi.statistic, "dof": chi.dof, "critical_0999": crit, "pass": chi_ok }
        }),
    ))
}

fn tally<F>(reps: usize, seed: u64, draw: F) -> Result<std::collections::BTreeMap<Vec<u64>, u64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<u64>> + Sync,
{
    let chunks = reps.div_ceil(4096);
    let parts: Vec<Vec<Vec<u64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::urn::replicate_seed(seed, c as u64));
            let len = 4096.min(reps - c * 4096);
            (0..len).map(|_| draw(&mut rng)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = std::collections::BTreeMap::new();
    for s in parts.into_iter().flatten() {
        *out.entry(s).or_insert(0) += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
}

/// Two-sample chi-square on category counts; categories whose pooled count is
/// below `min_expected` are merged into one bin.
pub fn two_sample_chi_square<K: Ord + Clone>(
    a: &std::collections::BTreeMap<K, u64>,
    b: &std::collections::BTreeMap<K, u64>,
    min_expected: f64,
) -> ChiSquare {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut rest = (0u64, 0u64);
    let frac = na.min(nb) as f64 / (na + nb) as f64;
    for k in keys {
        let x = *a.get(k).unwrap_or(&0);
        let y = *b.get(k).unwrap_or(&0);
        if ((x + y) as f64) * frac < min_expected {
            rest.0 += x;
            rest.1 += y;
        } else {
            bins.push((x, y));
        }
    }
    if rest.0 + rest.1 > 0 {
        bins.push(rest);
    }
    let (fa, fb) = (na as f64, nb as f64);
    let mut stat = 0.0;
    for (x, y) in &bins {
        let tot = (x + y) as f64;
        let ea = tot * fa / (fa + fb);
        let eb = tot * fb / (fa + fb);
        stat += (*x as f64 - ea).powi(2) / ea + (*y as f64 - eb).powi(2) / eb;
    }
    ChiSquare {
        statistic: stat,
        dof: bins.len().saturating_sub(1).max(1),
    }
}

/// Residual vectors `Z_n` of an ensemble, one row per replicate.
pub fn residual_ensemble(
    b: &SpectralBasis,
    n: u64,
    multiplier: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let cps = residual_checkpoints(b, n, multiplier)?;
    let steps = *cps.last().unwrap_or(&n);
    let template = UrnConfig::new(b.m(), steps, seed).with_checkpoints(cps);
    let trajs = simulate_ensemble(&template, reps, b)?;
    trajs
        .par_iter()
        .map(|t| residual_from_trajectory(t, n, multiplier, b).map(|z| z.coords))
        .collect()
}

/// Covariance and normality verdicts for the residual ensemble at `n`.
///
/// The bias allowance is the distance between the exact finite-`n`
/// covariance of `Z_n` (with proxy `M_{k,N}`) and the limit `M_m`.
pub fn residual_clt_checks(cfg: &VerifyConfig) -> Result<(Check, Check)> {
    let b = SpectralBasis::new(cfg.m)?;
    let samples = residual_ensemble(&b, cfg.n, cfg.horizon_multiplier, cfg.reps, cfg.sub_seed(7))?;
    let summary = EnsembleSummary::from_samples(&samples, cfg.m, cfg.n, cfg.seed)?;
    let big_n = if b.r() == 0 { cfg.n } else { horizon(cfg.n, cfg.horizon_multiplier)? };
    let exact = exact_residual_covariance(&b, cfg.n, big_n)?;
    let target = limit_covariance(&b);
    let bias: DMatrix<f64> = (&exact - &target).map(f64::abs);
    let cov = covariance_verdict(&summary, &target, &bias)?;
    let exact_fit = entrywise_z(&summary, &exact);
    let norm = normality_verdict(&summary)?;
    let cov_check = Check::new(
        "residual_covariance",
        cov.pass,
        json!({
            "m": cfg.m, "n": cfg.n, "horizon": big_n, "reps": cfg.reps,
            "target": to_rows(&target), "exact_finite_n": to_rows(&exact),
            "summary": to_json(&summary), "verdict": to_json(&cov),
            "against_exact_finite_n": exact_fit
        }),
    );
    let norm_check = Check::new(
        "residual_normality",
        norm.pass,
        json!({
            "m": cfg.m, "n": cfg.n, "reps": cfg.reps, "verdict": to_json(&norm),
            "lattice_diagnostic": lattice_diagnostic(&samples, &summary)
        }),
    );
    Ok((cov_check, norm_check))
}

/// Entrywise `|emp - exact| / se` over the upper triangle, every block
/// included. Informational: shows how much of a failure the exact
/// finite-`n` covariance explains.
fn entrywise_z(summary: &EnsembleSummary, exact: &DMatrix<f64>) -> Value {
    let d = summary.dim();
    let mut worst = (0.0f64, 0, 0);
    let mut beyond_3se = 0;
    for i in 0..d {
        for j in i..d {
            let z = (summary.emp_cov[i][j] - exact[(i, j)]).abs() / summary.se_cov[i][j];
            if z > 3.0 {
                beyond_3se += 1;
            }
            if z > worst.0 {
                worst = (z, i, j);
            }
        }
    }
    json!({
        "entries": d * (d + 1) / 2, "beyond_3se": beyond_3se,
        "max_z": worst.0, "max_z_entry": [worst.1, worst.2]
    })
}

/// For coordinates supported on an arithmetic grid, the KS distance against
/// the rounded normal next to the uncorrected one and the rounding floor
/// `Phi(h / 2 sd) - 1/2` that the uncorrected distance cannot go below.
/// Informational only: the verdict uses the uncorrected distance.
fn lattice_diagnostic(samples: &[Vec<f64>], summary: &EnsembleSummary) -> Value {
    let unit = statrs::distribution::Normal::new(0.0, 1.0).expect("standard normal");
    let rows: Vec<Value> = (0..summary.dim())
        .filter_map(|i| {
            let col: Vec<f64> = samples.iter().map(|z| z[i]).collect();
            let span = lattice_span(&col)?;
            let mean = summary.emp_mean[i];
            let sd = summary.emp_cov[i][i].sqrt();
            Some(json!({
                "coordinate": i, "span": span, "span_over_sd": span / sd,
                "rounding_floor": unit.cdf(span / (2.0 * sd)) - 0.5,
                "ks": summary.ks[i], "ks_corrected": ks_normal_lattice(&col, mean, sd, span)
            }))
        })
        .collect();
    json!(rows)
}

/// The normality verdict must reject exponential samples.
pub fn normality_negative_control(reps: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..reps).map(|_| vec![rng.sample::<f64, _>(Exp1)]).collect();
    let summary = EnsembleSummary::from_samples(&xs, 1, 0, seed)?;
    let verdict = normality_verdict(&summary)?;
    Ok(Check::new(
        "normality_negative_control",
        !verdict.pass,
        json!({ "reps": reps, "skewness": summary.skewness[0], "rejected": !verdict.pass }),
    ))
}

/// `M_{k,t}` at every grid time and at the horizon, per replicate.
pub fn coupled_martingales(
    b: &SpectralBasis,
    k: usize,
    grid: &[u64],
    big_n: u64,
    reps: usize,
    seed: u64,
) -> Result<Vec<Vec<Complex64>>> {
    let mut cps = grid.to_vec();
    cps.push(big_n);
    cps.sort_unstable();
    cps.dedup();
    let template = UrnConfig::new(b.m(), big_n, seed).with_checkpoints(cps);
    let trajs = simulate_ensemble(&template, reps, b)?;
    Ok(trajs
        .iter()
        .map(|t| {
            grid.iter()
                .chain(std::iter::once(&big_n))
                .map(|&time| martingale_value(b, k, 0, t.snapshot_at(time).expect("checkpoint")))
                .collect()
        })
        .collect())
}

/// Rate law for `E|M_{k,n} - Xi_k|^2`, the series/asymptote ratio, and the
/// three-way agreement on `E|Xi_k|^2`.
pub fn rate_and_fixed_point_checks(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let b = SpectralBasis::new(cfg.m)?;
    let k = cfg.rate_k;
    if !b.is_large(k) {
        return Err(invalid(format!("rate checks need a large index; {k} is not large for m = {}", cfg.m)));
    }
    let grid = &cfg.rate_grid;
    let n_max = *grid.iter().max().ok_or_else(|| invalid("empty rate grid"))?;
    let big_n = horizon(n_max, cfg.horizon_multiplier)?;
    let paths = coupled_martingales(&b, k, grid, big_n, cfg.rate_reps, cfg.sub_seed(11))?;
    let tail_big = residual_second_moment(&b, big_n, k, SERIES_TOL)?;

    // E-hat |M_n - M_N|^2 + E|M_N - Xi|^2 estimates E|M_n - Xi|^2 without bias
    let mut values = Vec::new();
    let mut raw = Vec::new();
    let mut ses = Vec::new();
    for (g, _) in grid.iter().enumerate() {
        let d: Vec<f64> = paths.iter().map(|p| (p[g] - p[grid.len()]).norm_sqr()).collect();
        let (mean, se) = mean_with_se(&d);
        raw.push(mean);
        values.push(mean + tail_big.abs_sq);
        ses.push(se);
    }
    let target = 1.0 - 2.0 * b.lambda(k);
    let fit = rate_fit(k, grid, &values, target)?;
    let series = residual_second_moment(&b, 10_000, k, SERIES_TOL)?;
    let ratio = series.abs_sq / series.asymptotic_abs_sq;
    let ratio_ok = (0.95..=1.05).contains(&ratio);
    let rate = Check::new(
        "rate_law",
        fit.pass && ratio_ok,
        json!({
            "m": cfg.m, "k": k, "horizon": big_n, "reps": cfg.rate_reps,
            "raw_coupled_values": raw, "horizon_tail": tail_big.abs_sq, "value_se": ses,
            "fit": to_json(&fit),
            "series_ratio_at_1e4": { "series": series.abs_sq, "asymptotic": series.asymptotic_abs_sq, "ratio": ratio, "pass": ratio_ok }
        }),
    );

    // three estimates of E|Xi_k|^2
    let pool = sample_xi(&b, &[k], &XiSamplerConfig::new(cfg.depth, cfg.pool_size, cfg.sub_seed(13)))?;
    let pool_abs: Vec<f64> = pool.column(0).iter().map(|z| z.norm_sqr()).collect();
    let (pool_mean, pool_se) = mean_with_se(&pool_abs);
    let traj_abs: Vec<f64> = paths.iter().map(|p| p[grid.len()].norm_sqr()).collect();
    let (traj_mean, traj_se) = mean_with_se(&traj_abs);
    let traj_est = traj_mean + tail_big.abs_sq;
    let (limit, _) = xi_second_moments(&b, cfg.limit_n, k)?;
    let pairs = [
        ("pool_vs_trajectory", pool_mean, traj_est, (pool_se.powi(2) + traj_se.powi(2)).sqrt()),
        ("pool_vs_limit", pool_mean, limit, pool_se),
        ("trajectory_vs_limit", traj_est, limit, traj_se),
    ];
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, a, c, se) in pairs {
        let ok = (a - c).abs() <= 3.0 * se;
        pass &= ok;
        rows.push(json!({ "pair": name, "difference": a - c, "band": 3.0 * se, "pass": ok }));
    }
    let cross = Check::new(
        "fixed_point_cross_oracle",
        pass,
        json!({
            "m": cfg.m, "k": k, "depth": cfg.depth, "pool_size": cfg.pool_size,
            "pool": { "mean_abs_sq": pool_mean, "se": pool_se },
            "trajectory": { "mean_abs_sq_at_horizon": traj_mean, "horizon_tail": tail_big.abs_sq, "estimate": traj_est, "se": traj_se, "reps": cfg.rate_reps },
            "semi_analytic_limit": { "value": limit, "n": cfg.limit_n },
            "pairs": rows
        }),
    );
    Ok(vec![rate, cross])
}

/// Monte Carlo `E||sigma_n (F^(1) + F^(2))||^3` at one `n`.
pub fn bn_moment(
    b: &SpectralBasis,
    n: u64,
    pool: &[Vec<Complex64>],
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let ev = ErrorTermEvaluator::new(b, n)?;
    let chunks = samples.div_ceil(1024);
    let vals: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::urn::replicate_seed(seed, c as u64));
            let len = 1024.min(samples - c * 1024);
            let empty: Vec<Complex64> = Vec::new();
            (0..len)
                .map(|_| {
                    let s = split_sample(n, &mut rng)?;
                    let (xl, xr) = if pool.is_empty() {
                        (&empty, &empty)
                    } else {
                        (&pool[rng.random_range(0..pool.len())], &pool[rng.random_range(0..pool.len())])
                    };
                    let f = ev.evaluate(s.left, s.u, xl, xr)?;
                    Ok(f.iter().map(|x| x * x).sum::<f64>().powf(1.5))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(mean_with_se(&vals))
}

pub fn bn_check(cfg: &VerifyConfig) -> Result<Check> {
    let b = SpectralBasis::new(cfg.m)?;
    let ks: Vec<usize> = b.large_indices().collect();
    let pool = if ks.is_empty() {
        Vec::new()
    } else {
        sample_xi(&b, &ks, &XiSamplerConfig::new(cfg.depth, cfg.pool_size, cfg.sub_seed(17)))?.samples
    };
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for (i, &n) in cfg.bn_grid.iter().enumerate() {
        let (mean, se) = bn_moment(&b, n, &pool, cfg.bn_samples, cfg.sub_seed(19 + i as u64))?;
        means.push(mean);
        ses.push(se);
    }
    let trend = trend_verdict(&means)?;
    Ok(Check::new(
        "bn_diagnostic",
        trend.pass,
        json!({ "m": cfg.m, "grid": cfg.bn_grid, "samples": cfg.bn_samples, "se": ses, "trend": to_json(&trend) }),
    ))
}

pub fn moments_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    Ok(vec![
        oracle_equivalence(&[2, 3, 4, 5, 6], 10)?,
        closed_forms_check(&[2, 3, 6, 12], 2, 10_000)?,
        rank_checks(&[2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13])?,
        mean_expansion_check(&[100, 1000, 10_000])?,
        split_embedding_check(cfg.sub_seed(3), cfg.split_reps)?,
    ])
}

pub fn clt_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let (cov, norm) = residual_clt_checks(cfg)?;
    Ok(vec![cov, norm, normality_negative_control(cfg.reps.max(1000), cfg.sub_seed(5))?])
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let b = SpectralBasis::new(cfg.m)?;
    if matches!(suite, Suite::Moments | Suite::All) {
        checks.extend(moments_suite(cfg)?);
    }
    if matches!(suite, Suite::Clt | Suite::All) {
        checks.extend(clt_suite(cfg)?);
    }
    if suite == Suite::Rates || (suite == Suite::All && b.is_large(cfg.rate_k)) {
        checks.extend(rate_and_fixed_point_checks(cfg)?);
    }
    if matches!(suite, Suite::Bn | Suite::All) {
        checks.push(bn_check(cfg)?);
    }
    Ok(SuiteReport {
        suite,
        config: cfg.clone(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}
