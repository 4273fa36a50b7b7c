//! Command line front end for the cyclic urn workbench.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cyclic_urn::exact::{
    closed_form, exact_distribution, mean_expansion, moment_table, ClosedFormCase,
};
use cyclic_urn::fixpoint::{fixed_point_moments, sample_xi, XiSamplerConfig};
use cyclic_urn::residual::{exact_residual_covariance, horizon, DEFAULT_HORIZON_MULTIPLIER};
use cyclic_urn::spectral::{limit_covariance, sigma_matrix, SpectralBasis};
use cyclic_urn::stats::{covariance_verdict, mean_with_se, normality_verdict, to_rows, EnsembleSummary};
use cyclic_urn::urn::{simulate_ensemble, UrnConfig};
use cyclic_urn::verify::{bn_moment, residual_ensemble, run_suite, Suite, VerifyConfig};
use cyclic_urn::UrnError;

/// Environment variable that fixes the worker thread count.
const THREADS_ENV: &str = "CYCLIC_URN_THREADS";

#[derive(Parser, Debug)]
#[command(name = "cyclic-urn", version, about = "Simulation and exact moments of cyclic Polya urns")]
struct Cli {
    /// Directory for written artifacts; without it everything goes to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Output format for stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Moments,
    Clt,
    Rates,
    Bn,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Moments => Suite::Moments,
            SuiteArg::Clt => Suite::Clt,
            SuiteArg::Rates => Suite::Rates,
            SuiteArg::Bn => Suite::Bn,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues, covariance targets and ranks.
    Spectral {
        #[arg(long)]
        m: usize,
        /// Emit (lambda_k, mu_k) for every k as CSV.
        #[arg(long)]
        eigenplot: bool,
    },
    /// Simulate replicates and emit checkpointed compositions and projections.
    Simulate {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma separated checkpoint times; defaults to the final step.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        initial_type: usize,
    },
    /// Exact first and second moments of the projections.
    Moments {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u64,
        /// Compare against the exact rational enumeration.
        #[arg(long)]
        exact_oracle: bool,
        /// Include the drift plus periodic expansion of the mean.
        #[arg(long)]
        expansion: bool,
    },
    /// Residual vectors of an ensemble and their covariance summary.
    Residuals {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_HORIZON_MULTIPLIER)]
        horizon_mult: f64,
        /// Samples per grid point for the split error-term diagnostic (0 skips it).
        #[arg(long, default_value_t = 0)]
        bn_samples: usize,
    },
    /// Samples from the distributional fixed point of a martingale limit.
    Fixpoint {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 30)]
        depth: usize,
        #[arg(long, default_value_t = 100_000)]
        pool: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run verification suites; exits 1 if any verdict fails.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        horizon_mult: Option<f64>,
        #[arg(long)]
        rate_k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        rate_grid: Option<Vec<u64>>,
        #[arg(long)]
        rate_reps: Option<usize>,
        #[arg(long)]
        limit_n: Option<u64>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        pool: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        bn_grid: Option<Vec<u64>>,
        #[arg(long)]
        bn_samples: Option<usize>,
        #[arg(long)]
        split_reps: Option<usize>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(io::Error),
    Internal(String),
}

impl From<UrnError> for CliError {
    fn from(e: UrnError) -> Self {
        match e {
            UrnError::Numerical(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

/// A finished run: named artifacts and whether every verdict passed.
struct Outcome {
    json: Value,
    csv: Option<String>,
    name: &'static str,
    pass: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(t) if t > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(&cli).and_then(|o| emit(&cli, &o).map(|_| o.pass)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(3)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(4)
        }
    }
}

fn emit(cli: &Cli, o: &Outcome) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(&o.json).map_err(|e| CliError::Internal(e.to_string()))?;
    match &cli.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_file(&dir.join(format!("{}.json", o.name)), &json)?;
            if let Some(csv) = &o.csv {
                write_file(&dir.join(format!("{}.csv", o.name)), csv)?;
            }
        }
        None => {
            let mut out = io::stdout().lock();
            match (cli.format, &o.csv) {
                (Format::Csv, Some(csv)) => out.write_all(csv.as_bytes())?,
                _ => writeln!(out, "{json}")?,
            }
        }
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    fs::write(path, contents)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Spectral { m, eigenplot } => spectral(*m, *eigenplot, cli.format),
        Command::Simulate {
            m,
            steps,
            reps,
            seed,
            checkpoints,
            initial_type,
        } => simulate_cmd(*m, *steps, *reps, *seed, checkpoints, *initial_type),
        Command::Moments {
            m,
            n,
            exact_oracle,
            expansion,
        } => moments(*m, *n, *exact_oracle, *expansion),
        Command::Residuals {
            m,
            n,
            reps,
            seed,
            horizon_mult,
            bn_samples,
        } => residuals(*m, *n, *reps, *seed, *horizon_mult, *bn_samples),
        Command::Fixpoint {
            m,
            k,
            depth,
            pool,
            seed,
        } => fixpoint(*m, *k, *depth, *pool, *seed),
        Command::Verify { .. } => verify(&cli.command),
    }
}

fn spectral(m: usize, eigenplot: bool, format: Format) -> Result<Outcome, CliError> {
    let b = SpectralBasis::new(m)?;
    let t = sigma_matrix(&b)?;
    let eigen: Vec<Value> = (0..m)
        .map(|k| json!({ "k": k, "lambda": b.lambda(k), "mu": b.mu(k), "class": b.classify(k) }))
        .collect();
    let csv = if eigenplot || format == Format::Csv {
        Some(csv_string(
            &["k".into(), "lambda".into(), "mu".into()],
            (0..m).map(|k| vec![k.to_string(), b.lambda(k).to_string(), b.mu(k).to_string()]),
        )?)
    } else {
        None
    };
    let mut out = Outcome {
        json: json!({
            "m": m, "r": b.r(), "critical": b.has_critical(), "eigenvalues": eigen,
            "sigma_m": to_rows(&t.sigma_m), "rank_sigma": t.rank_sigma,
            "m_m": to_rows(&t.m_m), "d": to_rows(&t.d)
        }),
        csv,
        name: "spectral",
        pass: true,
    };
    if eigenplot {
        out.name = "eigenplot";
    }
    Ok(out)
}

fn simulate_cmd(
    m: usize,
    steps: u64,
    reps: usize,
    seed: u64,
    checkpoints: &[u64],
    initial_type: usize,
) -> Result<Outcome, CliError> {
    if reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let b = SpectralBasis::new(m)?;
    let cps = if checkpoints.is_empty() { vec![steps] } else { checkpoints.to_vec() };
    let template = UrnConfig::new(m, steps, seed)
        .with_initial_type(initial_type)
        .with_checkpoints(cps);
    template.validate()?;
    let trajs = simulate_ensemble(&template, reps, &b)?;
    let mut header = vec!["replicate".to_string(), "time".to_string()];
    header.extend((0..m).map(|t| format!("count_{t}")));
    for k in 0..m {
        header.push(format!("re_u{k}"));
        header.push(format!("im_u{k}"));
    }
    let rows = trajs.iter().enumerate().flat_map(|(r, t)| {
        t.snapshots.iter().map(move |s| {
            let mut row = vec![r.to_string(), s.time.to_string()];
            row.extend(s.composition.counts.iter().map(|c| c.to_string()));
            for u in &s.projections {
                row.push(u.re.to_string());
                row.push(u.im.to_string());
            }
            row
        })
    });
    let csv = csv_string(&header, rows)?;
    Ok(Outcome {
        json: json!({
            "m": m, "steps": steps, "reps": reps, "seed": seed, "initial_type": initial_type,
            "final": trajs.iter().map(|t| &t.final_state.counts).collect::<Vec<_>>()
        }),
        csv: Some(csv),
        name: "simulate",
        pass: true,
    })
}

fn moments(m: usize, n: u64, exact_oracle: bool, expansion: bool) -> Result<Outcome, CliError> {
    let b = SpectralBasis::new(m)?;
    let table = moment_table(&b, n);
    let closed: Vec<Value> = ClosedFormCase::ALL
        .iter()
        .filter(|c| m.is_multiple_of(c.divisor()))
        .map(|&c| -> Result<Value, CliError> {
            let (k, l) = c.indices(m);
            let formula = closed_form(m, n, c)?;
            let rec = table.second_u[k][l];
            Ok(json!({ "case": c, "k": k, "l": l, "closed_form": formula, "recursion": rec,
                       "rel_error": (rec.re - formula).abs() / formula.abs().max(f64::MIN_POSITIVE) }))
        })
        .collect::<Result<_, _>>()?;
    let mut json = json!({
        "m": m, "n": n, "mean_u": table.mean_u, "second_u": table.second_u,
        "mean_r": table.mean_r, "closed_forms": closed
    });
    if exact_oracle {
        let d = exact_distribution(m, n)?;
        let mut worst = 0.0f64;
        let mut oracle_second = vec![vec![]; m];
        for k in 0..m {
            worst = worst.max((d.mean_u(&b, k) - table.mean_u[k]).norm());
            for l in 0..m {
                let o = d.second_u(&b, k, l);
                worst = worst.max((o - table.second_u[k][l]).norm());
                oracle_second[k].push(o);
            }
        }
        json["oracle"] = json!({
            "support_size": d.support_size(), "second_u": oracle_second,
            "max_abs_error": worst, "match": worst < 1e-10
        });
    }
    if expansion {
        json["expansion"] = serde_json::to_value(mean_expansion(&b, n)?)
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let pass = json.get("oracle").and_then(|o| o["match"].as_bool()).unwrap_or(true);
    Ok(Outcome { json, csv: None, name: "moments", pass })
}

fn residuals(
    m: usize,
    n: u64,
    reps: usize,
    seed: u64,
    horizon_mult: f64,
    bn_samples: usize,
) -> Result<Outcome, CliError> {
    let b = SpectralBasis::new(m)?;
    let samples = residual_ensemble(&b, n, horizon_mult, reps, seed)?;
    let dim = b.residual_dim();
    let csv = csv_string(
        &std::iter::once("replicate".to_string())
            .chain((0..dim).map(|i| format!("z{i}")))
            .collect::<Vec<_>>(),
        samples.iter().enumerate().map(|(r, z)| {
            std::iter::once(r.to_string())
                .chain(z.iter().map(|x| x.to_string()))
                .collect()
        }),
    )?;
    let big_n = if b.r() == 0 { n } else { horizon(n, horizon_mult)? };
    let exact = exact_residual_covariance(&b, n, big_n)?;
    let target = limit_covariance(&b);
    let mut json = json!({
        "m": m, "n": n, "reps": reps, "seed": seed, "horizon": big_n,
        "limit_covariance": to_rows(&target), "exact_finite_n_covariance": to_rows(&exact)
    });
    let mut pass = true;
    if reps >= cyclic_urn::stats::MIN_REPS {
        let summary = EnsembleSummary::from_samples(&samples, m, n, seed)?;
        json["summary"] = serde_json::to_value(&summary).map_err(|e| CliError::Internal(e.to_string()))?;
        if reps >= cyclic_urn::stats::MIN_REPS_VERDICT {
            let bias = (&exact - &target).map(f64::abs);
            let cov = covariance_verdict(&summary, &target, &bias)?;
            let norm = normality_verdict(&summary)?;
            pass = cov.pass && norm.pass;
            json["covariance_verdict"] = serde_json::to_value(&cov).map_err(|e| CliError::Internal(e.to_string()))?;
            json["normality_verdict"] = serde_json::to_value(&norm).map_err(|e| CliError::Internal(e.to_string()))?;
        }
    }
    if bn_samples > 0 {
        let ks: Vec<usize> = b.large_indices().collect();
        let pool = if ks.is_empty() {
            Vec::new()
        } else {
            sample_xi(&b, &ks, &XiSamplerConfig::new(30, 20_000, seed ^ 0xB0))?.samples
        };
        let grid = [100u64, 1000, 10_000];
        let mut rows = Vec::new();
        for (i, &g) in grid.iter().enumerate() {
            let (mean, se) = bn_moment(&b, g, &pool, bn_samples, seed.wrapping_add(i as u64))?;
            rows.push(json!({ "n": g, "mean_cubed_norm": mean, "se": se }));
        }
        json["bn_diagnostic"] = json!(rows);
    }
    Ok(Outcome { json, csv: Some(csv), name: "residuals", pass })
}

fn fixpoint(m: usize, k: usize, depth: usize, pool: usize, seed: u64) -> Result<Outcome, CliError> {
    let b = SpectralBasis::new(m)?;
    let xi = sample_xi(&b, &[k], &XiSamplerConfig::new(depth, pool, seed))?;
    let col = xi.column(0);
    let abs: Vec<f64> = col.iter().map(|z| z.norm_sqr()).collect();
    let (abs_mean, abs_se) = mean_with_se(&abs);
    let (re_mean, re_se) = mean_with_se(&col.iter().map(|z| z.re).collect::<Vec<_>>());
    let (im_mean, im_se) = mean_with_se(&col.iter().map(|z| z.im).collect::<Vec<_>>());
    let analytic = fixed_point_moments(&b, k)?;
    let csv = csv_string(
        &["index".into(), "re".into(), "im".into()],
        col.iter().enumerate().map(|(i, z)| vec![i.to_string(), z.re.to_string(), z.im.to_string()]),
    )?;
    Ok(Outcome {
        json: json!({
            "m": m, "k": k, "depth": depth, "pool": pool, "seed": seed,
            "mean": { "re": re_mean, "re_se": re_se, "im": im_mean, "im_se": im_se },
            "abs_sq": { "mean": abs_mean, "se": abs_se, "analytic": analytic.abs_sq },
            "analytic": analytic
        }),
        csv: Some(csv),
        name: "fixpoint",
        pass: true,
    })
}

fn verify(cmd: &Command) -> Result<Outcome, CliError> {
    let Command::Verify {
        suite,
        m,
        seed,
        n,
        reps,
        horizon_mult,
        rate_k,
        rate_grid,
        rate_reps,
        limit_n,
        depth,
        pool,
        bn_grid,
        bn_samples,
        split_reps,
    } = cmd
    else {
        unreachable!("verify called with another subcommand")
    };
    let mut cfg = VerifyConfig::new(*m, *seed);
    if let Some(v) = n {
        cfg.n = *v;
    }
    if let Some(v) = reps {
        cfg.reps = *v;
    }
    if let Some(v) = horizon_mult {
        cfg.horizon_multiplier = *v;
    }
    if let Some(v) = rate_k {
        cfg.rate_k = *v;
    }
    if let Some(v) = rate_grid {
        cfg.rate_grid = v.clone();
    }
    if let Some(v) = rate_reps {
        cfg.rate_reps = *v;
    }
    if let Some(v) = limit_n {
        cfg.limit_n = *v;
    }
    if let Some(v) = depth {
        cfg.depth = *v;
    }
    if let Some(v) = pool {
        cfg.pool_size = *v;
    }
    if let Some(v) = bn_grid {
        cfg.bn_grid = v.clone();
    }
    if let Some(v) = bn_samples {
        cfg.bn_samples = *v;
    }
    if let Some(v) = split_reps {
        cfg.split_reps = *v;
    }
    validate_verify(&cfg)?;
    let report = run_suite((*suite).into(), &cfg)?;
    Ok(Outcome {
        pass: report.pass,
        json: serde_json::to_value(&report).map_err(|e| CliError::Internal(e.to_string()))?,
        csv: None,
        name: "verify",
    })
}

fn validate_verify(cfg: &VerifyConfig) -> Result<(), CliError> {
    if cfg.m < 2 {
        return Err(usage(format!("--m must be at least 2, got {}", cfg.m)));
    }
    if cfg.reps < cyclic_urn::stats::MIN_REPS_VERDICT {
        return Err(usage(format!(
            "--reps must be at least {} for verdicts, got {}",
            cyclic_urn::stats::MIN_REPS_VERDICT,
            cfg.reps
        )));
    }
    if cfg.n < 2 {
        return Err(usage(format!("--n must be at least 2, got {}", cfg.n)));
    }
    if !(cfg.horizon_multiplier >= 1.0) {
        return Err(usage(format!("--horizon-mult must be >= 1, got {}", cfg.horizon_multiplier)));
    }
    if cfg.rate_grid.len() < 4 {
        return Err(usage("--rate-grid needs at least 4 points"));
    }
    if cfg.bn_grid.len() < 3 {
        return Err(usage("--bn-grid needs at least 3 points"));
    }
    if cfg.depth == 0 || cfg.pool_size < 2 {
        return Err(usage("--depth must be >= 1 and --pool >= 2"));
    }
    if cfg.rate_reps < 2 || cfg.bn_samples < 2 || cfg.split_reps < 2 {
        return Err(usage("replicate counts must be at least 2"));
    }
    Ok(())
}
