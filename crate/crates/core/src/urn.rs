//! Sequential simulation of the cyclic urn.
//!
//! Each step costs `O(m)`: the drawn ball is located by a cumulative scan over
//! the per-type counts, then the counts, every projection `u_k(R_n)` and every
//! running product `prod_{s<=n} (s + omega^k)/s` are updated in place.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{contract, invalid, Result};
use crate::spectral::SpectralBasis;

/// Parameters of a single simulated trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrnConfig {
    pub m: usize,
    pub initial_type: usize,
    pub steps: u64,
    pub seed: u64,
    /// Strictly increasing times in `[0, steps]` at which snapshots are kept.
    pub checkpoints: Vec<u64>,
}

impl UrnConfig {
    pub fn new(m: usize, steps: u64, seed: u64) -> Self {
        Self {
            m,
            initial_type: 0,
            steps,
            seed,
            checkpoints: Vec::new(),
        }
    }

    pub fn with_initial_type(mut self, j: usize) -> Self {
        self.initial_type = j;
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(invalid(format!("m must be at least 2, got {}", self.m)));
        }
        if self.initial_type >= self.m {
            return Err(invalid(format!(
                "initial type {} outside [0, {})",
                self.initial_type, self.m
            )));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("checkpoints must be strictly increasing"));
        }
        if let Some(&last) = self.checkpoints.last() {
            if last > self.steps {
                return Err(invalid(format!(
                    "checkpoint {last} beyond the simulated horizon {}",
                    self.steps
                )));
            }
        }
        Ok(())
    }
}

/// Ball counts `R_n` after `time` steps from one ball of `initial_type`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Composition {
    pub counts: Vec<u64>,
    pub time: u64,
    pub initial_type: usize,
}

/// Type of the ball at position `draw` when balls are ordered by type.
#[inline]
fn locate(counts: &[u64], draw: u64) -> usize {
    let mut acc = 0u64;
    for (t, &c) in counts.iter().enumerate() {
        acc += c;
        if draw < acc {
            return t;
        }
    }
    counts.len() - 1
}

impl Composition {
    /// `R_0 = e_j`.
    pub fn initial(m: usize, j: usize) -> Self {
        let mut counts = vec![0; m];
        counts[j] = 1;
        Self {
            counts,
            time: 0,
            initial_type: j,
        }
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    /// Number of balls, always `time + 1`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Type selected by draw index `draw` in `[0, n+1)`.
    pub fn drawn_type(&self, draw: u64) -> Result<usize> {
        let total = self.time + 1;
        if draw >= total {
            return Err(contract(format!("draw {draw} outside [0, {total})")));
        }
        Ok(locate(&self.counts, draw))
    }

    /// One urn step driven by an explicit draw index.
    pub fn step(&self, draw: u64) -> Result<Composition> {
        let j = self.drawn_type(draw)?;
        let mut next = self.clone();
        next.counts[(j + 1) % self.m()] += 1;
        next.time += 1;
        Ok(next)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Cyclic rotation `(A^t)^j R`: the count of type `t` moves to `t + j`.
    pub fn rotated(&self, j: usize) -> Composition {
        let m = self.m();
        let mut counts = vec![0; m];
        for (t, &c) in self.counts.iter().enumerate() {
            counts[(t + j) % m] = c;
        }
        Composition {
            counts,
            time: self.time,
            initial_type: (self.initial_type + j) % m,
        }
    }
}

/// State of one trajectory at a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: u64,
    pub composition: Composition,
    /// `u_k(R_n)` for `k = 0..m`.
    pub projections: Vec<Complex64>,
    /// `prod_{s=1}^{n} (s + omega^k)/s` for `k = 0..m`.
    pub gamma_products: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub config: UrnConfig,
    pub snapshots: Vec<Snapshot>,
    #[serde(rename = "final")]
    pub final_state: Composition,
}

impl TrajectoryRecord {
    pub fn snapshot_at(&self, time: u64) -> Option<&Snapshot> {
        self.snapshots
            .binary_search_by_key(&time, |s| s.time)
            .ok()
            .map(|i| &self.snapshots[i])
    }
}

/// Per-replicate seed derived from a master seed; part of the public
/// interface so ensemble runs can be reproduced replicate by replicate.
pub fn replicate_seed(master: u64, replicate: u64) -> u64 {
    splitmix64(splitmix64(master) ^ replicate.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator used for every trajectory.
pub fn trajectory_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Simulates one trajectory, keeping snapshots at the configured checkpoints.
pub fn simulate(config: &UrnConfig, basis: &SpectralBasis) -> Result<TrajectoryRecord> {
    config.validate()?;
    if basis.m() != config.m {
        return Err(contract(format!(
            "basis built for m = {}, config has m = {}",
            basis.m(),
            config.m
        )));
    }
    let m = config.m;
    let omegas = basis.omega_powers();
    // table[t * m + k] = omega^{k t}
    let table: Vec<Complex64> = (0..m)
        .flat_map(|t| (0..m).map(move |k| (t, k)))
        .map(|(t, k)| basis.omega(k * t))
        .collect();

    let mut rng = trajectory_rng(config.seed);
    let mut state = Composition::initial(m, config.initial_type);
    let j = config.initial_type;
    let mut proj: Vec<Complex64> = table[j * m..(j + 1) * m].to_vec();
    let mut prod = vec![Complex64::new(1.0, 0.0); m];

    let mut snapshots = Vec::with_capacity(config.checkpoints.len());
    let mut cps = config.checkpoints.iter().peekable();
    let keep = |state: &Composition, proj: &[Complex64], prod: &[Complex64]| Snapshot {
        time: state.time,
        composition: state.clone(),
        projections: proj.to_vec(),
        gamma_products: prod.to_vec(),
    };
    if cps.peek() == Some(&&0) {
        snapshots.push(keep(&state, &proj, &prod));
        cps.next();
    }

    for s in 1..=config.steps {
        let draw = rng.random_range(0..s);
        let t = locate(&state.counts, draw);
        let nt = if t + 1 == m { 0 } else { t + 1 };
        state.counts[nt] += 1;
        state.time = s;
        let row = &table[nt * m..(nt + 1) * m];
        for (u, w) in proj.iter_mut().zip(row) {
            *u += w;
        }
        let inv = 1.0 / s as f64;
        for (p, w) in prod.iter_mut().zip(omegas) {
            *p += *p * w * inv;
        }
        if cps.peek() == Some(&&s) {
            snapshots.push(keep(&state, &proj, &prod));
            cps.next();
        }
    }

    Ok(TrajectoryRecord {
        config: config.clone(),
        snapshots,
        final_state: state,
    })
}

/// Runs `reps` independent trajectories in parallel. Replicate `r` uses
/// `replicate_seed(template.seed, r)`; results are returned in replicate order.
pub fn simulate_ensemble(
    template: &UrnConfig,
    reps: usize,
    basis: &SpectralBasis,
) -> Result<Vec<TrajectoryRecord>> {
    template.validate()?;
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let cfg = UrnConfig {
                seed: replicate_seed(template.seed, r),
                ..template.clone()
            };
            simulate(&cfg, basis)
        })
        .collect()
}

/// Re-expresses a type-0 trajectory as one started from type `j`, using the
/// distributional identity `R^{[j]}_n = (A^t)^j R_n`.
pub fn shift_initial_type(
    traj: &TrajectoryRecord,
    j: usize,
    basis: &SpectralBasis,
) -> Result<TrajectoryRecord> {
    let m = traj.config.m;
    if traj.config.initial_type != 0 {
        return Err(contract("shift expects a trajectory started from type 0"));
    }
    if j >= m {
        return Err(invalid(format!("shift {j} outside [0, {m})")));
    }
    let snapshots = traj
        .snapshots
        .iter()
        .map(|s| Snapshot {
            time: s.time,
            composition: s.composition.rotated(j),
            projections: s
                .projections
                .iter()
                .enumerate()
                .map(|(k, u)| u * basis.omega(k * j))
                .collect(),
            gamma_products: s.gamma_products.clone(),
        })
        .collect();
    Ok(TrajectoryRecord {
        config: UrnConfig {
            initial_type: j,
            ..traj.config.clone()
        },
        snapshots,
        final_state: traj.final_state.rotated(j),
    })
}
