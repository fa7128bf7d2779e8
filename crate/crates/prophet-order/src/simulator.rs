//! Monte Carlo verification of approximate stochastic dominance.
//!
//! Plays the arrival-time game end to end: every item draws an arrival time
//! from its law and a value from its distribution, items arrive in time
//! order, and the first item whose value clears its threshold curve wins.
//! The report compares the empirical exceedance of the accepted value
//! against `gamma` times the prophet's exceedance at a ladder of probe
//! points, and per-item acceptance rates against their quadrature
//! predictions.
//!
//! Trials run in fixed-size chunks, each on its own counter-based RNG
//! stream, and chunk results fold in chunk order. Reports are therefore
//! bit-identical for a given seed regardless of worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::distributions::{threshold_tau, DistributionError, Instance};
use crate::scheme::BuiltScheme;

const CHUNK_TRIALS: u64 = 65_536;

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("invalid simulation config: {0}")]
    Invalid(String),

    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Knobs for a simulation run.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationConfig {
    pub trials: u64,
    pub seed: u64,
    /// Number of probe points; probes sit at the prophet's quantile levels
    /// `j / (probes + 1)`.
    pub probes: usize,
    /// Worker threads; `None` uses the global thread pool.
    pub workers: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { trials: 1_000_000, seed: 7, probes: 20, workers: None }
    }
}

/// Empirical exceedance comparison at one probe point.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeStat {
    pub x: f64,
    /// Empirical `P[accepted value > x]`.
    pub alg_exceed: f64,
    /// Empirical `P[max > x]`.
    pub max_exceed: f64,
    /// `alg_exceed - gamma * max_exceed`; zero in expectation for an exact
    /// dominance scheme.
    pub discrepancy: f64,
    /// Standard error of the discrepancy, using that the accepted value
    /// exceeding `x` implies the maximum does.
    pub std_error: f64,
}

/// Everything a simulation run measures.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    pub gamma: f64,
    pub probes: Vec<ProbeStat>,
    /// Per-item empirical acceptance rates.
    pub accept_rate: Vec<f64>,
    /// Per-item acceptance probabilities predicted by quadrature:
    /// `gamma * int pbar_i dqbar_i`.
    pub predicted_accept: Vec<f64>,
    pub mean_accepted: f64,
    pub mean_max: f64,
    /// Largest `|discrepancy| / std_error` over the probes (0 when a
    /// standard error degenerates to 0).
    pub worst_z: f64,
}

struct ChunkStats {
    alg_exceed: Vec<u64>,
    max_exceed: Vec<u64>,
    accepted: Vec<u64>,
    sum_accepted: f64,
    sum_max: f64,
}

impl ChunkStats {
    fn new(probes: usize, items: usize) -> Self {
        ChunkStats {
            alg_exceed: vec![0; probes],
            max_exceed: vec![0; probes],
            accepted: vec![0; items],
            sum_accepted: 0.0,
            sum_max: 0.0,
        }
    }

    fn absorb(&mut self, other: &ChunkStats) {
        for (a, b) in self.alg_exceed.iter_mut().zip(&other.alg_exceed) {
            *a += b;
        }
        for (a, b) in self.max_exceed.iter_mut().zip(&other.max_exceed) {
            *a += b;
        }
        for (a, b) in self.accepted.iter_mut().zip(&other.accepted) {
            *a += b;
        }
        self.sum_accepted += other.sum_accepted;
        self.sum_max += other.sum_max;
    }
}

fn run_chunk(
    inst: &Instance,
    built: &BuiltScheme,
    xs: &[f64],
    seed: u64,
    chunk: u64,
    trials: u64,
) -> ChunkStats {
    let n = inst.n();
    let grid = built.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk + 1);
    let mut stats = ChunkStats::new(xs.len(), n);
    let mut times = vec![0.0f64; n];
    let mut values = vec![0.0f64; n];
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..trials {
        for i in 0..n {
            let ut: f64 = rng.gen();
            let uv: f64 = rng.gen();
            times[i] = built.law(i).sample_time(grid, ut);
            values[i] = inst.quantile(i, uv);
        }
        order.sort_unstable_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
        let mut winner: Option<usize> = None;
        for &i in &order {
            if times[i] >= 1.0 {
                break;
            }
            let threshold = grid.interp(built.schedule.tau(i), times[i]);
            if values[i] > threshold {
                winner = Some(i);
                break;
            }
        }
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let accepted = winner.map_or(0.0, |i| values[i]);
        if let Some(i) = winner {
            stats.accepted[i] += 1;
        }
        stats.sum_accepted += accepted;
        stats.sum_max += max;
        for (j, &x) in xs.iter().enumerate() {
            if accepted > x {
                stats.alg_exceed[j] += 1;
            }
            if max > x {
                stats.max_exceed[j] += 1;
            }
        }
    }
    stats
}

/// Probe points at the prophet's quantile levels `j / (probes + 1)`.
pub fn probe_ladder(inst: &Instance, probes: usize) -> Result<Vec<f64>, SimulatorError> {
    let mut xs = Vec::with_capacity(probes);
    for j in 1..=probes {
        let level = j as f64 / (probes + 1) as f64;
        xs.push(threshold_tau(inst, 1.0 - level)?);
    }
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Play the game `config.trials` times and report the dominance
/// discrepancy at the probe ladder.
pub fn estimate_asd(
    inst: &Instance,
    built: &BuiltScheme,
    config: &SimulationConfig,
) -> Result<SimulationReport, SimulatorError> {
    if config.trials == 0 {
        return Err(SimulatorError::Invalid("need at least one trial".into()));
    }
    if config.probes == 0 {
        return Err(SimulatorError::Invalid("need at least one probe".into()));
    }
    let xs = probe_ladder(inst, config.probes)?;
    let chunks: Vec<(u64, u64)> = {
        let full = config.trials / CHUNK_TRIALS;
        let rest = config.trials % CHUNK_TRIALS;
        let mut v: Vec<(u64, u64)> = (0..full).map(|c| (c, CHUNK_TRIALS)).collect();
        if rest > 0 {
            v.push((full, rest));
        }
        v
    };
    let compute = || {
        chunks
            .par_iter()
            .map(|&(c, len)| run_chunk(inst, built, &xs, config.seed, c, len))
            .collect::<Vec<_>>()
    };
    let per_chunk = match config.workers {
        None => compute(),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| SimulatorError::Invalid(format!("thread pool: {e}")))?;
            pool.install(compute)
        }
    };
    let mut total = ChunkStats::new(xs.len(), inst.n());
    for stats in &per_chunk {
        total.absorb(stats);
    }

    let trials = config.trials as f64;
    let gamma = built.params.gamma;
    let mut probes = Vec::with_capacity(xs.len());
    let mut worst_z = 0.0f64;
    for (j, &x) in xs.iter().enumerate() {
        let pa = total.alg_exceed[j] as f64 / trials;
        let pm = total.max_exceed[j] as f64 / trials;
        let d = pa - gamma * pm;
        // ALG > x implies max > x, so E[1_alg 1_max] = P[ALG > x] and
        // Var(1_alg - gamma 1_max) = pa + gamma^2 pm - 2 gamma pa - d^2.
        let var = (pa + gamma * gamma * pm - 2.0 * gamma * pa - d * d).max(0.0);
        let se = (var / trials).sqrt();
        if se > 0.0 {
            worst_z = worst_z.max(d.abs() / se);
        }
        probes.push(ProbeStat { x, alg_exceed: pa, max_exceed: pm, discrepancy: d, std_error: se });
    }

    let accept_rate: Vec<f64> =
        total.accepted.iter().map(|&c| c as f64 / trials).collect();
    let predicted_accept: Vec<f64> =
        (0..inst.n()).map(|i| built.tables.accept_prob(i)).collect();

    Ok(SimulationReport {
        trials: config.trials,
        seed: config.seed,
        gamma,
        probes,
        accept_rate,
        predicted_accept,
        mean_accepted: total.sum_accepted / trials,
        mean_max: total.sum_max / trials,
        worst_z,
    })
}
