//! The `synth-bench` command: sweep mixtures of two synthetic Gaussian
//! sources and measure distance to a target equal to source A.
//!
//! Source A is N(0, I); source B is N(μ, I) with ‖μ‖ equal to the requested
//! separation. The target dataset *is* the materialized source-A pool, and a
//! mixture at Y% takes its leading Y% of rows from that same pool, so at
//! Y=100 the federation holds exactly the target rows. Each step runs one
//! zero-noise audit pass plus `trials` seeded private passes; the plot file
//! gets one row per pass. Private trials are paired across steps under
//! common random numbers so the sweep isolates the effect of the mixture
//! percentage from the privacy noise.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use fred_core::dp::{ClipNorm, NoiseMode, PrivacyBudget};
use fred_core::ingest::{partition, synth_gaussian, synth_mixture, MixtureSource, MixtureSpec,
    PartitionSpec, PartitionStrategy};
use fred_core::protocol::{run_fred, BudgetSplit};
use fred_core::rng::derive_rng;
use fred_core::{EmbeddingMatrix64, ProtocolConfig64};

use crate::args::BenchArgs;
use crate::{config_err, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub steps: Vec<f64>,
    pub trials: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub clip: f64,
    pub samples: usize,
    pub dim: usize,
    pub clients: usize,
    pub separation: f64,
    pub seed: u64,
    pub plot_out: Option<PathBuf>,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            steps: vec![0.0, 25.0, 50.0, 75.0, 95.0, 99.0, 100.0],
            trials: 5,
            epsilon: 0.6,
            delta: 2.0e-6,
            clip: 6.0,
            samples: 5000,
            dim: 32,
            clients: 10,
            separation: 5.0,
            seed: 0,
            plot_out: None,
        }
    }
}

impl BenchParams {
    pub fn from_args(args: &BenchArgs, seed: u64) -> Self {
        Self {
            steps: args.mix_steps.clone(),
            trials: args.trials,
            epsilon: args.epsilon,
            delta: args.delta,
            clip: args.clip,
            samples: args.samples,
            dim: args.dim,
            clients: args.clients,
            separation: args.separation,
            seed,
            plot_out: Some(args.plot_out.clone()),
        }
    }
}

/// One protocol pass in the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub y: f64,
    /// 0 for the audit pass, 1-based for private trials.
    pub trial: u32,
    /// Clamped distance.
    pub distance: f64,
    pub mode: NoiseMode,
}

/// Per-step aggregate over the private trials, plus the audit value.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSummary {
    pub y: f64,
    pub audit: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    /// Ascending in `y`.
    pub summaries: Vec<StepSummary>,
    pub stdout: String,
    pub stderr: String,
}

fn y_label(y: f64) -> String {
    if y.fract() == 0.0 {
        format!("{}", y as i64)
    } else {
        format!("{y}")
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn run_bench(params: &BenchParams) -> Result<BenchOutcome, CliError> {
    let mut steps = params.steps.clone();
    if steps.is_empty() {
        return Err(config_err("at least one mixture step is required"));
    }
    for y in &steps {
        if !(y.is_finite() && (0.0..=100.0).contains(y)) {
            return Err(config_err(format!(
                "mixture step {y} is outside [0, 100]"
            )));
        }
    }
    steps.sort_by(f64::total_cmp);
    steps.dedup();
    if params.trials == 0 {
        return Err(config_err("--trials must be at least 1"));
    }
    if params.dim == 0 {
        return Err(config_err("--dim must be at least 1"));
    }
    if params.samples == 0 || params.clients == 0 {
        return Err(config_err("--samples and --clients must be at least 1"));
    }
    let clip = ClipNorm::new(params.clip).map_err(|e| config_err(e.to_string()))?;
    let budgets = BudgetSplit::even(
        PrivacyBudget::new(params.epsilon, params.delta)
            .map_err(|e| config_err(e.to_string()))?,
    );

    let d = params.dim;
    let mean_a = DVector::zeros(d);
    let mean_b = DVector::from_element(d, params.separation / (d as f64).sqrt());
    let identity = DMatrix::identity(d, d);
    let seed_a = derive_rng(params.seed, &["bench", "pool", "a"]).next_u64();
    let seed_b = derive_rng(params.seed, &["bench", "pool", "b"]).next_u64();
    let pool_a: EmbeddingMatrix64 =
        synth_gaussian(&mean_a, &identity, params.samples, seed_a)?;
    let pool_b: EmbeddingMatrix64 =
        synth_gaussian(&mean_b, &identity, params.samples, seed_b)?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for y in &steps {
        let label = y_label(*y);
        let mixture = synth_mixture(&MixtureSpec {
            source_a: MixtureSource::Matrix(&pool_a),
            source_b: MixtureSource::Matrix(&pool_b),
            percent_a: *y,
            total: params.samples,
            seed: 0,
        })?;
        let clients = partition(
            &mixture,
            &PartitionSpec {
                strategy: PartitionStrategy::RoundRobin,
                client_count: params.clients,
                seed: 0,
            },
        )?;

        let audit_seed = derive_rng(params.seed, &["bench", "audit", &label]).next_u64();
        let audit_config = ProtocolConfig64::new(clip, NoiseMode::Audit, None, audit_seed)?;
        let audit_run = run_fred(&pool_a, &clients, &audit_config)?;
        let audit = audit_run.distance.clamped;
        rows.push(BenchRow {
            y: *y,
            trial: 0,
            distance: audit,
            mode: NoiseMode::Audit,
        });

        let mut private = Vec::with_capacity(params.trials as usize);
        for t in 1..=params.trials {
            // Trials are paired across mixture steps (common random
            // numbers): trial t reuses one noise seed at every Y, so
            // step-to-step comparisons see the same noise realization
            // while each step's own five trials stay independent.
            let run_seed = derive_rng(params.seed, &["bench", "run", &t.to_string()]).next_u64();
            let config =
                ProtocolConfig64::new(clip, NoiseMode::Calibrated, Some(budgets), run_seed)?;
            let run = run_fred(&pool_a, &clients, &config)?;
            rows.push(BenchRow {
                y: *y,
                trial: t,
                distance: run.distance.clamped,
                mode: NoiseMode::Calibrated,
            });
            private.push(run.distance.clamped);
        }
        private.sort_by(f64::total_cmp);
        summaries.push(StepSummary {
            y: *y,
            audit,
            min: private[0],
            median: median(&private),
            max: private[private.len() - 1],
        });
    }

    let mut stdout = format!(
        "{:>6}  {:>12}  {:>12}  {:>12}  {:>12}\n",
        "Y", "audit", "min", "median", "max"
    );
    for s in &summaries {
        let _ = writeln!(
            stdout,
            "{:>6}  {:>12.6}  {:>12.6}  {:>12.6}  {:>12.6}",
            y_label(s.y),
            s.audit,
            s.min,
            s.median,
            s.max
        );
    }
    for pair in summaries.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let overlap = lo.min <= hi.max && hi.min <= lo.max;
        let _ = writeln!(
            stdout,
            "note: Y={} and Y={} private ranges {}",
            y_label(lo.y),
            y_label(hi.y),
            if overlap {
                "overlap"
            } else {
                "are nonoverlapping"
            }
        );
    }

    let mut stderr = String::new();
    if let Some(path) = &params.plot_out {
        let mut tsv = String::from("Y\ttrial\tdistance\tmode\n");
        for row in &rows {
            let _ = writeln!(
                tsv,
                "{}\t{}\t{}\t{}",
                y_label(row.y),
                row.trial,
                row.distance,
                row.mode.as_str()
            );
        }
        std::fs::write(path, tsv)
            .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))?;
        stderr.push_str(&format!("plot data written to {}\n", path.display()));
    }

    Ok(BenchOutcome {
        rows,
        summaries,
        stdout,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchParams {
        BenchParams {
            steps: vec![0.0, 50.0, 100.0],
            trials: 2,
            samples: 300,
            dim: 4,
            clients: 3,
            clip: 8.0,
            separation: 4.0,
            seed: 7,
            ..BenchParams::default()
        }
    }

    #[test]
    fn audit_distances_decrease_and_y100_is_exact() {
        let out = run_bench(&tiny()).unwrap();
        let audits: Vec<f64> = out.summaries.iter().map(|s| s.audit).collect();
        assert!(audits[0] > audits[1] && audits[1] > audits[2], "{audits:?}");
        // Clip 8 exceeds every norm here, so the Y=100 run reproduces the
        // target exactly up to fixed-point rounding.
        assert!(audits[2] <= 1.0e-6, "Y=100 audit distance {}", audits[2]);
    }

    #[test]
    fn each_step_reports_one_audit_plus_the_requested_trials() {
        let out = run_bench(&tiny()).unwrap();
        assert_eq!(out.rows.len(), 3 * (1 + 2));
        for y in [0.0, 50.0, 100.0] {
            let audit_rows = out
                .rows
                .iter()
                .filter(|r| r.y == y && r.mode == NoiseMode::Audit)
                .count();
            let private_rows = out
                .rows
                .iter()
                .filter(|r| r.y == y && r.mode == NoiseMode::Calibrated)
                .count();
            assert_eq!((audit_rows, private_rows), (1, 2));
        }
    }

    #[test]
    fn runs_are_seed_deterministic() {
        let a = run_bench(&tiny()).unwrap();
        let b = run_bench(&tiny()).unwrap();
        assert_eq!(a.rows, b.rows);
        let mut other = tiny();
        other.seed = 8;
        let c = run_bench(&other).unwrap();
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn plot_file_has_one_line_per_pass() {
        let dir = tempfile::tempdir().unwrap();
        let mut params = tiny();
        params.plot_out = Some(dir.path().join("bench.tsv"));
        let out = run_bench(&params).unwrap();
        let tsv = std::fs::read_to_string(dir.path().join("bench.tsv")).unwrap();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "Y\ttrial\tdistance\tmode");
        assert_eq!(lines.len(), 1 + out.rows.len());
        assert!(lines[1].starts_with("0\t0\t"));
        assert!(lines[1].ends_with("\taudit"));
    }

    #[test]
    fn out_of_range_steps_are_config_errors() {
        let mut params = tiny();
        params.steps = vec![0.0, 101.0];
        assert_eq!(run_bench(&params).unwrap_err().exit_code(), 2);
        params.steps = vec![-0.5];
        assert_eq!(run_bench(&params).unwrap_err().exit_code(), 2);
    }
}
