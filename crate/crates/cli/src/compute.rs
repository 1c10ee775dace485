//! The `compute` command: one end-to-end protocol run against one public
//! dataset, producing the report file.

use std::path::PathBuf;

use fred_core::protocol::report::{
    CandidateReport, FredReport, TranscriptSummary,
};
use fred_core::protocol::run_fred;

use crate::args::ComputeArgs;
use crate::clients::{load_clients, parse_client_spec, read_pool};
use crate::config::{resolve_protocol, RunConfig};
use crate::{config_err, write_json, CliError};

const DEFAULT_REPORT_PATH: &str = "fred-report.json";

#[derive(Debug)]
pub struct ComputeOutcome {
    pub report: FredReport,
    pub report_path: PathBuf,
    /// Result lines for standard output.
    pub stdout: String,
    /// Diagnostics for standard error.
    pub stderr: String,
}

pub fn cmd_compute(args: &ComputeArgs) -> Result<ComputeOutcome, CliError> {
    let file = RunConfig::from_flags(&args.protocol)?;
    // Configuration, including budget validity, settles before any data I/O.
    let protocol = resolve_protocol(&args.protocol, &file)?;
    let public_path = args
        .public
        .clone()
        .or_else(|| file.public.clone())
        .ok_or_else(|| config_err("--public is required"))?;
    let clients_raw = args
        .clients
        .clone()
        .or_else(|| file.clients.clone())
        .ok_or_else(|| config_err("--clients is required"))?;
    let spec = parse_client_spec(&clients_raw)?;
    let report_path = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_REPORT_PATH));

    let public = read_pool(&public_path)?;
    let clients = load_clients(&spec, protocol.seed)?;

    let run = run_fred(&public, &clients, &protocol)?;

    let report = FredReport::new(
        protocol.echo(),
        run.release.spent,
        run.release.n2,
        vec![CandidateReport::new(
            public_path.display().to_string(),
            &run.distance,
        )],
        TranscriptSummary::of(&run.transcript, clients.len()),
        protocol.mode,
    );
    write_json(&report_path, &report)?;

    let candidate = &report.per_candidate[0];
    let stdout = format!(
        "distance: {}\nspent budget: epsilon {}, delta {}\n",
        candidate.clamped, report.spent_budget.epsilon, report.spent_budget.delta,
    );
    let stderr = format!(
        "mode {}: {} clients, {} samples, {} rounds; report written to {}\n",
        report.mode,
        report.transcript.client_count,
        report.n2,
        report.transcript.rounds,
        report_path.display(),
    );
    Ok(ComputeOutcome {
        report,
        report_path,
        stdout,
        stderr,
    })
}
