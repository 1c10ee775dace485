//! The `rank` command: order candidate datasets by distance to the private
//! release, creating the release once and reusing it forever after.
//!
//! The release file is the unit of privacy accounting: the first invocation
//! runs the protocol and saves it; every later invocation only reads it, so
//! adding candidates costs nothing. The file embeds its mode and spent
//! budget, which the report echoes verbatim.

use std::path::PathBuf;

use fred_core::ingest::read_embeddings;
use fred_core::protocol::report::{
    CandidateReport, FredReport, ReleaseFile, TranscriptSummary,
};
use fred_core::protocol::{rank_candidates, run_release};
use fred_core::{EmbeddingMatrix64, PrivateRelease64};

use crate::args::RankArgs;
use crate::clients::{load_clients, parse_client_spec};
use crate::config::{resolve_protocol, RunConfig};
use crate::{config_err, data_err, write_json, CliError};

#[derive(Debug)]
pub struct RankCmdOutcome {
    /// Candidate names in ascending distance order, with clamped distances.
    pub ranked: Vec<(String, f64)>,
    pub skipped: Vec<(String, String)>,
    /// True when this invocation created the release file.
    pub release_created: bool,
    pub report: Option<FredReport>,
    pub stdout: String,
    pub stderr: String,
}

pub fn cmd_rank(args: &RankArgs) -> Result<RankCmdOutcome, CliError> {
    let file = RunConfig::from_flags(&args.protocol)?;
    let release_path = args
        .release
        .clone()
        .or_else(|| file.release.clone())
        .ok_or_else(|| config_err("--release is required"))?;
    let mut candidates: Vec<PathBuf> = args.candidates.clone();
    if candidates.is_empty() {
        candidates = file.candidates.clone().unwrap_or_default();
    }
    if candidates.is_empty() {
        return Err(config_err("at least one --candidates file is required"));
    }

    let mut stderr = String::new();
    let (release_file, release_created) = if release_path.exists() {
        let text = std::fs::read_to_string(&release_path)
            .map_err(|e| data_err(format!("reading {}: {e}", release_path.display())))?;
        let rf: ReleaseFile = serde_json::from_str(&text)
            .map_err(|e| data_err(format!("parsing {}: {e}", release_path.display())))?;
        stderr.push_str(&format!(
            "reusing release {} (mode {}, spent epsilon {}); no budget consumed\n",
            release_path.display(),
            rf.mode,
            rf.spent_budget.epsilon,
        ));
        (rf, false)
    } else {
        // Budgets resolve (and fail) before any client data is opened.
        let protocol = resolve_protocol(&args.protocol, &file)?;
        let clients_raw = args
            .clients
            .clone()
            .or_else(|| file.clients.clone())
            .ok_or_else(|| {
                config_err(format!(
                    "release {} does not exist; --clients is required to create it",
                    release_path.display()
                ))
            })?;
        let spec = parse_client_spec(&clients_raw)?;
        let clients = load_clients(&spec, protocol.seed)?;
        let (release, transcript) = run_release(&clients, &protocol)?;
        let rf = ReleaseFile::from_release(
            &release,
            protocol.echo(),
            transcript.rounds.len() as u32,
        );
        write_json(&release_path, &rf)?;
        stderr.push_str(&format!(
            "created release {} from {} clients\n",
            release_path.display(),
            clients.len()
        ));
        (rf, true)
    };
    let release: PrivateRelease64 = release_file
        .into_release()
        .map_err(|e| data_err(format!("{}: {e}", release_path.display())))?;

    let mut loaded: Vec<(String, EmbeddingMatrix64)> = Vec::new();
    for path in &candidates {
        let name = path.display().to_string();
        match read_embeddings::<f64>(path) {
            Ok(m) => loaded.push((name, m)),
            Err(e) => stderr.push_str(&format!("warning: skipped {name}: {e}\n")),
        }
    }
    let outcome = rank_candidates(&loaded, &release);
    for s in &outcome.skipped {
        stderr.push_str(&format!("warning: skipped {}: {}\n", s.name, s.reason));
    }
    if outcome.ranked.is_empty() {
        return Err(data_err("no candidate could be ranked"));
    }

    let ranked: Vec<(String, f64)> = outcome
        .ranked
        .iter()
        .map(|r| (r.name.clone(), r.value.clamped))
        .collect();
    let name_width = ranked
        .iter()
        .map(|(n, _)| n.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut stdout = format!("{:<width$}  distance\n", "name", width = name_width);
    for (name, distance) in &ranked {
        stdout.push_str(&format!("{name:<name_width$}  {distance:.6}\n"));
    }

    let report = args.out.clone().or_else(|| file.out.clone()).map(|out| {
        let report = FredReport {
            version: release_file.version,
            config: release_file.config.clone(),
            spent_budget: release_file.spent_budget,
            n2: release_file.n2,
            per_candidate: outcome
                .ranked
                .iter()
                .map(|r| CandidateReport::new(r.name.clone(), &r.value))
                .collect(),
            transcript: TranscriptSummary {
                rounds: release_file.rounds,
                client_count: release_file.client_count,
            },
            mode: release_file.mode.clone(),
        };
        write_json(&out, &report).map(|_| report)
    });
    let report = match report {
        Some(Ok(r)) => Some(r),
        Some(Err(e)) => return Err(e),
        None => None,
    };

    Ok(RankCmdOutcome {
        ranked,
        skipped: outcome
            .skipped
            .into_iter()
            .map(|s| (s.name, s.reason))
            .collect(),
        release_created,
        report,
        stdout,
        stderr,
    })
}
