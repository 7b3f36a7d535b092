//! Run reports: the JSON document and the per-node CSV table.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, Mode, RunConfig};
use crate::expr::SystemDef;
use crate::monodromy::{probe_candidates, scan, ProbeError, ProbeOutcome, ScanError, ScanReport};
use crate::obstruction::{verdict, ObstructionError, ObstructionVerdict};
use crate::TOOL_VERSION;

pub const TOOL_NAME: &str = "monodromy";

pub const CSV_HEADER: &str =
    "re(t),im(t),classification,traversals,return_residual,det_residual,symplectic_residual";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemInfo {
    pub name: String,
    /// SHA-256 of the system's canonical text.
    pub sha256: String,
    pub dimension: usize,
    pub state: Vec<String>,
    pub angles: Vec<usize>,
    pub hamiltonian: bool,
}

impl SystemInfo {
    pub fn of(sys: &SystemDef) -> SystemInfo {
        SystemInfo {
            name: sys.name.clone(),
            sha256: sha256_hex(sys.canonical_text().as_bytes()),
            dimension: sys.dim(),
            state: sys.state_symbols.clone(),
            angles: sys.angle_indices.clone(),
            hamiltonian: sys.is_hamiltonian,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Everything needed to reproduce and re-judge a run.
///
/// `generated_unix` is the only field that differs between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub generated_unix: u64,
    pub system: SystemInfo,
    pub config: RunConfig,
    #[serde(flatten)]
    pub scan: ScanReport,
    pub verdict: ObstructionVerdict,
}

impl RunReport {
    pub fn new(
        sys: &SystemDef,
        config: RunConfig,
        scan: ScanReport,
        verdict: ObstructionVerdict,
    ) -> RunReport {
        let generated_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunReport {
            tool: ToolInfo {
                name: TOOL_NAME.to_string(),
                version: TOOL_VERSION.to_string(),
            },
            generated_unix,
            system: SystemInfo::of(sys),
            config,
            scan,
            verdict,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Verdict(#[from] ObstructionError),
}

/// Validate `config`, run its probes on a pool of `config.jobs` threads and
/// judge the result.
pub fn execute(config: RunConfig) -> Result<RunReport, RunError> {
    let sys = config.validate()?;
    let opts = config.probe_options();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| RunError::Pool(e.to_string()))?;
    let x0 = &config.initial_state;
    let scan_report = pool.install(|| -> Result<ScanReport, RunError> {
        Ok(match config.mode {
            Mode::Probe => probe_candidates(&sys, x0, config.t0, &config.candidates, &opts)?,
            Mode::Scan => scan(
                &sys,
                x0,
                config.t0,
                config.domain.as_ref().expect("validated"),
                config.grid.expect("validated"),
                &opts,
            )?,
        })
    })?;
    let v = verdict(&scan_report, &config.obstruction)?;
    Ok(RunReport::new(&sys, config, scan_report, v))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn csv_row(o: &ProbeOutcome) -> String {
    let r = o.residuals();
    format!(
        "{},{},{},{},{},{},{}",
        o.candidate.re,
        o.candidate.im,
        o.classification.label(),
        o.traversals_used,
        opt(o.return_residual),
        opt(r.and_then(|r| r.det_residual)),
        opt(r.and_then(|r| r.symplectic_residual)),
    )
}

/// One row per outcome, in report order.
pub fn to_csv(scan: &ScanReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for o in &scan.outcomes {
        out.push_str(&csv_row(o));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
