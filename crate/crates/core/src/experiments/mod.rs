//! Configured convergence studies: presets, reference values, estimator
//! sweeps and report files.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::qmc::CbcWeights;

mod config;
mod reference;
mod report;
mod rules;
mod run;
mod setup;

pub use config::{ExperimentConfig, PresetId, ReferenceRule, Study};
pub use reference::{build_reference, compute_reference, reference_path, ReferenceOutcome};
pub use report::{
    emit_plot_data, format_rate, format_sci, sidecar_path, version_string, Column, ColumnKind,
    ConvergenceReport, ReportMetadata, BOUND_COLUMN,
};
pub use rules::{budgeted, QmcRules};
pub use run::{compute_report, run_example, RunOptions, RunOutcome};
pub use setup::{preset_fields, RandomSetup};

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Reads CBC weights from TOML, e.g. `kind = "spod"` with `beta = [...]`.
pub fn load_weights(path: &Path) -> Result<CbcWeights> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.span().map_or(1, |s| text[..s.start].lines().count().max(1)),
        field: "weights".into(),
        message: e.message().to_string(),
    })
}
