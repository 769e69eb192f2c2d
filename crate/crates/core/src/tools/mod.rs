//! Trace generation, command-trace verification and threshold sweeps.

mod cmdtrace;
mod gen;
mod sweep;
mod verify;

use std::path::Path;
use std::sync::Arc;

pub use cmdtrace::{read_command_trace, CommandRecord, TraceError};
pub use gen::{generate, generate_string, GenOptions, Pattern};
pub use sweep::{render_csv, run_cycles, sweep, with_mitigation, SweepCell, BASELINE};
pub use verify::{verify_records, Verifier, Violation, ViolationKind};

use crate::dramspec::DeviceSpec;
use crate::registry::{BuildContext, BuildError, Catalog, ConfigNode};

/// The device a config describes, as `MemorySystem.DRAM`, or the
/// standard's defaults when no config is given. `standard` must match the
/// config's DRAM implementation.
pub fn device_from_config(catalog: &Catalog, standard: &str, config: Option<&str>) -> Result<Arc<DeviceSpec>, BuildError> {
    let mut root = match config {
        Some(text) => ConfigNode::parse(text)?,
        None => ConfigNode::parse("")?,
    };
    let mut ms = root.child_or_empty("MemorySystem")?;
    let mut dram = match ms.child("DRAM")? {
        Some(d) => d,
        None => ConfigNode::parse(&format!("impl: {}", standard.to_ascii_uppercase()))?,
    };
    let mut probe = dram.clone();
    let impl_name = probe.impl_name()?;
    if !impl_name.eq_ignore_ascii_case(standard) {
        return Err(dram.bad_param("impl", format!("config describes {impl_name}, not {standard}")));
    }
    let mut ctx = BuildContext::new(catalog);
    catalog.build_dram(&mut dram, &mut ctx)
}

/// Verifies a CSV command trace file.
pub fn verify_file(spec: &DeviceSpec, path: &Path) -> Result<(u64, Vec<Violation>), TraceError> {
    let file = std::fs::File::open(path).map_err(|e| TraceError::Parse {
        line: 0,
        reason: format!("{}: {e}", path.display()),
    })?;
    let levels: Vec<String> = spec.levels().iter().map(|l| l.name.clone()).collect();
    verify_records(spec, read_command_trace(std::io::BufReader::new(file), &levels)?)
}
