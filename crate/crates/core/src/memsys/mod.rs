//! Frontend, address mapping, memory-system glue and the run loop.

mod frontend;
mod mapper;
mod stats;
mod system;

use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

pub use frontend::{parse_trace_line, Access, Frontend, TraceEntry, TraceFrontend, TraceReader};
pub use mapper::{AddrMapper, BitSliceMapper, MappingScheme};
pub use stats::{Stat, StatsSheet};
pub use system::{GenericDramSystem, MemorySystem};

use crate::dramspec::{Clk, SpecError};
use crate::registry::{BuildError, Catalog};

/// Bytes per memory transaction.
pub const TX_BYTES: u64 = 64;
pub const TX_OFFSET_BITS: u32 = 6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("trace line {line}: {reason}")]
    Trace { line: usize, reason: String },
    #[error("address {addr:#x} outside the {capacity:#x}-byte address space")]
    OutOfRange { addr: u64, capacity: u64 },
    #[error("watchdog: request {request} on channel {channel} waiting since cycle {arrive} (now {clk})")]
    Watchdog { channel: usize, request: u64, arrive: Clk, clk: Clk },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A built simulation: one frontend driving one memory system.
pub struct Simulation {
    frontend: Box<dyn Frontend>,
    memsys: Box<dyn MemorySystem>,
    effective_config: String,
    outdir: Option<PathBuf>,
    clk: Clk,
}

impl Simulation {
    pub fn new(frontend: Box<dyn Frontend>, memsys: Box<dyn MemorySystem>, effective_config: String, outdir: Option<PathBuf>) -> Self {
        Simulation {
            frontend,
            memsys,
            effective_config,
            outdir,
            clk: 0,
        }
    }

    /// The fully resolved configuration, defaults included.
    pub fn effective_config(&self) -> &str {
        &self.effective_config
    }

    pub fn memory_system(&self) -> &dyn MemorySystem {
        self.memsys.as_ref()
    }

    pub fn clk(&self) -> Clk {
        self.clk
    }

    fn run_loop(&mut self) -> Result<(), SimError> {
        loop {
            if self.frontend.is_done() && self.memsys.outstanding() == 0 {
                return Ok(());
            }
            let clk = self.clk;
            if let Some(access) = self.frontend.peek(clk)? {
                if self.memsys.send(access, clk)? {
                    self.frontend.accept(clk);
                }
            }
            for done in self.memsys.tick(clk)? {
                self.frontend.on_complete(&done);
            }
            self.clk += 1;
        }
    }

    /// Runs until the frontend is exhausted and every request completed.
    /// Plugins are finalized (and traces flushed) even when the run fails.
    pub fn run(&mut self) -> Result<StatsSheet, SimError> {
        let started = Instant::now();
        if let Some(dir) = &self.outdir {
            let io = |source| SimError::Io {
                path: dir.clone(),
                source,
            };
            std::fs::create_dir_all(dir).map_err(io)?;
            let path = dir.join("effective-config.yaml");
            std::fs::write(&path, &self.effective_config).map_err(|source| SimError::Io { path, source })?;
        }
        let result = self.run_loop();
        let finalized = self.memsys.finalize();
        result?;
        finalized?;
        let secs = started.elapsed().as_secs_f64();

        let mut sheet = StatsSheet::new();
        sheet.add("cycles", self.clk);
        sheet.add("frontend.consumed", self.frontend.consumed());
        self.memsys.stats(&mut sheet);
        let served = sheet.get_int("requests.read") + sheet.get_int("requests.write");
        let reads = sheet.get_int("requests.read");
        if reads > 0 {
            sheet.set_float("latency.read_avg", sheet.get_int("latency.read_sum") as f64 / reads as f64);
        }
        sheet.set_float("wallclock.seconds", secs);
        if secs > 0.0 {
            sheet.set_float("wallclock.requests_per_sec", served as f64 / secs);
        }
        if let Some(dir) = &self.outdir {
            let path = dir.join("stats.yaml");
            std::fs::write(&path, sheet.render()).map_err(|source| SimError::Io { path, source })?;
        }
        Ok(sheet)
    }
}

pub fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    frontend::register(catalog)?;
    mapper::register(catalog)?;
    system::register(catalog)?;
    Ok(())
}
