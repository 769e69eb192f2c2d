use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use crate::controller::{ControllerPlugin, IssuedCommand, PluginHost};
use crate::memsys::{SimError, StatsSheet};
use crate::registry::{BuildError, Catalog, Factory};

/// Address columns of a command trace, after `clk,cmd`.
pub const TRACE_LEVELS: &[&str] = &crate::standards::LEVEL_NAMES;

/// CSV output shared by the recorders of every channel.
pub struct TraceSink {
    path: PathBuf,
    out: BufWriter<File>,
    records: u64,
    error: Option<std::io::Error>,
}

pub type SharedSink = Arc<Mutex<TraceSink>>;

impl TraceSink {
    pub fn create(path: &Path, levels: &[&str]) -> Result<Self, SimError> {
        let io = |source| SimError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "clk,cmd,{}", levels.join(",")).map_err(io)?;
        Ok(TraceSink {
            path: path.to_path_buf(),
            out,
            records: 0,
            error: None,
        })
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    fn append(&mut self, clk: u64, cmd: &str, addr: &[i32]) {
        if self.error.is_some() {
            return;
        }
        let mut line = format!("{clk},{cmd}");
        for a in addr {
            line.push(',');
            line.push_str(&a.to_string());
        }
        if let Err(e) = writeln!(self.out, "{line}") {
            self.error = Some(e);
        }
        self.records += 1;
    }

    fn flush(&mut self) -> Result<(), SimError> {
        let err = match self.error.take() {
            Some(e) => Some(e),
            None => self.out.flush().err(),
        };
        match err {
            Some(source) => Err(SimError::Io {
                path: self.path.clone(),
                source,
            }),
            None => Ok(()),
        }
    }
}

/// Appends every issued command to a CSV trace.
pub struct CommandTraceRecorder {
    sink: SharedSink,
    records: u64,
}

impl CommandTraceRecorder {
    pub fn new(sink: SharedSink) -> Self {
        CommandTraceRecorder { sink, records: 0 }
    }
}

impl ControllerPlugin for CommandTraceRecorder {
    fn name(&self) -> &str {
        "CommandTrace"
    }

    fn on_command_issued(&mut self, ic: &IssuedCommand, host: &mut PluginHost<'_>) {
        let name = &host.spec().command(ic.cmd).name;
        self.sink
            .lock()
            .expect("trace sink poisoned")
            .append(ic.clk, name, ic.addr.as_slice());
        self.records += 1;
    }

    fn stats(&self, out: &mut StatsSheet, prefix: &str) {
        out.add(&format!("{prefix}.records"), self.records);
    }

    fn finalize(&mut self) -> Result<(), SimError> {
        self.sink.lock().expect("trace sink poisoned").flush()
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation(
        "ControllerPlugin",
        "CommandTrace",
        Factory::controller_plugin(|node, ctx| {
            let spec = ctx.dram(node)?;
            let path: PathBuf = node.param("path", PathBuf::from("cmdtrace.csv"))?;
            let resolved = ctx.output_path(&path);
            let sink = match ctx.sinks.get(&resolved) {
                Some(s) => Arc::clone(s),
                None => {
                    let levels: Vec<&str> = spec.levels().iter().map(|l| l.name.as_str()).collect();
                    let sink = TraceSink::create(&resolved, &levels).map_err(|e| node.bad_param("path", e.to_string()))?;
                    let sink = Arc::new(Mutex::new(sink));
                    ctx.sinks.insert(resolved, Arc::clone(&sink));
                    sink
                }
            };
            Ok(Box::new(CommandTraceRecorder::new(sink)))
        }),
    )
}
