//! Interface/implementation catalog and the config-driven builder.
//!
//! Components never name each other's concrete types: a factory receives
//! its own config subtree plus a [`BuildContext`] and asks the catalog for
//! whatever child interfaces it needs.

mod config;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

pub use config::ConfigNode;

use crate::controller::{Controller, ControllerPlugin, RefreshManager, RowPolicy, Scheduler};
use crate::dramspec::DeviceSpec;
use crate::memsys::{AddrMapper, Frontend, MemorySystem, Simulation};
use crate::mitigations::SharedSink;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("implementation '{name}' is already registered under interface '{interface}'")]
    DuplicateImplementation { interface: String, name: String },
    #[error("unknown interface '{0}'")]
    UnknownInterface(String),
    #[error("factory for interface '{factory}' registered under '{interface}'")]
    InterfaceMismatch { interface: String, factory: String },
    #[error("{path}: no implementation '{name}' for interface '{interface}' (known: {known})")]
    UnknownImplementation {
        interface: String,
        name: String,
        path: String,
        known: String,
    },
    #[error("{path}: '{name}' is a reserved {interface} name with no implementation in this build")]
    Reserved { interface: String, name: String, path: String },
    #[error("{path}: missing component '{interface}'")]
    MissingComponent { interface: String, path: String },
    #[error("{path}: {reason}")]
    BadParameter { path: String, reason: String },
}

pub type FactoryFn<T> = Arc<dyn Fn(&mut ConfigNode, &mut BuildContext<'_>) -> Result<T, BuildError> + Send + Sync>;

/// Mitigations named in the literature that the plugin contract admits but
/// that ship without an implementation.
pub const RESERVED_PLUGINS: &[&str] = &["TWiCe", "Hydra", "RRS"];

macro_rules! interfaces {
    ($($variant:ident, $name:literal, $ctor:ident, $build:ident => $product:ty;)*) => {
        /// Construction recipe for one implementation, tagged by interface.
        #[derive(Clone)]
        pub enum Factory {
            $($variant(FactoryFn<$product>),)*
        }

        pub const INTERFACES: &[&str] = &[$($name),*];

        impl Factory {
            pub fn interface(&self) -> &'static str {
                match self {
                    $(Factory::$variant(_) => $name,)*
                }
            }

            $(
                pub fn $ctor(
                    f: impl Fn(&mut ConfigNode, &mut BuildContext<'_>) -> Result<$product, BuildError> + Send + Sync + 'static,
                ) -> Self {
                    Factory::$variant(Arc::new(f))
                }
            )*
        }

        impl Catalog {
            $(
                pub fn $build(&self, node: &mut ConfigNode, ctx: &mut BuildContext<'_>) -> Result<$product, BuildError> {
                    let name = node.impl_name()?;
                    let f = match self.resolve_at($name, &name, node.path())? {
                        Factory::$variant(f) => f.clone(),
                        _ => unreachable!("interface checked at registration"),
                    };
                    let product = f(node, ctx)?;
                    node.check_unknown()?;
                    Ok(product)
                }
            )*
        }
    };
}

interfaces! {
    Frontend, "Frontend", frontend, build_frontend => Box<dyn Frontend>;
    MemorySystem, "MemorySystem", memory_system, build_memory_system => Box<dyn MemorySystem>;
    AddrMapper, "AddrMapper", addr_mapper, build_addr_mapper => Box<dyn AddrMapper>;
    Dram, "DRAM", dram, build_dram => Arc<DeviceSpec>;
    Controller, "Controller", controller, build_controller => Box<dyn Controller>;
    Scheduler, "Scheduler", scheduler, build_scheduler => Box<dyn Scheduler>;
    RefreshManager, "RefreshManager", refresh_manager, build_refresh_manager => Box<dyn RefreshManager>;
    RowPolicy, "RowPolicy", row_policy, build_row_policy => Box<dyn RowPolicy>;
    ControllerPlugin, "ControllerPlugin", controller_plugin, build_controller_plugin => Box<dyn ControllerPlugin>;
}

#[derive(Clone, Default)]
pub struct Catalog {
    entries: BTreeMap<String, BTreeMap<String, Factory>>,
}

impl std::fmt::Debug for Catalog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: BTreeMap<_, Vec<_>> = self
            .entries
            .iter()
            .map(|(i, m)| (i.as_str(), m.keys().map(String::as_str).collect()))
            .collect();
        f.debug_struct("Catalog").field("entries", &names).finish()
    }
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    /// Catalog with every implementation shipped in this crate.
    pub fn with_builtins() -> Self {
        let mut c = Catalog::new();
        crate::standards::register(&mut c).expect("builtin registration");
        crate::memsys::register(&mut c).expect("builtin registration");
        crate::controller::register(&mut c).expect("builtin registration");
        crate::mitigations::register(&mut c).expect("builtin registration");
        c
    }

    pub fn register_implementation(&mut self, interface: &str, name: &str, factory: Factory) -> Result<(), BuildError> {
        if !INTERFACES.contains(&interface) {
            return Err(BuildError::UnknownInterface(interface.to_string()));
        }
        if factory.interface() != interface {
            return Err(BuildError::InterfaceMismatch {
                interface: interface.to_string(),
                factory: factory.interface().to_string(),
            });
        }
        let slot = self.entries.entry(interface.to_string()).or_default();
        if slot.contains_key(name) {
            return Err(BuildError::DuplicateImplementation {
                interface: interface.to_string(),
                name: name.to_string(),
            });
        }
        slot.insert(name.to_string(), factory);
        Ok(())
    }

    pub fn resolve(&self, interface: &str, name: &str) -> Result<&Factory, BuildError> {
        self.resolve_at(interface, name, "")
    }

    fn resolve_at(&self, interface: &str, name: &str, path: &str) -> Result<&Factory, BuildError> {
        if !INTERFACES.contains(&interface) {
            return Err(BuildError::UnknownInterface(interface.to_string()));
        }
        if let Some(f) = self.entries.get(interface).and_then(|m| m.get(name)) {
            return Ok(f);
        }
        if interface == "ControllerPlugin" && RESERVED_PLUGINS.contains(&name) {
            return Err(BuildError::Reserved {
                interface: interface.to_string(),
                name: name.to_string(),
                path: path.to_string(),
            });
        }
        Err(BuildError::UnknownImplementation {
            interface: interface.to_string(),
            name: name.to_string(),
            path: path.to_string(),
            known: self.implementations(interface).join(", "),
        })
    }

    pub fn implementations(&self, interface: &str) -> Vec<&str> {
        self.entries
            .get(interface)
            .map(|m| m.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }
}

/// Connector to the enclosing object graph, handed to every factory.
pub struct BuildContext<'a> {
    pub catalog: &'a Catalog,
    /// Root seed; randomized components derive their streams from it.
    pub seed: u64,
    pub outdir: Option<PathBuf>,
    /// The device of the memory system being built, once known.
    pub dram: Option<Arc<DeviceSpec>>,
    /// Channel of the controller being built.
    pub channel: usize,
    /// Command-trace sinks by resolved output path, shared across channels.
    pub sinks: HashMap<PathBuf, SharedSink>,
}

impl<'a> BuildContext<'a> {
    pub fn new(catalog: &'a Catalog) -> Self {
        BuildContext {
            catalog,
            seed: 0,
            outdir: None,
            dram: None,
            channel: 0,
            sinks: HashMap::new(),
        }
    }

    /// The device spec, for components that can only be built inside a
    /// memory system.
    pub fn dram(&self, node: &ConfigNode) -> Result<Arc<DeviceSpec>, BuildError> {
        self.dram
            .clone()
            .ok_or_else(|| node.bad_param("", "component needs a DRAM device in scope"))
    }

    /// Output paths are relative to the output directory when one is set.
    pub fn output_path(&self, p: &Path) -> PathBuf {
        match &self.outdir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    pub outdir: Option<PathBuf>,
}

/// Builds a complete simulation from a config document.
pub fn build_simulation(catalog: &Catalog, mut root: ConfigNode, opts: &BuildOptions) -> Result<Simulation, BuildError> {
    let mut ctx = BuildContext::new(catalog);
    ctx.outdir = opts.outdir.clone();
    ctx.seed = root.param("seed", 0u64)?;

    let mut fe_node = root.component("Frontend")?;
    let mut ms_node = root.component("MemorySystem")?;
    let frontend = catalog.build_frontend(&mut fe_node, &mut ctx)?;
    let memsys = catalog.build_memory_system(&mut ms_node, &mut ctx)?;
    root.attach("Frontend", fe_node)?;
    root.attach("MemorySystem", ms_node)?;
    root.check_unknown()?;

    let effective = serde_yaml::to_string(root.effective()).expect("mapping serializes");
    Ok(Simulation::new(frontend, memsys, effective, opts.outdir.clone()))
}

pub fn build_from_str(catalog: &Catalog, text: &str, opts: &BuildOptions) -> Result<Simulation, BuildError> {
    build_simulation(catalog, ConfigNode::parse(text)?, opts)
}
