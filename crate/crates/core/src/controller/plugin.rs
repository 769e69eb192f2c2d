use super::Origin;
use crate::addr::AddrVec;
use crate::dramspec::{Clk, CommandId, DeviceSpec, NodeTree};
use crate::memsys::{SimError, StatsSheet};
use crate::registry::{BuildError, Catalog, Factory};

/// A command the controller just issued. `addr` is cleared below the
/// command's scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IssuedCommand {
    pub cmd: CommandId,
    pub addr: AddrVec,
    pub clk: Clk,
    pub channel: usize,
    pub origin: Origin,
}

/// A maintenance request waiting to enter the priority queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub steps: Vec<CommandId>,
    pub addr: AddrVec,
    pub origin: Origin,
}

/// What a plugin may touch: a read-only view of the device and the
/// controller's injection outbox.
pub struct PluginHost<'a> {
    pub(super) tree: &'a NodeTree,
    pub(super) outbox: &'a mut Vec<Injection>,
    pub(super) index: usize,
}

impl<'a> PluginHost<'a> {
    pub fn new(tree: &'a NodeTree, outbox: &'a mut Vec<Injection>, index: usize) -> Self {
        PluginHost { tree, outbox, index }
    }

    pub fn spec(&self) -> &DeviceSpec {
        self.tree.spec()
    }

    pub fn tree(&self) -> &NodeTree {
        self.tree
    }

    pub fn channel(&self) -> usize {
        self.tree.channel()
    }

    /// The origin tag carried by this plugin's injected requests.
    pub fn origin(&self) -> Origin {
        Origin::Plugin(self.index)
    }

    pub fn inject(&mut self, steps: Vec<CommandId>, addr: AddrVec) {
        let origin = self.origin();
        self.outbox.push(Injection { steps, addr, origin });
    }

    /// Activates and precharges the row in `addr`.
    pub fn refresh_row(&mut self, addr: AddrVec) {
        let k = self.spec().known();
        let (act, pre) = (k.act.expect("spec has ACT"), k.pre.expect("spec has PRE"));
        self.inject(vec![act, pre], addr);
    }
}

pub trait ControllerPlugin: Send {
    fn name(&self) -> &str;
    fn on_tick(&mut self, _clk: Clk, _host: &mut PluginHost<'_>) {}
    fn on_command_issued(&mut self, _cmd: &IssuedCommand, _host: &mut PluginHost<'_>) {}
    /// Adds counters under `prefix`.
    fn stats(&self, _out: &mut StatsSheet, _prefix: &str) {}
    fn finalize(&mut self) -> Result<(), SimError> {
        Ok(())
    }
}

/// Observes nothing and injects nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoOpPlugin;

impl ControllerPlugin for NoOpPlugin {
    fn name(&self) -> &str {
        "NoOp"
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation("ControllerPlugin", "NoOp", Factory::controller_plugin(|_, _| Ok(Box::new(NoOpPlugin))))
}
