use std::sync::Arc;

use super::{Access, AddrMapper, SimError, StatsSheet};
use crate::controller::{Controller, Request};
use crate::dramspec::{Clk, DeviceSpec};
use crate::registry::{BuildError, Catalog, Factory};

pub trait MemorySystem: Send {
    fn spec(&self) -> &Arc<DeviceSpec>;
    fn mapper(&self) -> &dyn AddrMapper;
    /// Maps and enqueues an access; `Ok(false)` when the target queue is
    /// full.
    fn send(&mut self, access: Access, clk: Clk) -> Result<bool, SimError>;
    fn tick(&mut self, clk: Clk) -> Result<Vec<Request>, SimError>;
    fn outstanding(&self) -> usize;
    fn controllers(&self) -> &[Box<dyn Controller>];
    fn stats(&self, out: &mut StatsSheet);
    fn finalize(&mut self) -> Result<(), SimError>;
}

/// One controller per channel behind a shared address mapper.
pub struct GenericDramSystem {
    spec: Arc<DeviceSpec>,
    mapper: Box<dyn AddrMapper>,
    controllers: Vec<Box<dyn Controller>>,
    next_id: u64,
}

impl GenericDramSystem {
    pub fn new(spec: Arc<DeviceSpec>, mapper: Box<dyn AddrMapper>, controllers: Vec<Box<dyn Controller>>) -> Self {
        GenericDramSystem {
            spec,
            mapper,
            controllers,
            next_id: 0,
        }
    }
}

impl MemorySystem for GenericDramSystem {
    fn spec(&self) -> &Arc<DeviceSpec> {
        &self.spec
    }

    fn mapper(&self) -> &dyn AddrMapper {
        self.mapper.as_ref()
    }

    fn send(&mut self, access: Access, clk: Clk) -> Result<bool, SimError> {
        let addr = self.mapper.map(access.addr)?;
        let ch = addr.get(0).expect("mapper sets the channel");
        let req = Request::demand(self.next_id, access.write, access.addr, addr, clk);
        let accepted = self.controllers[ch].enqueue(req, clk);
        if accepted {
            self.next_id += 1;
        }
        Ok(accepted)
    }

    fn tick(&mut self, clk: Clk) -> Result<Vec<Request>, SimError> {
        let mut done = Vec::new();
        for c in &mut self.controllers {
            done.extend(c.tick(clk)?);
        }
        Ok(done)
    }

    fn outstanding(&self) -> usize {
        self.controllers.iter().map(|c| c.outstanding()).sum()
    }

    fn controllers(&self) -> &[Box<dyn Controller>] {
        &self.controllers
    }

    fn stats(&self, out: &mut StatsSheet) {
        out.add("requests.accepted", self.next_id);
        for c in &self.controllers {
            c.stats(out);
        }
    }

    fn finalize(&mut self) -> Result<(), SimError> {
        let mut first = Ok(());
        for c in &mut self.controllers {
            let r = c.finalize();
            if first.is_ok() {
                first = r;
            }
        }
        first
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation(
        "MemorySystem",
        "GenericDRAMSystem",
        Factory::memory_system(|node, ctx| {
            let catalog = ctx.catalog;
            let mut dram_node = node.component("DRAM")?;
            let mut mapper_node = node.component("AddrMapper")?;
            let mut ctrl_node = node.component("Controller")?;
            let spec = catalog.build_dram(&mut dram_node, ctx)?;
            node.attach("DRAM", dram_node)?;
            ctx.dram = Some(Arc::clone(&spec));
            let mapper = catalog.build_addr_mapper(&mut mapper_node, ctx)?;
            node.attach("AddrMapper", mapper_node)?;
            let mut controllers = Vec::new();
            for ch in 0..spec.fanout(0) {
                ctx.channel = ch;
                controllers.push(catalog.build_controller(&mut ctrl_node, ctx)?);
            }
            node.attach("Controller", ctrl_node)?;
            Ok(Box::new(GenericDramSystem::new(spec, mapper, controllers)))
        }),
    )
}
