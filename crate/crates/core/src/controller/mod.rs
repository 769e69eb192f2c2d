//! Per-channel memory controller and its swappable parts.

mod generic;
mod plugin;
mod refresh;
mod rowpolicy;
mod scheduler;

use crate::addr::AddrVec;
use crate::dramspec::{Clk, CommandId, NodeTree};
use crate::memsys::{SimError, StatsSheet};
use crate::registry::{BuildError, Catalog};

pub use generic::{ControllerParams, GenericController};
pub use plugin::{ControllerPlugin, Injection, IssuedCommand, NoOpPlugin, PluginHost};
pub use refresh::{AllBankRefresh, NoRefresh, RefreshManager};
pub use rowpolicy::{ClosedRowPolicy, OpenRowPolicy, RowPolicy};
pub use scheduler::{Candidate, Fcfs, FrFcfs, Scheduler};

/// Who caused a request or command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Demand,
    Refresh,
    /// Index of the injecting plugin in the controller's plugin list.
    Plugin(usize),
}

/// Commands a maintenance request issues in order, each through its own
/// decode chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Maintenance {
    pub steps: Vec<CommandId>,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequestKind {
    Read,
    Write,
    Maintenance(Maintenance),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOutcome {
    Hit,
    Miss,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub id: u64,
    pub kind: RequestKind,
    pub raw_addr: u64,
    pub addr: AddrVec,
    pub arrive: Clk,
    pub depart: Option<Clk>,
    pub source: Origin,
    /// Row-buffer outcome, fixed by the first command issued on its behalf.
    pub outcome: Option<RowOutcome>,
}

impl Request {
    pub fn demand(id: u64, write: bool, raw_addr: u64, addr: AddrVec, arrive: Clk) -> Self {
        Request {
            id,
            kind: if write { RequestKind::Write } else { RequestKind::Read },
            raw_addr,
            addr,
            arrive,
            depart: None,
            source: Origin::Demand,
            outcome: None,
        }
    }

    pub fn is_read(&self) -> bool {
        matches!(self.kind, RequestKind::Read)
    }

    pub fn is_write(&self) -> bool {
        matches!(self.kind, RequestKind::Write)
    }
}

pub trait Controller: Send {
    fn channel(&self) -> usize;
    /// Places a demand request in its queue; false when the queue is full.
    fn enqueue(&mut self, req: Request, clk: Clk) -> bool;
    /// Advances one cycle and returns the demand requests completed in it.
    fn tick(&mut self, clk: Clk) -> Result<Vec<Request>, SimError>;
    /// Requests accepted but not yet completed, maintenance included.
    fn outstanding(&self) -> usize;
    fn tree(&self) -> &NodeTree;
    fn stats(&self, out: &mut StatsSheet);
    fn finalize(&mut self) -> Result<(), SimError>;
}

pub fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    generic::register(catalog)?;
    scheduler::register(catalog)?;
    refresh::register(catalog)?;
    rowpolicy::register(catalog)?;
    plugin::register(catalog)?;
    Ok(())
}
