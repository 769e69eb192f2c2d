use std::cmp::Reverse;

use crate::dramspec::{Clk, CommandId};
use crate::registry::{BuildError, Catalog, Factory};

/// One schedulable request as seen by a [`Scheduler`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub id: u64,
    pub arrive: Clk,
    /// The command the request needs next.
    pub cmd: CommandId,
    pub ready: bool,
    /// The next command is the request's own column command.
    pub row_hit: bool,
}

pub trait Scheduler: Send {
    fn name(&self) -> &'static str;
    /// Index of the best candidate, or `None` for an empty slice.
    fn select(&self, candidates: &[Candidate]) -> Option<usize>;
}

/// First-ready, row-hit-first, then oldest.
#[derive(Debug, Default, Clone, Copy)]
pub struct FrFcfs;

impl Scheduler for FrFcfs {
    fn name(&self) -> &'static str {
        "FRFCFS"
    }

    fn select(&self, candidates: &[Candidate]) -> Option<usize> {
        candidates
            .iter()
            .enumerate()
            .max_by_key(|(_, c)| (c.ready, c.row_hit, Reverse(c.arrive), Reverse(c.id)))
            .map(|(i, _)| i)
    }
}

/// First-ready, then oldest.
#[derive(Debug, Default, Clone, Copy)]
pub struct Fcfs;

impl Scheduler for Fcfs {
    fn name(&self) -> &'static str {
        "FCFS"
    }

    fn select(&self, candidates: &[Candidate]) -> Option<usize> {
        candidates
            .iter()
            .enumerate()
            .max_by_key(|(_, c)| (c.ready, Reverse(c.arrive), Reverse(c.id)))
            .map(|(i, _)| i)
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation("Scheduler", "FRFCFS", Factory::scheduler(|_, _| Ok(Box::new(FrFcfs))))?;
    catalog.register_implementation("Scheduler", "FCFS", Factory::scheduler(|_, _| Ok(Box::new(Fcfs))))?;
    Ok(())
}
