use super::{Injection, Origin};
use crate::addr::AddrVec;
use crate::dramspec::{Clk, CommandId, DeviceSpec, SpecError};
use crate::registry::{BuildError, Catalog, Factory};

pub trait RefreshManager: Send {
    fn name(&self) -> &'static str;
    /// Called first thing every controller cycle; pushes maintenance
    /// requests to `out`.
    fn tick(&mut self, clk: Clk, out: &mut Vec<Injection>);
}

/// One REFab per rank every nREFI cycles, never postponed or coalesced.
#[derive(Debug, Clone)]
pub struct AllBankRefresh {
    channel: usize,
    ranks: usize,
    levels: usize,
    refab: CommandId,
    interval: Clk,
}

impl AllBankRefresh {
    pub fn new(spec: &DeviceSpec, channel: usize) -> Result<Self, SpecError> {
        let rank = spec.resolve_level("rank")?;
        let interval = spec.timing_value("nREFI")?;
        if interval == 0 {
            return Err(SpecError::Invalid("nREFI must be positive".into()));
        }
        Ok(AllBankRefresh {
            channel,
            ranks: spec.fanout(rank),
            levels: spec.level_count(),
            refab: spec.resolve_command("REFab")?,
            interval,
        })
    }
}

impl RefreshManager for AllBankRefresh {
    fn name(&self) -> &'static str {
        "AllBankRefresh"
    }

    fn tick(&mut self, clk: Clk, out: &mut Vec<Injection>) {
        if clk == 0 || !clk.is_multiple_of(self.interval) {
            return;
        }
        for rank in 0..self.ranks {
            let mut addr = AddrVec::unset(self.levels);
            addr.set(0, self.channel);
            addr.set(1, rank);
            out.push(Injection {
                steps: vec![self.refab],
                addr,
                origin: Origin::Refresh,
            });
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoRefresh;

impl RefreshManager for NoRefresh {
    fn name(&self) -> &'static str {
        "NoRefresh"
    }

    fn tick(&mut self, _clk: Clk, _out: &mut Vec<Injection>) {}
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation(
        "RefreshManager",
        "AllBankRefresh",
        Factory::refresh_manager(|node, ctx| {
            let spec = ctx.dram(node)?;
            let r = AllBankRefresh::new(&spec, ctx.channel).map_err(|e| node.bad_param("impl", e.to_string()))?;
            Ok(Box::new(r))
        }),
    )?;
    catalog.register_implementation("RefreshManager", "NoRefresh", Factory::refresh_manager(|_, _| Ok(Box::new(NoRefresh))))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standards::build_default;

    #[test]
    fn one_refab_per_rank_at_each_interval() {
        let spec = build_default("DDR4").unwrap();
        let refi = spec.timing_value("nREFI").unwrap();
        let mut r = AllBankRefresh::new(&spec, 0).unwrap();
        let mut out = Vec::new();
        for clk in 0..refi {
            r.tick(clk, &mut out);
        }
        assert!(out.is_empty());
        r.tick(refi, &mut out);
        assert_eq!(out.len(), spec.fanout(1));
        assert_eq!(out[1].addr.get(1), Some(1));
        r.tick(2 * refi, &mut out);
        assert_eq!(out.len(), 2 * spec.fanout(1));
    }
}
