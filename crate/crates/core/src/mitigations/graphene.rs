use std::collections::{BTreeSet, HashMap};

use super::{act_target, common_params, neighbors, row_addr, row_count, AutoOr};
use crate::controller::{ControllerPlugin, IssuedCommand, Origin, PluginHost};
use crate::dramspec::{Clk, CommandId};
use crate::memsys::StatsSheet;
use crate::registry::{BuildError, Catalog, Factory};

/// Misra-Gries frequent-items table in the spillover form: every tracked
/// estimate is at least `spillover`, and an entry sitting exactly at
/// `spillover` may be evicted by a new item.
///
/// Estimates never undercount, and overcount by at most `spillover`, which
/// stays at or below `N / (capacity + 1)` after N observations.
#[derive(Debug, Clone)]
pub struct MisraGries {
    capacity: usize,
    counts: HashMap<u32, u64>,
    by_count: BTreeSet<(u64, u32)>,
    spillover: u64,
}

impl MisraGries {
    pub fn new(capacity: usize) -> Self {
        MisraGries {
            capacity,
            counts: HashMap::new(),
            by_count: BTreeSet::new(),
            spillover: 0,
        }
    }

    fn set(&mut self, key: u32, count: u64) {
        if let Some(old) = self.counts.insert(key, count) {
            self.by_count.remove(&(old, key));
        }
        self.by_count.insert((count, key));
    }

    /// Records one occurrence; returns the new estimate, or `None` when the
    /// key was not admitted.
    pub fn observe(&mut self, key: u32) -> Option<u64> {
        if let Some(&c) = self.counts.get(&key) {
            self.set(key, c + 1);
            return Some(c + 1);
        }
        if self.counts.len() < self.capacity {
            self.set(key, self.spillover + 1);
            return Some(self.spillover + 1);
        }
        match self.by_count.first().copied() {
            Some((c, victim)) if c == self.spillover => {
                self.by_count.remove(&(c, victim));
                self.counts.remove(&victim);
                self.set(key, self.spillover + 1);
                Some(self.spillover + 1)
            }
            _ => {
                self.spillover += 1;
                None
            }
        }
    }

    /// Drops `key` back to the floor so it may be evicted again.
    pub fn reset_key(&mut self, key: u32) {
        if self.counts.contains_key(&key) {
            self.set(key, self.spillover);
        }
    }

    pub fn estimate(&self, key: u32) -> Option<u64> {
        self.counts.get(&key).copied()
    }

    pub fn spillover(&self) -> u64 {
        self.spillover
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn clear(&mut self) {
        self.counts.clear();
        self.by_count.clear();
        self.spillover = 0;
    }
}

/// Per-bank Misra-Gries tracking of demand activations; a row whose
/// estimate reaches `ceil(t_rh / 2)` gets its neighbors refreshed.
pub struct Graphene {
    threshold: u64,
    blast_radius: usize,
    entries: usize,
    reset_window: Clk,
    rows: usize,
    act: CommandId,
    tables: Vec<MisraGries>,
    triggers: u64,
    refreshes: u64,
    resets: u64,
}

impl Graphene {
    pub fn new(t_rh: u64, blast_radius: usize, entries: usize, reset_window: Clk, banks: usize, rows: usize, act: CommandId) -> Self {
        Graphene {
            threshold: t_rh.div_ceil(2),
            blast_radius,
            entries,
            reset_window,
            rows,
            act,
            tables: (0..banks).map(|_| MisraGries::new(entries)).collect(),
            triggers: 0,
            refreshes: 0,
            resets: 0,
        }
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn table(&self, bank: usize) -> &MisraGries {
        &self.tables[bank]
    }

    /// Smallest table that can track every row able to reach the threshold
    /// within one reset window.
    pub fn default_entries(reset_window: Clk, n_rc: Clk, threshold: u64) -> usize {
        let max_acts = reset_window / n_rc.max(1);
        max_acts.div_ceil(threshold.max(1)).max(1) as usize
    }
}

impl ControllerPlugin for Graphene {
    fn name(&self) -> &str {
        "Graphene"
    }

    fn on_tick(&mut self, clk: Clk, _host: &mut PluginHost<'_>) {
        if clk > 0 && clk.is_multiple_of(self.reset_window) {
            self.tables.iter_mut().for_each(MisraGries::clear);
            self.resets += 1;
        }
    }

    fn on_command_issued(&mut self, ic: &IssuedCommand, host: &mut PluginHost<'_>) {
        if ic.cmd != self.act || ic.origin != Origin::Demand {
            return;
        }
        let (bank, row) = act_target(host.tree(), ic);
        let table = &mut self.tables[bank];
        if table.observe(row as u32).is_some_and(|c| c >= self.threshold) {
            table.reset_key(row as u32);
            self.triggers += 1;
            for v in neighbors(row, self.blast_radius, self.rows) {
                host.refresh_row(row_addr(host.spec(), &ic.addr, v));
                self.refreshes += 1;
            }
        }
    }

    fn stats(&self, out: &mut StatsSheet, prefix: &str) {
        out.add(&format!("{prefix}.triggers"), self.triggers);
        out.add(&format!("{prefix}.preventive_refreshes"), self.refreshes);
        out.add(&format!("{prefix}.table_resets"), self.resets);
        out.add(&format!("{prefix}.table_entries"), self.entries as u64);
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation(
        "ControllerPlugin",
        "Graphene",
        Factory::controller_plugin(|node, ctx| {
            let spec = ctx.dram(node)?;
            let (t_rh, blast_radius) = common_params(node)?;
            let entries: AutoOr<usize> = node.param("table_entries", AutoOr::auto())?;
            let window: AutoOr<Clk> = node.param("reset_window", AutoOr::auto())?;
            let t = |s: &str| spec.timing_value(s).map_err(|e| node.bad_param("impl", e.to_string()));
            let (n_refi, n_rc) = (t("nREFI")?, t("nRC")?);
            let reset_window = window.resolve(|| n_refi * 8192);
            if reset_window == 0 {
                return Err(node.bad_param("reset_window", "must be positive"));
            }
            let entries = entries.resolve(|| Graphene::default_entries(reset_window, n_rc, t_rh.div_ceil(2)));
            if entries == 0 {
                return Err(node.bad_param("table_entries", "must be positive"));
            }
            let act = spec
                .known()
                .act
                .ok_or_else(|| node.bad_param("impl", "device has no ACT command"))?;
            let banks = (1..=spec.node_depth()).map(|l| spec.fanout(l)).product();
            Ok(Box::new(Graphene::new(
                t_rh,
                blast_radius,
                entries,
                reset_window,
                banks,
                row_count(&spec),
                act,
            )))
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_over_capacity_plus_one_never_grows() {
        let mut t = MisraGries::new(4);
        for i in 0..1000u32 {
            t.observe(i % 5);
        }
        assert!(t.len() <= 4);
        assert!(t.spillover() <= 1000 / 5);
        for k in 0..5 {
            if let Some(e) = t.estimate(k) {
                assert!(e - t.spillover() <= 1, "estimate {e} spill {}", t.spillover());
            }
        }
    }

    #[test]
    fn reset_returns_entry_to_the_floor() {
        let mut t = MisraGries::new(2);
        for _ in 0..5 {
            t.observe(7);
        }
        t.reset_key(7);
        assert_eq!(t.estimate(7), Some(0));
        t.clear();
        assert!(t.is_empty());
        assert_eq!(t.spillover(), 0);
    }

    #[test]
    fn default_sizing() {
        assert_eq!(Graphene::default_entries(7400, 74, 10), 10);
        assert_eq!(Graphene::default_entries(7401, 74, 10), 10);
        assert_eq!(Graphene::default_entries(7474, 74, 10), 11);
    }
}
