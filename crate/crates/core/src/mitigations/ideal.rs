use std::collections::{BTreeMap, HashMap};

use super::{act_target, common_params, neighbors, row_addr, row_count};
use crate::controller::{ControllerPlugin, IssuedCommand, PluginHost};
use crate::dramspec::CommandId;
use crate::memsys::StatsSheet;
use crate::registry::{BuildError, Catalog, Factory};

/// Refresh commands needed to cover every row once.
pub const REFRESH_GROUPS: usize = 8192;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct RowState {
    /// Activations of rows within the blast radius since this row was last
    /// activated or refreshed.
    exposure: u64,
    /// Neighbor refreshes already queued that will raise `exposure`.
    reserved: u64,
    /// A refresh of this row is queued.
    pending: bool,
}

impl RowState {
    fn idle(&self) -> bool {
        self.exposure == 0 && self.reserved == 0 && !self.pending
    }
}

/// Exact per-row victim tracking. A row is refreshed before the activations
/// of its neighbors, including those already queued, could reach `t_rh`.
/// Refreshes to one bank must execute in the order they were injected.
pub struct Ideal {
    t_rh: u64,
    blast_radius: usize,
    rows: usize,
    act: CommandId,
    refab: Option<CommandId>,
    banks: Vec<BTreeMap<usize, RowState>>,
    refresh_counter: HashMap<usize, usize>,
    worklist: Vec<usize>,
    triggers: u64,
    refreshes: u64,
}

impl Ideal {
    pub fn new(t_rh: u64, blast_radius: usize, banks: usize, rows: usize, act: CommandId, refab: Option<CommandId>) -> Self {
        Ideal {
            t_rh,
            blast_radius,
            rows,
            act,
            refab,
            banks: vec![BTreeMap::new(); banks],
            refresh_counter: HashMap::new(),
            worklist: Vec::new(),
            triggers: 0,
            refreshes: 0,
        }
    }

    /// Current exposure of `row` in `bank`.
    pub fn exposure(&self, bank: usize, row: usize) -> u64 {
        self.banks[bank].get(&row).map_or(0, |s| s.exposure)
    }

    pub fn preventive_refreshes(&self) -> u64 {
        self.refreshes
    }

    fn on_act(&mut self, ic: &IssuedCommand, host: &mut PluginHost<'_>) {
        let (bank, row) = act_target(host.tree(), ic);
        let own = ic.origin == host.origin();
        let radius = self.blast_radius;
        let rows = self.rows;
        let table = &mut self.banks[bank];
        let mut was_pending = false;
        if let Some(s) = table.get_mut(&row) {
            s.exposure = 0;
            if own && s.pending {
                s.pending = false;
                was_pending = true;
            }
            if s.idle() {
                table.remove(&row);
            }
        }
        for v in neighbors(row, radius, rows) {
            let s = table.entry(v).or_default();
            s.exposure += 1;
            if was_pending {
                s.reserved -= 1;
            }
            self.worklist.push(v);
        }
        self.drain(bank, ic, host);
    }

    fn drain(&mut self, bank: usize, ic: &IssuedCommand, host: &mut PluginHost<'_>) {
        let limit = self.t_rh - 1;
        while let Some(v) = self.worklist.pop() {
            let table = &mut self.banks[bank];
            let Some(s) = table.get_mut(&v) else { continue };
            if s.pending || s.exposure + s.reserved < limit {
                continue;
            }
            s.pending = true;
            self.triggers += 1;
            self.refreshes += 1;
            host.refresh_row(row_addr(host.spec(), &ic.addr, v));
            for n in neighbors(v, self.blast_radius, self.rows) {
                table.entry(n).or_default().reserved += 1;
                self.worklist.push(n);
            }
        }
    }

    fn on_refab(&mut self, ic: &IssuedCommand, host: &mut PluginHost<'_>) {
        let tree = host.tree();
        let scope = tree.spec().command(ic.cmd).scope;
        let node = tree.node(scope, &ic.addr);
        let k = self.refresh_counter.entry(node.index).or_insert(0);
        let per_group = self.rows.div_ceil(REFRESH_GROUPS);
        let (lo, hi) = (*k * per_group, ((*k + 1) * per_group).min(self.rows));
        *k = (*k + 1) % REFRESH_GROUPS;
        for b in tree.banks_under(node) {
            let table = &mut self.banks[b.index];
            table.retain(|&r, s| {
                if (lo..hi).contains(&r) {
                    s.exposure = 0;
                }
                !s.idle()
            });
        }
    }
}

impl ControllerPlugin for Ideal {
    fn name(&self) -> &str {
        "Ideal"
    }

    fn on_command_issued(&mut self, ic: &IssuedCommand, host: &mut PluginHost<'_>) {
        if ic.cmd == self.act {
            self.on_act(ic, host);
        } else if Some(ic.cmd) == self.refab {
            self.on_refab(ic, host);
        }
    }

    fn stats(&self, out: &mut StatsSheet, prefix: &str) {
        out.add(&format!("{prefix}.triggers"), self.triggers);
        out.add(&format!("{prefix}.preventive_refreshes"), self.refreshes);
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation(
        "ControllerPlugin",
        "Ideal",
        Factory::controller_plugin(|node, ctx| {
            let spec = ctx.dram(node)?;
            let (t_rh, blast_radius) = common_params(node)?;
            if t_rh < 2 {
                return Err(node.bad_param("t_rh", "must be >= 2"));
            }
            let act = spec
                .known()
                .act
                .ok_or_else(|| node.bad_param("impl", "device has no ACT command"))?;
            let refab = spec.resolve_command("REFab").ok();
            let banks = (1..=spec.node_depth()).map(|l| spec.fanout(l)).product();
            Ok(Box::new(Ideal::new(t_rh, blast_radius, banks, row_count(&spec), act, refab)))
        }),
    )
}
