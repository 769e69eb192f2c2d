use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{act_target, common_params, neighbors, row_addr, row_count};
use crate::controller::{ControllerPlugin, IssuedCommand, Origin, PluginHost};
use crate::dramspec::CommandId;
use crate::memsys::StatsSheet;
use crate::registry::{BuildError, Catalog, Factory};

/// Probabilistic adjacent-row refresh: each demand ACT refreshes its
/// neighbors with probability `p`.
pub struct Para {
    p: f64,
    blast_radius: usize,
    rng: ChaCha8Rng,
    act: CommandId,
    rows: usize,
    triggers: u64,
    refreshes: u64,
}

impl Para {
    pub fn new(p: f64, blast_radius: usize, seed: u64, stream: u64, act: CommandId, rows: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Para {
            p,
            blast_radius,
            rng,
            act,
            rows,
            triggers: 0,
            refreshes: 0,
        }
    }

    pub fn triggers(&self) -> u64 {
        self.triggers
    }
}

impl ControllerPlugin for Para {
    fn name(&self) -> &str {
        "PARA"
    }

    fn on_command_issued(&mut self, ic: &IssuedCommand, host: &mut PluginHost<'_>) {
        if ic.cmd != self.act || ic.origin != Origin::Demand {
            return;
        }
        if !self.rng.gen_bool(self.p) {
            return;
        }
        self.triggers += 1;
        let (_, row) = act_target(host.tree(), ic);
        for v in neighbors(row, self.blast_radius, self.rows) {
            let addr = row_addr(host.spec(), &ic.addr, v);
            host.refresh_row(addr);
            self.refreshes += 1;
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
        "PARA",
        Factory::controller_plugin(|node, ctx| {
            let spec = ctx.dram(node)?;
            let p: f64 = node.param("p", 0.01)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(node.bad_param("p", "probability must lie in [0, 1]"));
            }
            // Accepted so threshold sweeps can treat every mitigation alike.
            let (_t_rh, blast_radius) = common_params(node)?;
            let seed: u64 = node.param("seed", ctx.seed)?;
            let act = spec
                .known()
                .act
                .ok_or_else(|| node.bad_param("impl", "device has no ACT command"))?;
            Ok(Box::new(Para::new(p, blast_radius, seed, ctx.channel as u64, act, row_count(&spec))))
        }),
    )
}
