//! RowHammer mitigations and the command-trace recorder, all as controller
//! plugins.
//!
//! Preventive refreshes are injected as ACT+PRE maintenance requests to the
//! victim row; no command is added to the device spec.

mod graphene;
mod ideal;
mod para;
mod recorder;

use serde::{Deserialize, Serialize};

pub use graphene::{Graphene, MisraGries};
pub use ideal::Ideal;
pub use para::Para;
pub use recorder::{CommandTraceRecorder, SharedSink, TraceSink, TRACE_LEVELS};

use crate::addr::AddrVec;
use crate::controller::IssuedCommand;
use crate::dramspec::{DeviceSpec, NodeTree};
use crate::registry::{BuildError, Catalog, ConfigNode};

/// A parameter that is either derived from the device (`auto`) or given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Value(T),
    Auto(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

impl<T: Copy> AutoOr<T> {
    pub fn auto() -> Self {
        AutoOr::Auto(AutoKeyword::Auto)
    }

    pub fn resolve(self, derived: impl FnOnce() -> T) -> T {
        match self {
            AutoOr::Value(v) => v,
            AutoOr::Auto(_) => derived(),
        }
    }
}

/// Rows within `radius` of `row`, clamped to `0..rows`, excluding `row`.
pub fn neighbors(row: usize, radius: usize, rows: usize) -> impl Iterator<Item = usize> {
    let lo = row.saturating_sub(radius);
    let hi = (row + radius).min(rows.saturating_sub(1));
    (lo..=hi).filter(move |&r| r != row)
}

/// Bank and row of an issued ACT.
pub(crate) fn act_target(tree: &NodeTree, ic: &IssuedCommand) -> (usize, usize) {
    let spec = tree.spec();
    let bank = tree.node(spec.node_depth(), &ic.addr).index;
    let row = spec
        .row_level()
        .and_then(|l| ic.addr.get(l))
        .expect("ACT carries a row");
    (bank, row)
}

/// `addr` with its row replaced and everything below cleared.
pub(crate) fn row_addr(spec: &DeviceSpec, addr: &AddrVec, row: usize) -> AddrVec {
    let l = spec.row_level().expect("spec has rows");
    let mut v = addr.truncated(l);
    v.set(l, row);
    v
}

pub(crate) fn row_count(spec: &DeviceSpec) -> usize {
    spec.row_level().map(|l| spec.fanout(l)).unwrap_or(1)
}

pub(crate) fn common_params(node: &mut ConfigNode) -> Result<(u64, usize), BuildError> {
    let t_rh: u64 = node.param("t_rh", 1000)?;
    let blast_radius: usize = node.param("blast_radius", 1)?;
    if t_rh < 1 {
        return Err(node.bad_param("t_rh", "must be >= 1"));
    }
    if blast_radius < 1 {
        return Err(node.bad_param("blast_radius", "must be >= 1"));
    }
    Ok((t_rh, blast_radius))
}

pub fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    para::register(catalog)?;
    graphene::register(catalog)?;
    ideal::register(catalog)?;
    recorder::register(catalog)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbors_are_clamped() {
        assert_eq!(neighbors(100, 1, 1000).collect::<Vec<_>>(), vec![99, 101]);
        assert_eq!(neighbors(0, 2, 1000).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(neighbors(999, 1, 1000).collect::<Vec<_>>(), vec![998]);
    }

    #[test]
    fn auto_or_value_round_trips() {
        let a: AutoOr<u64> = serde_yaml::from_str("auto").unwrap();
        assert_eq!(a, AutoOr::auto());
        let v: AutoOr<u64> = serde_yaml::from_str("42").unwrap();
        assert_eq!(v.resolve(|| 0), 42);
        assert_eq!(serde_yaml::to_string(&a).unwrap().trim(), "auto");
        assert!(serde_yaml::from_str::<AutoOr<u64>>("sometimes").is_err());
    }
}
