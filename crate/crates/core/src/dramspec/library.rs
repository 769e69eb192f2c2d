//! Reusable command behaviors shared by every standard.
//!
//! Each behavior is defined exactly once as a `static` and standards bind a
//! reference to it, so two standards wiring the same behavior point at the
//! same object. Behaviors read the command encodings of whichever spec the
//! tree was built from.

use super::{Clk, CommandId, NodeRef, NodeState, NodeTree};
use crate::addr::AddrVec;

/// Pure state query: returns `cmd` when the node state already admits it,
/// otherwise the command that has to be issued first.
pub struct Prereq {
    pub name: &'static str,
    pub func: fn(&NodeTree, NodeRef, CommandId, &AddrVec) -> CommandId,
    /// Commands the behavior may return; checked when a spec is finalized.
    pub requires: &'static [&'static str],
}

/// State update applied when a command issues.
pub struct Action {
    pub name: &'static str,
    pub func: fn(&mut NodeTree, NodeRef, CommandId, &AddrVec, Clk),
}

impl std::fmt::Debug for Prereq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name)
    }
}

impl std::fmt::Debug for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name)
    }
}

pub static REQUIRE_ALL_BANKS_CLOSED: Prereq = Prereq {
    name: "require-all-banks-closed",
    func: require_all_banks_closed,
    requires: &["PREab"],
};

pub static REQUIRE_BANK_CLOSED: Prereq = Prereq {
    name: "require-bank-closed",
    func: require_bank_closed,
    requires: &["PRE"],
};

pub static REQUIRE_ROW_OPEN: Prereq = Prereq {
    name: "require-row-open",
    func: require_row_open,
    requires: &["ACT", "PRE"],
};

pub static REQUIRE_SAME_ROW_OR_PRECHARGE: Prereq = Prereq {
    name: "require-same-row-or-precharge",
    func: require_same_row_or_precharge,
    requires: &["PRE"],
};

pub static OPEN_ROW: Action = Action {
    name: "open-row",
    func: open_row,
};

pub static CLOSE_ROW: Action = Action {
    name: "close-row",
    func: close_row,
};

pub static CLOSE_ALL_ROWS: Action = Action {
    name: "close-all-rows",
    func: close_all_rows,
};

pub static CONSUME_COLUMN: Action = Action {
    name: "consume-column",
    func: consume_column,
};

pub fn prereqs() -> [&'static Prereq; 4] {
    [
        &REQUIRE_ALL_BANKS_CLOSED,
        &REQUIRE_BANK_CLOSED,
        &REQUIRE_ROW_OPEN,
        &REQUIRE_SAME_ROW_OR_PRECHARGE,
    ]
}

pub fn actions() -> [&'static Action; 4] {
    [&OPEN_ROW, &CLOSE_ROW, &CLOSE_ALL_ROWS, &CONSUME_COLUMN]
}

pub fn prereq_by_name(name: &str) -> Option<&'static Prereq> {
    prereqs().into_iter().find(|p| p.name == name)
}

pub fn action_by_name(name: &str) -> Option<&'static Action> {
    actions().into_iter().find(|a| a.name == name)
}

fn target_row(tree: &NodeTree, addr: &AddrVec) -> Option<u32> {
    tree.spec()
        .row_level()
        .and_then(|l| addr.get(l))
        .map(|r| r as u32)
}

fn require_all_banks_closed(tree: &NodeTree, node: NodeRef, cmd: CommandId, _addr: &AddrVec) -> CommandId {
    for bank in tree.banks_under(node) {
        if tree.state(bank) == NodeState::Closed {
            continue;
        } else {
            return tree.spec().known().preab.expect("validated at finalize");
        }
    }
    cmd
}

fn require_bank_closed(tree: &NodeTree, node: NodeRef, cmd: CommandId, _addr: &AddrVec) -> CommandId {
    match tree.state(node) {
        NodeState::Opened(_) => tree.spec().known().pre.expect("validated at finalize"),
        _ => cmd,
    }
}

fn require_row_open(tree: &NodeTree, node: NodeRef, cmd: CommandId, addr: &AddrVec) -> CommandId {
    match tree.state(node) {
        NodeState::Closed => tree.spec().known().act.expect("validated at finalize"),
        _ => require_same_row_or_precharge(tree, node, cmd, addr),
    }
}

fn require_same_row_or_precharge(tree: &NodeTree, node: NodeRef, cmd: CommandId, addr: &AddrVec) -> CommandId {
    match tree.state(node) {
        NodeState::Opened(row) if Some(row) != target_row(tree, addr) => {
            tree.spec().known().pre.expect("validated at finalize")
        }
        _ => cmd,
    }
}

fn open_row(tree: &mut NodeTree, node: NodeRef, _cmd: CommandId, addr: &AddrVec, _clk: Clk) {
    let row = target_row(tree, addr).expect("row-opening command needs a row index");
    tree.set_state(node, NodeState::Opened(row));
    tree.reset_column_count(node);
}

fn close_row(tree: &mut NodeTree, node: NodeRef, _cmd: CommandId, _addr: &AddrVec, _clk: Clk) {
    tree.set_state(node, NodeState::Closed);
}

fn close_all_rows(tree: &mut NodeTree, node: NodeRef, _cmd: CommandId, _addr: &AddrVec, _clk: Clk) {
    for bank in tree.banks_under(node) {
        tree.set_state(bank, NodeState::Closed);
    }
}

fn consume_column(tree: &mut NodeTree, node: NodeRef, _cmd: CommandId, _addr: &AddrVec, _clk: Clk) {
    tree.bump_column_count(node);
}
