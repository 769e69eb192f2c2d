use std::fmt;
use std::sync::Arc;

use super::{Clk, CommandId, DeviceSpec, LevelId, SpecError};
use crate::addr::{AddrVec, MAX_LEVELS};

/// A node of one materialized level, by flat index within that level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeRef {
    pub level: LevelId,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeState {
    PoweredUp,
    Closed,
    Opened(u32),
}

/// Fixed-capacity history of issue cycles, most recent first.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Ring {
    buf: Vec<Clk>,
    head: usize,
    len: usize,
}

impl Ring {
    fn new(cap: usize) -> Self {
        Ring {
            buf: vec![0; cap],
            head: 0,
            len: 0,
        }
    }

    fn push(&mut self, clk: Clk) {
        let cap = self.buf.len();
        self.head = (self.head + 1) % cap;
        self.buf[self.head] = clk;
        self.len = (self.len + 1).min(cap);
    }

    /// `k = 0` is the most recent entry.
    fn nth_recent(&self, k: usize) -> Option<Clk> {
        let cap = self.buf.len();
        (k < self.len).then(|| self.buf[(self.head + cap - k) % cap])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LevelNodes {
    count: usize,
    next_allowed: Vec<Clk>,
    state: Vec<NodeState>,
    columns: Vec<u32>,
    ring_slot: Vec<Option<usize>>,
    slots: usize,
    rings: Vec<Ring>,
}

/// Runtime state of one channel: a node per materialized level with a
/// next-allowed-cycle entry per command and activation-window histories.
#[derive(Clone)]
pub struct NodeTree {
    spec: Arc<DeviceSpec>,
    channel: usize,
    ncmd: usize,
    levels: Vec<LevelNodes>,
}

impl PartialEq for NodeTree {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.spec, &other.spec) && self.channel == other.channel && self.levels == other.levels
    }
}

impl fmt::Debug for NodeTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NodeTree")
            .field("standard", &self.spec.standard())
            .field("channel", &self.channel)
            .finish_non_exhaustive()
    }
}

impl NodeTree {
    pub fn new(spec: Arc<DeviceSpec>, channel: usize) -> Self {
        let depth = spec.node_depth();
        let ncmd = spec.command_count();
        let mut levels = Vec::with_capacity(depth + 1);
        let mut count = 1usize;
        for l in 0..=depth {
            if l > 0 {
                count *= spec.fanout(l);
            }
            let mut ring_slot = vec![None; ncmd];
            let mut caps = Vec::new();
            for (c, slot) in ring_slot.iter_mut().enumerate() {
                let w = spec.max_window(l, c) as usize;
                if w > 1 {
                    *slot = Some(caps.len());
                    caps.push(w);
                }
            }
            let rings = (0..count).flat_map(|_| caps.iter().map(|&w| Ring::new(w))).collect();
            let initial = if l == depth {
                NodeState::Closed
            } else {
                NodeState::PoweredUp
            };
            levels.push(LevelNodes {
                count,
                next_allowed: vec![0; count * ncmd],
                state: vec![initial; count],
                columns: vec![0; count],
                ring_slot,
                slots: caps.len(),
                rings,
            });
        }
        NodeTree {
            spec,
            channel,
            ncmd,
            levels,
        }
    }

    pub fn spec(&self) -> &DeviceSpec {
        &self.spec
    }

    pub fn spec_arc(&self) -> &Arc<DeviceSpec> {
        &self.spec
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn node_count(&self, level: LevelId) -> usize {
        self.levels[level].count
    }

    fn path(&self, addr: &AddrVec, depth: LevelId) -> [usize; MAX_LEVELS] {
        debug_assert_eq!(addr.get(0), Some(self.channel), "address routed to the wrong channel");
        let mut path = [0usize; MAX_LEVELS];
        for l in 1..=depth {
            let i = addr.get(l).unwrap_or_else(|| panic!("address {addr} lacks level {l}"));
            debug_assert!(i < self.spec.fanout(l), "index {i} out of range at level {l}");
            path[l] = path[l - 1] * self.spec.fanout(l) + i;
        }
        path
    }

    /// Node at `level` on the path of `addr`.
    pub fn node(&self, level: LevelId, addr: &AddrVec) -> NodeRef {
        NodeRef {
            level,
            index: self.path(addr, level)[level],
        }
    }

    /// Flat index range of the descendants of `node` at `level`.
    fn descendants(&self, node: NodeRef, level: LevelId) -> std::ops::Range<usize> {
        let mut span = 1;
        for l in node.level + 1..=level {
            span *= self.spec.fanout(l);
        }
        node.index * span..(node.index + 1) * span
    }

    pub fn banks_under(&self, node: NodeRef) -> impl Iterator<Item = NodeRef> {
        let depth = self.spec.node_depth();
        self.descendants(node, depth)
            .map(move |index| NodeRef { level: depth, index })
    }

    pub fn state(&self, node: NodeRef) -> NodeState {
        self.levels[node.level].state[node.index]
    }

    pub fn set_state(&mut self, node: NodeRef, state: NodeState) {
        self.levels[node.level].state[node.index] = state;
    }

    /// Column commands served since the row in `node` was opened.
    pub fn column_count(&self, node: NodeRef) -> u32 {
        self.levels[node.level].columns[node.index]
    }

    pub fn reset_column_count(&mut self, node: NodeRef) {
        self.levels[node.level].columns[node.index] = 0;
    }

    pub fn bump_column_count(&mut self, node: NodeRef) {
        let c = &mut self.levels[node.level].columns[node.index];
        *c = c.saturating_add(1);
    }

    pub fn next_allowed(&self, node: NodeRef, cmd: CommandId) -> Clk {
        self.levels[node.level].next_allowed[node.index * self.ncmd + cmd]
    }

    /// True when every node from the channel down to the command's target
    /// level admits `cmd` at `clk`. Pure.
    pub fn check_ready(&self, cmd: CommandId, addr: &AddrVec, clk: Clk) -> bool {
        let target = self.spec.command(cmd).target;
        let path = self.path(addr, target);
        (0..=target).all(|l| self.levels[l].next_allowed[path[l] * self.ncmd + cmd] <= clk)
    }

    /// Earliest cycle at which `cmd` becomes ready given the current tables.
    pub fn ready_at(&self, cmd: CommandId, addr: &AddrVec) -> Clk {
        let target = self.spec.command(cmd).target;
        let path = self.path(addr, target);
        (0..=target)
            .map(|l| self.levels[l].next_allowed[path[l] * self.ncmd + cmd])
            .max()
            .unwrap_or(0)
    }

    fn prereq_once(&self, cmd: CommandId, addr: &AddrVec) -> CommandId {
        let target = self.spec.command(cmd).target;
        let path = self.path(addr, target);
        for (l, &index) in path.iter().enumerate().take(target + 1) {
            if let Some(p) = self.spec.prereq(l, cmd) {
                return (p.func)(self, NodeRef { level: l, index }, cmd, addr);
            }
        }
        cmd
    }

    /// The command to issue now on the way to `cmd`: `cmd` itself when the
    /// state admits it, otherwise the first command of its decode chain.
    /// Pure.
    pub fn prerequisite(&self, cmd: CommandId, addr: &AddrVec) -> Result<CommandId, SpecError> {
        let mut c = cmd;
        for _ in 0..=self.spec.state_count() {
            let p = self.prereq_once(c, addr);
            if p == c {
                return Ok(c);
            }
            c = p;
        }
        Err(SpecError::NoPathToCommand(self.spec.command(cmd).name.clone()))
    }

    fn raise(&mut self, level: LevelId, index: usize, cmd: CommandId, at: Clk) {
        let slot = &mut self.levels[level].next_allowed[index * self.ncmd + cmd];
        *slot = (*slot).max(at);
    }

    fn apply_timing(&mut self, spec: &DeviceSpec, level: LevelId, index: usize, cmd: CommandId, clk: Clk, on_path: bool) {
        let nodes = &mut self.levels[level];
        let ring = nodes.ring_slot[cmd].map(|slot| {
            let r = &mut nodes.rings[index * nodes.slots + slot];
            r.push(clk);
            index * nodes.slots + slot
        });
        for b in spec.bounds_after(level, cmd) {
            let at = if b.window == 1 {
                clk + b.latency
            } else {
                let ring = ring.expect("windowed constraint without history");
                match self.levels[level].rings[ring].nth_recent(b.window as usize - 1) {
                    Some(t) => t + b.latency,
                    None => continue,
                }
            };
            if b.sibling {
                if !on_path {
                    continue;
                }
                let fanout = spec.fanout(level);
                let first = index / fanout * fanout;
                for s in (first..first + fanout).filter(|&s| s != index) {
                    self.raise(level, s, b.next, at);
                }
            } else {
                self.raise(level, index, b.next, at);
            }
        }
    }

    /// Applies `cmd`: propagates its timing bounds along the address path
    /// (to siblings for sibling constraints, and to every descendant when
    /// the command's scope is above a constrained level), records window
    /// history and runs the bound actions.
    pub fn issue(&mut self, cmd: CommandId, addr: &AddrVec, clk: Clk) {
        debug_assert!(
            self.check_ready(cmd, addr, clk),
            "protocol violation: {} at {addr} issued at {clk} before it was ready",
            self.spec.command(cmd).name
        );
        let spec = Arc::clone(&self.spec);
        let target = spec.command(cmd).target;
        let path = self.path(addr, target);
        for (l, &index) in path.iter().enumerate().take(target + 1) {
            self.apply_timing(&spec, l, index, cmd, clk, true);
        }
        let scope_node = NodeRef {
            level: target,
            index: path[target],
        };
        for l in target + 1..=spec.node_depth() {
            for index in self.descendants(scope_node, l) {
                self.apply_timing(&spec, l, index, cmd, clk, false);
            }
        }
        for (l, &index) in path.iter().enumerate().take(target + 1) {
            for action in spec.actions(l, cmd) {
                (action.func)(self, NodeRef { level: l, index }, cmd, addr, clk);
            }
        }
    }
}
