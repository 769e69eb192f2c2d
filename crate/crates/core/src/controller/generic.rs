use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use super::{
    Candidate, Controller, ControllerPlugin, Injection, IssuedCommand, Maintenance, Origin, PluginHost, RefreshManager,
    Request, RequestKind, RowOutcome, RowPolicy, Scheduler,
};
use crate::addr::AddrVec;
use crate::dramspec::{Clk, CommandId, DeviceSpec, LevelId, NodeState, NodeTree, RowEffect};
use crate::memsys::{SimError, StatsSheet};
use crate::registry::{BuildError, Catalog, Factory};

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    pub read_queue: usize,
    pub write_queue: usize,
    pub priority_queue: usize,
    pub write_high_watermark: f64,
    pub write_low_watermark: f64,
    pub forward_latency: Clk,
    pub watchdog: Clk,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            read_queue: 32,
            write_queue: 32,
            priority_queue: 32,
            write_high_watermark: 0.75,
            write_low_watermark: 0.25,
            forward_latency: 1,
            watchdog: 1_000_000,
        }
    }
}

#[derive(Debug)]
struct InFlight(Request);

impl InFlight {
    fn key(&self) -> (Clk, u64) {
        (self.0.depart.unwrap_or(0), self.0.id)
    }
}

impl PartialEq for InFlight {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for InFlight {}

impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InFlight {
    // Min-heap on (depart, id).
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Queue {
    Read,
    Write,
    Priority,
}

#[derive(Debug, Default, Clone)]
struct Counters {
    commands: Vec<u64>,
    demand_commands: Vec<u64>,
    reads: u64,
    writes: u64,
    forwarded: u64,
    read_latency_sum: u64,
    hits: u64,
    misses: u64,
    conflicts: u64,
    maintenance_done: u64,
    injected_refresh: u64,
    injected_plugin: u64,
}

/// FR-FCFS-style controller hosting a scheduler, refresh manager, row
/// policy and an ordered plugin list.
pub struct GenericController {
    channel: usize,
    spec: Arc<DeviceSpec>,
    tree: NodeTree,
    scheduler: Box<dyn Scheduler>,
    refresh: Box<dyn RefreshManager>,
    row_policy: Box<dyn RowPolicy>,
    plugins: Vec<Box<dyn ControllerPlugin>>,
    params: ControllerParams,
    high: usize,
    low: usize,
    read_q: Vec<Request>,
    write_q: Vec<Request>,
    prio_q: Vec<Request>,
    outbox: Vec<Injection>,
    inflight: BinaryHeap<InFlight>,
    draining: bool,
    read_cmd: CommandId,
    write_cmd: CommandId,
    act: CommandId,
    pre: CommandId,
    read_latency: Clk,
    write_latency: Clk,
    next_maintenance_id: u64,
    idle_until: Clk,
    dirty: bool,
    scratch: Vec<Candidate>,
    counters: Counters,
}

impl GenericController {
    pub fn new(
        spec: Arc<DeviceSpec>,
        channel: usize,
        params: ControllerParams,
        scheduler: Box<dyn Scheduler>,
        refresh: Box<dyn RefreshManager>,
        row_policy: Box<dyn RowPolicy>,
        plugins: Vec<Box<dyn ControllerPlugin>>,
    ) -> Result<Self, crate::dramspec::SpecError> {
        let t = |s| spec.timing_value(s);
        let read_latency = t("nCL")? + t("nBL")?;
        let write_latency = t("nCWL")? + t("nBL")?;
        let known = spec.known();
        let missing = |n: &str| crate::dramspec::SpecError::UnknownName {
            kind: "command",
            name: n.to_string(),
        };
        let high = ((params.write_queue as f64) * params.write_high_watermark).ceil() as usize;
        let low = ((params.write_queue as f64) * params.write_low_watermark).floor() as usize;
        Ok(GenericController {
            channel,
            tree: NodeTree::new(Arc::clone(&spec), channel),
            read_cmd: spec.resolve_command("RD")?,
            write_cmd: spec.resolve_command("WR")?,
            act: known.act.ok_or_else(|| missing("ACT"))?,
            pre: known.pre.ok_or_else(|| missing("PRE"))?,
            counters: Counters {
                commands: vec![0; spec.command_count()],
                demand_commands: vec![0; spec.command_count()],
                ..Counters::default()
            },
            spec,
            scheduler,
            refresh,
            row_policy,
            plugins,
            high: high.max(1),
            low: low.min(high.saturating_sub(1)),
            params,
            read_q: Vec::new(),
            write_q: Vec::new(),
            prio_q: Vec::new(),
            outbox: Vec::new(),
            inflight: BinaryHeap::new(),
            draining: false,
            read_latency,
            write_latency,
            next_maintenance_id: 1 << 63,
            idle_until: 0,
            dirty: true,
            scratch: Vec::new(),
        })
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn queue_lengths(&self) -> (usize, usize, usize) {
        (self.read_q.len(), self.write_q.len(), self.prio_q.len() + self.outbox.len())
    }

    pub fn is_draining(&self) -> bool {
        self.draining
    }

    fn goal(&self, req: &Request) -> CommandId {
        match &req.kind {
            RequestKind::Read => self.read_cmd,
            RequestKind::Write => self.write_cmd,
            RequestKind::Maintenance(m) => m.steps[m.next],
        }
    }

    fn maintenance_scope(&self, req: &Request) -> LevelId {
        match &req.kind {
            RequestKind::Maintenance(m) => m
                .steps
                .iter()
                .map(|&c| self.spec.command(c).target)
                .min()
                .unwrap_or(0),
            _ => self.spec.node_depth(),
        }
    }

    fn covers(m: &AddrVec, scope: LevelId, addr: &AddrVec) -> bool {
        (0..=scope).all(|l| m[l] == addr[l])
    }

    /// Demand traffic to a node with pending maintenance waits for it.
    fn blocked_by_maintenance(&self, addr: &AddrVec) -> bool {
        let depth = self.spec.node_depth();
        let pending = self.prio_q.iter().map(|r| (&r.addr, self.maintenance_scope(r)));
        let waiting = self.outbox.iter().map(|i| {
            let scope = i.steps.iter().map(|&c| self.spec.command(c).target).min().unwrap_or(0);
            (&i.addr, scope)
        });
        pending
            .chain(waiting)
            .any(|(m, scope)| Self::covers(m, scope.min(depth), addr))
    }

    /// Maintenance requests on overlapping nodes run in arrival order.
    fn maintenance_blocked(&self, j: usize) -> bool {
        let me = &self.prio_q[j];
        let my_scope = self.maintenance_scope(me);
        self.prio_q[..j].iter().any(|older| {
            let scope = my_scope.min(self.maintenance_scope(older));
            Self::covers(&older.addr, scope, &me.addr)
        })
    }

    fn evaluate(&self, req: &Request) -> Result<(CommandId, Clk, bool), SimError> {
        let goal = self.goal(req);
        let cmd = self.tree.prerequisite(goal, &req.addr)?;
        let ready_at = self.tree.ready_at(cmd, &req.addr);
        let kind = self.spec.command(goal).kind;
        Ok((cmd, ready_at, cmd == goal && (kind.read || kind.write)))
    }

    /// Moves injected maintenance into the bounded priority queue.
    fn admit(&mut self, clk: Clk) {
        if self.outbox.is_empty() {
            return;
        }
        let room = self.params.priority_queue.saturating_sub(self.prio_q.len());
        let n = room.min(self.outbox.len());
        for inj in self.outbox.drain(..n) {
            match inj.origin {
                Origin::Refresh => self.counters.injected_refresh += 1,
                _ => self.counters.injected_plugin += 1,
            }
            let id = self.next_maintenance_id;
            self.next_maintenance_id += 1;
            self.prio_q.push(Request {
                id,
                kind: RequestKind::Maintenance(Maintenance {
                    steps: inj.steps,
                    next: 0,
                }),
                raw_addr: 0,
                addr: inj.addr,
                arrive: clk,
                depart: None,
                source: inj.origin,
                outcome: None,
            });
        }
        self.skip_satisfied_steps(clk);
        self.dirty = true;
    }

    /// Drops close steps whose bank is already closed.
    fn skip_satisfied_steps(&mut self, clk: Clk) {
        let mut j = 0;
        while j < self.prio_q.len() {
            let addr = self.prio_q[j].addr;
            let done = {
                let spec = &self.spec;
                let tree = &self.tree;
                let RequestKind::Maintenance(m) = &mut self.prio_q[j].kind else {
                    unreachable!("priority queue holds maintenance only")
                };
                while m.next < m.steps.len() {
                    let c = spec.command(m.steps[m.next]);
                    let closed = c.kind.effect == RowEffect::Close
                        && tree.state(tree.node(c.target, &addr)) == NodeState::Closed;
                    if !closed {
                        break;
                    }
                    m.next += 1;
                }
                m.next == m.steps.len()
            };
            if done {
                let mut r = self.prio_q.remove(j);
                r.depart = Some(clk);
                self.counters.maintenance_done += 1;
            } else {
                j += 1;
            }
        }
    }

    fn update_drain(&mut self) {
        let n = self.write_q.len();
        if n >= self.high {
            self.draining = true;
        } else if n <= self.low {
            self.draining = false;
        }
    }

    fn demand_candidates(&mut self, q: Queue, clk: Clk, wake: &mut Clk) -> Result<Option<(usize, CommandId)>, SimError> {
        let mut cands = std::mem::take(&mut self.scratch);
        cands.clear();
        let mut index = Vec::new();
        let queue = if q == Queue::Read { &self.read_q } else { &self.write_q };
        let any_maintenance = !self.prio_q.is_empty() || !self.outbox.is_empty();
        for (i, req) in queue.iter().enumerate() {
            // A request that already opened its row may still finish with its
            // column command; anything that would activate waits.
            let blocked = any_maintenance && self.blocked_by_maintenance(&req.addr);
            if blocked && req.outcome.is_none() {
                continue;
            }
            let (cmd, ready_at, row_hit) = self.evaluate(req)?;
            if blocked && !row_hit {
                continue;
            }
            if ready_at > clk {
                *wake = (*wake).min(ready_at);
            }
            cands.push(Candidate {
                id: req.id,
                arrive: req.arrive,
                cmd,
                ready: ready_at <= clk,
                row_hit,
            });
            index.push(i);
        }
        let pick = self
            .scheduler
            .select(&cands)
            .filter(|&k| cands[k].ready)
            .map(|k| (index[k], cands[k].cmd));
        self.scratch = cands;
        Ok(pick)
    }

    fn schedule(&mut self, clk: Clk) -> Result<Option<(Queue, usize, CommandId)>, SimError> {
        let mut wake = Clk::MAX;
        let mut best: Option<((Clk, u64), usize, CommandId)> = None;
        for j in 0..self.prio_q.len() {
            if self.maintenance_blocked(j) {
                continue;
            }
            let req = &self.prio_q[j];
            let (cmd, ready_at, _) = self.evaluate(req)?;
            if ready_at > clk {
                wake = wake.min(ready_at);
                continue;
            }
            let key = (req.arrive, req.id);
            if best.is_none_or(|(k, _, _)| key < k) {
                best = Some((key, j, cmd));
            }
        }
        if let Some((_, j, cmd)) = best {
            return Ok(Some((Queue::Priority, j, cmd)));
        }
        let order = if self.draining || self.read_q.is_empty() {
            [Queue::Write, Queue::Read]
        } else {
            [Queue::Read, Queue::Write]
        };
        for q in order {
            if let Some((i, cmd)) = self.demand_candidates(q, clk, &mut wake)? {
                return Ok(Some((q, i, cmd)));
            }
        }
        self.idle_until = wake;
        Ok(None)
    }

    fn same_row_queued(&self, q: Queue, idx: usize, addr: &AddrVec) -> bool {
        let row = self.spec.row_level().unwrap_or(self.spec.node_depth());
        let same = |r: &Request| (0..=row).all(|l| r.addr[l] == addr[l]);
        let others = |queue: &[Request], me: Option<usize>| {
            queue
                .iter()
                .enumerate()
                .any(|(i, r)| Some(i) != me && same(r))
        };
        others(&self.read_q, (q == Queue::Read).then_some(idx)) || others(&self.write_q, (q == Queue::Write).then_some(idx))
    }

    fn issue(&mut self, q: Queue, idx: usize, mut cmd: CommandId, clk: Clk) -> Result<(), SimError> {
        let req = match q {
            Queue::Read => &self.read_q[idx],
            Queue::Write => &self.write_q[idx],
            Queue::Priority => &self.prio_q[idx],
        };
        let (addr, origin, goal) = (req.addr, req.source, self.goal(req));
        let is_final = cmd == goal;
        if is_final && q != Queue::Priority {
            let more = self.same_row_queued(q, idx, &addr);
            let alt = self.row_policy.column_command(cmd, more);
            if alt != cmd && self.tree.check_ready(alt, &addr, clk) {
                cmd = alt;
            }
        }
        if !self.tree.check_ready(cmd, &addr, clk) {
            return Err(SimError::Protocol(format!(
                "{} at {addr} scheduled at {clk} before it was ready",
                self.spec.command(cmd).name
            )));
        }
        self.tree.issue(cmd, &addr, clk);
        self.counters.commands[cmd] += 1;
        if origin == Origin::Demand {
            self.counters.demand_commands[cmd] += 1;
        }

        match q {
            Queue::Read | Queue::Write => {
                let queue = if q == Queue::Read { &mut self.read_q } else { &mut self.write_q };
                if queue[idx].outcome.is_none() {
                    let outcome = if cmd == self.act {
                        self.counters.misses += 1;
                        RowOutcome::Miss
                    } else if cmd == self.pre {
                        self.counters.conflicts += 1;
                        RowOutcome::Conflict
                    } else {
                        self.counters.hits += 1;
                        RowOutcome::Hit
                    };
                    queue[idx].outcome = Some(outcome);
                }
                if is_final {
                    let mut r = queue.remove(idx);
                    let latency = if q == Queue::Read { self.read_latency } else { self.write_latency };
                    r.depart = Some(clk + latency);
                    self.inflight.push(InFlight(r));
                    self.update_drain();
                }
            }
            Queue::Priority => {
                if is_final {
                    let RequestKind::Maintenance(m) = &mut self.prio_q[idx].kind else {
                        unreachable!("priority queue holds maintenance only")
                    };
                    m.next += 1;
                }
            }
        }
        self.skip_satisfied_steps(clk);

        let issued = IssuedCommand {
            cmd,
            addr: addr.truncated(self.spec.command(cmd).scope),
            clk,
            channel: self.channel,
            origin,
        };
        for (i, p) in self.plugins.iter_mut().enumerate() {
            let mut host = PluginHost::new(&self.tree, &mut self.outbox, i);
            p.on_command_issued(&issued, &mut host);
        }
        self.dirty = true;
        Ok(())
    }

    fn check_watchdog(&self, clk: Clk) -> Result<(), SimError> {
        let oldest = self
            .read_q
            .iter()
            .chain(&self.write_q)
            .chain(&self.prio_q)
            .min_by_key(|r| r.arrive);
        match oldest {
            Some(r) if clk - r.arrive > self.params.watchdog => Err(SimError::Watchdog {
                channel: self.channel,
                request: r.id,
                arrive: r.arrive,
                clk,
            }),
            _ => Ok(()),
        }
    }
}

impl Controller for GenericController {
    fn channel(&self) -> usize {
        self.channel
    }

    fn enqueue(&mut self, req: Request, clk: Clk) -> bool {
        match req.kind {
            RequestKind::Read => {
                let line = req.raw_addr >> 6;
                if self.write_q.iter().any(|w| w.raw_addr >> 6 == line) {
                    let mut r = req;
                    r.depart = Some(clk + self.params.forward_latency);
                    self.counters.forwarded += 1;
                    self.inflight.push(InFlight(r));
                    return true;
                }
                if self.read_q.len() >= self.params.read_queue {
                    return false;
                }
                self.read_q.push(req);
            }
            RequestKind::Write => {
                if self.write_q.len() >= self.params.write_queue {
                    return false;
                }
                self.write_q.push(req);
                self.update_drain();
            }
            RequestKind::Maintenance(_) => return false,
        }
        self.dirty = true;
        true
    }

    fn tick(&mut self, clk: Clk) -> Result<Vec<Request>, SimError> {
        self.refresh.tick(clk, &mut self.outbox);
        for (i, p) in self.plugins.iter_mut().enumerate() {
            let mut host = PluginHost::new(&self.tree, &mut self.outbox, i);
            p.on_tick(clk, &mut host);
        }
        self.admit(clk);

        if self.dirty || clk >= self.idle_until {
            self.dirty = false;
            if let Some((q, idx, cmd)) = self.schedule(clk)? {
                self.issue(q, idx, cmd, clk)?;
            }
            // Injections made while issuing enter the queue next cycle.
            if !self.outbox.is_empty() {
                self.dirty = true;
            }
        }

        let mut done = Vec::new();
        while self.inflight.peek().is_some_and(|f| f.key().0 <= clk) {
            let InFlight(r) = self.inflight.pop().expect("peeked");
            if r.is_read() {
                self.counters.reads += 1;
                self.counters.read_latency_sum += clk - r.arrive;
            } else {
                self.counters.writes += 1;
            }
            done.push(r);
        }
        if clk.is_multiple_of(1024) {
            self.check_watchdog(clk)?;
        }
        Ok(done)
    }

    fn outstanding(&self) -> usize {
        self.read_q.len() + self.write_q.len() + self.inflight.len()
    }

    fn tree(&self) -> &NodeTree {
        &self.tree
    }

    fn stats(&self, out: &mut StatsSheet) {
        let c = &self.counters;
        out.add("requests.read", c.reads);
        out.add("requests.write", c.writes);
        out.add("requests.forwarded", c.forwarded);
        out.add("latency.read_sum", c.read_latency_sum);
        out.add("row.hits", c.hits);
        out.add("row.misses", c.misses);
        out.add("row.conflicts", c.conflicts);
        out.add("maintenance.completed", c.maintenance_done);
        out.add("maintenance.injected.refresh", c.injected_refresh);
        out.add("maintenance.injected.plugins", c.injected_plugin);
        for (i, &n) in c.commands.iter().enumerate() {
            out.add(&format!("commands.{}", self.spec.command(i).name), n);
        }
        for (i, &n) in c.demand_commands.iter().enumerate() {
            out.add(&format!("commands.demand.{}", self.spec.command(i).name), n);
        }
        for p in &self.plugins {
            p.stats(out, &format!("plugin.{}", p.name()));
        }
    }

    fn finalize(&mut self) -> Result<(), SimError> {
        let mut first = Ok(());
        for p in &mut self.plugins {
            let r = p.finalize();
            if first.is_ok() {
                first = r;
            }
        }
        first
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation(
        "Controller",
        "GenericController",
        Factory::controller(|node, ctx| {
            let spec = ctx.dram(node)?;
            let d = ControllerParams::default();
            let params = ControllerParams {
                read_queue: node.param("read_queue", d.read_queue)?,
                write_queue: node.param("write_queue", d.write_queue)?,
                priority_queue: node.param("priority_queue", d.priority_queue)?,
                write_high_watermark: node.param("write_high_watermark", d.write_high_watermark)?,
                write_low_watermark: node.param("write_low_watermark", d.write_low_watermark)?,
                forward_latency: node.param("forward_latency", d.forward_latency)?,
                watchdog: node.param("watchdog", d.watchdog)?,
            };
            if params.read_queue == 0 || params.write_queue == 0 || params.priority_queue == 0 {
                return Err(node.bad_param("read_queue", "queue capacities must be positive"));
            }
            let (lo, hi) = (params.write_low_watermark, params.write_high_watermark);
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
                return Err(node.bad_param(
                    "write_high_watermark",
                    "watermarks must satisfy 0 <= low < high <= 1",
                ));
            }
            let catalog = ctx.catalog;
            let mut s = node.component("Scheduler")?;
            let scheduler = catalog.build_scheduler(&mut s, ctx)?;
            node.attach("Scheduler", s)?;
            let mut r = node.component("RefreshManager")?;
            let refresh = catalog.build_refresh_manager(&mut r, ctx)?;
            node.attach("RefreshManager", r)?;
            let mut p = node.component("RowPolicy")?;
            let row_policy = catalog.build_row_policy(&mut p, ctx)?;
            node.attach("RowPolicy", p)?;
            let mut plugin_nodes = node.sequence("plugins")?;
            let mut plugins = Vec::with_capacity(plugin_nodes.len());
            for pn in &mut plugin_nodes {
                plugins.push(catalog.build_controller_plugin(pn, ctx)?);
            }
            node.attach_sequence("plugins", plugin_nodes)?;
            let c = GenericController::new(spec, ctx.channel, params, scheduler, refresh, row_policy, plugins)
                .map_err(|e| node.bad_param("impl", e.to_string()))?;
            Ok(Box::new(c))
        }),
    )
}
