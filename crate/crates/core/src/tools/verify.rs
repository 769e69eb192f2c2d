use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::cmdtrace::{CommandRecord, TraceError};
use crate::dramspec::{DeviceSpec, RowEffect};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    Timing {
        prev: String,
        prev_clk: u64,
        constraint: String,
        required: u64,
        actual: u64,
    },
    State {
        expected: String,
        actual: String,
    },
    /// Unknown command, bad address or out-of-order cycle.
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub line: u64,
    pub clk: u64,
    pub command: String,
    pub addr: Vec<i64>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {} clk {} {} {:?}: ", self.line, self.clk, self.command, self.addr)?;
        match &self.kind {
            ViolationKind::Timing {
                prev,
                prev_clk,
                constraint,
                required,
                actual,
            } => write!(
                f,
                "timing: {actual} cycles after {prev}@{prev_clk}, {constraint} requires {required}"
            ),
            ViolationKind::State { expected, actual } => write!(f, "state: expected {expected}, found {actual}"),
            ViolationKind::Malformed(m) => write!(f, "malformed: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BankState {
    Closed,
    Open(i64),
}

impl fmt::Display for BankState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BankState::Closed => write!(f, "Closed"),
            BankState::Open(r) => write!(f, "Opened({r})"),
        }
    }
}

struct Rule {
    id: usize,
    level: usize,
    latency: u64,
    window: u32,
    sibling: bool,
}

#[derive(Clone)]
struct Past {
    clk: u64,
    cmd: usize,
    addr: Vec<i64>,
}

/// Replays a command trace against a device spec: per-bank state legality
/// plus every pairwise timing constraint over a bounded history.
///
/// Only the spec's declared data is consulted; the replay keeps its own
/// state and scans the history directly.
pub struct Verifier<'a> {
    spec: &'a DeviceSpec,
    by_name: HashMap<&'a str, usize>,
    /// `[prev][next]` to the rules relating them.
    rules: Vec<Vec<Vec<Rule>>>,
    labels: Vec<String>,
    lookback: u64,
    counts: Vec<u32>,
    history: Vec<VecDeque<Past>>,
    banks: Vec<Vec<BankState>>,
    bank_fanouts: Vec<usize>,
    last_clk: Option<u64>,
    records: u64,
    violations: Vec<Violation>,
}

impl<'a> Verifier<'a> {
    pub fn new(spec: &'a DeviceSpec) -> Self {
        let ncmd = spec.command_count();
        let mut rules: Vec<Vec<Vec<Rule>>> = (0..ncmd).map(|_| (0..ncmd).map(|_| Vec::new()).collect()).collect();
        let mut labels = Vec::new();
        let mut lookback = 1;
        for (id, c) in spec.constraints().iter().enumerate() {
            labels.push(format!("{} ({} @ {})", c.label, c.latency, spec.levels()[c.level].name));
            lookback = lookback.max(c.latency);
            for &p in &c.preceding {
                for &n in &c.following {
                    rules[p][n].push(Rule {
                        id,
                        level: c.level,
                        latency: c.latency,
                        window: c.window,
                        sibling: c.sibling,
                    });
                }
            }
        }
        let depth = spec.node_depth();
        let bank_fanouts: Vec<usize> = (1..=depth).map(|l| spec.fanout(l)).collect();
        let per_channel: usize = bank_fanouts.iter().product();
        let channels = spec.fanout(0);
        Verifier {
            spec,
            by_name: spec.commands().iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect(),
            rules,
            labels,
            lookback,
            counts: vec![0; spec.constraints().len()],
            history: vec![VecDeque::new(); channels],
            banks: vec![vec![BankState::Closed; per_channel]; channels],
            bank_fanouts,
            last_clk: None,
            records: 0,
            violations: Vec::new(),
        }
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn into_violations(self) -> Vec<Violation> {
        self.violations
    }

    fn flag(&mut self, rec: &CommandRecord, kind: ViolationKind) {
        self.violations.push(Violation {
            line: rec.line,
            clk: rec.clk,
            command: rec.cmd.clone(),
            addr: rec.addr.clone(),
            kind,
        });
    }

    pub fn check(&mut self, rec: &CommandRecord) {
        self.records += 1;
        let Some(&cmd) = self.by_name.get(rec.cmd.as_str()) else {
            self.flag(rec, ViolationKind::Malformed(format!("unknown command '{}'", rec.cmd)));
            return;
        };
        if let Err(m) = self.check_address(cmd, &rec.addr) {
            self.flag(rec, ViolationKind::Malformed(m));
            return;
        }
        if self.last_clk.is_some_and(|c| rec.clk < c) {
            self.flag(rec, ViolationKind::Malformed("cycle goes backwards".into()));
            return;
        }
        self.last_clk = Some(rec.clk);
        self.check_timing(cmd, rec);
        self.check_state(cmd, rec);
        let ch = rec.addr[0] as usize;
        let hist = &mut self.history[ch];
        hist.push_back(Past {
            clk: rec.clk,
            cmd,
            addr: rec.addr.clone(),
        });
        while hist.front().is_some_and(|p| rec.clk - p.clk >= self.lookback) {
            hist.pop_front();
        }
    }

    fn check_address(&self, cmd: usize, addr: &[i64]) -> Result<(), String> {
        let levels = self.spec.levels();
        if addr.len() != levels.len() {
            return Err(format!("expected {} address fields", levels.len()));
        }
        let scope = self.spec.command(cmd).scope;
        for (l, (&a, lv)) in addr.iter().zip(levels).enumerate() {
            if l <= scope {
                if a < 0 || a as usize >= lv.fanout {
                    return Err(format!("{} index {a} outside 0..{}", lv.name, lv.fanout));
                }
            } else if a != -1 {
                return Err(format!("{} must be -1 below the command scope", lv.name));
            }
        }
        Ok(())
    }

    fn check_timing(&mut self, cmd: usize, rec: &CommandRecord) {
        let ch = rec.addr[0] as usize;
        self.counts.fill(0);
        // (constraint, history index, required); `usize::MAX` marks a
        // second command in the same cycle.
        let mut offenders: Vec<(usize, usize, u64)> = Vec::new();
        let mut note = |id: usize, i: usize, required: u64| match offenders.iter_mut().find(|o| o.0 == id) {
            Some(o) => *o = (id, i, required),
            None => offenders.push((id, i, required)),
        };
        let hist = &self.history[ch];
        for (i, p) in hist.iter().enumerate().rev() {
            let gap = rec.clk - p.clk;
            if gap == 0 {
                note(usize::MAX, i, 1);
            }
            for r in &self.rules[p.cmd][cmd] {
                if !related(r, &p.addr, &rec.addr) {
                    continue;
                }
                let n = &mut self.counts[r.id];
                *n += 1;
                let counted = r.window == 1 || *n == r.window;
                if counted && gap < r.latency {
                    note(r.id, i, r.latency);
                }
            }
        }
        offenders.sort_unstable();
        for (id, i, required) in offenders {
            let p = &self.history[ch][i];
            let constraint = if id == usize::MAX {
                "one command per channel per cycle".to_string()
            } else {
                self.labels[id].clone()
            };
            let kind = ViolationKind::Timing {
                prev: self.spec.command(p.cmd).name.clone(),
                prev_clk: p.clk,
                constraint,
                required,
                actual: rec.clk - p.clk,
            };
            self.flag(rec, kind);
        }
    }

    fn banks_under(&self, addr: &[i64], scope: usize) -> std::ops::Range<usize> {
        let mut lo = 0;
        let mut span = 1;
        for (i, &f) in self.bank_fanouts.iter().enumerate() {
            let l = i + 1;
            lo *= f;
            if l <= scope {
                lo += addr[l] as usize;
            } else {
                span *= f;
            }
        }
        lo..lo + span
    }

    fn check_state(&mut self, cmd: usize, rec: &CommandRecord) {
        let def = self.spec.command(cmd);
        let kind = def.kind;
        let ch = rec.addr[0] as usize;
        let range = self.banks_under(&rec.addr, def.scope);
        let row = self.spec.row_level().map(|l| rec.addr[l]).unwrap_or(-1);
        let mut problems = Vec::new();
        {
            let banks = &mut self.banks[ch][range.clone()];
            if kind.refresh {
                if let Some(b) = banks.iter().find(|b| **b != BankState::Closed) {
                    problems.push(("all banks Closed".to_string(), b.to_string()));
                }
            }
            if kind.read || kind.write {
                let b = banks[0];
                if b != BankState::Open(row) {
                    problems.push((BankState::Open(row).to_string(), b.to_string()));
                }
            }
            match kind.effect {
                RowEffect::Open => {
                    if banks[0] != BankState::Closed {
                        problems.push(("Closed".to_string(), banks[0].to_string()));
                    }
                    banks[0] = BankState::Open(row);
                }
                RowEffect::Close | RowEffect::CloseAll => banks.fill(BankState::Closed),
                RowEffect::None => {}
            }
        }
        for (expected, actual) in problems {
            self.flag(rec, ViolationKind::State { expected, actual });
        }
    }
}

/// Whether a bound at `r.level` links a command at `prev` to one at `next`.
/// `-1` marks a level below a command's scope and matches any index.
fn related(r: &Rule, prev: &[i64], next: &[i64]) -> bool {
    let same = |l: usize| prev[l] < 0 || next[l] < 0 || prev[l] == next[l];
    if r.sibling {
        (0..r.level).all(same) && prev[r.level] >= 0 && next[r.level] >= 0 && prev[r.level] != next[r.level]
    } else {
        (0..=r.level).all(same)
    }
}

/// Verifies a whole trace; parse errors abort.
pub fn verify_records<I>(spec: &DeviceSpec, records: I) -> Result<(u64, Vec<Violation>), TraceError>
where
    I: IntoIterator<Item = Result<CommandRecord, TraceError>>,
{
    let mut v = Verifier::new(spec);
    for r in records {
        v.check(&r?);
    }
    Ok((v.records(), v.into_violations()))
}
