//! Declarative DRAM device specifications.
//!
//! A [`SpecDef`] names the organization levels, commands, timing symbols and
//! permutation timing constraints of one DRAM standard, and binds
//! prerequisite/action behaviors from the shared [`library`]. Finalizing it
//! resolves every name to an integer once and compiles the lookup tables
//! used by [`NodeTree`] on the hot path; no strings are touched while
//! ticking.

pub mod library;
pub mod text;
mod tree;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

pub use library::{Action, Prereq};
pub use tree::{NodeRef, NodeState, NodeTree};

pub type Clk = u64;
pub type LevelId = usize;
pub type CommandId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("unknown {kind} '{name}' (component is incompatible with this DRAM specification)")]
    UnknownName { kind: &'static str, name: String },
    #[error("duplicate {kind} '{name}'")]
    Duplicate { kind: &'static str, name: String },
    #[error("invalid specification: {0}")]
    Invalid(String),
    #[error("bad timing expression '{expr}': {reason}")]
    BadExpression { expr: String, reason: String },
    #[error("no decode path reaches command '{0}'")]
    NoPathToCommand(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// One level of the organization hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelDef {
    pub name: String,
    pub fanout: usize,
    /// Materialized levels get runtime nodes; the rest (rows, columns) are
    /// capacities whose state lives in the deepest materialized node.
    pub materialized: bool,
}

impl LevelDef {
    pub fn node(name: &str, fanout: usize) -> Self {
        LevelDef {
            name: name.to_string(),
            fanout,
            materialized: true,
        }
    }

    pub fn capacity(name: &str, fanout: usize) -> Self {
        LevelDef {
            name: name.to_string(),
            fanout,
            materialized: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowEffect {
    None,
    Open,
    Close,
    CloseAll,
}

impl RowEffect {
    pub fn keyword(self) -> &'static str {
        match self {
            RowEffect::None => "none",
            RowEffect::Open => "open",
            RowEffect::Close => "close",
            RowEffect::CloseAll => "close-all",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "none" => RowEffect::None,
            "open" => RowEffect::Open,
            "close" => RowEffect::Close,
            "close-all" => RowEffect::CloseAll,
            _ => return None,
        })
    }
}

/// Command kind flags. The row effect is a single enum so a command can
/// never both open and close.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommandKind {
    pub effect: RowEffect,
    pub refresh: bool,
    pub read: bool,
    pub write: bool,
}

impl CommandKind {
    pub const fn plain(effect: RowEffect) -> Self {
        CommandKind {
            effect,
            refresh: false,
            read: false,
            write: false,
        }
    }

    pub const fn read(effect: RowEffect) -> Self {
        CommandKind {
            read: true,
            ..CommandKind::plain(effect)
        }
    }

    pub const fn write(effect: RowEffect) -> Self {
        CommandKind {
            write: true,
            ..CommandKind::plain(effect)
        }
    }

    pub const fn refresh() -> Self {
        CommandKind {
            refresh: true,
            ..CommandKind::plain(RowEffect::None)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandSrc {
    pub name: String,
    pub scope: String,
    pub kind: CommandKind,
}

/// A resolved command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandDef {
    pub name: String,
    pub scope: LevelId,
    /// Deepest materialized level on the scope path; readiness and
    /// prerequisites are evaluated down to here.
    pub target: LevelId,
    pub kind: CommandKind,
}

/// Permutation timing constraint as written in a standard definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintDef {
    pub level: String,
    pub preceding: Vec<String>,
    pub following: Vec<String>,
    /// Sum/difference of timing symbols and integer literals.
    pub latency: String,
    pub window: u32,
    pub sibling: bool,
}

impl ConstraintDef {
    pub fn new(level: &str, preceding: &[&str], following: &[&str], latency: &str) -> Self {
        ConstraintDef {
            level: level.to_string(),
            preceding: preceding.iter().map(|s| s.to_string()).collect(),
            following: following.iter().map(|s| s.to_string()).collect(),
            latency: latency.to_string(),
            window: 1,
            sibling: false,
        }
    }

    pub fn window(mut self, window: u32) -> Self {
        self.window = window;
        self
    }

    pub fn sibling(mut self) -> Self {
        self.sibling = true;
        self
    }
}

/// A constraint with every name resolved and its latency evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingConstraint {
    pub level: LevelId,
    pub preceding: Vec<CommandId>,
    pub following: Vec<CommandId>,
    pub latency: Clk,
    pub window: u32,
    pub sibling: bool,
    /// The latency expression the constraint was written with.
    pub label: String,
}

/// One pairwise bound produced by expanding a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound {
    pub latency: Clk,
    pub window: u32,
    pub sibling: bool,
}

/// `(level, preceding, following)` to every bound stated for that pair.
pub type PairwiseTable = BTreeMap<(LevelId, CommandId, CommandId), Vec<Bound>>;

/// Cross-product expansion of permutation constraints. Overlapping
/// constraints on the same pair are all retained.
pub fn expand_timing(constraints: &[TimingConstraint]) -> PairwiseTable {
    let mut table = PairwiseTable::new();
    for c in constraints {
        for &p in &c.preceding {
            for &f in &c.following {
                table.entry((c.level, p, f)).or_default().push(Bound {
                    latency: c.latency,
                    window: c.window,
                    sibling: c.sibling,
                });
            }
        }
    }
    table
}

/// Bound applied when `cmd` is issued, keyed by the following command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CompiledBound {
    pub next: CommandId,
    pub latency: Clk,
    pub window: u32,
    pub sibling: bool,
}

/// A behavior bound to a `(level, command)` pair.
pub struct Binding<T: 'static> {
    pub level: String,
    pub command: String,
    pub behavior: &'static T,
}

impl<T: 'static> Binding<T> {
    pub fn new(level: &str, command: &str, behavior: &'static T) -> Self {
        Binding {
            level: level.to_string(),
            command: command.to_string(),
            behavior,
        }
    }
}

impl<T: 'static> Clone for Binding<T> {
    fn clone(&self) -> Self {
        Binding {
            level: self.level.clone(),
            command: self.command.clone(),
            behavior: self.behavior,
        }
    }
}

impl<T: 'static> fmt::Debug for Binding<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}@{:p}", self.level, self.command, self.behavior)
    }
}

impl<T: 'static> PartialEq for Binding<T> {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && self.command == other.command
            && std::ptr::eq(self.behavior, other.behavior)
    }
}

/// Declarative definition of one DRAM standard.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecDef {
    pub standard: String,
    pub levels: Vec<LevelDef>,
    pub commands: Vec<CommandSrc>,
    pub timing_values: BTreeMap<String, i64>,
    pub constraints: Vec<ConstraintDef>,
    pub prereqs: Vec<Binding<Prereq>>,
    pub actions: Vec<Binding<Action>>,
}

/// Commands the behavior library refers to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KnownCommands {
    pub act: Option<CommandId>,
    pub pre: Option<CommandId>,
    pub preab: Option<CommandId>,
}

/// A finalized, immutable device specification.
#[derive(Debug)]
pub struct DeviceSpec {
    def: SpecDef,
    levels: Vec<LevelDef>,
    commands: Vec<CommandDef>,
    timing_values: BTreeMap<String, Clk>,
    constraints: Vec<TimingConstraint>,
    node_depth: LevelId,
    timing: Vec<Vec<Vec<CompiledBound>>>,
    prereqs: Vec<Vec<Option<&'static Prereq>>>,
    actions: Vec<Vec<Vec<&'static Action>>>,
    max_window: Vec<Vec<u32>>,
    known: KnownCommands,
}

fn lookup<'a>(names: impl Iterator<Item = &'a str>, kind: &'static str, name: &str) -> Result<usize, SpecError> {
    names
        .enumerate()
        .find(|(_, n)| *n == name)
        .map(|(i, _)| i)
        .ok_or_else(|| SpecError::UnknownName {
            kind,
            name: name.to_string(),
        })
}

/// Evaluates `a + b - 3`-style latency expressions against a symbol table.
pub fn eval_latency(expr: &str, values: &BTreeMap<String, i64>) -> Result<i64, SpecError> {
    let bad = |reason: &str| SpecError::BadExpression {
        expr: expr.to_string(),
        reason: reason.to_string(),
    };
    let mut total = 0i64;
    let mut sign = Some(1i64);
    let mut chars = expr.chars().peekable();
    let mut seen_term = false;
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '+' || c == '-' {
            if sign.is_some() {
                return Err(bad("operator without operand"));
            }
            sign = Some(if c == '+' { 1 } else { -1 });
            chars.next();
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let s = sign.take().ok_or_else(|| bad("missing operator"))?;
            let mut tok = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    tok.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            let v = if tok.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                tok.parse::<i64>().map_err(|_| bad("bad integer literal"))?
            } else {
                *values.get(&tok).ok_or_else(|| SpecError::UnknownName {
                    kind: "timing symbol",
                    name: tok.clone(),
                })?
            };
            total += s * v;
            seen_term = true;
        } else {
            return Err(bad("unexpected character"));
        }
    }
    if !seen_term || sign.is_some() {
        return Err(bad("incomplete expression"));
    }
    Ok(total)
}

impl SpecDef {
    pub fn finalize(self) -> Result<DeviceSpec, SpecError> {
        // Levels.
        if self.levels.is_empty() || self.levels.len() > crate::addr::MAX_LEVELS {
            return Err(SpecError::Invalid(format!(
                "hierarchy must have 1..={} levels",
                crate::addr::MAX_LEVELS
            )));
        }
        let mut names = HashSet::new();
        for l in &self.levels {
            if !names.insert(l.name.as_str()) {
                return Err(SpecError::Duplicate {
                    kind: "level",
                    name: l.name.clone(),
                });
            }
            if l.fanout == 0 {
                return Err(SpecError::Invalid(format!("level '{}' has zero fanout", l.name)));
            }
        }
        let node_depth = self
            .levels
            .iter()
            .position(|l| !l.materialized)
            .unwrap_or(self.levels.len())
            .checked_sub(1)
            .ok_or_else(|| SpecError::Invalid("the top level must be materialized".into()))?;
        if self.levels[node_depth + 1..].iter().any(|l| l.materialized) {
            return Err(SpecError::Invalid(
                "materialized levels must precede capacity levels".into(),
            ));
        }
        let level_id = |name: &str| lookup(self.levels.iter().map(|l| l.name.as_str()), "level", name);

        // Commands.
        let mut commands = Vec::with_capacity(self.commands.len());
        let mut cnames = HashSet::new();
        for c in &self.commands {
            if !cnames.insert(c.name.as_str()) {
                return Err(SpecError::Duplicate {
                    kind: "command",
                    name: c.name.clone(),
                });
            }
            let scope = level_id(&c.scope)?;
            commands.push(CommandDef {
                name: c.name.clone(),
                scope,
                target: scope.min(node_depth),
                kind: c.kind,
            });
        }
        let cmd_id = |name: &str| lookup(commands.iter().map(|c| c.name.as_str()), "command", name);

        // Timing values.
        let mut timing_values = BTreeMap::new();
        for (k, &v) in &self.timing_values {
            if v < 0 {
                return Err(SpecError::Invalid(format!("timing value {k} is negative")));
            }
            timing_values.insert(k.clone(), v as Clk);
        }

        // Constraints.
        let nlev = self.levels.len();
        let ncmd = commands.len();
        let mut constraints = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let level = level_id(&c.level)?;
            if level > node_depth {
                return Err(SpecError::Invalid(format!(
                    "constraint at capacity level '{}' ({})",
                    c.level, c.latency
                )));
            }
            if c.window == 0 {
                return Err(SpecError::Invalid(format!("zero window on '{}'", c.latency)));
            }
            if c.sibling && level == 0 {
                return Err(SpecError::Invalid(format!(
                    "sibling constraint '{}' needs a parent level",
                    c.latency
                )));
            }
            if c.preceding.is_empty() || c.following.is_empty() {
                return Err(SpecError::Invalid(format!(
                    "constraint '{}' has an empty command set",
                    c.latency
                )));
            }
            let preceding = c.preceding.iter().map(|n| cmd_id(n)).collect::<Result<Vec<_>, _>>()?;
            let following = c.following.iter().map(|n| cmd_id(n)).collect::<Result<Vec<_>, _>>()?;
            if let Some(&f) = following.iter().find(|&&f| commands[f].target < level) {
                return Err(SpecError::Invalid(format!(
                    "constraint '{}' at level '{}' can never apply to {}",
                    c.latency, c.level, commands[f].name
                )));
            }
            // A non-positive requirement is already implied by one command
            // per channel per cycle, so 1 is equivalent.
            let latency = eval_latency(&c.latency, &self.timing_values)?.max(1) as Clk;
            constraints.push(TimingConstraint {
                level,
                preceding,
                following,
                latency,
                window: c.window,
                sibling: c.sibling,
                label: c.latency.clone(),
            });
        }

        let mut timing = vec![vec![Vec::new(); ncmd]; nlev];
        let mut max_window = vec![vec![1u32; ncmd]; nlev];
        for ((level, prev, next), bounds) in expand_timing(&constraints) {
            for b in bounds {
                timing[level][prev].push(CompiledBound {
                    next,
                    latency: b.latency,
                    window: b.window,
                    sibling: b.sibling,
                });
                let w = &mut max_window[level][prev];
                *w = (*w).max(b.window);
            }
        }

        // Behaviors.
        let known = KnownCommands {
            act: cmd_id("ACT").ok(),
            pre: cmd_id("PRE").ok(),
            preab: cmd_id("PREab").ok(),
        };
        let mut prereqs = vec![vec![None; ncmd]; nlev];
        for b in &self.prereqs {
            let (l, c) = (level_id(&b.level)?, cmd_id(&b.command)?);
            for r in b.behavior.requires {
                cmd_id(r)?;
            }
            if prereqs[l][c].replace(b.behavior).is_some() {
                return Err(SpecError::Duplicate {
                    kind: "prerequisite binding",
                    name: format!("{}/{}", b.level, b.command),
                });
            }
        }
        let mut actions = vec![vec![Vec::new(); ncmd]; nlev];
        for b in &self.actions {
            let (l, c) = (level_id(&b.level)?, cmd_id(&b.command)?);
            if l > node_depth {
                return Err(SpecError::Invalid(format!(
                    "action '{}' bound at capacity level '{}'",
                    b.behavior.name, b.level
                )));
            }
            actions[l][c].push(b.behavior);
        }

        Ok(DeviceSpec {
            levels: self.levels.clone(),
            def: self,
            commands,
            timing_values,
            constraints,
            node_depth,
            timing,
            prereqs,
            actions,
            max_window,
            known,
        })
    }
}

impl DeviceSpec {
    pub fn standard(&self) -> &str {
        &self.def.standard
    }

    /// The declarative definition this spec was built from.
    pub fn def(&self) -> &SpecDef {
        &self.def
    }

    pub fn levels(&self) -> &[LevelDef] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn fanout(&self, level: LevelId) -> usize {
        self.levels[level].fanout
    }

    /// Deepest level that has runtime nodes (the bank level for DDR4/5).
    pub fn node_depth(&self) -> LevelId {
        self.node_depth
    }

    /// The capacity level directly below the node levels, whose index a
    /// bank records as its open row.
    pub fn row_level(&self) -> Option<LevelId> {
        (self.node_depth + 1 < self.levels.len()).then_some(self.node_depth + 1)
    }

    pub fn resolve_level(&self, name: &str) -> Result<LevelId, SpecError> {
        lookup(self.levels.iter().map(|l| l.name.as_str()), "level", name)
    }

    pub fn resolve_command(&self, name: &str) -> Result<CommandId, SpecError> {
        lookup(self.commands.iter().map(|c| c.name.as_str()), "command", name)
    }

    pub fn command(&self, id: CommandId) -> &CommandDef {
        &self.commands[id]
    }

    pub fn commands(&self) -> &[CommandDef] {
        &self.commands
    }

    pub fn command_count(&self) -> usize {
        self.commands.len()
    }

    pub fn timing_value(&self, symbol: &str) -> Result<Clk, SpecError> {
        self.timing_values
            .get(symbol)
            .copied()
            .ok_or_else(|| SpecError::UnknownName {
                kind: "timing symbol",
                name: symbol.to_string(),
            })
    }

    pub fn timing_values(&self) -> &BTreeMap<String, Clk> {
        &self.timing_values
    }

    pub fn constraints(&self) -> &[TimingConstraint] {
        &self.constraints
    }

    pub fn expanded(&self) -> PairwiseTable {
        expand_timing(&self.constraints)
    }

    pub(crate) fn bounds_after(&self, level: LevelId, prev: CommandId) -> &[CompiledBound] {
        &self.timing[level][prev]
    }

    pub fn prereq(&self, level: LevelId, cmd: CommandId) -> Option<&'static Prereq> {
        self.prereqs[level][cmd]
    }

    pub fn actions(&self, level: LevelId, cmd: CommandId) -> &[&'static Action] {
        &self.actions[level][cmd]
    }

    /// Largest window of any constraint at `level` whose preceding set
    /// contains `cmd`.
    pub fn max_window(&self, level: LevelId, cmd: CommandId) -> u32 {
        self.max_window[level][cmd]
    }

    pub fn known(&self) -> KnownCommands {
        self.known
    }

    /// Number of distinct states a bank can be in (Closed, Opened), plus the
    /// powered-up state of upper nodes. Bounds the decode chain length.
    pub fn state_count(&self) -> usize {
        3
    }

    /// Total addressable bytes for a transaction size.
    pub fn capacity_bytes(&self, tx_bytes: u64) -> u64 {
        self.levels.iter().map(|l| l.fanout as u64).product::<u64>() * tx_bytes
    }
}
