//! Line-oriented text form of a [`SpecDef`].
//!
//! ```text
//! standard DDR4
//! level bank 4 node
//! level row 65536 capacity
//! command ACT row open
//! command RD column none read
//! value nRCD 22
//! constraint bank ACT -> RD,WR = nRCD
//! constraint rank ACT -> ACT = nFAW window 4
//! constraint rank RD -> RD = nBL + nRTRS sibling
//! prereq rank REFab require-all-banks-closed
//! action bank ACT open-row
//! ```
//!
//! Behaviors are referenced by their library name.

use std::fmt::Write as _;

use super::library::{action_by_name, prereq_by_name};
use super::{Binding, CommandKind, CommandSrc, ConstraintDef, LevelDef, RowEffect, SpecDef, SpecError};

pub fn dump(def: &SpecDef) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "standard {}", def.standard);
    for l in &def.levels {
        let kind = if l.materialized { "node" } else { "capacity" };
        let _ = writeln!(out, "level {} {} {}", l.name, l.fanout, kind);
    }
    for c in &def.commands {
        let _ = write!(out, "command {} {} {}", c.name, c.scope, c.kind.effect.keyword());
        for (flag, set) in [("read", c.kind.read), ("write", c.kind.write), ("refresh", c.kind.refresh)] {
            if set {
                let _ = write!(out, " {flag}");
            }
        }
        out.push('\n');
    }
    for (k, v) in &def.timing_values {
        let _ = writeln!(out, "value {k} {v}");
    }
    for c in &def.constraints {
        let _ = write!(
            out,
            "constraint {} {} -> {} = {}",
            c.level,
            c.preceding.join(","),
            c.following.join(","),
            c.latency
        );
        if c.window != 1 {
            let _ = write!(out, " window {}", c.window);
        }
        if c.sibling {
            out.push_str(" sibling");
        }
        out.push('\n');
    }
    for b in &def.prereqs {
        let _ = writeln!(out, "prereq {} {} {}", b.level, b.command, b.behavior.name);
    }
    for b in &def.actions {
        let _ = writeln!(out, "action {} {} {}", b.level, b.command, b.behavior.name);
    }
    out
}

pub fn parse(text: &str) -> Result<SpecDef, SpecError> {
    let mut def = SpecDef {
        standard: String::new(),
        levels: Vec::new(),
        commands: Vec::new(),
        timing_values: Default::default(),
        constraints: Vec::new(),
        prereqs: Vec::new(),
        actions: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |reason: String| SpecError::Parse { line: line_no, reason };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "standard" if toks.len() == 2 => def.standard = toks[1].to_string(),
            "level" if toks.len() == 4 => {
                let fanout = toks[2].parse().map_err(|_| err(format!("bad fanout '{}'", toks[2])))?;
                let materialized = match toks[3] {
                    "node" => true,
                    "capacity" => false,
                    other => return Err(err(format!("bad level kind '{other}'"))),
                };
                def.levels.push(LevelDef {
                    name: toks[1].to_string(),
                    fanout,
                    materialized,
                });
            }
            "command" if toks.len() >= 4 => {
                let effect =
                    RowEffect::from_keyword(toks[3]).ok_or_else(|| err(format!("bad row effect '{}'", toks[3])))?;
                let mut kind = CommandKind::plain(effect);
                for flag in &toks[4..] {
                    match *flag {
                        "read" => kind.read = true,
                        "write" => kind.write = true,
                        "refresh" => kind.refresh = true,
                        other => return Err(err(format!("bad command flag '{other}'"))),
                    }
                }
                def.commands.push(CommandSrc {
                    name: toks[1].to_string(),
                    scope: toks[2].to_string(),
                    kind,
                });
            }
            "value" if toks.len() == 3 => {
                let v = toks[2].parse().map_err(|_| err(format!("bad value '{}'", toks[2])))?;
                def.timing_values.insert(toks[1].to_string(), v);
            }
            "constraint" => def.constraints.push(parse_constraint(line).map_err(err)?),
            "prereq" if toks.len() == 4 => {
                let behavior = prereq_by_name(toks[3]).ok_or_else(|| err(format!("unknown prerequisite '{}'", toks[3])))?;
                def.prereqs.push(Binding::new(toks[1], toks[2], behavior));
            }
            "action" if toks.len() == 4 => {
                let behavior = action_by_name(toks[3]).ok_or_else(|| err(format!("unknown action '{}'", toks[3])))?;
                def.actions.push(Binding::new(toks[1], toks[2], behavior));
            }
            other => return Err(err(format!("malformed '{other}' line"))),
        }
    }
    if def.standard.is_empty() {
        return Err(SpecError::Parse {
            line: 0,
            reason: "missing 'standard' line".into(),
        });
    }
    Ok(def)
}

fn parse_constraint(line: &str) -> Result<ConstraintDef, String> {
    let (lhs, rhs) = line.split_once('=').ok_or("constraint without '='")?;
    let toks: Vec<&str> = lhs.split_whitespace().collect();
    if toks.len() != 5 || toks[3] != "->" {
        return Err("expected 'constraint <level> <prev,..> -> <next,..> = <latency>'".into());
    }
    let list = |s: &str| s.split(',').map(str::to_string).collect::<Vec<_>>();
    let mut c = ConstraintDef {
        level: toks[1].to_string(),
        preceding: list(toks[2]),
        following: list(toks[4]),
        latency: String::new(),
        window: 1,
        sibling: false,
    };
    let mut expr = Vec::new();
    let mut rest = rhs.split_whitespace();
    while let Some(t) = rest.next() {
        match t {
            "window" => {
                let w = rest.next().ok_or("window without a value")?;
                c.window = w.parse().map_err(|_| format!("bad window '{w}'"))?;
            }
            "sibling" => c.sibling = true,
            _ => expr.push(t),
        }
    }
    if expr.is_empty() {
        return Err("constraint without latency".into());
    }
    c.latency = expr.join(" ");
    Ok(c)
}
