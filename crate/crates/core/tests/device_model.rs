use std::fmt::Write as _;
use std::sync::Arc;

use proptest::prelude::*;
use ramsim::addr::AddrVec;
use ramsim::dramspec::{DeviceSpec, NodeRef, NodeTree};
use ramsim::standards::build_default;
use ramsim::tools::{read_command_trace, verify_records};

const GOALS: &[&str] = &["ACT", "RD", "WR", "RDA", "WRA", "PREab", "REFab"];

fn spec(standard: &str) -> Arc<DeviceSpec> {
    Arc::new(build_default(standard).unwrap())
}

fn snapshot(tree: &NodeTree) -> Vec<u64> {
    let spec = tree.spec();
    let mut out = Vec::new();
    for level in 0..=spec.node_depth() {
        for index in 0..tree.node_count(level) {
            for cmd in 0..spec.command_count() {
                out.push(tree.next_allowed(NodeRef { level, index }, cmd));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Op {
    goal: usize,
    pick: [usize; 5],
    delay: u64,
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(
        (0..GOALS.len(), prop::array::uniform5(0usize..64), 0u64..40).prop_map(|(goal, pick, delay)| Op { goal, pick, delay }),
        1..150,
    )
}

/// Drives random requests through prerequisite decoding, checks the
/// tree's contracts along the way and returns the issued commands as CSV.
fn drive(spec: &Arc<DeviceSpec>, ops: &[Op]) -> Result<String, TestCaseError> {
    let levels = spec.level_count();
    let mut tree = NodeTree::new(Arc::clone(spec), 0);
    let mut csv = String::from("clk,cmd");
    for l in spec.levels() {
        write!(csv, ",{}", l.name).unwrap();
    }
    csv.push('\n');
    let mut now = 0;
    for op in ops {
        let Ok(goal) = spec.resolve_command(GOALS[op.goal]) else { continue };
        let mut fields = vec![0i64];
        for (l, &p) in (1..levels).zip(&op.pick) {
            // Few rows so that hits and conflicts both occur.
            let n = if l == 4 { 3 } else { spec.fanout(l) };
            fields.push((p % n) as i64);
        }
        let addr = AddrVec::from_slice(&fields);
        now += op.delay;
        let mut steps = 0;
        loop {
            let before = tree.clone();
            let cmd = tree.prerequisite(goal, &addr).unwrap();
            let t = tree.ready_at(cmd, &addr).max(now);
            prop_assert_eq!(tree.prerequisite(goal, &addr).unwrap(), cmd);
            prop_assert_eq!(tree.ready_at(cmd, &addr).max(now), t);
            prop_assert!(tree.check_ready(cmd, &addr, t));
            prop_assert!(tree == before, "queries changed the tree");
            for later in [t + 1, t + 7, t + 1000] {
                prop_assert!(tree.check_ready(cmd, &addr, later));
            }

            let old = snapshot(&tree);
            tree.issue(cmd, &addr, t);
            let new = snapshot(&tree);
            prop_assert!(old.iter().zip(&new).all(|(a, b)| a <= b), "a next-allowed entry went down");

            let c = spec.command(cmd);
            write!(csv, "{t},{}", c.name).unwrap();
            for (l, v) in fields.iter().enumerate() {
                write!(csv, ",{}", if l <= c.scope { *v } else { -1 }).unwrap();
            }
            csv.push('\n');
            now = t + 1;
            steps += 1;
            if cmd == goal {
                break;
            }
            prop_assert!(steps <= spec.state_count(), "{} did not decode", GOALS[op.goal]);
        }
    }
    Ok(csv)
}

fn check_standard(standard: &str, ops: &[Op]) -> Result<(), TestCaseError> {
    let spec = spec(standard);
    let csv = drive(&spec, ops)?;
    let names: Vec<String> = spec.levels().iter().map(|l| l.name.clone()).collect();
    let (_, violations) = verify_records(&spec, read_command_trace(csv.as_bytes(), &names).unwrap()).unwrap();
    prop_assert!(violations.is_empty(), "{}", violations[0]);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ddr4_schedules_obey_tree_contracts_and_verify(ops in ops()) {
        check_standard("DDR4", &ops)?;
    }

    #[test]
    fn ddr5_schedules_obey_tree_contracts_and_verify(ops in ops()) {
        check_standard("DDR5", &ops)?;
    }
}

#[test]
fn names_resolve_to_their_own_index() {
    for standard in ["DDR4", "DDR5"] {
        let spec = spec(standard);
        for (i, l) in spec.levels().iter().enumerate() {
            assert_eq!(spec.resolve_level(&l.name).unwrap(), i);
        }
        for (i, c) in spec.commands().iter().enumerate() {
            assert_eq!(spec.resolve_command(&c.name).unwrap(), i);
        }
        assert!(spec.resolve_command("NOPE").is_err());
    }
}

#[test]
fn decode_chains_are_short() {
    for standard in ["DDR4", "DDR5"] {
        assert!(spec(standard).state_count() <= 4);
    }
}

#[test]
fn text_form_round_trips() {
    use ramsim::dramspec::text;
    use ramsim::standards::{ddr4_def, ddr5_def, timing_preset, Organization};

    let defs = [
        ddr4_def(&Organization::preset("DDR4_8Gb_x8").unwrap(), &timing_preset("DDR4_3200AA").unwrap()).unwrap(),
        ddr5_def(&Organization::preset("DDR5_16Gb_x8").unwrap(), &timing_preset("DDR5_4800B").unwrap()).unwrap(),
    ];
    for def in defs {
        let dumped = text::dump(&def);
        let parsed = text::parse(&dumped).unwrap();
        assert_eq!(text::dump(&parsed), dumped);
        assert_eq!(parsed.finalize().unwrap().expanded(), def.finalize().unwrap().expanded());
    }
}
