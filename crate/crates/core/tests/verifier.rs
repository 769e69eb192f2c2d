mod common;

use common::ddr4;
use ramsim::dramspec::DeviceSpec;
use ramsim::tools::{read_command_trace, verify_records, TraceError, Violation, ViolationKind};

const HEADER: &str = "clk,cmd,channel,rank,bankgroup,bank,row,column\n";

fn check(spec: &DeviceSpec, body: &str) -> Vec<Violation> {
    let text = format!("{HEADER}{body}");
    let levels: Vec<String> = spec.levels().iter().map(|l| l.name.clone()).collect();
    let records = read_command_trace(text.as_bytes(), &levels).unwrap();
    verify_records(spec, records).unwrap().1
}

fn t(spec: &DeviceSpec, name: &str) -> u64 {
    spec.timing_value(name).unwrap()
}

#[test]
fn read_one_cycle_before_rcd_is_flagged() {
    let spec = ddr4();
    let rcd = t(&spec, "nRCD");
    let v = check(&spec, &format!("0,ACT,0,0,0,0,10,-1\n{},RD,0,0,0,0,10,3\n", rcd - 1));
    assert_eq!(v.len(), 1, "{v:?}");
    match &v[0].kind {
        ViolationKind::Timing { prev, required, actual, .. } => {
            assert_eq!(prev, "ACT");
            assert_eq!(*required, rcd);
            assert_eq!(*actual, rcd - 1);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(v[0].line, 3);
}

#[test]
fn read_at_rcd_is_clean() {
    let spec = ddr4();
    let rcd = t(&spec, "nRCD");
    assert!(check(&spec, &format!("0,ACT,0,0,0,0,10,-1\n{rcd},RD,0,0,0,0,10,3\n")).is_empty());
}

#[test]
fn interleaved_banks_at_their_bounds_are_clean() {
    let spec = ddr4();
    let (rrd, rcd) = (t(&spec, "nRRD_S"), t(&spec, "nRCD"));
    let body = format!("0,ACT,0,0,0,0,10,-1\n{rrd},ACT,0,0,1,0,20,-1\n{},RD,0,0,1,0,20,0\n", rrd + rcd);
    assert!(check(&spec, &body).is_empty());
}

#[test]
fn fifth_activate_inside_faw_is_flagged() {
    let spec = ddr4();
    let (rrd, faw) = (t(&spec, "nRRD_L").max(t(&spec, "nRRD_S")), t(&spec, "nFAW"));
    let mut body = String::new();
    for i in 0..4 {
        body.push_str(&format!("{},ACT,0,0,{i},0,1,-1\n", i as u64 * rrd));
    }
    let fifth = (4 * rrd).max(faw - 1);
    body.push_str(&format!("{fifth},ACT,0,0,0,1,1,-1\n"));
    let v = check(&spec, &body);
    assert!(
        v.iter().any(|v| matches!(&v.kind, ViolationKind::Timing { constraint, .. } if constraint.starts_with("nFAW"))),
        "{v:?}"
    );

    let mut ok = body.lines().take(4).collect::<Vec<_>>().join("\n");
    ok.push_str(&format!("\n{},ACT,0,0,0,1,1,-1\n", (4 * rrd).max(faw)));
    assert!(check(&spec, &ok).is_empty());
}

#[test]
fn read_without_activate_is_a_state_violation() {
    let spec = ddr4();
    let v = check(&spec, "100,RD,0,0,0,0,10,3\n");
    assert!(matches!(v[0].kind, ViolationKind::State { .. }), "{v:?}");
}

#[test]
fn read_to_wrong_row_is_a_state_violation() {
    let spec = ddr4();
    let v = check(&spec, "0,ACT,0,0,0,0,10,-1\n1000,RD,0,0,0,0,11,3\n");
    assert_eq!(v.len(), 1);
    assert!(matches!(v[0].kind, ViolationKind::State { .. }));
}

#[test]
fn all_bank_refresh_with_open_bank_is_flagged() {
    let spec = ddr4();
    let v = check(&spec, "0,ACT,0,0,2,1,10,-1\n1000,REFab,0,0,-1,-1,-1,-1\n");
    assert!(v.iter().any(|v| matches!(v.kind, ViolationKind::State { .. })), "{v:?}");
}

#[test]
fn two_commands_in_one_cycle_on_a_channel_are_flagged() {
    let spec = ddr4();
    let v = check(&spec, "0,ACT,0,0,0,0,10,-1\n0,ACT,0,1,0,0,10,-1\n");
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0].line, 3);
}

#[test]
fn malformed_records_are_reported() {
    let spec = ddr4();
    let v = check(&spec, "0,FOO,0,0,0,0,1,-1\n");
    assert!(matches!(v[0].kind, ViolationKind::Malformed(_)));
    let v = check(&spec, "0,ACT,0,0,0,0,1,5\n");
    assert!(matches!(v[0].kind, ViolationKind::Malformed(_)), "column below ACT scope");
    let v = check(&spec, "0,ACT,0,0,0,99,1,-1\n");
    assert!(matches!(v[0].kind, ViolationKind::Malformed(_)), "bank out of range");
    let v = check(&spec, "100,ACT,0,0,0,0,1,-1\n50,ACT,0,0,1,0,1,-1\n");
    assert!(matches!(v[0].kind, ViolationKind::Malformed(_)), "cycle order");
}

#[test]
fn wrong_header_is_rejected() {
    let spec = ddr4();
    let levels: Vec<String> = spec.levels().iter().map(|l| l.name.clone()).collect();
    let r = read_command_trace("clk,cmd,channel\n0,ACT,0\n".as_bytes(), &levels);
    assert!(matches!(r, Err(TraceError::Parse { .. })));
}

#[test]
fn unparsable_row_is_an_error() {
    let spec = ddr4();
    let levels: Vec<String> = spec.levels().iter().map(|l| l.name.clone()).collect();
    let text = format!("{HEADER}zero,ACT,0,0,0,0,1,-1\n");
    let err = verify_records(&spec, read_command_trace(text.as_bytes(), &levels).unwrap()).unwrap_err();
    assert!(matches!(err, TraceError::Parse { line: 2, .. }), "{err:?}");
}
