use super::{assemble, validate_timings, Organization, Parts, TimingValueTable};
use crate::dramspec::library::{
    CLOSE_ALL_ROWS, CLOSE_ROW, CONSUME_COLUMN, OPEN_ROW, REQUIRE_ALL_BANKS_CLOSED, REQUIRE_BANK_CLOSED,
    REQUIRE_ROW_OPEN,
};
use crate::dramspec::{Binding, CommandKind, CommandSrc, ConstraintDef, DeviceSpec, RowEffect, SpecDef, SpecError};

pub(super) const RD: &[&str] = &["RD", "RDA"];
pub(super) const WR: &[&str] = &["WR", "WRA"];
pub(super) const RDWR: &[&str] = &["RD", "RDA", "WR", "WRA"];

pub(super) const TIMING_SYMBOLS: &[&str] = &[
    "nBL", "nCL", "nRCD", "nRP", "nRAS", "nRC", "nCWL", "nCCD_S", "nCCD_L", "nRRD_S", "nRRD_L", "nFAW", "nWR",
    "nRTP", "nWTR_S", "nWTR_L", "nRTRS", "nRFC", "nREFI",
];

pub(super) fn commands() -> Vec<CommandSrc> {
    let cmd = |name: &str, scope: &str, kind| CommandSrc {
        name: name.to_string(),
        scope: scope.to_string(),
        kind,
    };
    vec![
        cmd("ACT", "row", CommandKind::plain(RowEffect::Open)),
        cmd("PRE", "bank", CommandKind::plain(RowEffect::Close)),
        cmd("PREab", "rank", CommandKind::plain(RowEffect::CloseAll)),
        cmd("RD", "column", CommandKind::read(RowEffect::None)),
        cmd("WR", "column", CommandKind::write(RowEffect::None)),
        cmd("RDA", "column", CommandKind::read(RowEffect::Close)),
        cmd("WRA", "column", CommandKind::write(RowEffect::Close)),
        cmd("REFab", "rank", CommandKind::refresh()),
    ]
}

/// Constraints shared by DDR4 and DDR5. `refresh` lists the all-bank
/// refresh-class commands of the standard.
pub(super) fn constraints(refresh: &[&str]) -> Vec<ConstraintDef> {
    let c = ConstraintDef::new;
    let mut after_refresh = vec!["ACT", "PRE", "PREab"];
    after_refresh.extend_from_slice(refresh);
    vec![
        // Data bus occupancy.
        c("channel", RD, RD, "nBL"),
        c("channel", WR, WR, "nBL"),
        // Column to column within a rank.
        c("rank", RD, RD, "nCCD_S"),
        c("rank", WR, WR, "nCCD_S"),
        c("rank", RD, WR, "nCL + nBL + 2 - nCWL"),
        c("rank", WR, RD, "nCWL + nBL + nWTR_S"),
        // Rank to rank switching.
        c("rank", RD, RD, "nBL + nRTRS").sibling(),
        c("rank", WR, WR, "nBL + nRTRS").sibling(),
        c("rank", RD, WR, "nCL + nBL + nRTRS - nCWL").sibling(),
        c("rank", WR, RD, "nCWL + nBL + nRTRS - nCL").sibling(),
        // Activation rate.
        c("rank", &["ACT"], &["ACT"], "nRRD_S"),
        c("rank", &["ACT"], &["ACT"], "nFAW").window(4),
        // Precharge all.
        c("rank", &["ACT"], &["PREab"], "nRAS"),
        c("rank", RD, &["PREab"], "nRTP"),
        c("rank", WR, &["PREab"], "nCWL + nBL + nWR"),
        // Refresh.
        c("rank", &["PRE", "PREab"], refresh, "nRP"),
        c("rank", &["RDA"], refresh, "nRTP + nRP"),
        c("rank", &["WRA"], refresh, "nCWL + nBL + nWR + nRP"),
        c("rank", &["ACT"], refresh, "nRC"),
        c("rank", &["REFab"], &after_refresh, "nRFC"),
        // Same bank group.
        c("bankgroup", RD, RD, "nCCD_L"),
        c("bankgroup", WR, WR, "nCCD_L"),
        c("bankgroup", WR, RD, "nCWL + nBL + nWTR_L"),
        c("bankgroup", &["ACT"], &["ACT"], "nRRD_L"),
        // Same bank.
        c("bank", &["ACT"], &["ACT"], "nRC"),
        c("bank", &["ACT"], RDWR, "nRCD"),
        c("bank", &["ACT"], &["PRE"], "nRAS"),
        c("bank", &["PRE", "PREab"], &["ACT"], "nRP"),
        c("bank", &["RD"], &["PRE"], "nRTP"),
        c("bank", &["WR"], &["PRE"], "nCWL + nBL + nWR"),
        c("bank", &["RDA"], &["ACT"], "nRTP + nRP"),
        c("bank", &["WRA"], &["ACT"], "nCWL + nBL + nWR + nRP"),
    ]
}

pub(super) fn prereqs(refresh: &[&str]) -> Vec<Binding<crate::dramspec::Prereq>> {
    let mut v = vec![Binding::new("bank", "ACT", &REQUIRE_BANK_CLOSED)];
    for cmd in RDWR {
        v.push(Binding::new("bank", cmd, &REQUIRE_ROW_OPEN));
    }
    for cmd in refresh {
        v.push(Binding::new("rank", cmd, &REQUIRE_ALL_BANKS_CLOSED));
    }
    v
}

pub(super) fn actions() -> Vec<Binding<crate::dramspec::Action>> {
    vec![
        Binding::new("bank", "ACT", &OPEN_ROW),
        Binding::new("bank", "PRE", &CLOSE_ROW),
        Binding::new("rank", "PREab", &CLOSE_ALL_ROWS),
        Binding::new("bank", "RD", &CONSUME_COLUMN),
        Binding::new("bank", "WR", &CONSUME_COLUMN),
        Binding::new("bank", "RDA", &CONSUME_COLUMN),
        Binding::new("bank", "RDA", &CLOSE_ROW),
        Binding::new("bank", "WRA", &CONSUME_COLUMN),
        Binding::new("bank", "WRA", &CLOSE_ROW),
    ]
}

/// The declarative DDR4 definition, before finalization.
pub fn ddr4_def(org: &Organization, timings: &TimingValueTable) -> Result<SpecDef, SpecError> {
    org.validate()?;
    validate_timings(timings, TIMING_SYMBOLS)?;
    let refresh = &["REFab"];
    Ok(assemble(
        "DDR4",
        org,
        timings,
        Parts {
            commands: commands(),
            constraints: constraints(refresh),
            prereqs: prereqs(refresh),
            actions: actions(),
        },
    ))
}

pub fn build_ddr4(org: &Organization, timings: &TimingValueTable) -> Result<DeviceSpec, SpecError> {
    ddr4_def(org, timings)?.finalize()
}
