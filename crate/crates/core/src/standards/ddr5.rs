use super::ddr4;
use super::{assemble, validate_timings, Organization, Parts, TimingValueTable};
use crate::dramspec::{CommandKind, CommandSrc, ConstraintDef, DeviceSpec, SpecDef, SpecError};

/// DDR4's command set plus RFMab, wired to the same library behaviors.
pub fn ddr5_def(org: &Organization, timings: &TimingValueTable) -> Result<SpecDef, SpecError> {
    org.validate()?;
    let mut required = ddr4::TIMING_SYMBOLS.to_vec();
    required.push("nRFM");
    validate_timings(timings, &required)?;

    let refresh = &["REFab", "RFMab"];
    let mut commands = ddr4::commands();
    commands.push(CommandSrc {
        name: "RFMab".into(),
        scope: "rank".into(),
        kind: CommandKind::refresh(),
    });
    let mut constraints = ddr4::constraints(refresh);
    constraints.push(ConstraintDef::new(
        "rank",
        &["RFMab"],
        &["ACT", "PRE", "PREab", "REFab", "RFMab"],
        "nRFM",
    ));
    Ok(assemble(
        "DDR5",
        org,
        timings,
        Parts {
            commands,
            constraints,
            prereqs: ddr4::prereqs(refresh),
            actions: ddr4::actions(),
        },
    ))
}

pub fn build_ddr5(org: &Organization, timings: &TimingValueTable) -> Result<DeviceSpec, SpecError> {
    ddr5_def(org, timings)?.finalize()
}
