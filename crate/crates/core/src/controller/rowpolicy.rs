use crate::dramspec::{CommandId, DeviceSpec, SpecError};
use crate::registry::{BuildError, Catalog, Factory};

pub trait RowPolicy: Send {
    fn name(&self) -> &'static str;
    /// Chooses the column command actually issued for a row hit.
    /// `more_hits_queued` tells whether another queued request targets the
    /// same row.
    fn column_command(&self, cmd: CommandId, more_hits_queued: bool) -> CommandId;
}

/// Leaves rows open after column commands.
#[derive(Debug, Default, Clone, Copy)]
pub struct OpenRowPolicy;

impl RowPolicy for OpenRowPolicy {
    fn name(&self) -> &'static str {
        "OpenRow"
    }

    fn column_command(&self, cmd: CommandId, _more_hits_queued: bool) -> CommandId {
        cmd
    }
}

/// Switches to the auto-precharge variant once no queued request hits the
/// row.
#[derive(Debug, Clone)]
pub struct ClosedRowPolicy {
    auto: Vec<Option<CommandId>>,
}

impl ClosedRowPolicy {
    pub fn new(spec: &DeviceSpec) -> Result<Self, SpecError> {
        let mut auto = vec![None; spec.command_count()];
        for (plain, with_ap) in [("RD", "RDA"), ("WR", "WRA")] {
            auto[spec.resolve_command(plain)?] = Some(spec.resolve_command(with_ap)?);
        }
        Ok(ClosedRowPolicy { auto })
    }
}

impl RowPolicy for ClosedRowPolicy {
    fn name(&self) -> &'static str {
        "ClosedRow"
    }

    fn column_command(&self, cmd: CommandId, more_hits_queued: bool) -> CommandId {
        match self.auto[cmd] {
            Some(ap) if !more_hits_queued => ap,
            _ => cmd,
        }
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation("RowPolicy", "OpenRow", Factory::row_policy(|_, _| Ok(Box::new(OpenRowPolicy))))?;
    catalog.register_implementation(
        "RowPolicy",
        "ClosedRow",
        Factory::row_policy(|node, ctx| {
            let spec = ctx.dram(node)?;
            let p = ClosedRowPolicy::new(&spec).map_err(|e| node.bad_param("impl", e.to_string()))?;
            Ok(Box::new(p))
        }),
    )?;
    Ok(())
}
