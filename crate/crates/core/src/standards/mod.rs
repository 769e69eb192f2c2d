//! DDR4 and DDR5 device specifications.
//!
//! Both standards are written against the shared behavior library; the
//! timing tables here are a DDR4-3200 / DDR5-4800 datasheet-style profile
//! and are not normative. Every value can be overridden from the `DRAM`
//! config node.

mod ddr4;
mod ddr5;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dramspec::{DeviceSpec, LevelDef, SpecDef, SpecError};
use crate::registry::{BuildContext, BuildError, Catalog, ConfigNode, Factory};

pub use ddr4::{build_ddr4, ddr4_def};
pub use ddr5::{build_ddr5, ddr5_def};

pub const LEVEL_NAMES: [&str; 6] = ["channel", "rank", "bankgroup", "bank", "row", "column"];

/// Organization of a device: per-level fanouts plus descriptive labels.
/// `column` counts 64-byte transactions per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Organization {
    pub preset: String,
    pub density: String,
    pub channel_width: u32,
    pub fanouts: [usize; 6],
}

impl Organization {
    pub fn preset(name: &str) -> Option<Self> {
        let (density, width, fanouts) = match name {
            "DDR4_4Gb_x8" => ("4Gb", 64, [1, 2, 4, 4, 1 << 15, 128]),
            "DDR4_8Gb_x8" => ("8Gb", 64, [1, 2, 4, 4, 1 << 16, 128]),
            "DDR4_16Gb_x8" => ("16Gb", 64, [1, 2, 4, 4, 1 << 17, 128]),
            "DDR5_16Gb_x8" => ("16Gb", 32, [1, 2, 8, 4, 1 << 16, 64]),
            "DDR5_32Gb_x8" => ("32Gb", 32, [1, 2, 8, 4, 1 << 17, 64]),
            _ => return None,
        };
        Some(Organization {
            preset: name.to_string(),
            density: density.to_string(),
            channel_width: width,
            fanouts,
        })
    }

    pub fn levels(&self) -> Vec<LevelDef> {
        LEVEL_NAMES
            .iter()
            .zip(self.fanouts)
            .map(|(&name, f)| {
                if name == "row" || name == "column" {
                    LevelDef::capacity(name, f)
                } else {
                    LevelDef::node(name, f)
                }
            })
            .collect()
    }

    /// Fanouts must be powers of two so addresses bit-slice into them, and
    /// the whole hierarchy must fit a 64-bit byte address.
    pub fn validate(&self) -> Result<(), SpecError> {
        let mut bits = 6; // transaction offset
        for (name, &f) in LEVEL_NAMES.iter().zip(&self.fanouts) {
            if f == 0 || !f.is_power_of_two() {
                return Err(SpecError::Invalid(format!(
                    "{name} fanout {f} is not a power of two"
                )));
            }
            bits += f.trailing_zeros();
        }
        if bits > 48 {
            return Err(SpecError::Invalid(format!(
                "organization needs {bits} address bits (max 48)"
            )));
        }
        Ok(())
    }
}

pub type TimingValueTable = BTreeMap<String, i64>;

pub fn timing_preset(name: &str) -> Option<TimingValueTable> {
    let entries: &[(&str, i64)] = match name {
        "DDR4_3200AA" => &[
            ("nBL", 4),
            ("nCL", 22),
            ("nRCD", 22),
            ("nRP", 22),
            ("nRAS", 52),
            ("nRC", 74),
            ("nCWL", 16),
            ("nCCD_S", 4),
            ("nCCD_L", 8),
            ("nRRD_S", 4),
            ("nRRD_L", 8),
            ("nFAW", 34),
            ("nWR", 24),
            ("nRTP", 12),
            ("nWTR_S", 4),
            ("nWTR_L", 12),
            ("nRTRS", 2),
            ("nRFC", 560),
            ("nREFI", 12480),
        ],
        "DDR5_4800B" => &[
            ("nBL", 8),
            ("nCL", 40),
            ("nRCD", 40),
            ("nRP", 40),
            ("nRAS", 77),
            ("nRC", 117),
            ("nCWL", 38),
            ("nCCD_S", 8),
            ("nCCD_L", 12),
            ("nRRD_S", 8),
            ("nRRD_L", 12),
            ("nFAW", 32),
            ("nWR", 72),
            ("nRTP", 18),
            ("nWTR_S", 6),
            ("nWTR_L", 24),
            ("nRTRS", 2),
            ("nRFC", 708),
            ("nRFM", 468),
            ("nREFI", 9360),
        ],
        _ => return None,
    };
    Some(entries.iter().map(|&(k, v)| (k.to_string(), v)).collect())
}

pub(crate) fn validate_timings(t: &TimingValueTable, required: &[&str]) -> Result<(), SpecError> {
    for sym in required {
        match t.get(*sym) {
            None => {
                return Err(SpecError::UnknownName {
                    kind: "timing symbol",
                    name: sym.to_string(),
                })
            }
            Some(&v) if v < 1 => return Err(SpecError::Invalid(format!("{sym} = {v} must be >= 1"))),
            _ => {}
        }
    }
    let (ras, rp, rc) = (t["nRAS"], t["nRP"], t["nRC"]);
    if ras + rp > rc {
        return Err(SpecError::Invalid(format!(
            "nRAS ({ras}) + nRP ({rp}) exceeds nRC ({rc})"
        )));
    }
    Ok(())
}

/// Reads `org` and `timing` subtrees, starting from the named presets and
/// applying per-key overrides.
fn org_and_timings(
    node: &mut ConfigNode,
    default_org: &str,
    default_timing: &str,
) -> Result<(Organization, TimingValueTable), BuildError> {
    let mut org_node = node.child_or_empty("org")?;
    let org_name: String = org_node.param("preset", default_org.to_string())?;
    let mut org = Organization::preset(&org_name)
        .ok_or_else(|| org_node.bad_param("preset", format!("unknown organization preset '{org_name}'")))?;
    for (i, name) in LEVEL_NAMES.iter().enumerate() {
        org.fanouts[i] = org_node.param(name, org.fanouts[i])?;
    }
    org.validate().map_err(|e| org_node.bad_param("", e.to_string()))?;
    node.attach("org", org_node)?;

    let mut timing_node = node.child_or_empty("timing")?;
    let timing_name: String = timing_node.param("preset", default_timing.to_string())?;
    let mut timings = timing_preset(&timing_name)
        .ok_or_else(|| timing_node.bad_param("preset", format!("unknown timing preset '{timing_name}'")))?;
    for (sym, value) in timings.iter_mut() {
        *value = timing_node.param(sym, *value)?;
    }
    node.attach("timing", timing_node)?;
    Ok((org, timings))
}

fn ddr4_factory(node: &mut ConfigNode, _ctx: &mut BuildContext) -> Result<Arc<DeviceSpec>, BuildError> {
    let (org, timings) = org_and_timings(node, "DDR4_8Gb_x8", "DDR4_3200AA")?;
    build_ddr4(&org, &timings)
        .map(Arc::new)
        .map_err(|e| node.bad_param("", e.to_string()))
}

fn ddr5_factory(node: &mut ConfigNode, _ctx: &mut BuildContext) -> Result<Arc<DeviceSpec>, BuildError> {
    let (org, timings) = org_and_timings(node, "DDR5_16Gb_x8", "DDR5_4800B")?;
    build_ddr5(&org, &timings)
        .map(Arc::new)
        .map_err(|e| node.bad_param("", e.to_string()))
}

pub fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation("DRAM", "DDR4", Factory::dram(ddr4_factory))?;
    catalog.register_implementation("DRAM", "DDR5", Factory::dram(ddr5_factory))?;
    Ok(())
}

/// Builds a standard by name with its default organization and timings.
pub fn build_default(standard: &str) -> Result<DeviceSpec, SpecError> {
    match standard.to_ascii_uppercase().as_str() {
        "DDR4" => build_ddr4(
            &Organization::preset("DDR4_8Gb_x8").expect("preset"),
            &timing_preset("DDR4_3200AA").expect("preset"),
        ),
        "DDR5" => build_ddr5(
            &Organization::preset("DDR5_16Gb_x8").expect("preset"),
            &timing_preset("DDR5_4800B").expect("preset"),
        ),
        other => Err(SpecError::UnknownName {
            kind: "standard",
            name: other.to_string(),
        }),
    }
}

pub(crate) fn assemble(standard: &str, org: &Organization, timings: &TimingValueTable, parts: Parts) -> SpecDef {
    SpecDef {
        standard: standard.to_string(),
        levels: org.levels(),
        commands: parts.commands,
        timing_values: timings.clone(),
        constraints: parts.constraints,
        prereqs: parts.prereqs,
        actions: parts.actions,
    }
}

pub(crate) struct Parts {
    pub commands: Vec<crate::dramspec::CommandSrc>,
    pub constraints: Vec<crate::dramspec::ConstraintDef>,
    pub prereqs: Vec<crate::dramspec::Binding<crate::dramspec::Prereq>>,
    pub actions: Vec<crate::dramspec::Binding<crate::dramspec::Action>>,
}
