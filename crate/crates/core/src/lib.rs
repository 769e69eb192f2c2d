//! Cycle-level DRAM simulation: declarative device specs, a modular
//! controller with command-observing plugins, RowHammer mitigations and
//! trace tooling.

pub mod addr;
pub mod controller;
pub mod dramspec;
pub mod memsys;
pub mod mitigations;
pub mod registry;
pub mod standards;
pub mod tools;
