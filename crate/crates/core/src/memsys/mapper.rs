use super::{SimError, TX_OFFSET_BITS};
use crate::addr::AddrVec;
use crate::dramspec::{DeviceSpec, LevelId, SpecError};
use crate::registry::{BuildError, Catalog, Factory};

pub trait AddrMapper: Send {
    fn name(&self) -> &str;
    fn map(&self, addr: u64) -> Result<AddrVec, SimError>;
    /// Inverse of [`AddrMapper::map`] for a fully specified vector.
    fn unmap(&self, v: &AddrVec) -> u64;
    fn capacity(&self) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingScheme {
    /// Row | bank | bankgroup | rank | column | channel, channel lowest.
    RoBaRaCoCh,
    /// Channel | rank | bankgroup | bank | row | column, column lowest.
    ChRaBaRoCo,
}

impl MappingScheme {
    pub fn name(self) -> &'static str {
        match self {
            MappingScheme::RoBaRaCoCh => "RoBaRaCoCh",
            MappingScheme::ChRaBaRoCo => "ChRaBaRoCo",
        }
    }

    /// Level names from least to most significant bits.
    fn lsb_first(self) -> [&'static str; 6] {
        match self {
            MappingScheme::RoBaRaCoCh => ["channel", "column", "rank", "bankgroup", "bank", "row"],
            MappingScheme::ChRaBaRoCo => ["column", "row", "bank", "bankgroup", "rank", "channel"],
        }
    }
}

/// Bit-slicing mapper over power-of-two fanouts, after dropping the
/// transaction offset.
#[derive(Debug, Clone)]
pub struct BitSliceMapper {
    scheme: MappingScheme,
    levels: usize,
    /// (level, bit width) from the least significant slice up.
    slices: Vec<(LevelId, u32)>,
    capacity: u64,
}

impl BitSliceMapper {
    pub fn new(spec: &DeviceSpec, scheme: MappingScheme) -> Result<Self, SpecError> {
        let mut slices = Vec::new();
        let mut bits = TX_OFFSET_BITS;
        for name in scheme.lsb_first() {
            let l = spec.resolve_level(name)?;
            let f = spec.fanout(l);
            if !f.is_power_of_two() {
                return Err(SpecError::Invalid(format!("{name} fanout {f} is not a power of two")));
            }
            let w = f.trailing_zeros();
            slices.push((l, w));
            bits += w;
        }
        if spec.level_count() != slices.len() {
            return Err(SpecError::Invalid(format!(
                "{} expects a six-level hierarchy",
                scheme.name()
            )));
        }
        Ok(BitSliceMapper {
            scheme,
            levels: spec.level_count(),
            slices,
            capacity: 1u64 << bits,
        })
    }
}

impl AddrMapper for BitSliceMapper {
    fn name(&self) -> &str {
        self.scheme.name()
    }

    fn map(&self, addr: u64) -> Result<AddrVec, SimError> {
        if addr >= self.capacity {
            return Err(SimError::OutOfRange {
                addr,
                capacity: self.capacity,
            });
        }
        let mut rest = addr >> TX_OFFSET_BITS;
        let mut v = AddrVec::unset(self.levels);
        for &(l, w) in &self.slices {
            v.set(l, (rest & ((1u64 << w) - 1)) as usize);
            rest >>= w;
        }
        Ok(v)
    }

    fn unmap(&self, v: &AddrVec) -> u64 {
        let mut addr = 0u64;
        for &(l, w) in self.slices.iter().rev() {
            addr = (addr << w) | v.get(l).unwrap_or(0) as u64;
        }
        addr << TX_OFFSET_BITS
    }

    fn capacity(&self) -> u64 {
        self.capacity
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    for scheme in [MappingScheme::RoBaRaCoCh, MappingScheme::ChRaBaRoCo] {
        catalog.register_implementation(
            "AddrMapper",
            scheme.name(),
            Factory::addr_mapper(move |node, ctx| {
                let spec = ctx.dram(node)?;
                let m = BitSliceMapper::new(&spec, scheme).map_err(|e| node.bad_param("impl", e.to_string()))?;
                Ok(Box::new(m))
            }),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standards::{build_ddr4, timing_preset, Organization};

    fn spec_with(fanouts: [usize; 6]) -> DeviceSpec {
        let mut org = Organization::preset("DDR4_8Gb_x8").unwrap();
        org.fanouts = fanouts;
        build_ddr4(&org, &timing_preset("DDR4_3200AA").unwrap()).unwrap()
    }

    #[test]
    fn zero_maps_to_origin() {
        let spec = spec_with([2, 2, 4, 4, 1 << 16, 128]);
        for scheme in [MappingScheme::RoBaRaCoCh, MappingScheme::ChRaBaRoCo] {
            let m = BitSliceMapper::new(&spec, scheme).unwrap();
            assert!(m.map(0).unwrap().as_slice().iter().all(|&i| i == 0));
        }
    }

    #[test]
    fn lowest_bit_selects_channel_in_robaracoch() {
        let spec = spec_with([2, 2, 4, 4, 1 << 16, 128]);
        let m = BitSliceMapper::new(&spec, MappingScheme::RoBaRaCoCh).unwrap();
        assert_eq!(m.map(0x000).unwrap().get(0), Some(0));
        assert_eq!(m.map(0x040).unwrap().get(0), Some(1));
        assert_eq!(m.map(0x080).unwrap().get(5), Some(1));
    }

    #[test]
    fn out_of_range_is_rejected() {
        let spec = spec_with([1, 1, 1, 1, 2, 2]);
        let m = BitSliceMapper::new(&spec, MappingScheme::ChRaBaRoCo).unwrap();
        assert_eq!(m.capacity(), 4 * 64);
        assert!(matches!(m.map(256), Err(SimError::OutOfRange { .. })));
    }
}
