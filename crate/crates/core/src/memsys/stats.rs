use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Stat {
    Int(u64),
    Float(f64),
}

/// Flat key/value statistics. Keys under `wallclock.` depend on the host
/// and are excluded from determinism comparisons.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsSheet {
    values: BTreeMap<String, Stat>,
}

impl StatsSheet {
    pub fn new() -> Self {
        StatsSheet::default()
    }

    /// Adds to an integer counter, creating it at zero.
    pub fn add(&mut self, key: &str, n: u64) {
        match self.values.entry(key.to_string()).or_insert(Stat::Int(0)) {
            Stat::Int(v) => *v += n,
            Stat::Float(v) => *v += n as f64,
        }
    }

    pub fn set_float(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), Stat::Float(v));
    }

    pub fn get(&self, key: &str) -> Option<&Stat> {
        self.values.get(key)
    }

    /// Integer value of `key`, zero when absent or not an integer.
    pub fn get_int(&self, key: &str) -> u64 {
        match self.values.get(key) {
            Some(Stat::Int(v)) => *v,
            _ => 0,
        }
    }

    pub fn get_float(&self, key: &str) -> Option<f64> {
        match self.values.get(key) {
            Some(Stat::Float(v)) => Some(*v),
            Some(Stat::Int(v)) => Some(*v as f64),
            None => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Stat)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn without_wallclock(&self) -> StatsSheet {
        StatsSheet {
            values: self
                .values
                .iter()
                .filter(|(k, _)| !k.starts_with("wallclock."))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// `key: value` lines, one per statistic, sorted by key.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = match v {
                Stat::Int(n) => writeln!(out, "{k}: {n}"),
                Stat::Float(x) => writeln!(out, "{k}: {x:.6}"),
            };
        }
        out
    }
}
