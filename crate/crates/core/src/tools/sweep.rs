use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_yaml::{Mapping, Value};

use crate::registry::{build_from_str, BuildOptions, Catalog};

/// Name of the no-mitigation baseline in sweep tables.
pub const BASELINE: &str = "none";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub mitigation: String,
    pub t_rh: u64,
    /// Simulated cycles, or the failure of this cell.
    pub cycles: Result<u64, String>,
    /// Cycles relative to the baseline, when both ran.
    pub slowdown: Option<f64>,
}

/// `base` with the controller's plugin list replaced by a single mitigation
/// (or emptied for the baseline).
pub fn with_mitigation(base: &str, mitigation: Option<&str>, t_rh: u64) -> Result<String, String> {
    let mut doc: Value = serde_yaml::from_str(base).map_err(|e| e.to_string())?;
    let ctrl = doc
        .get_mut("MemorySystem")
        .and_then(|m| m.get_mut("Controller"))
        .and_then(Value::as_mapping_mut)
        .ok_or("config has no MemorySystem.Controller mapping")?;
    let plugins = match mitigation {
        None => Vec::new(),
        Some(m) => {
            let mut p = Mapping::new();
            p.insert("impl".into(), m.into());
            p.insert("t_rh".into(), t_rh.into());
            vec![Value::Mapping(p)]
        }
    };
    ctrl.insert("plugins".into(), Value::Sequence(plugins));
    serde_yaml::to_string(&doc).map_err(|e| e.to_string())
}

/// Builds and runs one configuration, returning its cycle count.
pub fn run_cycles(catalog: &Catalog, config: &str) -> Result<u64, String> {
    let mut sim = build_from_str(catalog, config, &BuildOptions::default()).map_err(|e| e.to_string())?;
    let stats = sim.run().map_err(|e| e.to_string())?;
    Ok(stats.get_int("cycles"))
}

/// Runs the baseline plus every `(mitigation, threshold)` cell on up to
/// `jobs` threads. A failing cell is reported in its row; the rest still
/// run.
pub fn sweep(catalog: &Catalog, base: &str, mitigations: &[String], thresholds: &[u64], jobs: usize) -> Result<Vec<SweepCell>, String> {
    let baseline_cfg = with_mitigation(base, None, 0)?;
    let mut jobs_list: Vec<(Option<String>, u64, Result<String, String>)> = vec![(None, 0, Ok(baseline_cfg))];
    for m in mitigations {
        for &t in thresholds {
            jobs_list.push((Some(m.clone()), t, with_mitigation(base, Some(m), t)));
        }
    }
    let results: Vec<Mutex<Option<Result<u64, String>>>> = jobs_list.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, jobs_list.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((_, _, cfg)) = jobs_list.get(i) else { break };
                let r = cfg.clone().and_then(|c| run_cycles(catalog, &c));
                *results[i].lock().expect("result slot") = Some(r);
            });
        }
    });
    let mut results = results.into_iter().map(|m| m.into_inner().expect("result slot").expect("every job ran"));
    let baseline = results.next().expect("baseline job");
    let mut cells = Vec::new();
    for &t in thresholds {
        cells.push(SweepCell {
            mitigation: BASELINE.into(),
            t_rh: t,
            cycles: baseline.clone(),
            slowdown: baseline.as_ref().ok().map(|_| 1.0),
        });
    }
    for ((m, t, _), cycles) in jobs_list.into_iter().skip(1).zip(results) {
        let slowdown = match (&cycles, &baseline) {
            (Ok(c), Ok(b)) if *b > 0 => Some(*c as f64 / *b as f64),
            _ => None,
        };
        cells.push(SweepCell {
            mitigation: m.expect("mitigation cell"),
            t_rh: t,
            cycles,
            slowdown,
        });
    }
    Ok(cells)
}

/// `mitigation,t_rh,cycles,slowdown,error`
pub fn render_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("mitigation,t_rh,cycles,slowdown,error\n");
    for c in cells {
        let (cycles, error) = match &c.cycles {
            Ok(n) => (n.to_string(), String::new()),
            Err(e) => (String::new(), format!("\"{}\"", e.replace('"', "'"))),
        };
        let slowdown = c.slowdown.map(|s| format!("{s:.6}")).unwrap_or_default();
        out.push_str(&format!("{},{},{cycles},{slowdown},{error}\n", c.mitigation, c.t_rh));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plugin_list_is_replaced() {
        let base = "MemorySystem:\n  Controller:\n    impl: GenericController\n    plugins:\n      - impl: NoOp\n";
        let out = with_mitigation(base, Some("PARA"), 50).unwrap();
        let v: Value = serde_yaml::from_str(&out).unwrap();
        let plugins = v["MemorySystem"]["Controller"]["plugins"].as_sequence().unwrap();
        assert_eq!(plugins.len(), 1);
        assert_eq!(plugins[0]["impl"].as_str(), Some("PARA"));
        assert_eq!(plugins[0]["t_rh"].as_u64(), Some(50));
        let none = with_mitigation(base, None, 0).unwrap();
        let v: Value = serde_yaml::from_str(&none).unwrap();
        assert!(v["MemorySystem"]["Controller"]["plugins"].as_sequence().unwrap().is_empty());
    }

    #[test]
    fn missing_controller_is_an_error() {
        assert!(with_mitigation("seed: 1\n", Some("PARA"), 5).is_err());
    }

    #[test]
    fn csv_rows() {
        let cells = vec![
            SweepCell {
                mitigation: "Ideal".into(),
                t_rh: 10,
                cycles: Ok(120),
                slowdown: Some(1.2),
            },
            SweepCell {
                mitigation: "PARA".into(),
                t_rh: 10,
                cycles: Err("bad \"p\"".into()),
                slowdown: None,
            },
        ];
        let csv = render_csv(&cells);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "Ideal,10,120,1.200000,");
        assert_eq!(lines[2], "PARA,10,,,\"bad 'p'\"");
    }
}
