#![allow(dead_code)]

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ramsim::addr::AddrVec;
use ramsim::dramspec::{library, DeviceSpec, NodeTree, SpecDef};
use ramsim::memsys::{AddrMapper, BitSliceMapper, MappingScheme, StatsSheet};
use ramsim::registry::{build_from_str, BuildOptions, Catalog, Factory};
use ramsim::standards::{ddr4_def, timing_preset, Organization};
use ramsim::tools::{self, CommandRecord, GenOptions, Pattern, Violation};

pub fn ddr4() -> Arc<DeviceSpec> {
    Arc::new(ramsim::standards::build_default("DDR4").unwrap())
}

pub fn ddr4_parts() -> (Organization, ramsim::standards::TimingValueTable) {
    let org = Organization::preset("DDR4_8Gb_x8").unwrap();
    (org, timing_preset("DDR4_3200AA").unwrap())
}

/// Full config text around a trace. `plugins` is a YAML flow sequence.
pub fn config(trace: &Path, dram: &str, row_policy: &str, plugins: &str) -> String {
    format!(
        "seed: 7
Frontend:
  impl: TraceFrontend
  path: {}
MemorySystem:
  impl: GenericDRAMSystem
  DRAM:
    impl: {dram}
  AddrMapper:
    impl: RoBaRaCoCh
  Controller:
    impl: GenericController
    Scheduler:
      impl: FRFCFS
    RefreshManager:
      impl: AllBankRefresh
    RowPolicy:
      impl: {row_policy}
    plugins: {plugins}
",
        trace.display()
    )
}

pub fn recorder(path: &Path) -> String {
    format!("[{{impl: CommandTrace, path: {}}}]", path.display())
}

pub fn run(catalog: &Catalog, cfg: &str, outdir: Option<&Path>) -> Result<StatsSheet, String> {
    let opts = BuildOptions {
        outdir: outdir.map(Path::to_path_buf),
    };
    let mut sim = build_from_str(catalog, cfg, &opts).map_err(|e| e.to_string())?;
    sim.run().map_err(|e| e.to_string())
}

pub fn write_trace(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn gen_trace(dir: &Path, name: &str, pattern: Pattern, count: u64, bubbles: u64, seed: u64) -> PathBuf {
    let opts = GenOptions {
        pattern,
        count,
        seed,
        bubbles,
        ..Default::default()
    };
    let p = dir.join(name);
    tools::generate(&opts, std::fs::File::create(&p).unwrap()).unwrap();
    p
}

pub fn verify(spec: &DeviceSpec, trace: &Path) -> (u64, Vec<Violation>) {
    tools::verify_file(spec, trace).unwrap()
}

pub fn read_records(spec: &DeviceSpec, trace: &Path) -> Vec<CommandRecord> {
    let levels: Vec<String> = spec.levels().iter().map(|l| l.name.clone()).collect();
    let f = std::fs::File::open(trace).unwrap();
    tools::read_command_trace(std::io::BufReader::new(f), &levels)
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap()
}

/// Byte address of `(rank, bankgroup, bank, row, column)` on channel 0.
pub fn addr_of(spec: &DeviceSpec, rank: i64, bg: i64, bank: i64, row: i64, col: i64) -> u64 {
    let m = BitSliceMapper::new(spec, MappingScheme::RoBaRaCoCh).unwrap();
    m.unmap(&AddrVec::from_slice(&[0, rank, bg, bank, row, col]))
}

/// Reads cycling over `rows` of bank 0, mixed with a fraction of random
/// traffic.
pub fn hammer_trace(spec: &DeviceSpec, rows: &[i64], count: usize, random_share: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nrows = spec.fanout(4) as i64;
    let mut out = String::new();
    for i in 0..count {
        let a = if rng.gen_bool(random_share) {
            addr_of(
                spec,
                rng.gen_range(0..2),
                rng.gen_range(0..4),
                rng.gen_range(0..4),
                rng.gen_range(0..nrows),
                rng.gen_range(0..128),
            )
        } else {
            addr_of(spec, 0, 0, 0, rows[i % rows.len()], (i % 128) as i64)
        };
        writeln!(out, "0 R {a:#x}").unwrap();
    }
    out
}

/// Brute-force victim exposure over a recorded trace: activations of rows
/// within `radius` since the victim's own last activation or refresh. An
/// all-bank refresh `k` of a rank covers rows `k*ceil(rows/8192)` onward in
/// every bank of that rank. Returns the largest exposure seen.
pub fn max_exposure(spec: &DeviceSpec, records: &[CommandRecord], radius: i64) -> u64 {
    let rows = spec.fanout(4) as i64;
    let per_ref = (rows + 8191) / 8192;
    let mut exposure: HashMap<[i64; 4], HashMap<i64, u64>> = HashMap::new();
    let mut ref_count: HashMap<[i64; 2], i64> = HashMap::new();
    let mut worst = 0;
    for r in records {
        let a = &r.addr;
        match r.cmd.as_str() {
            "ACT" => {
                let bank = exposure.entry([a[0], a[1], a[2], a[3]]).or_default();
                bank.remove(&a[4]);
                for v in (a[4] - radius).max(0)..=(a[4] + radius).min(rows - 1) {
                    if v != a[4] {
                        let e = bank.entry(v).or_insert(0);
                        *e += 1;
                        worst = worst.max(*e);
                    }
                }
            }
            "REFab" => {
                let k = ref_count.entry([a[0], a[1]]).or_insert(0);
                let (lo, hi) = (*k * per_ref, (*k + 1) * per_ref);
                *k = (*k + 1) % 8192;
                for (key, bank) in exposure.iter_mut() {
                    if key[0] == a[0] && key[1] == a[1] {
                        bank.retain(|row, _| !(lo..hi).contains(row));
                    }
                }
            }
            _ => {}
        }
    }
    worst
}

/// Exact counts over a stream, for checking a Misra-Gries table.
pub fn exact_counts(stream: &[u32]) -> HashMap<u32, u64> {
    let mut m = HashMap::new();
    for &k in stream {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

/// One hand-simulated readiness scenario on a DDR4-3200 rank pair.
pub struct Golden {
    pub name: &'static str,
    pub setup: Vec<(&'static str, [i64; 6], u64)>,
    pub query: (&'static str, [i64; 6]),
    pub expect: u64,
}

const B0: [i64; 6] = [0, 0, 0, 0, 10, -1];
const B0_COL: [i64; 6] = [0, 0, 0, 0, 10, 5];
const B0_BANK: [i64; 6] = [0, 0, 0, 0, -1, -1];
const B1_SAME_BG: [i64; 6] = [0, 0, 0, 1, 10, -1];
const B1_SAME_BG_COL: [i64; 6] = [0, 0, 0, 1, 10, 5];
const BG1: [i64; 6] = [0, 0, 1, 0, 10, -1];
const BG1_COL: [i64; 6] = [0, 0, 1, 0, 10, 5];
const RANK0: [i64; 6] = [0, 0, -1, -1, -1, -1];
const RANK1_ROW: [i64; 6] = [0, 1, 0, 0, 10, -1];
const RANK1_COL: [i64; 6] = [0, 1, 0, 0, 10, 5];

pub fn goldens() -> Vec<Golden> {
    vec![
        Golden {
            name: "ACT to RD waits nRCD",
            setup: vec![("ACT", B0, 0)],
            query: ("RD", B0_COL),
            expect: 22,
        },
        Golden {
            name: "ACT to WR waits nRCD",
            setup: vec![("ACT", B0, 0)],
            query: ("WR", B0_COL),
            expect: 22,
        },
        Golden {
            name: "ACT to PRE waits nRAS",
            setup: vec![("ACT", B0, 0)],
            query: ("PRE", B0_BANK),
            expect: 52,
        },
        Golden {
            name: "PRE to ACT bounded by nRC and nRP",
            setup: vec![("ACT", B0, 0), ("PRE", B0_BANK, 52)],
            query: ("ACT", B0),
            expect: 74,
        },
        Golden {
            name: "late PRE to ACT waits nRP",
            setup: vec![("ACT", B0, 0), ("PRE", B0_BANK, 100)],
            query: ("ACT", B0),
            expect: 122,
        },
        Golden {
            name: "ACT to ACT same bank group waits nRRD_L",
            setup: vec![("ACT", B0, 0)],
            query: ("ACT", B1_SAME_BG),
            expect: 8,
        },
        Golden {
            name: "ACT to ACT other bank group waits nRRD_S",
            setup: vec![("ACT", B0, 0)],
            query: ("ACT", BG1),
            expect: 4,
        },
        Golden {
            name: "fifth ACT waits for the nFAW window",
            setup: vec![
                ("ACT", [0, 0, 0, 0, 10, -1], 0),
                ("ACT", [0, 0, 1, 0, 10, -1], 4),
                ("ACT", [0, 0, 2, 0, 10, -1], 8),
                ("ACT", [0, 0, 3, 0, 10, -1], 12),
            ],
            query: ("ACT", [0, 0, 1, 1, 10, -1]),
            expect: 34,
        },
        Golden {
            name: "RD to RD same bank group waits nCCD_L",
            setup: vec![("ACT", B0, 0), ("ACT", B1_SAME_BG, 8), ("RD", B0_COL, 30)],
            query: ("RD", B1_SAME_BG_COL),
            expect: 38,
        },
        Golden {
            name: "RD to RD other bank group waits nCCD_S",
            setup: vec![("ACT", B0, 0), ("ACT", BG1, 4), ("RD", B0_COL, 30)],
            query: ("RD", BG1_COL),
            expect: 34,
        },
        Golden {
            name: "RD to RD other rank waits nBL + nRTRS",
            setup: vec![("ACT", B0, 0), ("ACT", RANK1_ROW, 1), ("RD", B0_COL, 30)],
            query: ("RD", RANK1_COL),
            expect: 36,
        },
        Golden {
            name: "WR to RD same bank group waits nCWL + nBL + nWTR_L",
            setup: vec![("ACT", B0, 0), ("WR", B0_COL, 30)],
            query: ("RD", B0_COL),
            expect: 62,
        },
        Golden {
            name: "WR to RD other bank group waits nCWL + nBL + nWTR_S",
            setup: vec![("ACT", B0, 0), ("ACT", BG1, 4), ("WR", B0_COL, 30)],
            query: ("RD", BG1_COL),
            expect: 54,
        },
        Golden {
            name: "RD to WR waits nCL + nBL + 2 - nCWL",
            setup: vec![("ACT", B0, 0), ("RD", B0_COL, 30)],
            query: ("WR", B0_COL),
            expect: 42,
        },
        Golden {
            name: "RD to PRE waits nRTP",
            setup: vec![("ACT", B0, 0), ("RD", B0_COL, 50)],
            query: ("PRE", B0_BANK),
            expect: 62,
        },
        Golden {
            name: "WR to PRE waits write recovery",
            setup: vec![("ACT", B0, 0), ("WR", B0_COL, 30)],
            query: ("PRE", B0_BANK),
            expect: 74,
        },
        Golden {
            name: "REFab blacks out ACT for nRFC",
            setup: vec![("REFab", RANK0, 100)],
            query: ("ACT", B0),
            expect: 660,
        },
        Golden {
            name: "REFab waits nRP after PREab",
            setup: vec![("ACT", B0, 0), ("PREab", RANK0, 60)],
            query: ("REFab", RANK0),
            expect: 82,
        },
        Golden {
            name: "PREab waits nRAS of any open bank",
            setup: vec![("ACT", BG1, 10)],
            query: ("PREab", RANK0),
            expect: 62,
        },
    ]
}

/// Earliest issue cycle of the golden's query after replaying its setup.
pub fn golden_ready(spec: &Arc<DeviceSpec>, g: &Golden) -> u64 {
    let mut tree = NodeTree::new(Arc::clone(spec), 0);
    for (cmd, addr, clk) in &g.setup {
        let c = spec.resolve_command(cmd).unwrap();
        tree.issue(c, &AddrVec::from_slice(addr), *clk);
    }
    let c = spec.resolve_command(g.query.0).unwrap();
    tree.ready_at(c, &AddrVec::from_slice(&g.query.1))
}

/// A deliberately broken DDR4 variant for checking verifier sensitivity.
pub struct Mutation {
    pub name: &'static str,
    pub row_policy: &'static str,
    pub apply: fn(&mut SpecDef),
}

fn drop_constraints(def: &mut SpecDef, f: impl Fn(&ramsim::dramspec::ConstraintDef) -> bool) {
    let before = def.constraints.len();
    def.constraints.retain(|c| !f(c));
    assert!(def.constraints.len() < before, "mutation matched no constraint");
}

pub fn mutations() -> Vec<Mutation> {
    vec![
        Mutation {
            name: "nRCD dropped",
            row_policy: "OpenRow",
            apply: |d| drop_constraints(d, |c| c.latency == "nRCD"),
        },
        Mutation {
            name: "bank nRP dropped",
            row_policy: "OpenRow",
            apply: |d| drop_constraints(d, |c| c.latency == "nRP" && c.level == "bank"),
        },
        Mutation {
            name: "bank nRAS dropped",
            row_policy: "OpenRow",
            apply: |d| drop_constraints(d, |c| c.latency == "nRAS" && c.level == "bank"),
        },
        Mutation {
            name: "nFAW dropped",
            row_policy: "OpenRow",
            apply: |d| drop_constraints(d, |c| c.latency == "nFAW"),
        },
        Mutation {
            name: "nRRD_S dropped",
            row_policy: "OpenRow",
            apply: |d| drop_constraints(d, |c| c.latency == "nRRD_S"),
        },
        Mutation {
            name: "nCCD_L dropped",
            row_policy: "OpenRow",
            apply: |d| drop_constraints(d, |c| c.latency == "nCCD_L"),
        },
        Mutation {
            name: "write-to-read turnaround dropped",
            row_policy: "OpenRow",
            apply: |d| drop_constraints(d, |c| c.latency.contains("nWTR")),
        },
        Mutation {
            name: "nRFC dropped",
            row_policy: "OpenRow",
            apply: |d| drop_constraints(d, |c| c.latency == "nRFC"),
        },
        Mutation {
            name: "rank-to-rank switching dropped",
            row_policy: "OpenRow",
            apply: |d| drop_constraints(d, |c| c.sibling),
        },
        Mutation {
            name: "REFab prerequisite dropped",
            row_policy: "OpenRow",
            apply: |d| d.prereqs.retain(|b| b.command != "REFab"),
        },
        Mutation {
            name: "RDA row close skipped",
            row_policy: "ClosedRow",
            apply: |d| {
                d.actions
                    .retain(|b| !(b.command == "RDA" && std::ptr::eq(b.behavior, &library::CLOSE_ROW)))
            },
        },
    ]
}

/// A catalog where `DRAM: {impl: DDR4Mutant}` builds the mutated device.
pub fn mutant_catalog(m: &Mutation) -> Catalog {
    let (org, timings) = ddr4_parts();
    let mut def = ddr4_def(&org, &timings).unwrap();
    (m.apply)(&mut def);
    let spec = Arc::new(def.finalize().unwrap());
    let mut catalog = Catalog::with_builtins();
    catalog
        .register_implementation("DRAM", "DDR4Mutant", Factory::dram(move |_, _| Ok(Arc::clone(&spec))))
        .unwrap();
    catalog
}

/// Config for a mutant run with a small watchdog, so livelocked variants
/// end quickly.
pub fn mutant_config(trace: &Path, row_policy: &str, out: &Path) -> String {
    config(trace, "DDR4Mutant", row_policy, &recorder(out)).replace(
        "    impl: GenericController\n",
        "    impl: GenericController\n    watchdog: 20000\n",
    )
}
