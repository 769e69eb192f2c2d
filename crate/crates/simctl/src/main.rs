use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ramsim::registry::{build_from_str, BuildOptions, Catalog};
use ramsim::tools::{self, GenOptions, Pattern};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "simctl", about = "Run, verify and sweep DRAM simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Directory for stats, the effective config and recorder output.
        #[arg(short, long)]
        outdir: Option<PathBuf>,
    },
    /// Generate a synthetic memory trace.
    Gen {
        #[arg(long)]
        pattern: Pattern,
        #[arg(long)]
        count: u64,
        #[arg(long, default_value_t = 4)]
        rw_ratio: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        bubbles: u64,
        /// Random addresses are drawn from [0, space).
        #[arg(long, default_value_t = 1 << 34)]
        space: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a recorded command trace against a device spec.
    Verify {
        #[arg(long)]
        spec: String,
        /// Config whose `MemorySystem.DRAM` selects organization and timings.
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trace: PathBuf,
        /// Violations to print before summarizing.
        #[arg(long, default_value_t = 20)]
        show: usize,
    },
    /// Run a mitigation x threshold grid and report slowdowns.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        mitigations: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        thresholds: Vec<u64>,
        #[arg(short, long)]
        jobs: Option<usize>,
        /// Write the table as CSV here as well.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

type Outcome = Result<(), (u8, String)>;

fn usage(msg: impl std::fmt::Display) -> (u8, String) {
    (EXIT_USAGE, msg.to_string())
}

fn read(path: &Path) -> Result<String, (u8, String)> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn run(config: &Path, outdir: Option<PathBuf>) -> Outcome {
    let text = read(config)?;
    let catalog = Catalog::with_builtins();
    let mut sim = build_from_str(&catalog, &text, &BuildOptions { outdir }).map_err(usage)?;
    let stats = sim.run().map_err(|e| (EXIT_FAIL, e.to_string()))?;
    print!("{}", stats.render());
    Ok(())
}

fn gen(opts: GenOptions, output: &Path) -> Outcome {
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    }
    let file = fs::File::create(output).map_err(|e| usage(format!("{}: {e}", output.display())))?;
    tools::generate(&opts, file).map_err(|e| (EXIT_FAIL, format!("{}: {e}", output.display())))
}

fn verify(spec: &str, config: Option<&Path>, trace: &Path, show: usize) -> Outcome {
    let text = config.map(read).transpose()?;
    let catalog = Catalog::with_builtins();
    let device = tools::device_from_config(&catalog, spec, text.as_deref()).map_err(usage)?;
    let (records, violations) = tools::verify_file(&device, trace).map_err(usage)?;
    let mut out = std::io::stdout().lock();
    for v in violations.iter().take(show) {
        let _ = writeln!(out, "{v}");
    }
    if violations.len() > show {
        let _ = writeln!(out, "... {} more", violations.len() - show);
    }
    let _ = writeln!(out, "{records} commands, {} violations", violations.len());
    if violations.is_empty() {
        Ok(())
    } else {
        Err((EXIT_FAIL, format!("{} violations", violations.len())))
    }
}

fn sweep(config: &Path, mitigations: &[String], thresholds: &[u64], jobs: Option<usize>, csv: Option<&Path>) -> Outcome {
    let text = read(config)?;
    let catalog = Catalog::with_builtins();
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cells = tools::sweep(&catalog, &text, mitigations, thresholds, jobs).map_err(usage)?;
    let table = tools::render_csv(&cells);
    print!("{table}");
    if let Some(path) = csv {
        fs::write(path, &table).map_err(|e| (EXIT_FAIL, format!("{}: {e}", path.display())))?;
    }
    let failed = cells.iter().filter(|c| c.cycles.is_err()).count();
    if failed > 0 {
        return Err((EXIT_FAIL, format!("{failed} sweep cells failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, outdir } => run(&config, outdir),
        Command::Gen {
            pattern,
            count,
            rw_ratio,
            seed,
            bubbles,
            space,
            output,
        } => gen(
            GenOptions {
                pattern,
                count,
                rw_ratio,
                seed,
                bubbles,
                space,
                start: 0,
            },
            &output,
        ),
        Command::Verify {
            spec,
            config,
            trace,
            show,
        } => verify(&spec, config.as_deref(), &trace, show),
        Command::Sweep {
            config,
            mitigations,
            thresholds,
            jobs,
            csv,
        } => sweep(&config, &mitigations, &thresholds, jobs, csv.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("simctl: {msg}");
            ExitCode::from(code)
        }
    }
}
