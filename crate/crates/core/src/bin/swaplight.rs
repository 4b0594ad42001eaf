use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use swaplight::scenario::{
    analyze_records, run_scenario, validate_config, RunReport, RunSummary, Scenario, Severity,
};
use swaplight::Error;

#[derive(Parser)]
#[command(name = "swaplight", version, about = "Run, validate and analyze swap-squeezing scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and analyze a scenario file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        #[arg(long, value_enum)]
        whitening: Option<Switch>,
    },
    /// Check a scenario file and list diagnostics.
    Validate { config: PathBuf },
    /// Analyze an existing records file.
    Analyze {
        records: PathBuf,
        /// Defaults to `<records dir>/analysis`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        #[arg(long, value_enum)]
        whitening: Option<Switch>,
    },
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_config_error() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn print_report(summary: &RunSummary) {
    let r: &RunReport = &summary.report;
    println!("{} ({:?}), seed {}, {} cycles", r.name, r.kind, r.seed, r.cycles);
    if let Some(note) = &r.calibration_note {
        println!("calibration: {note}");
    }
    if let Some(m) = &r.mean_decay {
        println!(
            "mean decay: rate {:.1}/s (expected {:.1}), x/p amplitude ratio {:.3} (expected {:.3})",
            m.rate_p, m.expected_rate, m.amplitude_ratio, m.expected_ratio
        );
    }
    if let Some(s) = &r.spectrum {
        let width = s
            .dip_width_hz
            .map_or_else(|| "none".to_string(), |w| format!("{w:.0} Hz"));
        println!(
            "spectrum: {:.2} dB at zero offset (analytic {:.2} dB), dip width {width}",
            s.zero_offset_db, s.analytic_zero_offset_db
        );
    }
    if let Some(m) = &r.modes {
        for e in m.modes.iter().take(4) {
            println!(
                "mode {}: {:+.2} dB held-out ({:+.2} in-sample), rate {:.1}/s",
                e.index, e.held_out_db, e.db, e.fit.rate
            );
        }
        println!("significant modes: {:?}", m.significant);
        match (&m.duan, &m.duan_error) {
            (Some(d), _) => println!(
                "duan: {:.3} +/- {:.3}, certified: {}",
                d.value, d.sigma, d.certified
            ),
            (None, Some(e)) => println!("duan: not evaluated ({e})"),
            _ => {}
        }
    }
    println!("artifacts in {}", summary.directory.display());
}

fn run(
    config: &Path,
    seed: Option<u64>,
    cycles: Option<usize>,
    out: Option<PathBuf>,
    force: bool,
    whitening: Option<Switch>,
) -> ExitCode {
    let mut scenario = match Scenario::load(config) {
        Ok(s) => s,
        Err(Error::Io(e)) => {
            eprintln!("error: cannot read {}: {e}", config.display());
            return ExitCode::from(1);
        }
        Err(e) => return exit_for(&e),
    };
    if let Some(s) = seed {
        scenario.acquisition.rng_seed = s;
    }
    if let Some(n) = cycles {
        scenario.acquisition.n_cycles = n;
    }
    if let Some(w) = whitening {
        scenario.analysis.whitening = matches!(w, Switch::On);
    }
    match run_scenario(&scenario, out.as_deref(), force) {
        Ok(summary) => {
            print_report(&summary);
            ExitCode::SUCCESS
        }
        Err(e) => exit_for(&e),
    }
}

fn validate(config: &Path) -> ExitCode {
    match validate_config(config) {
        Ok(diags) => {
            for d in &diags {
                println!("{d}");
            }
            if diags.iter().any(|d| d.severity == Severity::Error) {
                ExitCode::from(1)
            } else {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config.display());
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            cycles,
            out,
            force,
            whitening,
        } => run(&config, seed, cycles, out, force, whitening),
        Command::Validate { config } => validate(&config),
        Command::Analyze {
            records,
            out,
            force,
            whitening,
        } => {
            let out = out.unwrap_or_else(|| {
                records
                    .parent()
                    .unwrap_or_else(|| Path::new("."))
                    .join("analysis")
            });
            let w = whitening.map(|w| matches!(w, Switch::On));
            match analyze_records(&records, &out, w, force) {
                Ok(summary) => {
                    print_report(&summary);
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
    }
}
