use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wsn_fusion::experiment::{
    figure_config, parse_config, reference_table, run_experiment, write_csv, Mode,
};
use wsn_fusion::montecarlo::capture_trace;
use wsn_fusion::Error;

#[derive(Parser)]
#[command(
    name = "wsn-fusion",
    version,
    about = "Decision error probability of fused sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write CSV.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        mode: Option<String>,
        /// AXIS=start:step:end or AXIS=v1,v2 with AXIS one of N, M, p, x_th.
        #[arg(long)]
        sweep: Option<String>,
        /// Comma-separated: or, and, majority, kofn:K.
        #[arg(long)]
        rules: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(short = 'N', long = "sensors")]
        sensors: Option<usize>,
        #[arg(long)]
        x_th: Option<f64>,
        #[arg(long)]
        eta: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated per-hop flip probabilities.
        #[arg(long)]
        hops: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Any other configuration entry as key=value; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Reference error-probability table (x_th = 4.5, N = 3, one 0.1 hop).
    Table2 {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Data series of reference figure 4 to 9 as CSV.
    Fig {
        #[arg(value_parser = clap::value_parser!(u8).range(4..=9))]
        figure: u8,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-hop state lattice of the first trial, as a plain-text table.
    Trace {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long, default_value_t = 300)]
        end: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn split_set(entries: &[String]) -> Result<Vec<(String, String)>, Error> {
    entries
        .iter()
        .map(|e| {
            e.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse {
                    key: "--set".into(),
                    value: e.clone(),
                    reason: "expected KEY=VALUE".into(),
                })
        })
        .collect()
}

fn emit(result: &wsn_fusion::experiment::SweepResult, out: &Option<PathBuf>) -> Result<(), Error> {
    if out.is_none() {
        let stdout = std::io::stdout();
        write_csv(result, stdout.lock())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            mode,
            sweep,
            rules,
            seed,
            out,
            sensors,
            x_th,
            eta,
            trials,
            hops,
            workers,
            set,
        } => {
            let mut overrides = split_set(&set)?;
            let flags = [
                ("mode", mode),
                ("sweep", sweep),
                ("rules", rules),
                ("seed", seed.map(|v| v.to_string())),
                ("out", out.map(|p| p.display().to_string())),
                ("n", sensors.map(|v| v.to_string())),
                ("x_th", x_th.map(|v| v.to_string())),
                ("eta", eta.map(|v| v.to_string())),
                ("trials", trials.map(|v| v.to_string())),
                ("hops", hops),
                ("workers", workers.map(|v| v.to_string())),
            ];
            overrides.extend(
                flags
                    .into_iter()
                    .filter_map(|(k, v)| v.map(|v| (k.to_string(), v))),
            );
            let cfg = parse_config(config.as_deref(), &overrides)?;
            let hot = cfg.base.channel.hops_above_half();
            if !hot.is_empty() {
                eprintln!("warning: hops {hot:?} flip with probability above 0.5");
            }
            let result = run_experiment(&cfg)?;
            emit(&result, &cfg.out)
        }
        Command::Table2 { seed, workers } => {
            let rows = reference_table(seed, workers)?;
            let mut out = std::io::stdout().lock();
            let w = |e| Error::io("<stdout>", e);
            writeln!(
                out,
                "{:<10} {:>16} {:>16} {:>16} {:>16}",
                "rule", "analytic(300)", "analytic(1e4)", "sim(300)", "sim(1e5)"
            )
            .map_err(w)?;
            for r in rows {
                writeln!(
                    out,
                    "{:<10} {:>16.3} {:>16.3} {:>16.3} {:>16.3}",
                    r.rule.to_string(),
                    r.analytic_coarse,
                    r.analytic_fine,
                    r.simulated_coarse,
                    r.simulated_fine
                )
                .map_err(w)?;
            }
            Ok(())
        }
        Command::Fig {
            figure,
            mode,
            trials,
            seed,
            out,
        } => {
            let mut cfg = figure_config(figure)?;
            if let Some(m) = mode {
                cfg.mode = m.parse::<Mode>()?;
            }
            if let Some(t) = trials {
                cfg.base.trials = t;
            }
            if let Some(s) = seed {
                cfg.base.seed = s;
            }
            cfg.out = out;
            let result = run_experiment(&cfg)?;
            emit(&result, &cfg.out)
        }
        Command::Trace {
            config,
            start,
            end,
            seed,
            set,
        } => {
            let mut overrides = split_set(&set)?;
            if config.is_none() && !overrides.iter().any(|(k, _)| k == "eta") {
                overrides.push(("eta".into(), "300".into()));
            }
            if let Some(s) = seed {
                overrides.push(("seed".into(), s.to_string()));
            }
            let cfg = parse_config(config.as_deref(), &overrides)?;
            let trace = capture_trace(&cfg.base, start..end)?;
            trace
                .write_table(std::io::stdout().lock())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
