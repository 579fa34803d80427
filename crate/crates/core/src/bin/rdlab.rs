use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rdlab::cli::{
    cmd_duality, cmd_equilibrium, cmd_fit_rate, cmd_homogeneous_scan, cmd_simulate, cmd_validate,
    cmd_verify_ck, cmd_verify_eed, cmd_verify_sqrt_distance, parse_config, read_csv, CliError,
    Outcome, RunConfig, CONFIG_KEYS,
};

#[derive(Parser)]
#[command(
    name = "rdlab",
    version,
    about = "Reaction-diffusion entropy lab for αU + βV ⇌ γW"
)]
#[command(after_help = CONFIG_KEYS)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output path: trajectory CSV for `simulate`, report otherwise.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Sampler seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sampler threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override any configuration key, e.g. `--set d2=3`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the system and write the diagnostics CSV.
    Simulate {
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Compute the detailed-balance equilibrium.
    Equilibrium {
        #[arg(long)]
        m1: Option<f64>,
        #[arg(long)]
        m2: Option<f64>,
    },
    /// Scan the homogeneous distance/defect ratio.
    HomogeneousScan {
        #[arg(long)]
        n_grid: Option<usize>,
    },
    /// Estimate the entropy–entropy-dissipation constant on random states.
    VerifyEed {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Estimate the Csiszár–Kullback constant on random states.
    VerifyCk {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Find the second constant of the square-root distance estimate.
    VerifySqrtDistance {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        k1: Option<f64>,
    },
    /// Fit an exponential decay rate to one CSV column.
    FitRate {
        /// Trajectory CSV written by `simulate`.
        input: PathBuf,
        #[arg(long, default_value = "E_rel")]
        column: String,
        #[arg(long, default_value_t = 0.999)]
        min_r2: f64,
    },
    /// Duality margin of two diffusivities.
    Duality { d_a: f64, d_b: f64 },
    /// Re-read a trajectory CSV and check conservation, positivity and time order.
    Validate {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
    },
}

fn load_config(g: &Global, overrides: &[(&str, Option<String>)]) -> Result<RunConfig, CliError> {
    let mut text = match &g.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    // overrides replace config lines with the same key
    let mut extra: Vec<(String, String)> = Vec::new();
    for kv in &g.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        extra.push((k.trim().to_string(), v.trim().to_string()));
    }
    for (k, v) in [
        ("seed", g.seed.map(|s| s.to_string())),
        ("threads", g.threads.map(|t| t.to_string())),
    ]
    .into_iter()
    .chain(overrides.iter().map(|(k, v)| (*k, v.clone())))
    {
        if let Some(v) = v {
            extra.push((k.to_string(), v));
        }
    }
    if !extra.is_empty() {
        let keys: Vec<&str> = extra.iter().map(|(k, _)| k.as_str()).collect();
        text = text
            .lines()
            .map(|l| {
                let key = l
                    .split('#')
                    .next()
                    .unwrap_or("")
                    .split('=')
                    .next()
                    .unwrap_or("")
                    .trim();
                if keys.contains(&key) {
                    format!("# overridden: {l}")
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        text.push('\n');
        for (k, v) in &extra {
            text.push_str(&format!("{k} = {v}\n"));
        }
    }
    Ok(parse_config(&text)?)
}

fn some<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn open_csv(path: &Path) -> Result<rdlab::cli::CsvTable, CliError> {
    let f = File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    read_csv(BufReader::new(f))
}

fn emit(outcome: Outcome, path: Option<&Path>) -> Result<bool, CliError> {
    match path {
        Some(p) => fs::write(p, &outcome.report).map_err(|e| CliError::io(p, e))?,
        None => print!("{}", outcome.report),
    }
    println!("{}", outcome.summary);
    Ok(outcome.passed)
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let g = &cli.global;
    match cli.command {
        Command::Simulate { t_end, n, dt } => {
            let cfg = load_config(
                g,
                &[
                    ("t_end", some(&t_end)),
                    ("n", some(&n)),
                    ("dt_init", some(&dt)),
                ],
            )?;
            let path = g.out.clone().or_else(|| cfg.output.clone());
            let summary = match &path {
                Some(p) => {
                    let f = File::create(p).map_err(|e| CliError::io(p, e))?;
                    let mut w = BufWriter::new(f);
                    let (_, summary) = cmd_simulate(&cfg, &mut w)?;
                    w.flush().map_err(|e| CliError::io(p, e))?;
                    summary
                }
                None => {
                    let stdout = io::stdout();
                    let mut w = BufWriter::new(stdout.lock());
                    let (_, summary) = cmd_simulate(&cfg, &mut w)?;
                    w.flush().map_err(|e| CliError::io("<stdout>", e))?;
                    summary
                }
            };
            eprintln!("{summary}");
            Ok(true)
        }
        Command::Equilibrium { m1, m2 } => {
            let cfg = load_config(g, &[("m1", some(&m1)), ("m2", some(&m2))])?;
            let out = cmd_equilibrium(&cfg)?;
            if let Some(p) = g.out.as_deref() {
                fs::write(p, &out.report).map_err(|e| CliError::io(p, e))?;
            }
            println!("{}", out.summary);
            Ok(out.passed)
        }
        Command::HomogeneousScan { n_grid } => {
            let cfg = load_config(g, &[("n_grid", some(&n_grid))])?;
            emit(
                cmd_homogeneous_scan(&cfg)?,
                g.out.as_deref().or(cfg.report.as_deref()),
            )
        }
        Command::VerifyEed { samples } => {
            let cfg = load_config(g, &[("samples", some(&samples))])?;
            emit(
                cmd_verify_eed(&cfg)?,
                g.out.as_deref().or(cfg.report.as_deref()),
            )
        }
        Command::VerifyCk { samples } => {
            let cfg = load_config(g, &[("samples", some(&samples))])?;
            emit(
                cmd_verify_ck(&cfg)?,
                g.out.as_deref().or(cfg.report.as_deref()),
            )
        }
        Command::VerifySqrtDistance { samples, k1 } => {
            let cfg = load_config(g, &[("samples", some(&samples)), ("k1", some(&k1))])?;
            emit(
                cmd_verify_sqrt_distance(&cfg)?,
                g.out.as_deref().or(cfg.report.as_deref()),
            )
        }
        Command::FitRate {
            input,
            column,
            min_r2,
        } => {
            let table = open_csv(&input)?;
            emit(cmd_fit_rate(&table, &column, min_r2)?, g.out.as_deref())
        }
        Command::Duality { d_a, d_b } => {
            let out = cmd_duality(d_a, d_b)?;
            if let Some(p) = g.out.as_deref() {
                fs::write(p, &out.report).map_err(|e| CliError::io(p, e))?;
            }
            println!("{}", out.summary);
            Ok(out.passed)
        }
        Command::Validate { input, tol } => {
            let table = open_csv(&input)?;
            emit(cmd_validate(&table, tol)?, g.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("rdlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
