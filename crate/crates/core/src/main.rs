use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spinflow::dirac::{clamp_rho, conformal_factor, symbol_ratio};
use spinflow::error::ConfigError;
use spinflow::flow::initial_data;
use spinflow::shell::config::{merge, parse_entries, resolve, Entry, Mode, ResolvedConfig, RunConfig};
use spinflow::shell::verify::{all_passed, verify_suite, VerifyOptions};
use spinflow::shell::{exit, init_thread_pool, run};

#[derive(Parser)]
#[command(name = "spinflow", version, about = "Spinorial heat flow simulator and verification suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the spinor flow.
    Flow(RunArgs),
    /// Run the scalar heat-kernel toy model.
    Toy2d(RunArgs),
    /// Run the named property checks.
    Verify {
        /// Only run checks whose name starts with this prefix (repeatable).
        #[arg(long)]
        only: Vec<String>,
    },
    /// Sweep the squared-operator symbol ratio over octaves of k.
    Symbol {
        #[command(flatten)]
        run: RunArgs,
        /// Lowest probe wavenumber.
        #[arg(long, default_value_t = 8.0)]
        k0: f64,
        #[arg(long, default_value_t = 3)]
        octaves: u32,
        /// CSV destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` overrides, applied after the file.
    overrides: Vec<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Config(m) => (exit::CONFIG, format!("config error: {m}")),
            Failure::Runtime(m) => (exit::RUNTIME, format!("error: {m}")),
        };
        eprintln!("{msg}");
        ExitCode::from(code as u8)
    }
}

fn load_config(args: &RunArgs, mode: Mode) -> Result<ResolvedConfig, Failure> {
    let located = |origin: &str, e: ConfigError| Failure::Config(format!("{origin}: {e}"));
    let base = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            parse_entries(&text).map_err(|e| located(&path.display().to_string(), e))?
        }
        None => Vec::new(),
    };
    let mut overrides: Vec<Entry> = Vec::new();
    for (i, raw) in args.overrides.iter().enumerate() {
        let origin = format!("override #{}", i + 1);
        let mut parsed = parse_entries(raw).map_err(|e| located(&origin, e))?;
        if parsed.len() != 1 {
            return Err(Failure::Config(format!("{origin}: expected one key=value, got `{raw}`")));
        }
        overrides.push(parsed.remove(0));
    }
    let mut entries = merge(base, overrides);
    match entries.iter().find(|e| e.key == "mode") {
        Some(e) if e.value != mode.name() => {
            return Err(Failure::Config(format!(
                "line {}: mode `{}` does not match the `{}` subcommand",
                e.line,
                e.value,
                mode.name()
            )))
        }
        Some(_) => {}
        None => entries.push(Entry {
            line: 0,
            key: "mode".into(),
            value: mode.name().into(),
        }),
    }
    resolve(&entries).map_err(|e| {
        let key = match &e {
            ConfigError::UnknownKey { key, .. } | ConfigError::Type { key, .. } | ConfigError::Constraint { key, .. } => {
                Some(key.as_str())
            }
            ConfigError::Syntax { .. } => None,
        };
        let from_override = key.is_some_and(|k| args.overrides.iter().any(|o| o.split('=').next().map(str::trim) == Some(k)));
        match (&args.config, from_override) {
            (_, true) => Failure::Config(format!("override: {e}")),
            (Some(path), false) => located(&path.display().to_string(), e),
            (None, false) => Failure::Config(e.to_string()),
        }
    })
}

fn run_mode(args: &RunArgs, mode: Mode) -> Result<ExitCode, Failure> {
    let cfg = load_config(args, mode)?;
    let report = run::execute(&cfg).map_err(|e| match e {
        spinflow::error::FlowError::Config(m) | spinflow::error::FlowError::UnknownPreset(m) => Failure::Config(m),
        spinflow::error::FlowError::Grid(g) => Failure::Config(g.to_string()),
        other => Failure::Runtime(other.to_string()),
    })?;
    println!(
        "{}: {} steps, t = {}, output in {}",
        report.termination,
        report.steps,
        report.t,
        report.outdir.display()
    );
    if report.sup_weighted_rate.is_finite() {
        println!("sup weighted rate C = {}", report.sup_weighted_rate);
    }
    Ok(if report.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(exit::RUNTIME as u8)
    })
}

fn symbol_sweep(args: &RunArgs, k0: f64, octaves: u32, out: Option<&Path>) -> Result<ExitCode, Failure> {
    let cfg = load_config(args, Mode::Flow)?;
    let RunConfig::Flow(fc) = cfg.run else {
        return Err(Failure::Config("symbol sweep needs a flow configuration".into()));
    };
    let grid = fc.grid().map_err(|e| Failure::Config(e.to_string()))?;
    let rho = clamp_rho(
        &conformal_factor(&initial_data(&fc.init, grid, fc.seed)),
        fc.rho_floor,
    );
    let mut csv = String::from("k,lambda_h,ratio,deviation\n");
    for j in 0..octaves {
        let k = k0 * 2f64.powi(j as i32);
        let s = symbol_ratio(&rho, [k, 0.0, 0.0]);
        csv.push_str(&format!("{},{},{},{}\n", k, s.lambda_h, s.ratio, s.deviation()));
    }
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_thread_pool() {
        return Failure::Config(e).report();
    }
    let result = match &cli.command {
        Command::Flow(args) => run_mode(args, Mode::Flow),
        Command::Toy2d(args) => run_mode(args, Mode::Toy2d),
        Command::Verify { only } => {
            let results = verify_suite(&VerifyOptions::default(), only);
            for r in &results {
                println!("{r}");
            }
            let passed = results.iter().filter(|r| r.passed).count();
            println!("{passed}/{} checks passed", results.len());
            Ok(if all_passed(&results) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(exit::VERIFY_FAILED as u8)
            })
        }
        Command::Symbol { run, k0, octaves, out } => symbol_sweep(run, *k0, *octaves, out.as_deref()),
    };
    result.unwrap_or_else(Failure::report)
}
