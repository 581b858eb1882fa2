use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use infodyn::hydro::{self, DEFAULT_TOL_IDENTITY};
use infodyn::info::InfoReport;
use infodyn::scenario::{self, ScenarioConfig, BUILTIN_NAMES};
use infodyn::states::StateSpec;
use infodyn::{Error, Grid1D, Units, WaveFunction};

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "infodyn",
    version,
    about = "Wave-packet evolution with information and thermodynamic audits"
)]
struct Cli {
    /// Only print errors and the final verdict.
    #[arg(long, global = true)]
    quiet: bool,

    /// Significant digits in CSV output (overrides the config).
    #[arg(long, global = true, value_name = "N")]
    precision: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario and write its time series.
    Run {
        /// Path to a TOML config, or the name of a built-in scenario.
        scenario: String,
        /// Also write rho, u, v, Q at every grid point of every snapshot.
        #[arg(long)]
        fields_dump: bool,
        /// CSV destination (overrides outputs.csv_path; "-" for stdout).
        #[arg(long, short, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Report information functionals and identities for a single state.
    #[command(group(ArgGroup::new("state").required(true).args(["ho", "gaussian", "coherent", "config"])))]
    Audit {
        /// Oscillator eigenstate.
        #[arg(long, num_args = 2, value_names = ["N", "OMEGA"], allow_negative_numbers = true)]
        ho: Option<Vec<f64>>,
        /// Gaussian packet.
        #[arg(long, num_args = 3, value_names = ["X0", "P0", "VAR0"], allow_negative_numbers = true)]
        gaussian: Option<Vec<f64>>,
        /// Coherent state with complex amplitude RE + i IM.
        #[arg(long, num_args = 3, value_names = ["RE", "IM", "OMEGA"], allow_negative_numbers = true)]
        coherent: Option<Vec<f64>>,
        /// Use the initial state, grid and units of a scenario (path or built-in name).
        #[arg(long, value_name = "SCENARIO")]
        config: Option<String>,
    },
    /// Print the names of the built-in scenarios.
    ListScenarios,
}

/// Failure categories mapped to exit codes.
enum Failure {
    Usage(String),
    Violation(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run {
            ref scenario,
            fields_dump,
            ref output,
        } => run(scenario, fields_dump, output.as_deref(), &cli),
        Command::Audit {
            ref ho,
            ref gaussian,
            ref coherent,
            ref config,
        } => audit(
            ho.as_deref(),
            gaussian.as_deref(),
            coherent.as_deref(),
            config.as_deref(),
            &cli,
        ),
        Command::ListScenarios => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}

fn load_config(arg: &str) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return ScenarioConfig::from_path(path).map_err(|e| Failure::Usage(e.to_string()));
    }
    ScenarioConfig::builtin(arg).ok_or_else(|| {
        Failure::Usage(format!(
            "'{arg}' is neither a readable file nor a built-in scenario ({})",
            BUILTIN_NAMES.join(", ")
        ))
    })
}

fn run(arg: &str, fields_dump: bool, output: Option<&Path>, cli: &Cli) -> Result<(), Failure> {
    let mut cfg = load_config(arg)?;
    if let Some(p) = cli.precision {
        cfg.outputs.precision = p;
    }
    cfg.outputs.fields_dump |= fields_dump;
    let csv_path = output
        .map(Path::to_path_buf)
        .or_else(|| cfg.outputs.csv_path.clone());
    let to_stdout = csv_path.as_deref().map_or(true, |p| p == Path::new("-"));
    if cfg.outputs.fields_dump && to_stdout {
        return Err(Failure::Usage(
            "a fields dump needs a CSV file path, not stdout".into(),
        ));
    }
    let scenario = cfg.prepare().map_err(|e| Failure::Usage(e.to_string()))?;
    let out = scenario
        .run()
        .map_err(|e| Failure::Violation(e.to_string()))?;
    let precision = cfg.outputs.precision;

    let write_err = |e: Error| Failure::Usage(e.to_string());
    if to_stdout {
        scenario::write_csv(&out.rows, precision, io::stdout().lock()).map_err(write_err)?;
    } else {
        let path = csv_path.as_deref().expect("checked above");
        let file = create(path)?;
        scenario::write_csv(&out.rows, precision, BufWriter::new(file)).map_err(write_err)?;
        if cfg.outputs.fields_dump {
            let fpath = scenario::fields_path(path);
            let file = create(&fpath)?;
            scenario::write_fields_csv(
                &out.trajectory,
                &scenario.params.units,
                precision,
                BufWriter::new(file),
            )
            .map_err(write_err)?;
            log::info!("fields written to {}", fpath.display());
        }
    }

    let summary = scenario::summary(&out);
    let mut sink: Box<dyn Write> = if to_stdout {
        Box::new(io::stderr())
    } else {
        Box::new(io::stdout())
    };
    if cli.quiet {
        let verdict = summary.lines().last().unwrap_or_default();
        writeln!(sink, "{verdict}")?;
    } else {
        if let Some(p) = csv_path.as_deref().filter(|_| !to_stdout) {
            writeln!(sink, "csv: {}", p.display())?;
        }
        write!(sink, "{summary}")?;
    }
    if out.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = out.failures().map(|c| c.name).collect();
        Err(Failure::Violation(names.join(", ")))
    }
}

fn create(path: &Path) -> Result<File, Failure> {
    File::create(path).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", path.display())))
}

fn audit(
    ho: Option<&[f64]>,
    gaussian: Option<&[f64]>,
    coherent: Option<&[f64]>,
    config: Option<&str>,
    cli: &Cli,
) -> Result<(), Failure> {
    let (grid, units, spec, tol_slack) = if let Some(arg) = config {
        let cfg = load_config(arg)?;
        let g = &cfg.grid;
        let grid = Grid1D::new(g.x_min, g.x_max, g.n).map_err(|e| Failure::Usage(e.to_string()))?;
        let units =
            Units::new(cfg.units.d, cfg.units.m).map_err(|e| Failure::Usage(e.to_string()))?;
        (grid, units, cfg.initial_state, cfg.tolerances.tol_slack)
    } else {
        let spec = if let Some(v) = ho {
            if v[0] < 0.0 || v[0].fract() != 0.0 || v[0] > u32::MAX as f64 {
                return Err(Failure::Usage(format!(
                    "--ho level must be a non-negative integer, got {}",
                    v[0]
                )));
            }
            StateSpec::HoEigenstate {
                n: v[0] as u32,
                omega: v[1],
            }
        } else if let Some(v) = gaussian {
            StateSpec::Gaussian {
                x0: v[0],
                p0: v[1],
                var0: v[2],
            }
        } else if let Some(v) = coherent {
            StateSpec::Coherent {
                alpha_re: v[0],
                alpha_im: v[1],
                omega: v[2],
            }
        } else {
            unreachable!("clap requires one state flag")
        };
        let grid = Grid1D::new(-20.0, 20.0, 2048).expect("default grid is valid");
        (
            grid,
            Units::default(),
            spec,
            infodyn::info::DEFAULT_TOL_SLACK,
        )
    };
    let wf = spec
        .build(&grid, &units)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let digits = cli.precision.unwrap_or(7);
    let mut out = io::stdout().lock();
    let violations = print_audit(&mut out, &wf, &units, tol_slack, digits)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(violations.join("; ")))
    }
}

fn print_audit(
    out: &mut impl Write,
    wf: &WaveFunction,
    units: &Units,
    tol_slack: f64,
    digits: usize,
) -> Result<Vec<String>, Failure> {
    let f = |x: f64| scenario::format_number(x, digits);
    let report = InfoReport::of(wf).map_err(|e| Failure::Violation(e.to_string()))?;
    let mut violations = Vec::new();

    writeln!(out, "information")?;
    writeln!(out, "  S_q        {}", f(report.s_q))?;
    writeln!(out, "  S_p        {}", f(report.s_p))?;
    writeln!(out, "  S_q + S_p  {}", f(report.s_q + report.s_p))?;
    writeln!(out, "  fisher     {}", f(report.fisher))?;
    writeln!(out, "  mean_x     {}", f(report.mean_x))?;
    writeln!(out, "  var_x      {}", f(report.var_x))?;
    writeln!(out, "  mean_k     {}", f(report.mean_p))?;
    writeln!(out, "  var_k      {}", f(report.var_p))?;
    writeln!(out, "  var_k_cl   {}", f(report.var_p_cl))?;
    writeln!(
        out,
        "  entropy power product  {}",
        f(report.entropy_power_product)
    )?;

    let fields = hydro::decompose(wf, units);
    let vv = hydro::velocity_variances(&fields);
    let partition = hydro::variance_partition_residual(wf, units);
    writeln!(out, "velocities")?;
    writeln!(out, "  var_u      {}", f(vv.var_u))?;
    writeln!(out, "  var_v      {}", f(vv.var_v))?;
    writeln!(out, "  mean_v     {}", f(vv.mean_v))?;
    writeln!(out, "  nodeless   {}", fields.is_nodeless())?;
    writeln!(out, "  m^2(var_u + var_v) - var_p  {}", f(partition))?;
    if partition.abs() > DEFAULT_TOL_IDENTITY {
        violations.push(format!("variance partition residual {partition:e}"));
    }

    writeln!(out, "identities")?;
    let ids = hydro::fisher_identities(wf, units, f64::INFINITY)
        .map_err(|e| Failure::Violation(e.to_string()))?;
    writeln!(out, "  <Q>        {}", f(ids.mean_q))?;
    for (name, r) in ids.iter() {
        let mark = if r.abs() <= DEFAULT_TOL_IDENTITY {
            "ok"
        } else {
            "VIOLATED"
        };
        writeln!(out, "  {name:<28} residual {:>14}  {mark}", f(r))?;
        if r.abs() > DEFAULT_TOL_IDENTITY {
            violations.push(format!("{name} residual {r:e}"));
        }
    }
    let r = report.fisher_identity_residual;
    writeln!(out, "  F = 4(var_k - var_k_cl)      residual {:>14}", f(r))?;

    writeln!(out, "inequality slacks")?;
    for (name, slack) in report.slacks.iter() {
        let mark = if slack >= -tol_slack {
            "ok"
        } else {
            "VIOLATED"
        };
        writeln!(out, "  {name:<34} {:>14}  {mark}", f(slack))?;
        if slack < -tol_slack {
            violations.push(format!("{name} slack {slack:e}"));
        }
    }
    writeln!(
        out,
        "verdict: {}",
        if violations.is_empty() {
            "PASS"
        } else {
            "FAIL"
        }
    )?;
    Ok(violations)
}
