use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cholqr::experiment::{
    emit, preset, run_experiment, write_outputs, ExperimentConfig, ExperimentKind, Overrides, ReportFormat, Sweep,
    SweepAxis, PRESET_NAMES,
};
use cholqr::zoo::{self, write_binary, write_csv};
use cholqr::{Algorithm, Error, Family, MatrixSpec};

#[derive(Parser)]
#[command(name = "cholqr", version, about = "CholeskyQR-family experiments on tall-skinny matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run an accuracy, timing or robustness experiment.
    Run(RunArgs),
    /// Generate a test matrix and write it as a fixture.
    Gen(GenArgs),
    /// List the built-in presets, or print one as TOML.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// accuracy, timing or robustness.
    #[arg(long)]
    kind: Option<ExperimentKind>,
    /// Comma-separated algorithm ids.
    #[arg(long, value_delimiter = ',')]
    algo: Option<Vec<Algorithm>>,
    #[arg(long)]
    family: Option<Family>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Family parameter; also a one-point sweep unless --sweep is given.
    #[arg(long, allow_negative_numbers = true)]
    param: Option<f64>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    sweep: Option<Vec<f64>>,
    /// What --sweep replaces: param, m, n, s1, s2, p1 or p2.
    #[arg(long, default_value = "param")]
    axis: SweepAxis,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    s1: Option<usize>,
    #[arg(long)]
    s2: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Report file; stdout when absent and the config names no outputs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, markdown or json. Defaults to the --out extension, else markdown.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, allow_negative_numbers = true)]
    param: f64,
    #[arg(long, default_value_t = zoo::DEFAULT_BLOCKS)]
    blocks: usize,
    #[arg(long, default_value_t = zoo::DEFAULT_DENSITY)]
    density: f64,
    #[arg(long, default_value_t = 1.0)]
    diag: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// bin or csv.
    #[arg(long, default_value = "bin")]
    format: String,
}

enum Failure {
    Error(Error),
    Violations(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn config_from_flags(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let missing = |what: &str| Error::Config(format!("--{what} is required without --config or --preset"));
    let family = args.family.ok_or_else(|| missing("family"))?;
    let m = args.m.ok_or_else(|| missing("m"))?;
    let n = args.n.ok_or_else(|| missing("n"))?;
    let values = match (&args.sweep, args.param) {
        (Some(v), _) => v.clone(),
        (None, Some(p)) => vec![p],
        (None, None) => return Err(missing("param")),
    };
    let param = args.param.unwrap_or(values[0]);
    Ok(ExperimentConfig {
        name: String::new(),
        kind: args.kind.unwrap_or(ExperimentKind::Accuracy),
        algorithms: args.algo.clone().ok_or_else(|| missing("algo"))?,
        matrix: MatrixSpec::new(family, m, n, param, 0),
        sweep: Sweep {
            axis: args.axis,
            values,
        },
        sketch: Default::default(),
        trials: 1,
        base_seed: 0,
        outputs: Default::default(),
        timing: Default::default(),
        threads: None,
    })
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(_), Some(_)) => return Err(Error::Config("use either --config or --preset".into())),
        (Some(path), None) => ExperimentConfig::from_file(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => config_from_flags(args)?,
    };
    Overrides {
        algorithms: args.algo.clone(),
        family: args.family,
        m: args.m,
        n: args.n,
        param: args.param,
        sweep: args.sweep.clone().map(|v| (args.axis, v)),
        trials: args.trials,
        seed: args.seed,
        eps1: args.eps1,
        p1: args.p1,
        eps2: args.eps2,
        p2: args.p2,
        s1: args.s1,
        s2: args.s2,
        kind: args.kind,
    }
    .apply(&mut cfg);
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_format(args: &RunArgs) -> Result<ReportFormat, Error> {
    if let Some(f) = &args.format {
        return f.parse();
    }
    let ext = args
        .out
        .as_deref()
        .and_then(Path::extension)
        .and_then(|e| e.to_str());
    match ext {
        Some(e) => e.parse(),
        None => Ok(ReportFormat::Markdown),
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let cfg = build_config(&args)?;
    let format = output_format(&args)?;
    let report = run_experiment(&cfg)?;
    write_outputs(&report, &cfg.outputs)?;
    let bytes = emit(&report, format)?;
    match &args.out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None if cfg.outputs == Default::default() => io::stdout().write_all(&bytes).map_err(Error::from)?,
        None => {}
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    violation_check(cfg.kind, report.total_violations())
}

fn violation_check(kind: ExperimentKind, violations: usize) -> Result<(), Failure> {
    if kind == ExperimentKind::Robustness && violations > 0 {
        return Err(Failure::Violations(violations));
    }
    Ok(())
}

fn generate(args: GenArgs) -> Result<(), Failure> {
    let spec = MatrixSpec::new(args.family, args.m, args.n, args.param, args.seed)
        .with_blocks(args.blocks)
        .with_density(args.density)
        .with_diag(args.diag);
    if !matches!(args.format.as_str(), "bin" | "csv") {
        return Err(Error::UnsupportedFormat(args.format).into());
    }
    let x = zoo::generate(&spec)?;
    let file = File::create(&args.out).map_err(|e| Error::Io(format!("{}: {e}", args.out.display())))?;
    let mut w = BufWriter::new(file);
    if args.format == "bin" {
        write_binary(&x, &mut w)?;
    } else {
        write_csv(&x, &mut w)?;
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn presets(show: Option<String>) -> Result<(), Failure> {
    match show {
        Some(name) => print!("{}", preset(&name)?.to_toml_string()?),
        None => PRESET_NAMES.iter().for_each(|n| println!("{n}")),
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors; 2 is reserved for bound violations here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Gen(args) => generate(args),
        Command::Presets { show } => presets(show),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Violations(k)) => {
            eprintln!("robustness suite recorded {k} bound violation(s)");
            ExitCode::from(2)
        }
    }
}
