use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use extlab_core::error::Error;
use extlab_core::experiment::{
    compare_files, exit_code, parse_config_with, resolve_seed, run_experiment, sweep_points, ExperimentConfig,
    OutputFormat, SweepAxis, SEED_ENV,
};
use extlab_core::systems::SystemSpec;

#[derive(Parser)]
#[command(name = "extlab", version, about = "Extremal index experiments for series systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the built-in system kinds with an example config fragment.
    ListSystems,
    /// Run one experiment config.
    Run(RunArgs),
    /// Compare two result files.
    Compare(CompareArgs),
    /// Run a config template over a cartesian grid of parameter values.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed and EXTLAB_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads; affects wall time only.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Absolute slack on |Δψ̂| before the sampling band.
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
    /// Width of the sampling band in combined standard errors.
    #[arg(long, default_value_t = 3.0)]
    sigmas: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// `path=v1,v2,...` with a dotted path into the config; repeatable.
    #[arg(long = "set", required = true)]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e) as u8,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ListSystems => {
            list_systems();
            Ok(0)
        }
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn list_systems() {
    for (spec, description) in SystemSpec::catalog() {
        let example = serde_json::to_string(&spec).expect("spec serializes");
        println!("{}\t{description}\t{example}", spec.kind_name());
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidParameter {
                name: "workers",
                reason: "must be at least 1".into(),
            }
            .into());
        }
        b = b.num_threads(w);
    }
    b.build().map_err(|e| Failure {
        code: 1,
        message: format!("cannot start worker pool: {e}"),
    })
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let text = read(&common.config)?;
    let (cfg, _) = parse_config_with(&text, |cfg| apply_overrides(cfg, common)).map_err(|e| Failure {
        code: exit_code(&e.error) as u8,
        message: format!("{}: {e}", common.config.display()),
    })?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, common: &Common) {
    if let Some(r) = common.replicates {
        cfg.replicates = r;
    }
    if let Some(f) = common.format {
        cfg.format = f.into();
    }
}

fn seed_for(cfg: &ExperimentConfig, cli: Option<u64>) -> Result<u64, Failure> {
    let env = std::env::var(SEED_ENV).ok();
    Ok(resolve_seed(cli, cfg.seed, env.as_deref())?)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure {
            code: 1,
            message: format!("{}: {e}", p.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs one config; the summary echo with runtime goes to stderr.
fn execute(cfg: &ExperimentConfig, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let start = Instant::now();
    let report = run_experiment(cfg, seed)?;
    let text = report.output.render(cfg.format)?;
    write_out(out, &text)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let theta = |k: &str| {
        report
            .output
            .summary_f64(k)
            .map(|x| extlab_core::numeric::format_sig(x, 6))
            .unwrap_or_else(|| "-".into())
    };
    eprintln!(
        "seed={seed} theta_minus={} theta_plus={} theta_def2={} def2_discrepancy={} runtime_s={:.3}",
        theta("theta_minus"),
        theta("theta_plus"),
        theta("theta_def2"),
        theta("def2_discrepancy"),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let cfg = load(&args.common)?;
    let seed = seed_for(&cfg, args.common.seed)?;
    pool(args.common.workers)?.install(|| execute(&cfg, seed, args.out.as_deref()))?;
    Ok(0)
}

fn compare(args: CompareArgs) -> Result<u8, Failure> {
    let report = compare_files(&args.a, &args.b, args.tolerance, args.sigmas)?;
    print!("{}", report.render());
    Ok(if report.within { 0 } else { 1 })
}

fn sweep(args: SweepArgs) -> Result<u8, Failure> {
    let text = read(&args.common.config)?;
    let template: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    let axes = args
        .set
        .iter()
        .map(|s| s.parse::<SweepAxis>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut points = sweep_points(&template, &axes)?;
    for (_, cfg) in &mut points {
        apply_overrides(cfg, &args.common);
        cfg.validate()?;
    }
    std::fs::create_dir_all(&args.out).map_err(Error::from)?;
    let workers = pool(args.common.workers)?;
    let mut index = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["point".to_string(), "file".to_string()];
    header.extend(axes.iter().map(|a| a.path.clone()));
    index.write_record(&header).map_err(Error::from)?;
    for (k, (assigned, cfg)) in points.iter().enumerate() {
        let ext = match cfg.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let name = format!("point_{k:03}.{ext}");
        let seed = seed_for(cfg, args.common.seed)?;
        workers.install(|| execute(cfg, seed, Some(&args.out.join(&name))))?;
        let mut rec = vec![k.to_string(), name];
        rec.extend(assigned.iter().map(|(_, v)| v.to_string()));
        index.write_record(&rec).map_err(Error::from)?;
    }
    let index = index.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    std::fs::write(args.out.join("sweep_index.csv"), index).map_err(Error::from)?;
    Ok(0)
}
