use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use macrodiv::closed_forms::{
    async_capacity_limit, async_outage_limit, ergodic_capacity, outage_capacity, ts_ergodic_rate,
    two_tx_alamouti_rate,
};
use macrodiv::experiments::{
    ccdf_to_csv, db_to_linear, default_axis_values, emit, emit_ccdf, parse_metrics, parse_schemes,
    rows_to_csv, run_ccdf, run_sweep, Axis, FixedParams, Format, Metric, RunFile, SweepConfig,
    DEFAULT_OUTAGE_TRIALS,
};
use macrodiv::ofdm::{worst_case_capacity, worst_case_outage, OfdmConfig};
use macrodiv::par::with_workers;
use macrodiv::schemes::Sampling;
use macrodiv::{Error, Result};

#[derive(Parser)]
#[command(
    name = "macrodiv",
    version,
    about = "Ergodic and outage rates over intermittent block fading"
)]
struct Cli {
    /// worker threads for Monte Carlo trials (0 = all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form rates at one operating point
    Capacity(PointArgs),
    /// Sweep one parameter and emit a table of rates
    Sweep(SweepArgs),
    /// Empirical CCDF of the instantaneous rate
    Ccdf(CcdfArgs),
    /// Run the built-in consistency checks
    Verify(VerifyArgs),
}

#[derive(Args, Clone, Default)]
struct PointArgs {
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    pb: Option<f64>,
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// flat key-value TOML file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    axis: Option<String>,
    /// comma-separated axis values
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    #[command(flatten)]
    point: PointArgs,
    /// comma-separated: capacity,ts,ncjt,phase_div,cdd,two_tx,ncja
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "MACRODIV_SEED")]
    seed: Option<u64>,
    /// ergodic, outage or both
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// stratify ergodic estimates by the number of non-blocked links
    #[arg(long)]
    stratified: bool,
}

#[derive(Args)]
struct CcdfArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    point: PointArgs,
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "MACRODIV_SEED")]
    seed: Option<u64>,
    /// maximum points per series
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, env = "MACRODIV_SEED", default_value_t = 2024)]
    seed: u64,
    /// multiplier on Monte Carlo trial counts
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

fn merged_point(file: &RunFile, args: &PointArgs) -> FixedParams {
    let def = FixedParams::default();
    FixedParams {
        l: args.l.or(file.l).unwrap_or(def.l),
        p_b: args.pb.or(file.pb).unwrap_or(def.p_b),
        snr_db: args.snr_db.or(file.snr_db).unwrap_or(def.snr_db),
        k: args.k.or(file.k).unwrap_or(def.k),
        d: args.d.or(file.d).unwrap_or(def.d),
    }
}

fn load_file(path: &Option<PathBuf>) -> Result<RunFile> {
    match path {
        Some(p) => RunFile::load(p),
        None => Ok(RunFile::default()),
    }
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad axis value `{v}`")))
        })
        .collect()
}

fn write_stdout(text: &str) -> Result<()> {
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn capacity(args: &PointArgs) -> Result<()> {
    let p = merged_point(&RunFile::default(), args);
    p.validate()?;
    let snr = db_to_linear(p.snr_db);
    let ofdm = OfdmConfig::with_prefix(p.k.max(2), p.d)?;
    let out = outage_capacity(p.l, p.p_b, snr);
    let wco = worst_case_outage(p.l, p.p_b, snr, &ofdm);
    let alim = async_outage_limit(p.l, p.p_b, snr);
    println!(
        "L={} p_B={} SNR={} dB (P={snr:.6}) K={} D={}",
        p.l, p.p_b, p.snr_db, ofdm.k, ofdm.d
    );
    println!(
        "ergodic_capacity        {:.9}",
        ergodic_capacity(p.l, p.p_b, snr).bits()
    );
    println!(
        "outage_capacity         {:.9}  (i*={})",
        out.rate.bits(),
        out.argmax_index
    );
    println!(
        "ts_ergodic              {:.9}",
        ts_ergodic_rate(p.l, p.p_b, snr).bits()
    );
    match two_tx_alamouti_rate(p.l, p.p_b, snr) {
        Ok(r) => println!("two_tx_alamouti         {:.9}", r.bits()),
        Err(e) => println!("two_tx_alamouti         n/a ({e})"),
    }
    println!(
        "worst_case_capacity     {:.9}",
        worst_case_capacity(p.l, p.p_b, snr, &ofdm).bits()
    );
    println!(
        "worst_case_outage       {:.9}  (i*={})",
        wco.rate.bits(),
        wco.argmax_index
    );
    println!(
        "async_capacity_limit    {:.9}",
        async_capacity_limit(p.l, p.p_b, snr).bits()
    );
    println!(
        "async_outage_limit      {:.9}  (i*={})",
        alim.rate.bits(),
        alim.argmax_index
    );
    Ok(())
}

fn sweep(args: &SweepArgs, workers: usize) -> Result<()> {
    let file = load_file(&args.config)?;
    let axis: Axis = args
        .axis
        .clone()
        .or(file.axis.clone())
        .unwrap_or_else(|| "p_b".into())
        .parse()?;
    let axis_values = match (&args.values, &file.values) {
        (Some(v), _) => parse_values(v)?,
        (None, Some(v)) => v.clone(),
        (None, None) => default_axis_values(axis),
    };
    let schemes = match (&args.schemes, &file.schemes) {
        (Some(s), _) => parse_schemes(s)?,
        (None, Some(list)) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        (None, None) => parse_schemes("capacity,ts,ncjt,phase_div,two_tx,ncja")?,
    };
    let metrics: Vec<Metric> = parse_metrics(
        &args
            .metric
            .clone()
            .or(file.metric.clone())
            .unwrap_or_else(|| "both".into()),
    )?;
    let format: Format = args
        .format
        .clone()
        .or(file.format.clone())
        .unwrap_or_else(|| "csv".into())
        .parse()?;
    let config = SweepConfig {
        axis,
        axis_values,
        fixed: merged_point(&file, &args.point),
        schemes,
        metrics,
        n_trials: args.trials.or(file.trials),
        seed: args.seed.or(file.seed).unwrap_or(1),
        sampling: if args.stratified || file.stratified.unwrap_or(false) {
            Sampling::StratifiedAlpha
        } else {
            Sampling::Plain
        },
    };
    let workers = if workers == 0 {
        file.workers.unwrap_or(0)
    } else {
        workers
    };
    let output = with_workers(workers, || run_sweep(&config))?;
    for s in &output.skipped {
        eprintln!(
            "skipped {}={} {} {}: {}",
            config.axis, s.axis_value, s.scheme, s.metric, s.reason
        );
    }
    let out = args.out.clone().or(file.out.map(PathBuf::from));
    match out {
        Some(path) => emit(&output.rows, format, &path),
        None => match format {
            Format::Csv => write_stdout(&rows_to_csv(&output.rows)),
            Format::Json => write_stdout(&(serde_json::to_string_pretty(&output.rows)? + "\n")),
        },
    }
}

fn ccdf(args: &CcdfArgs, workers: usize) -> Result<()> {
    let file = load_file(&args.config)?;
    let point = merged_point(&file, &args.point);
    point.validate()?;
    let schemes = match (&args.schemes, &file.schemes) {
        (Some(s), _) => parse_schemes(s)?,
        (None, Some(list)) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        (None, None) => parse_schemes("capacity,ncjt,phase_div")?,
    };
    let n = args.trials.or(file.trials).unwrap_or(DEFAULT_OUTAGE_TRIALS);
    let seed = args.seed.or(file.seed).unwrap_or(1);
    let format: Format = args
        .format
        .clone()
        .or(file.format.clone())
        .unwrap_or_else(|| "csv".into())
        .parse()?;
    let rows = with_workers(workers, || run_ccdf(&point, &schemes, n, seed, args.points))?;
    match args.out.clone().or(file.out.map(PathBuf::from)) {
        Some(path) => emit_ccdf(&rows, format, &path),
        None => match format {
            Format::Csv => write_stdout(&ccdf_to_csv(&rows)),
            Format::Json => write_stdout(&(serde_json::to_string_pretty(&rows)? + "\n")),
        },
    }
}

fn verify(args: &VerifyArgs, workers: usize) -> Result<bool> {
    let checks = with_workers(workers, || {
        macrodiv::verify::run_checks(args.seed, args.scale)
    })?;
    let mut all = true;
    for c in &checks {
        all &= c.passed;
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok(all)
}

fn exit_code(err: &Error) -> ExitCode {
    match err {
        Error::Io(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    // usage errors share exit code 1 with other validation failures; 2 is
    // reserved for I/O
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = cli.workers.unwrap_or(0);
    let result = match &cli.command {
        Command::Capacity(a) => capacity(a).map(|_| true),
        Command::Sweep(a) => sweep(a, workers).map(|_| true),
        Command::Ccdf(a) => ccdf(a, workers).map(|_| true),
        Command::Verify(a) => verify(a, workers),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
