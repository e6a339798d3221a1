//! `gsbp`: Monte-Carlo sweeps, Gaussian-approximation runs and schedule
//! inspection for shuffled belief-propagation decoding.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gsbp_core::ga::{
    ensemble_label, run_ga, threshold_search, FinalMeanRule, GaConfig, GaRecord, PhiKernel,
    ThresholdOptions, DEFAULT_MAX_ITERATIONS, DEFAULT_MU_CAP,
};
use gsbp_core::rng::{substream, Domain};
use gsbp_core::schedule::{iteration_budget, measure_cocsg};
use gsbp_core::sim::{run_point, Fairness, SimConfig};
use gsbp_core::tanner::{parse_alist, random_regular_graph};
use gsbp_core::{DegreeDistribution, ScheduleSpec, TannerGraph};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "gsbp",
    version,
    about = "Shuffled belief-propagation decoding experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER/FER sweep, one JSON record per Eb/N0 point.
    Simulate(SimulateArgs),
    /// Gaussian-approximation iteration counts or thresholds.
    Ga(GaArgs),
    /// Build one schedule and print its groups, overlaps and budget.
    Schedule(ScheduleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Sched {
    Bp,
    Gsbp,
    Ndgsbp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Phi {
    Fitted,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum FinalMean {
    GroupAverage,
    LastGroup,
}

#[derive(Args)]
struct CodeArgs {
    /// Parity-check matrix in alist format.
    #[arg(long, conflicts_with = "n")]
    code: Option<PathBuf>,
    /// Variable degree of a random regular code (with --dc and --n).
    #[arg(long, default_value_t = 3)]
    dv: usize,
    /// Check degree of a random regular code.
    #[arg(long, default_value_t = 6)]
    dc: usize,
    /// Block length of a random regular code.
    #[arg(long)]
    n: Option<usize>,
    /// Seed for the random regular construction.
    #[arg(long, default_value_t = 1)]
    code_seed: u64,
}

impl CodeArgs {
    fn load(&self) -> Result<TannerGraph> {
        match (&self.code, self.n) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                parse_alist(&text).with_context(|| format!("parsing {}", path.display()))
            }
            (None, Some(n)) => Ok(random_regular_graph(n, self.dv, self.dc, self.code_seed)?),
            (None, None) => bail!("give either --code FILE or --n N (with --dv, --dc)"),
        }
    }
}

#[derive(Args)]
struct SchedArgs {
    #[arg(long, value_enum, default_value = "bp")]
    sched: Sched,
    /// Number of groups `G` (ignored for bp).
    #[arg(long, default_value_t = 12)]
    groups: usize,
    /// Overlap ratio `r` (ndgsbp only).
    #[arg(long, default_value_t = 0.4)]
    overlap: f64,
}

impl Sched {
    fn spec(self, n_groups: usize, overlap: f64) -> ScheduleSpec {
        match self {
            Sched::Bp => ScheduleSpec::flooding(),
            Sched::Gsbp => ScheduleSpec::disjoint(n_groups),
            Sched::Ndgsbp => ScheduleSpec::non_disjoint(n_groups, overlap),
        }
    }
}

impl SchedArgs {
    fn spec(&self) -> ScheduleSpec {
        self.sched.spec(self.groups, self.overlap)
    }
}

#[derive(Args)]
struct OutArgs {
    /// JSON-lines output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the records as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl OutArgs {
    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn csv(&self) -> Result<Option<csv::Writer<File>>> {
        self.csv
            .as_ref()
            .map(|path| {
                csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
            })
            .transpose()
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    sched: SchedArgs,
    /// Eb/N0 points in dB, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    snr: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Scale the iteration limit of non-disjoint schedules to equal check-update work.
    #[arg(long)]
    budgeted: bool,
    /// Frame cap per point.
    #[arg(long, default_value_t = 100_000)]
    frames: u64,
    /// Stop a point after this many frame errors.
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    #[arg(long, default_value_t = 1)]
    seed_channel: u64,
    #[arg(long, default_value_t = 2)]
    seed_schedule: u64,
    /// Keep one random grouping for the whole decode instead of redrawing it every iteration.
    #[arg(long)]
    fixed_groups: bool,
    /// Code rate for the Eb/N0 conversion; defaults to 1 − M/N.
    #[arg(long)]
    rate: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct GaArgs {
    #[arg(long, default_value_t = 3)]
    dv: usize,
    #[arg(long, default_value_t = 6)]
    dc: usize,
    #[arg(long, value_enum, default_value = "bp")]
    sched: Sched,
    /// Group counts, comma separated; one record per value.
    #[arg(long, value_delimiter = ',', default_value = "12")]
    groups: Vec<usize>,
    #[arg(long, default_value_t = 0.4)]
    overlap: f64,
    /// Eb/N0 points in dB, comma separated (ignored with --threshold).
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1.163",
        allow_negative_numbers = true
    )]
    snr: Vec<f64>,
    /// Search for the convergence threshold instead of counting iterations.
    #[arg(long)]
    threshold: bool,
    /// Threshold search resolution in dB.
    #[arg(long, default_value_t = 0.001)]
    resolution: f64,
    /// Mean at which a run counts as converged.
    #[arg(long, default_value_t = DEFAULT_MU_CAP)]
    mu_cap: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "fitted")]
    phi: Phi,
    #[arg(long, value_enum, default_value = "group-average")]
    final_mean: FinalMean,
    /// Include the per-iteration mean trace in each record.
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ScheduleArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    sched: SchedArgs,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 2)]
    seed_schedule: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_line(sink: &mut dyn Write, value: &impl serde::Serialize) -> Result<()> {
    serde_json::to_writer(&mut *sink, value)?;
    writeln!(sink)?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let g = args.code.load()?;
    let mut cfg = SimConfig::new(args.sched.spec(), args.snr.clone());
    cfg.max_iterations = args.max_iter;
    cfg.fairness = if args.budgeted {
        Fairness::Budgeted
    } else {
        Fairness::Raw
    };
    cfg.max_frames = args.frames;
    cfg.min_frame_errors = args.min_errors;
    cfg.seed_channel = args.seed_channel;
    cfg.seed_schedule = args.seed_schedule;
    cfg.regroup = !args.fixed_groups;
    cfg.rate = args.rate;
    cfg.validate()?;

    let mut sink = args.out.sink()?;
    let mut csv = args.out.csv()?;
    for &ebn0 in &cfg.ebn0_db {
        let point = run_point(&g, &cfg, ebn0)?;
        write_line(&mut sink, &point)?;
        sink.flush()?;
        if let Some(w) = csv.as_mut() {
            w.serialize(&point)?;
        }
    }
    if let Some(mut w) = csv {
        w.flush()?;
    }
    Ok(())
}

fn ga(args: &GaArgs) -> Result<()> {
    let degrees = DegreeDistribution::regular(args.dv, args.dc)?;
    let group_counts: Vec<usize> = match args.sched {
        Sched::Bp => vec![1],
        _ => args.groups.clone(),
    };
    let kernel = match args.phi {
        Phi::Fitted => PhiKernel::Fitted,
        Phi::Exact => PhiKernel::Exact,
    };
    let final_mean = match args.final_mean {
        FinalMean::GroupAverage => FinalMeanRule::GroupAverage,
        FinalMean::LastGroup => FinalMeanRule::LastGroup,
    };

    let mut sink = args.out.sink()?;
    let mut csv = args.out.csv()?;
    for &n_groups in &group_counts {
        let spec = args.sched.spec(n_groups, args.overlap);
        if args.threshold {
            let opts = ThresholdOptions {
                resolution_db: args.resolution,
                mu_cap: args.mu_cap,
                max_iterations: args.max_iter,
                kernel,
                final_mean,
                ..ThresholdOptions::default()
            };
            let threshold = threshold_search(&degrees, spec, &opts)?;
            let record = json!({
                "ensemble": ensemble_label(&degrees),
                "schedule": spec.kind,
                "G": spec.n_groups,
                "r": spec.overlap,
                "threshold_db": threshold,
                "resolution_db": args.resolution,
                "mu_cap": args.mu_cap,
                "kernel": kernel,
                "final_mean": final_mean,
            });
            write_line(&mut sink, &record)?;
            if let Some(w) = csv.as_mut() {
                w.serialize(&record)?;
            }
            continue;
        }
        for &ebn0 in &args.snr {
            let mut cfg = GaConfig::at_ebn0(degrees.clone(), spec, ebn0);
            cfg.mu_cap = args.mu_cap;
            cfg.max_iterations = args.max_iter;
            cfg.kernel = kernel;
            cfg.final_mean = final_mean;
            let run = run_ga(&cfg)?;
            let mut record = GaRecord::from_run(&cfg, &run, args.trace);
            record.ebn0_db = ebn0;
            write_line(&mut sink, &record)?;
            if let Some(w) = csv.as_mut() {
                w.serialize(GaRecord {
                    mu_trace: None,
                    ..record
                })?;
            }
        }
    }
    sink.flush()?;
    if let Some(mut w) = csv {
        w.flush()?;
    }
    Ok(())
}

fn schedule(args: &ScheduleArgs) -> Result<()> {
    let g = args.code.load()?;
    let spec = args.sched.spec();
    let s = spec.build(
        g.n_checks(),
        &mut substream(args.seed_schedule, Domain::Schedule, 0),
    )?;
    let cocsg = measure_cocsg(&g, &s);
    let record = json!({
        "n_vars": g.n_vars(),
        "n_checks": g.n_checks(),
        "schedule": s.kind,
        "G": s.n_groups(),
        "r": s.overlap_ratio,
        "N_G": s.group_size,
        "overlap_checks": spec.overlap_count(g.n_checks()),
        "i_max": args.max_iter,
        "budget": iteration_budget(g.n_checks(), args.max_iter, &s),
        "work_per_iteration": s.work_per_iteration(),
        "overlaps": s.overlaps(),
        "cocsg": cocsg,
        "groups": s.groups,
    });
    let out = OutArgs {
        out: args.out.clone(),
        csv: None,
    };
    let mut sink = out.sink()?;
    write_line(&mut sink, &record)?;
    sink.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Ga(args) => ga(args),
        Command::Schedule(args) => schedule(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gsbp: {e:#}");
            ExitCode::FAILURE
        }
    }
}
