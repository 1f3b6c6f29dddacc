// SPDX-License-Identifier: Apache-2.0

//! `hfp` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{ablate, compare_methods, generate, Axis, BenchReport, GeneratorSpec};
use crate::error::{Error, ModelError};
use crate::io::{load_design, save_design, ResultFile};
use crate::orchestrator::{run, Method, RunConfig};
use crate::svg::write_svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "hfp", version, about = "Multi-die, multi-technology floorplanner")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Floorplan one design with one method and seed.
    Run(RunArgs),
    /// Compare methods over seeds on one or more designs.
    Bench(BenchArgs),
    /// Sweep one parameter over a grid.
    Ablate(AblateArgs),
    /// Write a synthetic design.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Args)]
struct Tuning {
    /// Objective weights ω,β,γ,τ.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<[f64; 4]>,
    /// Maximum nets between any die pair.
    #[arg(long)]
    nmax: Option<usize>,
    /// Optimizer moves between inter-die refinements.
    #[arg(long)]
    k_interval: Option<usize>,
    /// Global budget of moves plus refinements.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Per-die move cap.
    #[arg(long)]
    per_die_steps: Option<usize>,
    /// Margin added around each die's bounding box (µm).
    #[arg(long)]
    die_margin: Option<f64>,
    /// Accept any refinement that keeps the dies' areas and net counts legal.
    #[arg(long)]
    refine_accept_any: bool,
}

impl Tuning {
    fn config(&self) -> Result<RunConfig, ModelError> {
        let mut c = RunConfig::default();
        if let Some([o, b, g, t]) = self.weights {
            let w = &mut c.objective.weights;
            (w.omega, w.beta, w.gamma, w.tau) = (o, b, g, t);
        }
        if let Some(n) = self.nmax {
            c.objective.weights.n_max = n;
        }
        if let Some(k) = self.k_interval {
            c.refine.k_interval = k;
        }
        if let Some(s) = self.max_steps {
            c.max_total_steps = s;
        }
        c.per_die_steps = self.per_die_steps.or(c.per_die_steps);
        if let Some(m) = self.die_margin {
            c.objective.die_margin = m;
        }
        c.refine.accept_any |= self.refine_accept_any;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long, default_value = "rl")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tuning: Tuning,
    /// Result JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Experiment {
    /// Design files.
    #[arg(long)]
    design: Vec<PathBuf>,
    /// Also use this many generated designs (20 to 30 blocks).
    #[arg(long, default_value_t = 0)]
    generated: usize,
    /// Seeds 0..N.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL)]
    methods: Vec<Method>,
    #[command(flatten)]
    tuning: Tuning,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    exp: Experiment,
}

#[derive(Debug, Args)]
struct AblateArgs {
    /// k_interval, n_max, beta, tau, beta_tau, gamma_beta or hard_ip_count.
    #[arg(long)]
    axis: Axis,
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[command(flatten)]
    exp: Experiment,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 25)]
    blocks: usize,
    /// Net count; 1.5 per block when omitted.
    #[arg(long)]
    nets: Option<usize>,
    #[arg(long, default_value_t = 0)]
    hard_ips: usize,
    /// Die technologies by index into 45nm,7nm.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0usize, 1])]
    dies: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_weights(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 4]>::try_from(v).map_err(|v| format!("expected 4 weights ω,β,γ,τ, got {}", v.len()))
}

/// The `i`-th generated benchmark design.
pub fn generated_design_spec(i: usize) -> GeneratorSpec {
    GeneratorSpec {
        n_blocks: 20 + i % 11,
        seed: i as u64,
        ..GeneratorSpec::default()
    }
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(Error::from)
}

fn designs(exp: &Experiment) -> Result<Vec<(String, crate::model::Design)>, Error> {
    let mut out = Vec::new();
    for p in &exp.design {
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        out.push((name, load_design(p)?));
    }
    for i in 0..exp.generated {
        out.push((format!("gen{i}"), generate(&generated_design_spec(i))?));
    }
    if out.is_empty() {
        return Err(ModelError::Parameter("no designs: pass --design or --generated".into()).into());
    }
    Ok(out)
}

fn cmd_run(a: &RunArgs) -> Result<(), Error> {
    let design = load_design(&a.design)?;
    let cfg = a.tuning.config()?;
    let sol = run(&design, a.method, &cfg, a.seed)?;
    let res = ResultFile::new(&design, &sol, &cfg);
    log::info!(
        "{} seed {}: f = {} feasible = {} steps = {}",
        a.method.as_str(),
        a.seed,
        res.breakdown.f,
        res.breakdown.feasible,
        res.steps
    );
    match &a.out {
        Some(p) => write(p, &res.to_json())?,
        None => print!("{}", res.to_json()),
    }
    if let Some(p) = &a.svg {
        write_svg(&res, &design, p)?;
    }
    Ok(())
}

fn seeds(n: u64) -> Vec<u64> {
    (0..n).collect()
}

fn cmd_bench(a: &BenchArgs) -> Result<(), Error> {
    let e = &a.exp;
    let cfg = e.tuning.config()?;
    std::fs::create_dir_all(&e.out)?;
    let mut reports = Vec::new();
    for (name, d) in designs(e)? {
        log::info!("bench {name}");
        reports.push(compare_methods(&d, &name, &seeds(e.seeds), &cfg, &e.methods)?);
    }
    let rep = BenchReport::new(reports);
    write(&e.out.join("report.json"), &(serde_json::to_string_pretty(&rep)? + "\n"))?;
    write(&e.out.join("summary.csv"), &rep.summary_csv())?;
    write(&e.out.join("runs.csv"), &rep.runs_csv())?;
    write(&e.out.join("normalized.csv"), &rep.normalized_csv())?;
    let mut curves = String::new();
    for r in &rep.designs {
        for line in r.curves_csv().lines().skip(usize::from(!curves.is_empty())) {
            if curves.is_empty() {
                curves.push_str("design,");
            } else {
                curves.push_str(&r.design);
                curves.push(',');
            }
            curves.push_str(line);
            curves.push('\n');
        }
    }
    write(&e.out.join("curves.csv"), &curves)?;
    Ok(())
}

fn cmd_ablate(a: &AblateArgs) -> Result<(), Error> {
    let e = &a.exp;
    let cfg = e.tuning.config()?;
    std::fs::create_dir_all(&e.out)?;
    let mut csv = String::new();
    let mut all = Vec::new();
    for (name, d) in designs(e)? {
        log::info!("ablate {name}");
        let r = ablate(&d, &name, a.axis, &a.grid, &seeds(e.seeds), &cfg, &e.methods)?;
        let t = r.csv();
        csv.push_str(if csv.is_empty() { &t } else { t.split_once('\n').map_or("", |x| x.1) });
        all.push(r);
    }
    write(&e.out.join("ablation.json"), &(serde_json::to_string_pretty(&all)? + "\n"))?;
    write(&e.out.join("ablation.csv"), &csv)?;
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<(), Error> {
    let spec = GeneratorSpec {
        n_blocks: a.blocks,
        n_nets: a.nets,
        hard_ips: a.hard_ips,
        dies: a.dies.clone(),
        seed: a.seed,
        ..GeneratorSpec::default()
    };
    save_design(&generate(&spec)?, &a.out)?;
    Ok(())
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_infeasible() {
        EXIT_INFEASIBLE
    } else {
        EXIT_INTERNAL
    }
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("HFP_LOG").try_init();
    let r = match &cli.cmd {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match r {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("hfp: {e}");
            exit_code(&e)
        }
    }
}
