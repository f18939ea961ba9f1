use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use addbo_core::analysis::{
    count_violations, greedy_info_gain, variance_gap_scan, write_info_gain_csv, write_scan_csv,
};
use addbo_core::bo::{
    aggregate_runs, run_bo, write_aggregate_csv, write_aggregate_rounds_csv, write_rounds_csv, write_trace_csv,
    BoConfig, Mode, NoisySynthetic, RegretTrace, Truth,
};
use addbo_core::gp::{sample_synthetic, AdditiveKernel, GpModel, KernelParams, SyntheticFunction};
use addbo_core::graph::{format_edge_list, format_structure, parse_structure};
use addbo_core::io::{read_data_csv, write_data_csv};
use addbo_core::rng::{stream, Stream};
use addbo_core::structure::{gibbs_learn, log_spaced, GibbsSettings, LearningMode, LengthscaleGrids, StructureParams};
use addbo_core::{DependencyGraph, Domain, Error, ObservationSet};

use crate::config::{parse_config, parse_modes, ConfigError, ExperimentConfig, Preset};
use crate::{Cli, Command, CommonArgs};

/// Number of candidates in a derived lengthscale grid.
const LENGTHSCALE_GRID_POINTS: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invariant violated: {0}")]
    Violation(String),
}

impl CliError {
    /// 0 success, 1 I/O, 2 config, 3 capacity, 4 numerical, 5 invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Violation(_) => 5,
            CliError::Core(e) => match e.root() {
                Error::InvalidArgument(_) | Error::Parse { .. } => 2,
                Error::Capacity(_) => 3,
                Error::Numerical(_) => 4,
                Error::InvalidState(_) | Error::Inconsistency(_) => 5,
                Error::Io(_) | Error::Context { .. } => 1,
            },
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => {
            let cfg = load(&args, None)?;
            cmd_synth(&cfg)
        }
        Command::Learn { common, data } => {
            let cfg = load(&common, data)?;
            cmd_learn(&cfg)
        }
        Command::Analyze(args) => {
            let cfg = load(&args, None)?;
            cmd_analyze(&cfg)
        }
    }
}

/// Reads the config file (if any) and applies command-line overrides. Paths
/// in the file are relative to the file; paths on the command line and `out`
/// are relative to the working directory.
pub fn load(args: &CommonArgs, data: Option<PathBuf>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError::global(format!("cannot read {}: {e}", path.display())))?;
            let mut cfg = parse_config(&text)?;
            cfg.resolve_files(path.parent().unwrap_or(Path::new("")))?;
            cfg
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(mode) = &args.mode {
        match mode.as_str() {
            "overlap" => cfg.learn_mode = LearningMode::Overlap,
            "no_overlap" => cfg.learn_mode = LearningMode::NoOverlap,
            _ => {}
        }
        cfg.modes = parse_modes(mode).map_err(|m| ConfigError::global(format!("--mode: {m}")))?;
    }
    if data.is_some() {
        cfg.data = data;
    }
    cfg.resolve_files(Path::new(""))?;
    cfg.validate()?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> addbo_core::Result<()>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, buf).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The true graph and synthetic lengthscales for the configured preset.
fn preset_truth(cfg: &ExperimentConfig) -> Result<(DependencyGraph, Vec<f64>), CliError> {
    let (graph, lengthscales) = match cfg.preset {
        Preset::Star => (DependencyGraph::star(cfg.resolved_dim().unwrap_or(10)), None),
        Preset::Grid => (DependencyGraph::grid(cfg.grid_rows, cfg.grid_cols), None),
        Preset::File => {
            let path = cfg.graph_file.as_ref().expect("validated");
            parse_structure(&read(path)?).map_err(|e| e.context(format!("in {}", path.display())))?
        }
    };
    if let Some(d) = cfg.dim {
        if d != graph.dim() {
            return Err(ConfigError::global(format!("D = {d} but the graph has {} variables", graph.dim())).into());
        }
    }
    let lengthscales = lengthscales.unwrap_or_else(|| vec![cfg.lengthscale; graph.dim()]);
    Ok((graph, lengthscales))
}

fn synthetic_domain(cfg: &ExperimentConfig, dim: usize, size: usize) -> Result<Domain, CliError> {
    Ok(Domain::uniform_grid(dim, size, cfg.grid_min, cfg.resolved_grid_max())?)
}

/// Log-spaced candidates from 0.1 to 2 times `span`, or the configured list.
fn lengthscale_candidates(cfg: &ExperimentConfig, span: f64) -> Result<Vec<f64>, CliError> {
    if !cfg.lengthscale_grid.is_empty() {
        return Ok(cfg.lengthscale_grid.clone());
    }
    if span > 0.0 {
        Ok(log_spaced(0.1 * span, 2.0 * span, LENGTHSCALE_GRID_POINTS)?)
    } else {
        Ok(vec![cfg.lengthscale])
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("ADDBO_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .map_err(|_| ConfigError::global(format!("ADDBO_THREADS='{value}' is not a non-negative integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| ConfigError::global(format!("cannot start worker pool: {e}")).into())
}

fn bo_config(cfg: &ExperimentConfig, mode: Mode, grids: &LengthscaleGrids, seed: u64) -> BoConfig {
    let mut c = BoConfig::new(mode, grids.clone());
    c.n_init = cfg.n_init;
    c.n_iter = cfg.n_iter;
    c.n_cyc = cfg.n_cyc;
    c.beta = cfg.beta;
    c.seed = seed;
    c.model_noise_variance = cfg.model_noise();
    c.edge_prior_p = cfg.edge_prior;
    c.n_gibbs = cfg.n_gibbs;
    c.gibbs_max_steps = cfg.gibbs_max_steps;
    c.max_treewidth = cfg.max_treewidth;
    c.max_table_size = cfg.max_table_size;
    c.max_eval = cfg.max_eval;
    c
}

fn all_observations(trace: &RegretTrace) -> addbo_core::Result<ObservationSet> {
    let mut obs = ObservationSet::empty(trace.dim);
    for row in trace.initial.iter().chain(&trace.rows) {
        obs.push(row.coords.clone(), row.y)?;
    }
    Ok(obs)
}

/// Writes everything one (mode, run) pair produces.
fn write_run(dir: &Path, run: usize, trace: &RegretTrace) -> Result<(), CliError> {
    write(&dir.join(format!("run_{run}_trace.csv")), |b| write_trace_csv(trace, b))?;
    write(&dir.join(format!("run_{run}_data.csv")), |b| {
        write_data_csv(&all_observations(trace)?, b)
    })?;
    if trace.mode.learning().is_some() {
        write(&dir.join(format!("run_{run}_rounds.csv")), |b| {
            write_rounds_csv(trace, b)
        })?;
        for round in &trace.rounds {
            let text = format_edge_list(&round.graph);
            write(&dir.join(format!("run_{run}_round_{}.edges", round.round)), |b| {
                Ok(b.write_all(text.as_bytes())?)
            })?;
        }
    }
    Ok(())
}

pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let (graph, lengthscales) = preset_truth(cfg)?;
    let dim = graph.dim();
    let domain = synthetic_domain(cfg, dim, cfg.grid_size)?;
    let params = KernelParams::new(lengthscales, cfg.noise)?;
    let grids = LengthscaleGrids::uniform(
        dim,
        lengthscale_candidates(cfg, cfg.resolved_grid_max() - cfg.grid_min)?,
    )?;
    bo_config(cfg, cfg.modes[0], &grids, cfg.seed).validate(dim)?;
    write(&cfg.out.join("truth.edges"), |b| {
        Ok(b.write_all(format_edge_list(&graph).as_bytes())?)
    })?;

    let pool = thread_pool()?;
    // Run r uses seed + r for its function, initial design and noise, shared
    // by every mode.
    let run_seed = |run: usize| cfg.seed.wrapping_add(run as u64);
    let functions: Vec<SyntheticFunction> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| {
                sample_synthetic(&graph, &params, &domain, run_seed(r)).map_err(|e| e.context(format!("run {}", r + 1)))
            })
            .collect::<addbo_core::Result<_>>()
    })?;

    let jobs: Vec<(Mode, usize)> = cfg
        .modes
        .iter()
        .flat_map(|&m| (0..cfg.runs).map(move |r| (m, r)))
        .collect();
    let results: Vec<Result<RegretTrace, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(mode, r)| {
                let f = &functions[r];
                let objective = NoisySynthetic {
                    function: f,
                    noise_variance: cfg.noise,
                };
                let trace = run_bo(
                    &bo_config(cfg, mode, &grids, run_seed(r)),
                    &objective,
                    Some(&Truth::of(f)),
                )
                .map_err(|e| e.context(format!("{mode} run {}", r + 1)))?;
                write_run(&cfg.out.join(mode.as_str()), r + 1, &trace)?;
                Ok(trace)
            })
            .collect()
    });
    let traces = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    for (k, &mode) in cfg.modes.iter().enumerate() {
        let runs = &traces[k * cfg.runs..(k + 1) * cfg.runs];
        let overruns: usize = runs.iter().map(|t| t.max_eval_exceeded).sum();
        if overruns > 0 {
            warn!("{mode}: {overruns} acquisition maximizations visited more than max_eval table entries");
        }
        let agg = aggregate_runs(runs)?;
        let dir = cfg.out.join(mode.as_str());
        write(&dir.join("aggregate.csv"), |b| write_aggregate_csv(&agg, b))?;
        if mode.learning().is_some() {
            write(&dir.join("aggregate_rounds.csv"), |b| {
                write_aggregate_rounds_csv(&agg, b)
            })?;
        }
        let last = agg.simple_regret.mean.len() - 1;
        println!(
            "{mode}: final simple regret {:.4} (se {:.4}) over {} runs",
            agg.simple_regret.mean[last], agg.simple_regret.se[last], agg.runs
        );
    }
    info!("wrote results to {}", cfg.out.display());
    Ok(())
}

pub fn cmd_learn(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| ConfigError::global("learn needs a data file (--data or `data` in the config)"))?;
    let obs = read_data_csv(path)?;
    let dim = obs.dim();
    let grids = (0..dim)
        .map(|v| {
            let column = obs.points().iter().map(|p| p[v]);
            let span = column.clone().fold(f64::NEG_INFINITY, f64::max) - column.fold(f64::INFINITY, f64::min);
            lengthscale_candidates(cfg, span)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let grids = LengthscaleGrids::new(grids)?;

    let init = match &cfg.init_graph {
        Some(p) => {
            let (graph, lengthscales) =
                parse_structure(&read(p)?).map_err(|e| e.context(format!("in {}", p.display())))?;
            if graph.dim() != dim {
                return Err(ConfigError::global(format!(
                    "init_graph has {} variables, the data has {dim}",
                    graph.dim()
                ))
                .into());
            }
            let indices = match lengthscales {
                Some(l) => l.iter().enumerate().map(|(v, &x)| grids.nearest(v, x)).collect(),
                None => grids.midpoints(),
            };
            StructureParams::new(&graph, indices, &grids)?
        }
        None => StructureParams::initial(&grids),
    };

    let mut settings = GibbsSettings::new(grids.clone(), cfg.model_noise(), cfg.n_gibbs, cfg.learn_mode);
    settings.edge_prior_p = cfg.edge_prior;
    settings.max_steps = cfg.gibbs_max_steps;
    let trace = gibbs_learn(&obs, &init, &settings, &mut stream(cfg.seed, Stream::StructureLearning))?;
    let best = trace.best();
    let graph = best.params.graph();
    let lengthscales = best.params.lengthscales(&grids);

    write(&cfg.out.join("learned.edges"), |b| {
        Ok(b.write_all(format_edge_list(&graph).as_bytes())?)
    })?;
    write(&cfg.out.join("learned.structure"), |b| {
        Ok(b.write_all(format_structure(&graph, &lengthscales).as_bytes())?)
    })?;
    write(&cfg.out.join("gibbs_trace.csv"), |b| {
        writeln!(b, "step,log_likelihood")?;
        for (k, e) in trace.entries.iter().enumerate() {
            writeln!(b, "{k},{}", e.log_likelihood)?;
        }
        Ok(())
    })?;
    println!(
        "learned {} edges, log-likelihood {:.4} after {} likelihood evaluations",
        graph.edge_count(),
        best.log_likelihood,
        trace.likelihood_evaluations
    );
    Ok(())
}

pub fn cmd_analyze(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let (graph, lengthscales) = preset_truth(cfg)?;
    let dim = graph.dim();
    let domain = synthetic_domain(cfg, dim, cfg.grid_size)?;
    let f = sample_synthetic(
        &graph,
        &KernelParams::new(lengthscales.clone(), cfg.noise)?,
        &domain,
        cfg.seed,
    )?;
    let obs = f.sample_observations(cfg.observations, cfg.noise, cfg.seed)?;
    let kernel = AdditiveKernel::from_graph(&graph, KernelParams::new(lengthscales, cfg.model_noise())?)?;
    let model = GpModel::fit(kernel.clone(), obs)?;

    let samples = variance_gap_scan(&model, &domain, cfg.scan_points, cfg.seed)?;
    write(&cfg.out.join("variance_gap.csv"), |b| write_scan_csv(&samples, b))?;

    let info_domain = synthetic_domain(cfg, dim, cfg.info_grid_size)?;
    let gain = greedy_info_gain(&info_domain, cfg.info_t, &kernel)?;
    write(&cfg.out.join("info_gain.csv"), |b| write_info_gain_csv(&gain, b))?;

    let violations = count_violations(&samples);
    let worst = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    println!(
        "{} scan points, {violations} inequality violations, largest ratio {worst:.4}; greedy gain at T = {} is {:.4} nats",
        samples.len(),
        cfg.info_t,
        gain.gain()
    );
    if violations > 0 {
        return Err(CliError::Violation(format!(
            "{violations} scan points have a summed component std below the full posterior std"
        )));
    }
    Ok(())
}
