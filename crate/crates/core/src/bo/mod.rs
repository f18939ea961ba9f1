//! The optimization loop: initial design, periodic structure learning, UCB
//! queries maximized by message passing, and regret bookkeeping.

mod beta;
mod metrics;
mod trace;

pub use beta::BetaSchedule;
pub use metrics::{aggregate_runs, graph_accuracy, Aggregate, MeanSe};
pub use trace::{
    write_aggregate_csv, write_aggregate_rounds_csv, write_rounds_csv, write_trace_csv, LearningRound, RegretTrace,
    TraceRow,
};

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::RngCore;
use rand_distr::{Distribution, Normal};

use crate::acquisition::{maximize_acquisition, ucb_tables, AcquisitionLimits, Maximum, DEFAULT_MAX_TABLE_SIZE};
use crate::domain::{Domain, GridPoint, ObservationSet};
use crate::error::{Error, Result};
use crate::gp::{AdditiveKernel, GpModel, KernelParams, SyntheticFunction};
use crate::graph::{
    build_junction_tree, maximal_cliques, triangulate, DependencyGraph, JunctionTree, JunctionTreeOptions,
    DEFAULT_MAX_TREEWIDTH,
};
use crate::rng::{stream, Stream};
use crate::structure::{gibbs_learn, GibbsSettings, LearningMode, LengthscaleGrids, StructureParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Overlap,
    NoOverlap,
    Oracle,
    Random,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Overlap, Mode::NoOverlap, Mode::Oracle, Mode::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Overlap => "overlap",
            Mode::NoOverlap => "no_overlap",
            Mode::Oracle => "oracle",
            Mode::Random => "random",
        }
    }

    /// The structure learner this mode runs, if any.
    pub fn learning(self) -> Option<LearningMode> {
        match self {
            Mode::Overlap => Some(LearningMode::Overlap),
            Mode::NoOverlap => Some(LearningMode::NoOverlap),
            Mode::Oracle | Mode::Random => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "overlap" => Ok(Mode::Overlap),
            "no_overlap" | "no-overlap" | "nooverlap" => Ok(Mode::NoOverlap),
            "oracle" => Ok(Mode::Oracle),
            "random" => Ok(Mode::Random),
            other => Err(Error::invalid(format!(
                "unknown mode '{other}' (expected overlap, no_overlap, oracle or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoConfig {
    pub n_init: usize,
    pub n_iter: usize,
    /// Structure is re-learned before iterations 1, 1 + n_cyc, 1 + 2 n_cyc, ...
    pub n_cyc: usize,
    pub beta: BetaSchedule,
    pub mode: Mode,
    pub seed: u64,
    /// Candidate lengthscales for the learning modes.
    pub grids: LengthscaleGrids,
    /// η² assumed by the surrogate model.
    pub model_noise_variance: f64,
    pub edge_prior_p: f64,
    pub n_gibbs: usize,
    pub gibbs_max_steps: Option<usize>,
    pub max_treewidth: usize,
    pub max_table_size: usize,
    pub max_eval: Option<usize>,
}

impl BoConfig {
    /// Defaults: 10 initial points, 100 iterations, β_t = 0.5 ln(2t),
    /// N_cyc = 30, N_Gibbs = 200, max_eval = 1000, η² = 0.01, p = 1/2.
    pub fn new(mode: Mode, grids: LengthscaleGrids) -> Self {
        BoConfig {
            n_init: 10,
            n_iter: 100,
            n_cyc: 30,
            beta: BetaSchedule::default(),
            mode,
            seed: 0,
            grids,
            model_noise_variance: 0.01,
            edge_prior_p: 0.5,
            n_gibbs: 200,
            gibbs_max_steps: None,
            max_treewidth: DEFAULT_MAX_TREEWIDTH,
            max_table_size: DEFAULT_MAX_TABLE_SIZE,
            max_eval: Some(1000),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_init == 0 || self.n_iter == 0 || self.n_cyc == 0 {
            return Err(Error::invalid("N_init, N_iter and N_cyc must all be at least 1"));
        }
        if self.mode.learning().is_some() && self.n_gibbs == 0 {
            return Err(Error::invalid("N_Gibbs must be at least 1"));
        }
        if self.grids.dim() != dim {
            return Err(Error::invalid(format!(
                "lengthscale grids cover {} variables, domain has {dim}",
                self.grids.dim()
            )));
        }
        if !(self.model_noise_variance > 0.0 && self.model_noise_variance.is_finite()) {
            return Err(Error::invalid("model noise variance must be positive"));
        }
        if !(self.edge_prior_p > 0.0 && self.edge_prior_p < 1.0) {
            return Err(Error::invalid("edge prior must lie in (0, 1)"));
        }
        self.beta.validate()
    }

    fn gibbs_settings(&self, mode: LearningMode) -> GibbsSettings {
        let mut s = GibbsSettings::new(self.grids.clone(), self.model_noise_variance, self.n_gibbs, mode);
        s.edge_prior_p = self.edge_prior_p;
        s.max_steps = self.gibbs_max_steps;
        s
    }

    fn limits(&self) -> AcquisitionLimits {
        AcquisitionLimits {
            max_table_size: self.max_table_size,
            max_eval: self.max_eval,
        }
    }
}

/// A black-box function on a grid domain.
pub trait Objective {
    fn domain(&self) -> &Domain;

    /// One noisy evaluation.
    fn observe(&self, point: &[usize], rng: &mut dyn RngCore) -> Result<f64>;

    /// `f(x_opt) − f(x)` when the optimum is known.
    fn regret(&self, point: &[usize]) -> Option<f64>;
}

/// A synthetic function observed with additive Gaussian noise.
#[derive(Debug, Clone, Copy)]
pub struct NoisySynthetic<'a> {
    pub function: &'a SyntheticFunction,
    pub noise_variance: f64,
}

impl Objective for NoisySynthetic<'_> {
    fn domain(&self) -> &Domain {
        self.function.domain()
    }

    fn observe(&self, point: &[usize], rng: &mut dyn RngCore) -> Result<f64> {
        let f = self.function.value(point);
        if self.noise_variance == 0.0 {
            return Ok(f);
        }
        let normal = Normal::new(0.0, self.noise_variance.sqrt())
            .map_err(|e| Error::invalid(format!("observation noise: {e}")))?;
        Ok(f + normal.sample(rng))
    }

    fn regret(&self, point: &[usize]) -> Option<f64> {
        Some(self.function.true_optimum_value() - self.function.value(point))
    }
}

/// Known dependency graph and lengthscales, used by oracle mode and for
/// scoring learned graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub graph: DependencyGraph,
    pub lengthscales: Vec<f64>,
}

impl Truth {
    pub fn of(function: &SyntheticFunction) -> Self {
        Truth {
            graph: function.true_graph().clone(),
            lengthscales: function.params().lengthscales.clone(),
        }
    }
}

/// `N_init` distinct points (when the domain has that many) drawn uniformly.
pub fn initial_design(domain: &Domain, n_init: usize, seed: u64) -> Vec<GridPoint> {
    let mut rng = stream(seed, Stream::InitialDesign);
    match domain.total_size() {
        Some(total) if total >= n_init => index::sample(&mut rng, total, n_init)
            .into_iter()
            .map(|i| domain.point_at(i))
            .collect(),
        _ => (0..n_init).map(|_| domain.sample_uniform(&mut rng)).collect(),
    }
}

/// Builds the junction tree used to maximize acquisitions on `graph`.
pub fn acquisition_tree(graph: &DependencyGraph, max_treewidth: usize) -> Result<JunctionTree> {
    build_junction_tree(&triangulate(graph), graph, JunctionTreeOptions { max_treewidth })
}

/// Maximizes `Σ_j μ^(j) + β^{1/2} σ^(j)` over the domain.
pub fn ucb_query(
    model: &GpModel,
    tree: &JunctionTree,
    beta: f64,
    domain: &Domain,
    limits: AcquisitionLimits,
) -> Result<Maximum> {
    let tables = ucb_tables(model, beta, domain, limits.max_table_size)?;
    maximize_acquisition(tree, &tables, domain, limits)
}

/// Whether acquisition maximization on `graph` stays within the treewidth
/// and table-size caps.
fn fits_caps(graph: &DependencyGraph, domain: &Domain, config: &BoConfig) -> bool {
    let tri = triangulate(graph);
    tri.max_clique_size() <= config.max_treewidth + 1
        && maximal_cliques(tri.graph())
            .groups()
            .iter()
            .all(|c| domain.config_count(c).is_some_and(|n| n <= config.max_table_size))
}

struct Surrogate {
    graph: DependencyGraph,
    params: KernelParams,
    tree: JunctionTree,
}

impl Surrogate {
    fn new(graph: DependencyGraph, lengthscales: Vec<f64>, config: &BoConfig) -> Result<Self> {
        let params = KernelParams::new(lengthscales, config.model_noise_variance)?;
        let tree = acquisition_tree(&graph, config.max_treewidth)?;
        Ok(Surrogate { graph, params, tree })
    }
}

/// Runs `N_init + N_iter` evaluations of `objective` in the configured mode.
pub fn run_bo(config: &BoConfig, objective: &dyn Objective, truth: Option<&Truth>) -> Result<RegretTrace> {
    let domain = objective.domain();
    let d = domain.dim();
    config.validate(d)?;
    if let Some(t) = truth {
        if t.graph.dim() != d || t.lengthscales.len() != d {
            return Err(Error::invalid("truth dimensions differ from the domain"));
        }
    }
    if config.mode == Mode::Oracle && truth.is_none() {
        return Err(Error::invalid("oracle mode needs the true graph and lengthscales"));
    }

    let mut noise_rng = stream(config.seed, Stream::ObservationNoise);
    let mut query_rng = stream(config.seed, Stream::RandomQueries);
    let mut learn_rng = stream(config.seed, Stream::StructureLearning);

    let regret_of = |p: &[usize]| objective.regret(p).map(|r| r.max(0.0));
    let mut obs = ObservationSet::empty(d);
    let mut initial = Vec::with_capacity(config.n_init);
    for point in initial_design(domain, config.n_init, config.seed) {
        let y = objective.observe(&point, &mut noise_rng)?;
        obs.push(domain.coords(&point), y)?;
        let r = regret_of(&point);
        initial.push(TraceRow {
            t: 0,
            coords: domain.coords(&point),
            point,
            y,
            regret: r,
            simple_regret: r,
            average_regret: r,
        });
    }
    let mut best_regret = initial
        .iter()
        .map(|row| row.regret)
        .try_fold(f64::INFINITY, |acc, r| r.map(|r| acc.min(r)));

    let mut surrogate = match (config.mode, truth) {
        (Mode::Oracle, Some(t)) => Some(Surrogate::new(t.graph.clone(), t.lengthscales.clone(), config)?),
        _ => None,
    };
    let mut learned = StructureParams::initial(&config.grids);
    let mut rows = Vec::with_capacity(config.n_iter);
    let mut rounds = Vec::new();
    let mut regret_sum = Some(0.0);
    let mut max_eval_exceeded = 0;

    for t in 1..=config.n_iter {
        let step = || format!("BO iteration {t}");
        if let Some(lm) = config.mode.learning() {
            if (t - 1) % config.n_cyc == 0 {
                let settings = config.gibbs_settings(lm);
                let gibbs = gibbs_learn(&obs, &learned, &settings, &mut learn_rng)
                    .map_err(|e| e.context(format!("structure learning before {}", step())))?;
                let best = gibbs.best();
                let (chosen, fallback) = if fits_caps(&best.params.graph(), domain, config) {
                    (best, false)
                } else {
                    let within = gibbs
                        .best_where(|p| fits_caps(&p.graph(), domain, config))
                        .unwrap_or(&gibbs.entries[0]);
                    log::info!("learned graph exceeds the acquisition caps; using the best visited graph within them");
                    (within, true)
                };
                learned = chosen.params.clone();
                let graph = learned.graph();
                let lengthscales = learned.lengthscales(&config.grids);
                let accuracy = truth.map(|tr| graph_accuracy(&graph, &tr.graph)).transpose()?;
                rounds.push(LearningRound {
                    round: rounds.len() + 1,
                    t,
                    graph: graph.clone(),
                    lengthscales: lengthscales.clone(),
                    log_likelihood: chosen.log_likelihood,
                    likelihood_evaluations: gibbs.likelihood_evaluations,
                    fallback,
                    accuracy,
                });
                surrogate = Some(Surrogate::new(graph, lengthscales, config).map_err(|e| e.context(step()))?);
            }
        }

        let point = match &surrogate {
            None => domain.sample_uniform(&mut query_rng),
            Some(s) => {
                let kernel = AdditiveKernel::from_graph(&s.graph, s.params.clone())?;
                let model = GpModel::fit(kernel, obs.clone()).map_err(|e| e.context(step()))?;
                let beta = config.beta.value(t);
                let best = ucb_query(&model, &s.tree, beta, domain, config.limits()).map_err(|e| e.context(step()))?;
                if best.max_eval_exceeded {
                    max_eval_exceeded += 1;
                }
                best.point
            }
        };

        let y = objective.observe(&point, &mut noise_rng)?;
        obs.push(domain.coords(&point), y)?;
        let r = regret_of(&point);
        best_regret = best_regret.zip(r).map(|(b, r)| b.min(r));
        regret_sum = regret_sum.zip(r).map(|(s, r)| s + r);
        rows.push(TraceRow {
            t,
            coords: domain.coords(&point),
            point,
            y,
            regret: r,
            simple_regret: best_regret,
            average_regret: regret_sum.map(|s| s / t as f64),
        });
    }
    if max_eval_exceeded > 0 {
        log::info!(
            "max_eval was exceeded in {max_eval_exceeded} of {} acquisition maximizations",
            config.n_iter
        );
    }

    Ok(RegretTrace {
        dim: d,
        mode: config.mode,
        seed: config.seed,
        initial,
        rows,
        rounds,
        max_eval_exceeded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{brute_force_maximize, evaluate_sum};
    use crate::gp::sample_synthetic;

    fn star_problem(d: usize, size: usize, seed: u64) -> SyntheticFunction {
        let domain = Domain::uniform_grid(d, size, 0.0, (size - 1) as f64).unwrap();
        let params = KernelParams::uniform(d, 1.5, 0.01).unwrap();
        sample_synthetic(&DependencyGraph::star(d), &params, &domain, seed).unwrap()
    }

    fn config(mode: Mode, d: usize) -> BoConfig {
        let grids = LengthscaleGrids::uniform(d, vec![0.75, 1.5, 3.0]).unwrap();
        let mut c = BoConfig::new(mode, grids);
        c.n_init = 5;
        c.n_iter = 6;
        c.n_cyc = 3;
        c.n_gibbs = 20;
        c.seed = 11;
        c
    }

    #[test]
    fn random_mode_makes_one_extra_query() {
        let f = star_problem(3, 4, 0);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let mut c = config(Mode::Random, 3);
        c.n_iter = 1;
        let trace = run_bo(&c, &obj, None).unwrap();
        assert_eq!(trace.initial.len(), 5);
        assert_eq!(trace.rows.len(), 1);
        assert!(trace.rounds.is_empty());
    }

    #[test]
    fn optimum_in_the_initial_design_gives_zero_simple_regret() {
        // Eight points and eight initial queries: the design covers the domain.
        let f = star_problem(3, 2, 4);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let mut c = config(Mode::Oracle, 3);
        c.n_init = 8;
        let trace = run_bo(&c, &obj, Some(&Truth::of(&f))).unwrap();
        assert!(trace.rows.iter().all(|r| r.simple_regret == Some(0.0)));
    }

    #[test]
    fn regrets_are_consistent() {
        let f = star_problem(4, 4, 2);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let truth = Truth::of(&f);
        for mode in Mode::ALL {
            let trace = run_bo(&config(mode, 4), &obj, Some(&truth)).unwrap();
            let mut prev = f64::INFINITY;
            let mut sum = 0.0;
            for row in &trace.rows {
                let r = row.regret.unwrap();
                assert!(r >= 0.0);
                assert_eq!(r, f.true_optimum_value() - f.value(&row.point));
                let s = row.simple_regret.unwrap();
                assert!(s <= prev && s <= r);
                prev = s;
                sum += r;
                assert!((row.average_regret.unwrap() - sum / row.t as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn learning_happens_every_cycle() {
        let f = star_problem(4, 4, 3);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let mut c = config(Mode::Overlap, 4);
        c.n_iter = 7;
        let trace = run_bo(&c, &obj, Some(&Truth::of(&f))).unwrap();
        let ts: Vec<usize> = trace.rounds.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![1, 4, 7]);
        assert!(trace.rounds.iter().all(|r| r.accuracy.is_some()));
        assert!(trace.rounds.iter().all(|r| r.likelihood_evaluations <= 20));
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let f = star_problem(4, 4, 5);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let c = config(Mode::Overlap, 4);
        let a = run_bo(&c, &obj, None).unwrap();
        let b = run_bo(&c, &obj, None).unwrap();
        assert_eq!(a, b);
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        write_trace_csv(&a, &mut ca).unwrap();
        write_trace_csv(&b, &mut cb).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn initial_points_are_shared_across_modes() {
        let f = star_problem(4, 4, 6);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let truth = Truth::of(&f);
        let first = run_bo(&config(Mode::Random, 4), &obj, Some(&truth)).unwrap();
        for mode in [Mode::Overlap, Mode::NoOverlap, Mode::Oracle] {
            assert_eq!(
                run_bo(&config(mode, 4), &obj, Some(&truth)).unwrap().initial,
                first.initial
            );
        }
        let mut pts: Vec<_> = first.initial.iter().map(|r| r.point.clone()).collect();
        pts.sort();
        pts.dedup();
        assert_eq!(pts.len(), 5);
    }

    #[test]
    fn empty_graph_makes_the_learners_agree() {
        let f = star_problem(4, 4, 7);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let mut a = config(Mode::Overlap, 4);
        a.n_gibbs = 1;
        let mut b = a.clone();
        b.mode = Mode::NoOverlap;
        let ta = run_bo(&a, &obj, None).unwrap();
        let tb = run_bo(&b, &obj, None).unwrap();
        assert_eq!(ta.rows, tb.rows);
        assert!(ta.rounds.iter().all(|r| r.graph.edge_count() == 0));
    }

    #[test]
    fn first_oracle_query_maximizes_the_acquisition() {
        for seed in 0..4 {
            let f = star_problem(5, 4, seed);
            let truth = Truth::of(&f);
            let obj = NoisySynthetic {
                function: &f,
                noise_variance: 0.01,
            };
            let mut c = config(Mode::Oracle, 5);
            c.n_iter = 1;
            c.seed = seed;
            let trace = run_bo(&c, &obj, Some(&truth)).unwrap();

            let mut obs = ObservationSet::empty(5);
            for row in &trace.initial {
                obs.push(row.coords.clone(), row.y).unwrap();
            }
            let params = KernelParams::new(truth.lengthscales.clone(), 0.01).unwrap();
            let model = GpModel::fit(AdditiveKernel::from_graph(&truth.graph, params).unwrap(), obs).unwrap();
            let tables = ucb_tables(&model, c.beta.value(1), f.domain(), 1 << 20).unwrap();
            let (_, best) = brute_force_maximize(f.domain(), |x| evaluate_sum(&tables, x)).unwrap();
            let chosen = evaluate_sum(&tables, &trace.rows[0].point);
            assert!((chosen - best).abs() <= 1e-9, "seed {seed}: {chosen} vs {best}");
        }
    }

    #[test]
    fn treewidth_cap_forces_a_fallback() {
        let f = star_problem(4, 4, 8);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let mut c = config(Mode::Overlap, 4);
        c.max_treewidth = 0;
        let trace = run_bo(&c, &obj, None).unwrap();
        assert!(trace.rounds.iter().all(|r| r.graph.edge_count() == 0));
    }

    #[test]
    fn table_size_cap_forces_a_fallback() {
        let f = star_problem(4, 4, 8);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let mut c = config(Mode::Overlap, 4);
        // Pairs of variables need 16 entries, so only singleton cliques fit.
        c.max_table_size = 15;
        let trace = run_bo(&c, &obj, None).unwrap();
        assert!(trace.rounds.iter().all(|r| r.graph.edge_count() == 0));
        assert!(trace.rounds.iter().any(|r| r.fallback));
    }

    #[test]
    fn configuration_errors() {
        let f = star_problem(3, 3, 0);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        assert!(run_bo(&config(Mode::Oracle, 3), &obj, None).is_err());
        let mut c = config(Mode::Overlap, 3);
        c.n_cyc = 0;
        assert!(run_bo(&c, &obj, None).is_err());
        assert!(run_bo(&config(Mode::Overlap, 4), &obj, None).is_err());
        assert!("greedy".parse::<Mode>().is_err());
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
    }

    #[test]
    fn oracle_capacity_errors_carry_iteration_context() {
        let f = star_problem(4, 4, 1);
        let obj = NoisySynthetic {
            function: &f,
            noise_variance: 0.01,
        };
        let mut c = config(Mode::Oracle, 4);
        c.max_table_size = 4;
        let err = run_bo(&c, &obj, Some(&Truth::of(&f))).unwrap_err();
        assert!(matches!(err.root(), Error::Capacity(_)));
        assert!(err.to_string().contains("iteration 1"), "{err}");
    }
}
