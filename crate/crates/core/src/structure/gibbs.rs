use std::collections::HashMap;

use rand::Rng;

use super::conditionals::{check_prior, normalize_log_weights};
use super::no_overlap::{assignment_from_graph, assignment_graph, no_overlap_candidates, sample_index};
use super::{LengthscaleGrids, StructureParams};
use crate::domain::ObservationSet;
use crate::error::{Error, Result};
use crate::gp::log_marginal_likelihood;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearningMode {
    /// Any graph; edges are sampled one indicator at a time.
    Overlap,
    /// Disjoint cliques only; variables are moved between groups.
    NoOverlap,
}

#[derive(Debug, Clone)]
pub struct GibbsSettings {
    pub grids: LengthscaleGrids,
    pub noise_variance: f64,
    pub edge_prior_p: f64,
    /// Maximum number of distinct likelihood evaluations (`N_Gibbs`).
    pub budget: usize,
    pub mode: LearningMode,
    /// Maximum number of coordinate updates. Needed because cached states cost
    /// nothing, so a chain on a small state space never exhausts the budget.
    /// Defaults to `100 × budget` when `None`.
    pub max_steps: Option<usize>,
}

impl GibbsSettings {
    pub fn new(grids: LengthscaleGrids, noise_variance: f64, budget: usize, mode: LearningMode) -> Self {
        GibbsSettings {
            grids,
            noise_variance,
            edge_prior_p: 0.5,
            budget,
            mode,
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub params: StructureParams,
    pub log_likelihood: f64,
}

/// Every state the chain visited, starting with the initial one.
#[derive(Debug, Clone)]
pub struct GibbsTrace {
    pub entries: Vec<TraceEntry>,
    pub best: usize,
    pub likelihood_evaluations: usize,
}

impl GibbsTrace {
    pub fn best(&self) -> &TraceEntry {
        &self.entries[self.best]
    }

    /// Best-likelihood visited state satisfying `accept`, if any.
    pub fn best_where(&self, mut accept: impl FnMut(&StructureParams) -> bool) -> Option<&TraceEntry> {
        let mut best: Option<&TraceEntry> = None;
        for e in &self.entries {
            if best.is_none_or(|b| e.log_likelihood > b.log_likelihood) && accept(&e.params) {
                best = Some(e);
            }
        }
        best
    }
}

/// Memoized log marginal likelihoods with a hard evaluation budget.
struct Scorer<'a> {
    obs: &'a ObservationSet,
    grids: &'a LengthscaleGrids,
    noise_variance: f64,
    cache: HashMap<StructureParams, f64>,
    evaluations: usize,
    budget: usize,
}

impl Scorer<'_> {
    fn missing(&self, cands: &[StructureParams]) -> usize {
        let mut seen: Vec<&StructureParams> = Vec::new();
        for c in cands {
            if !self.cache.contains_key(c) && !seen.contains(&c) {
                seen.push(c);
            }
        }
        seen.len()
    }

    fn score(&mut self, params: &StructureParams) -> Result<f64> {
        if let Some(&v) = self.cache.get(params) {
            return Ok(v);
        }
        debug_assert!(self.evaluations < self.budget);
        self.evaluations += 1;
        let kp = params.kernel_params(self.grids, self.noise_variance)?;
        // Numerically failing states are never selected.
        let value = match log_marginal_likelihood(self.obs, &params.graph(), &kp) {
            Ok(v) => v,
            Err(e) if matches!(e.root(), Error::Numerical(_)) => {
                log::debug!("likelihood failed for {}: {e}", params.graph());
                f64::NEG_INFINITY
            }
            Err(e) => return Err(e),
        };
        self.cache.insert(params.clone(), value);
        Ok(value)
    }
}

enum Coordinate {
    Edge(usize, usize),
    Variable(usize),
    Lengthscale(usize),
}

/// Runs the Gibbs sampler from `init` until the likelihood budget or step cap
/// is reached and returns the visited states.
///
/// Each sweep updates the edge indicators in lexicographic `(i, j)` order (or,
/// in [`LearningMode::NoOverlap`], each variable's group), then every
/// lengthscale whose grid has more than one value. An update needing more
/// fresh likelihood evaluations than the remaining budget ends the run.
pub fn gibbs_learn<R: Rng + ?Sized>(
    obs: &ObservationSet,
    init: &StructureParams,
    settings: &GibbsSettings,
    rng: &mut R,
) -> Result<GibbsTrace> {
    if settings.budget == 0 {
        return Err(Error::invalid("the likelihood budget must be at least 1"));
    }
    check_prior(settings.edge_prior_p)?;
    let d = init.dim();
    if settings.grids.dim() != d || obs.dim() != d {
        return Err(Error::invalid("observations, grids and initial state must share D"));
    }
    if obs.is_empty() {
        return Err(Error::invalid("structure learning needs observations"));
    }

    let mut current = init.clone();
    if settings.mode == LearningMode::NoOverlap {
        current = current.with_graph(&assignment_graph(&assignment_from_graph(&init.graph())));
    }

    let mut scorer = Scorer {
        obs,
        grids: &settings.grids,
        noise_variance: settings.noise_variance,
        cache: HashMap::new(),
        evaluations: 0,
        budget: settings.budget,
    };
    let ll = scorer.score(&current)?;
    let mut entries = vec![TraceEntry {
        params: current.clone(),
        log_likelihood: ll,
    }];

    let mut sweep = Vec::new();
    match settings.mode {
        LearningMode::Overlap => {
            for i in 0..d {
                for j in i + 1..d {
                    sweep.push(Coordinate::Edge(i, j));
                }
            }
        }
        LearningMode::NoOverlap => {
            if d > 1 {
                sweep.extend((0..d).map(Coordinate::Variable));
            }
        }
    }
    sweep.extend(
        (0..d)
            .filter(|&v| settings.grids.grid(v).len() > 1)
            .map(Coordinate::Lengthscale),
    );

    let max_steps = settings.max_steps.unwrap_or(100 * settings.budget);
    let mut steps = 0usize;
    let ln_p = settings.edge_prior_p.ln();
    let ln_q = (1.0 - settings.edge_prior_p).ln();

    'chain: while !sweep.is_empty() {
        for coord in &sweep {
            if steps >= max_steps {
                break 'chain;
            }
            let (cands, prior): (Vec<StructureParams>, Vec<f64>) = match *coord {
                Coordinate::Edge(i, j) => {
                    let mut off = current.clone();
                    off.set_edge(i, j, false);
                    let mut on = current.clone();
                    on.set_edge(i, j, true);
                    (vec![off, on], vec![ln_q, ln_p])
                }
                Coordinate::Variable(v) => {
                    let assignment = assignment_from_graph(&current.graph());
                    let cands: Vec<StructureParams> = no_overlap_candidates(v, &assignment)?
                        .iter()
                        .map(|a| current.with_graph(&assignment_graph(a)))
                        .collect();
                    let n = cands.len();
                    (cands, vec![0.0; n])
                }
                Coordinate::Lengthscale(v) => {
                    let n = settings.grids.grid(v).len();
                    let cands: Vec<StructureParams> = (0..n)
                        .map(|k| {
                            let mut c = current.clone();
                            c.set_lengthscale_index(v, k);
                            c
                        })
                        .collect();
                    (cands, vec![0.0; n])
                }
            };
            if scorer.evaluations + scorer.missing(&cands) > scorer.budget {
                break 'chain;
            }
            let mut logs = Vec::with_capacity(cands.len());
            for (c, lp) in cands.iter().zip(&prior) {
                logs.push(scorer.score(c)? + lp);
            }
            let weights = normalize_log_weights(&logs);
            let pick = sample_index(&weights, rng);
            current = cands[pick].clone();
            let ll = scorer.cache[&current];
            entries.push(TraceEntry {
                params: current.clone(),
                log_likelihood: ll,
            });
            steps += 1;
        }
    }

    let mut best = 0;
    for (k, e) in entries.iter().enumerate() {
        if e.log_likelihood > entries[best].log_likelihood {
            best = k;
        }
    }
    Ok(GibbsTrace {
        entries,
        best,
        likelihood_evaluations: scorer.evaluations,
    })
}
