//! Exact max-sum over a junction tree.
//!
//! Messages flow from the leaves to the root. Each message table stores, per
//! separator configuration, the best value over the eliminated variables and
//! the eliminated configuration achieving it. A downward pass then reads the
//! argmax back out of these backpointers.

use super::ComponentTable;
use crate::domain::{advance, decode_index, strides, Domain, GridPoint};
use crate::error::{Error, Result};
use crate::graph::JunctionTree;

/// Default cap on the entries of a single clique table.
pub const DEFAULT_MAX_TABLE_SIZE: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct AcquisitionLimits {
    /// Hard cap on the configurations of any one tree node.
    pub max_table_size: usize,
    /// Soft budget on the total entries evaluated in one maximization. When it
    /// is exceeded the result is still exact, but the overrun is reported.
    pub max_eval: Option<usize>,
}

impl Default for AcquisitionLimits {
    fn default() -> Self {
        AcquisitionLimits {
            max_table_size: DEFAULT_MAX_TABLE_SIZE,
            max_eval: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub point: GridPoint,
    pub value: f64,
    /// Node-table entries visited during the upward pass.
    pub entries_evaluated: usize,
    /// True when `entries_evaluated` exceeded `max_eval`.
    pub max_eval_exceeded: bool,
}

/// Separator configuration → best value over eliminated variables, with the
/// eliminated configuration (lexicographic index) attaining it.
#[derive(Debug, Clone)]
pub struct MessageTable {
    pub separator: Vec<usize>,
    pub eliminated: Vec<usize>,
    pub values: Vec<f64>,
    pub argmax: Vec<usize>,
}

/// Maximizes `Σ_i terms_i(x)` over the whole domain.
///
/// Each term must match a maximal clique of the graph the tree was built
/// from (it is then handled by the node that clique is assigned to), or at
/// least be contained in some tree node.
pub fn maximize_acquisition(
    tree: &JunctionTree,
    terms: &[ComponentTable],
    domain: &Domain,
    limits: AcquisitionLimits,
) -> Result<Maximum> {
    if tree.is_empty() {
        return Err(Error::invalid("empty junction tree"));
    }
    if tree.nodes().iter().flatten().any(|&v| v >= domain.dim()) {
        return Err(Error::Inconsistency("tree variables do not match the domain".into()));
    }

    let mut node_terms: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
    for (t, term) in terms.iter().enumerate() {
        if term.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "term over {:?} has non-finite entries",
                term.vars()
            )));
        }
        let node = match tree.original_cliques().iter().position(|c| c == term.vars()) {
            Some(k) => tree.term_assignment()[k],
            None => tree
                .post_order()
                .iter()
                .copied()
                .find(|&v| term.vars().iter().all(|x| tree.nodes()[v].contains(x)))
                .ok_or_else(|| Error::Inconsistency(format!("term over {:?} fits no tree node", term.vars())))?,
        };
        node_terms[node].push(t);
    }

    let mut messages: Vec<Option<MessageTable>> = vec![None; tree.len()];
    let mut entries = 0usize;

    for &node in tree.post_order() {
        let vars = &tree.nodes()[node];
        let sizes = domain.sizes(vars);
        let count = domain
            .config_count(vars)
            .filter(|&c| c <= limits.max_table_size)
            .ok_or_else(|| {
                Error::Capacity(format!(
                    "clique {:?} table exceeds {} entries",
                    vars, limits.max_table_size
                ))
            })?;
        entries += count;

        // Strides of every contribution, expressed over this node's digits.
        let mut parts: Vec<(&[f64], Vec<usize>)> = Vec::new();
        for &t in &node_terms[node] {
            let term = &terms[t];
            parts.push((term.values(), local_strides(vars, term.vars(), term.sizes())));
        }
        for &child in tree.children(node) {
            let msg = messages[child].as_ref().expect("children are processed first");
            let sep_sizes = domain.sizes(&msg.separator);
            parts.push((&msg.values, local_strides(vars, &msg.separator, &sep_sizes)));
        }

        let separator = tree.separator(node);
        let eliminated: Vec<usize> = vars.iter().copied().filter(|v| !separator.contains(v)).collect();
        let sep_strides = local_strides(vars, &separator, &domain.sizes(&separator));
        let elim_strides = local_strides(vars, &eliminated, &domain.sizes(&eliminated));
        let sep_count = domain.config_count(&separator).unwrap_or(1);

        let mut best = vec![f64::NEG_INFINITY; sep_count];
        let mut argmax = vec![0usize; sep_count];
        let mut digits = vec![0usize; vars.len()];
        loop {
            let mut total = 0.0;
            for (values, st) in &parts {
                total += values[dot(&digits, st)];
            }
            let s = dot(&digits, &sep_strides);
            // Strict comparison keeps the lexicographically first maximizer.
            if total > best[s] {
                best[s] = total;
                argmax[s] = dot(&digits, &elim_strides);
            }
            if !advance(&mut digits, &sizes) {
                break;
            }
        }
        debug_assert!(count > 0);
        messages[node] = Some(MessageTable {
            separator,
            eliminated,
            values: best,
            argmax,
        });
    }

    // Downward pass: parents before children.
    let mut point = vec![usize::MAX; domain.dim()];
    for &node in tree.post_order().iter().rev() {
        let msg = messages[node].as_ref().expect("all messages computed");
        let sep_sizes = domain.sizes(&msg.separator);
        let sep_st = strides(&sep_sizes);
        let s: usize = msg.separator.iter().zip(&sep_st).map(|(&v, st)| point[v] * st).sum();
        let elim_sizes = domain.sizes(&msg.eliminated);
        let mut elim_digits = vec![0; msg.eliminated.len()];
        decode_index(msg.argmax[s], &elim_sizes, &mut elim_digits);
        for (&v, &d) in msg.eliminated.iter().zip(&elim_digits) {
            point[v] = d;
        }
    }
    // Variables outside every node do not affect the objective.
    for v in point.iter_mut() {
        if *v == usize::MAX {
            *v = 0;
        }
    }

    let root_msg = messages[tree.root()].as_ref().expect("root message");
    let value = root_msg.values[0];
    let exceeded = limits.max_eval.is_some_and(|cap| entries > cap);
    if exceeded {
        log::info!(
            "acquisition maximization evaluated {entries} entries, above max_eval {}",
            limits.max_eval.unwrap_or(0)
        );
    }
    Ok(Maximum {
        point,
        value,
        entries_evaluated: entries,
        max_eval_exceeded: exceeded,
    })
}

/// Strides mapping the digits of `node_vars` to an index into a table over
/// `sub_vars` (a subset) with sizes `sub_sizes`.
fn local_strides(node_vars: &[usize], sub_vars: &[usize], sub_sizes: &[usize]) -> Vec<usize> {
    let sub_st = strides(sub_sizes);
    node_vars
        .iter()
        .map(|v| match sub_vars.iter().position(|x| x == v) {
            Some(k) => sub_st[k],
            None => 0,
        })
        .collect()
}

#[inline]
fn dot(digits: &[usize], st: &[usize]) -> usize {
    digits.iter().zip(st).map(|(d, s)| d * s).sum()
}
