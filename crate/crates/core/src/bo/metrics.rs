use super::RegretTrace;
use crate::error::{Error, Result};
use crate::graph::DependencyGraph;

/// Correct connections and correct separations of `learned` against `truth`.
///
/// CC is the fraction of true edges present in `learned`, CS the fraction of
/// true non-edges absent from it. A truth without edges (or without
/// non-edges) gives CC (or CS) equal to 1.
pub fn graph_accuracy(learned: &DependencyGraph, truth: &DependencyGraph) -> Result<(f64, f64)> {
    if learned.dim() != truth.dim() {
        return Err(Error::invalid(format!(
            "graphs have different dimensions ({} vs {})",
            learned.dim(),
            truth.dim()
        )));
    }
    let d = truth.dim();
    let (mut edges, mut kept, mut non_edges, mut separated) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..d {
        for j in i + 1..d {
            if truth.has_edge(i, j) {
                edges += 1;
                kept += usize::from(learned.has_edge(i, j));
            } else {
                non_edges += 1;
                separated += usize::from(!learned.has_edge(i, j));
            }
        }
    }
    let cc = if edges == 0 {
        log::debug!("true graph has no edges; CC taken as 1");
        1.0
    } else {
        kept as f64 / edges as f64
    };
    let cs = if non_edges == 0 {
        log::debug!("true graph is complete; CS taken as 1");
        1.0
    } else {
        separated as f64 / non_edges as f64
    };
    Ok((cc, cs))
}

/// Mean and standard error (sample deviation over `√runs`) of each column.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSe {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub simple_regret: MeanSe,
    pub average_regret: MeanSe,
    /// Iteration at which each learning round happened.
    pub round_t: Vec<usize>,
    pub cc: MeanSe,
    pub cs: MeanSe,
}

fn mean_se(columns: &[Vec<f64>]) -> MeanSe {
    let n = columns.len() as f64;
    let len = columns.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; len];
    let mut se = vec![0.0; len];
    for k in 0..len {
        let m = columns.iter().map(|c| c[k]).sum::<f64>() / n;
        mean[k] = m;
        if columns.len() > 1 {
            let var = columns.iter().map(|c| (c[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
            se[k] = (var / n).sqrt();
        }
    }
    MeanSe { mean, se }
}

/// Elementwise statistics over runs of equal length. Learning rounds are
/// aligned by index; graph accuracy is included only when every round of
/// every run has it.
pub fn aggregate_runs(traces: &[RegretTrace]) -> Result<Aggregate> {
    let first = traces
        .first()
        .ok_or_else(|| Error::invalid("cannot aggregate zero runs"))?;
    let len = first.rows.len();
    let rounds = first.rounds.len();
    for t in traces {
        if t.rows.len() != len {
            return Err(Error::invalid(format!(
                "runs have different lengths ({} vs {len})",
                t.rows.len()
            )));
        }
        if t.rounds.len() != rounds {
            return Err(Error::invalid("runs have different numbers of learning rounds"));
        }
    }

    let mut simple = Vec::with_capacity(traces.len());
    let mut average = Vec::with_capacity(traces.len());
    for t in traces {
        let s: Option<Vec<f64>> = t.rows.iter().map(|r| r.simple_regret).collect();
        let a: Option<Vec<f64>> = t.rows.iter().map(|r| r.average_regret).collect();
        match (s, a) {
            (Some(s), Some(a)) => {
                simple.push(s);
                average.push(a);
            }
            _ => {
                return Err(Error::invalid(
                    "aggregation needs regrets, but the objective has no known optimum",
                ))
            }
        }
    }

    let with_accuracy = traces.iter().all(|t| t.rounds.iter().all(|r| r.accuracy.is_some()));
    let (mut cc, mut cs) = (Vec::new(), Vec::new());
    if with_accuracy {
        for t in traces {
            cc.push(t.rounds.iter().map(|r| r.accuracy.unwrap().0).collect());
            cs.push(t.rounds.iter().map(|r| r.accuracy.unwrap().1).collect());
        }
    }
    Ok(Aggregate {
        runs: traces.len(),
        simple_regret: mean_se(&simple),
        average_regret: mean_se(&average),
        round_t: first.rounds.iter().map(|r| r.t).collect(),
        cc: mean_se(&cc),
        cs: mean_se(&cs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_cases() {
        let star = DependencyGraph::star(10);
        assert_eq!(graph_accuracy(&star, &star).unwrap(), (1.0, 1.0));
        let partial = DependencyGraph::from_edges(10, &(1..7).map(|v| (0, v)).collect::<Vec<_>>()).unwrap();
        let (cc, cs) = graph_accuracy(&partial, &star).unwrap();
        assert_eq!(cc, 6.0 / 9.0);
        assert_eq!(cs, 1.0);
        assert_eq!(
            graph_accuracy(&DependencyGraph::complete(10), &star).unwrap(),
            (1.0, 0.0)
        );
    }

    #[test]
    fn degenerate_truths() {
        let empty = DependencyGraph::empty(4);
        let complete = DependencyGraph::complete(4);
        assert_eq!(graph_accuracy(&complete, &empty).unwrap(), (1.0, 0.0));
        assert_eq!(graph_accuracy(&empty, &complete).unwrap(), (0.0, 1.0));
        assert!(graph_accuracy(&empty, &DependencyGraph::empty(3)).is_err());
    }

    #[test]
    fn mean_and_standard_error() {
        let m = mean_se(&[vec![1.0, 4.0], vec![3.0, 4.0]]);
        assert_eq!(m.mean, vec![2.0, 4.0]);
        // Sample sd of {1, 3} is √2; divided by √2 gives 1.
        assert!((m.se[0] - 1.0).abs() < 1e-15);
        assert_eq!(m.se[1], 0.0);
        let single = mean_se(&[vec![5.0, 2.0]]);
        assert_eq!(single.mean, vec![5.0, 2.0]);
        assert_eq!(single.se, vec![0.0, 0.0]);
    }
}
