use std::io::Write;

use super::{Aggregate, Mode};
use crate::domain::GridPoint;
use crate::error::Result;
use crate::graph::DependencyGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// BO iteration, or 0 for the initial design.
    pub t: usize,
    pub point: GridPoint,
    pub coords: Vec<f64>,
    pub y: f64,
    /// `f(x_opt) − f(x_t)`; `None` when the optimum is unknown.
    pub regret: Option<f64>,
    /// Smallest regret so far, initial design included.
    pub simple_regret: Option<f64>,
    /// Mean regret of the BO queries `1..=t`.
    pub average_regret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningRound {
    pub round: usize,
    /// Iteration the learned structure was first used for.
    pub t: usize,
    pub graph: DependencyGraph,
    pub lengthscales: Vec<f64>,
    pub log_likelihood: f64,
    pub likelihood_evaluations: usize,
    /// True when the best sample exceeded the treewidth or table-size cap and
    /// a smaller graph from the chain was used instead.
    pub fallback: bool,
    /// `(CC, CS)` against the true graph, when known.
    pub accuracy: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub dim: usize,
    pub mode: Mode,
    pub seed: u64,
    pub initial: Vec<TraceRow>,
    pub rows: Vec<TraceRow>,
    pub rounds: Vec<LearningRound>,
    /// Number of acquisition maximizations that overran `max_eval`.
    pub max_eval_exceeded: usize,
}

impl RegretTrace {
    pub fn final_simple_regret(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.simple_regret)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn header_x(dim: usize) -> String {
    (1..=dim).map(|i| format!("x_{i}")).collect::<Vec<_>>().join(",")
}

/// `t,x_1..x_D,y,r,S,Ravg`, one row per BO iteration. Regret columns are
/// empty when the optimum is unknown.
pub fn write_trace_csv<W: Write>(trace: &RegretTrace, mut out: W) -> Result<()> {
    writeln!(out, "t,{},y,r,S,Ravg", header_x(trace.dim))?;
    for row in &trace.rows {
        let xs: Vec<String> = row.coords.iter().map(f64::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.t,
            xs.join(","),
            row.y,
            opt(row.regret),
            opt(row.simple_regret),
            opt(row.average_regret)
        )?;
    }
    Ok(())
}

/// `round,t,CC,CS`; accuracy columns are empty without a known truth.
pub fn write_rounds_csv<W: Write>(trace: &RegretTrace, mut out: W) -> Result<()> {
    writeln!(out, "round,t,CC,CS")?;
    for r in &trace.rounds {
        writeln!(
            out,
            "{},{},{},{}",
            r.round,
            r.t,
            opt(r.accuracy.map(|a| a.0)),
            opt(r.accuracy.map(|a| a.1))
        )?;
    }
    Ok(())
}

/// `t,S_mean,S_se,Ravg_mean,Ravg_se`.
pub fn write_aggregate_csv<W: Write>(agg: &Aggregate, mut out: W) -> Result<()> {
    writeln!(out, "t,S_mean,S_se,Ravg_mean,Ravg_se")?;
    for k in 0..agg.simple_regret.mean.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            k + 1,
            agg.simple_regret.mean[k],
            agg.simple_regret.se[k],
            agg.average_regret.mean[k],
            agg.average_regret.se[k]
        )?;
    }
    Ok(())
}

/// `round,t,CC_mean,CC_se,CS_mean,CS_se`.
pub fn write_aggregate_rounds_csv<W: Write>(agg: &Aggregate, mut out: W) -> Result<()> {
    writeln!(out, "round,t,CC_mean,CC_se,CS_mean,CS_se")?;
    for k in 0..agg.cc.mean.len() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            k + 1,
            agg.round_t[k],
            agg.cc.mean[k],
            agg.cc.se[k],
            agg.cs.mean[k],
            agg.cs.se[k]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let trace = RegretTrace {
            dim: 2,
            mode: Mode::Random,
            seed: 0,
            initial: Vec::new(),
            rows: vec![TraceRow {
                t: 1,
                point: vec![0, 1],
                coords: vec![0.0, 1.5],
                y: -0.25,
                regret: Some(1.0),
                simple_regret: Some(0.5),
                average_regret: Some(1.0),
            }],
            rounds: vec![LearningRound {
                round: 1,
                t: 1,
                graph: DependencyGraph::empty(2),
                lengthscales: vec![1.0, 1.0],
                log_likelihood: -3.0,
                likelihood_evaluations: 3,
                fallback: false,
                accuracy: None,
            }],
            max_eval_exceeded: 0,
        };
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,x_1,x_2,y,r,S,Ravg\n1,0,1.5,-0.25,1,0.5,1\n"
        );
        let mut buf = Vec::new();
        write_rounds_csv(&trace, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "round,t,CC,CS\n1,1,,\n");
    }
}
