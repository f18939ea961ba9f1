//! Numerical checks on the additive surrogate: how much the sum of component
//! standard deviations over-estimates the true posterior standard deviation,
//! and the information gain `I(y_A; f_A)` of point sets.

use std::io::Write;

use nalgebra::DMatrix;

use crate::domain::{Domain, GridPoint};
use crate::error::{Error, Result};
use crate::gp::{AdditiveKernel, GpModel};
use crate::rng::{stream, Stream};

/// Below this true standard deviation the ratio is reported as infinite.
pub const RATIO_FLOOR: f64 = 1e-12;
/// Allowed slack in `σ ≤ Σ_j σ^(j)`.
pub const INEQUALITY_TOLERANCE: f64 = 1e-9;
/// Largest domain [`greedy_info_gain`] will scan.
pub const MAX_GREEDY_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceGapSample {
    pub point: Vec<f64>,
    pub true_std: f64,
    pub approx_std: f64,
    /// `approx_std / true_std`, or `+inf` when `true_std < RATIO_FLOOR`.
    pub ratio: f64,
}

impl VarianceGapSample {
    pub fn violates_inequality(&self) -> bool {
        self.approx_std < self.true_std - INEQUALITY_TOLERANCE
    }
}

/// Compares full and summed component posterior standard deviations at
/// `points`. The result is sorted by `true_std`.
pub fn variance_gap_at(model: &GpModel, points: &[Vec<f64>]) -> Result<Vec<VarianceGapSample>> {
    let m = model.kernel().num_groups();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let (_, var) = model.full(p)?;
        let mut approx = 0.0;
        for j in 0..m {
            approx += model.component(j, p)?.1.sqrt();
        }
        let true_std = var.sqrt();
        let ratio = if true_std < RATIO_FLOOR {
            f64::INFINITY
        } else {
            approx / true_std
        };
        out.push(VarianceGapSample {
            point: p.clone(),
            true_std,
            approx_std: approx,
            ratio,
        });
    }
    out.sort_by(|a, b| a.true_std.total_cmp(&b.true_std));
    Ok(out)
}

/// [`variance_gap_at`] over `num_points` domain points drawn uniformly.
pub fn variance_gap_scan(
    model: &GpModel,
    domain: &Domain,
    num_points: usize,
    seed: u64,
) -> Result<Vec<VarianceGapSample>> {
    if domain.dim() != model.kernel().dim() {
        return Err(Error::invalid("domain and model dimensions differ"));
    }
    let mut rng = stream(seed, Stream::AnalysisScan);
    let points: Vec<Vec<f64>> = (0..num_points)
        .map(|_| domain.coords(&domain.sample_uniform(&mut rng)))
        .collect();
    variance_gap_at(model, &points)
}

pub fn count_violations(samples: &[VarianceGapSample]) -> usize {
    samples.iter().filter(|s| s.violates_inequality()).count()
}

/// `½ log det(I + η⁻² K_A)` in nats, from the Cholesky factor.
pub fn information_gain(points: &[Vec<f64>], kernel: &AdditiveKernel) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("information gain needs at least one point"));
    }
    let noise = kernel.noise_variance();
    if noise.is_nan() || noise <= 0.0 {
        return Err(Error::invalid("information gain needs a positive noise variance"));
    }
    let n = points.len();
    let k = kernel.gram(points)?;
    let m = DMatrix::from_fn(n, n, |i, j| k[(i, j)] / noise + if i == j { 1.0 } else { 0.0 });
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Numerical("I + K/η² is not positive definite".into()))?;
    let gain: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum();
    if !gain.is_finite() {
        return Err(Error::Numerical("information gain is not finite".into()));
    }
    Ok(gain.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoGainResult {
    pub selected: Vec<GridPoint>,
    /// Gain of the first `k + 1` selected points, for each `k`.
    pub gains: Vec<f64>,
}

impl InfoGainResult {
    pub fn gain(&self) -> f64 {
        self.gains.last().copied().unwrap_or(0.0)
    }
}

/// Greedily builds a set of `t` distinct domain points, each time adding the
/// point of largest marginal gain `½ ln(1 + σ²_A(x)/η²)` (first in
/// lexicographic order on ties).
pub fn greedy_info_gain(domain: &Domain, t: usize, kernel: &AdditiveKernel) -> Result<InfoGainResult> {
    if domain.dim() != kernel.dim() {
        return Err(Error::invalid("domain and kernel dimensions differ"));
    }
    let noise = kernel.noise_variance();
    if noise.is_nan() || noise <= 0.0 {
        return Err(Error::invalid("information gain needs a positive noise variance"));
    }
    let total = domain
        .total_size()
        .filter(|&n| n <= MAX_GREEDY_POINTS)
        .ok_or_else(|| Error::Capacity(format!("domain exceeds {MAX_GREEDY_POINTS} points")))?;
    if t == 0 || t > total {
        return Err(Error::invalid(format!("T must lie in 1..={total}, got {t}")));
    }

    let coords: Vec<Vec<f64>> = (0..total).map(|i| domain.coords(&domain.point_at(i))).collect();
    let mut var: Vec<f64> = coords.iter().map(|x| kernel.eval(x, x)).collect::<Result<_>>()?;
    // Columns of the incremental Cholesky factor, one per selected point.
    let mut factor: Vec<Vec<f64>> = Vec::with_capacity(t);
    let mut taken = vec![false; total];
    let mut selected = Vec::with_capacity(t);
    let mut gains = Vec::with_capacity(t);
    let mut gain = 0.0;

    for _ in 0..t {
        let mut best: Option<usize> = None;
        for i in 0..total {
            if !taken[i] && best.is_none_or(|b| var[i] > var[b]) {
                best = Some(i);
            }
        }
        let a = best.expect("t <= total leaves a candidate");
        let va = var[a].max(0.0);
        gain += 0.5 * (va / noise).ln_1p();
        let d = (va + noise).sqrt();
        let mut column = vec![0.0; total];
        for i in 0..total {
            let mut c = kernel.eval(&coords[i], &coords[a])?;
            for prev in &factor {
                c -= prev[i] * prev[a];
            }
            column[i] = c / d;
            var[i] -= column[i] * column[i];
        }
        factor.push(column);
        taken[a] = true;
        selected.push(domain.point_at(a));
        gains.push(gain);
    }
    Ok(InfoGainResult { selected, gains })
}

/// `true_std,approx_std,ratio`; infinite ratios are written as `inf`.
pub fn write_scan_csv<W: Write>(samples: &[VarianceGapSample], mut out: W) -> Result<()> {
    writeln!(out, "true_std,approx_std,ratio")?;
    for s in samples {
        writeln!(out, "{},{},{}", s.true_std, s.approx_std, s.ratio)?;
    }
    Ok(())
}

/// `T,gain`.
pub fn write_info_gain_csv<W: Write>(result: &InfoGainResult, mut out: W) -> Result<()> {
    writeln!(out, "T,gain")?;
    for (k, g) in result.gains.iter().enumerate() {
        writeln!(out, "{},{g}", k + 1)?;
    }
    Ok(())
}
