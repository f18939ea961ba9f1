//! Discrete search domains and observation sets.

use rand::Rng;

use crate::error::{Error, Result};

/// A point of a [`Domain`], stored as one grid index per variable.
pub type GridPoint = Vec<usize>;

/// Cartesian product of finite per-variable grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    values: Vec<Vec<f64>>,
}

impl Domain {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("domain needs at least one variable"));
        }
        for (v, grid) in values.iter().enumerate() {
            if grid.is_empty() {
                return Err(Error::invalid(format!("variable {} has an empty grid", v + 1)));
            }
            if grid.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("variable {} has a non-finite value", v + 1)));
            }
            for (a, x) in grid.iter().enumerate() {
                if grid[..a].contains(x) {
                    return Err(Error::invalid(format!("variable {} lists value {} twice", v + 1, x)));
                }
            }
        }
        Ok(Domain { values })
    }

    /// `size` evenly spaced values in `[lo, hi]` for each of `dim` variables.
    pub fn uniform_grid(dim: usize, size: usize, lo: f64, hi: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("grid size must be positive"));
        }
        if size > 1 && (hi.is_nan() || lo.is_nan() || hi <= lo) {
            return Err(Error::invalid("grid upper bound must exceed lower bound"));
        }
        let grid: Vec<f64> = if size == 1 {
            vec![lo]
        } else {
            (0..size)
                .map(|k| lo + (hi - lo) * k as f64 / (size - 1) as f64)
                .collect()
        };
        Domain::new(vec![grid; dim])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self, var: usize) -> &[f64] {
        &self.values[var]
    }

    pub fn size(&self, var: usize) -> usize {
        self.values[var].len()
    }

    pub fn sizes(&self, vars: &[usize]) -> Vec<usize> {
        vars.iter().map(|&v| self.size(v)).collect()
    }

    /// Number of configurations of `vars`, or `None` on overflow.
    pub fn config_count(&self, vars: &[usize]) -> Option<usize> {
        vars.iter().try_fold(1usize, |acc, &v| acc.checked_mul(self.size(v)))
    }

    /// Total number of points, or `None` on overflow.
    pub fn total_size(&self) -> Option<usize> {
        (0..self.dim()).try_fold(1usize, |acc, v| acc.checked_mul(self.size(v)))
    }

    pub fn coords(&self, point: &[usize]) -> Vec<f64> {
        point.iter().enumerate().map(|(v, &i)| self.values[v][i]).collect()
    }

    pub fn contains(&self, point: &[usize]) -> bool {
        point.len() == self.dim() && point.iter().enumerate().all(|(v, &i)| i < self.size(v))
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> GridPoint {
        (0..self.dim()).map(|v| rng.random_range(0..self.size(v))).collect()
    }

    /// Decodes a flat lexicographic index (first variable most significant).
    pub fn point_at(&self, index: usize) -> GridPoint {
        let sizes: Vec<usize> = (0..self.dim()).map(|v| self.size(v)).collect();
        let mut out = vec![0; sizes.len()];
        decode_index(index, &sizes, &mut out);
        out
    }

    /// Maps coordinates back to grid indices by exact value match.
    pub fn locate(&self, coords: &[f64]) -> Option<GridPoint> {
        if coords.len() != self.dim() {
            return None;
        }
        coords
            .iter()
            .enumerate()
            .map(|(v, x)| self.values[v].iter().position(|g| g == x))
            .collect()
    }
}

/// Decodes `index` in mixed radix `sizes` into `out`, most significant first.
pub fn decode_index(mut index: usize, sizes: &[usize], out: &mut [usize]) {
    for k in (0..sizes.len()).rev() {
        out[k] = index % sizes[k];
        index /= sizes[k];
    }
}

/// Row-major strides for mixed radix `sizes`, most significant first.
pub fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = vec![1; sizes.len()];
    for k in (0..sizes.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * sizes[k + 1];
    }
    s
}

/// Advances a mixed-radix odometer; returns `false` after the last configuration.
pub fn advance(digits: &mut [usize], sizes: &[usize]) -> bool {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < sizes[k] {
            return true;
        }
        digits[k] = 0;
    }
    false
}

/// Observed inputs (real coordinates) and outputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl ObservationSet {
    pub fn empty(dim: usize) -> Self {
        ObservationSet {
            dim,
            points: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn new(dim: usize, points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        let mut obs = ObservationSet::empty(dim);
        for (p, y) in points.into_iter().zip(values) {
            obs.push(p, y)?;
        }
        Ok(obs)
    }

    pub fn push(&mut self, point: Vec<f64>, value: f64) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has {} coordinates, expected {}",
                point.len(),
                self.dim
            )));
        }
        if !value.is_finite() || point.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("observations must be finite"));
        }
        self.points.push(point);
        self.values.push(value);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Checks every coordinate against the domain grid.
    pub fn validate_in(&self, domain: &Domain) -> Result<()> {
        if domain.dim() != self.dim {
            return Err(Error::invalid("observation dimension differs from domain"));
        }
        for (k, p) in self.points.iter().enumerate() {
            if domain.locate(p).is_none() {
                return Err(Error::invalid(format!(
                    "observation {} lies outside the domain grid",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// The domain spanned by the distinct observed values of each variable.
    pub fn induced_domain(&self) -> Result<Domain> {
        if self.is_empty() {
            return Err(Error::invalid("no observations"));
        }
        let mut grids = vec![Vec::new(); self.dim];
        for p in &self.points {
            for (v, &x) in p.iter().enumerate() {
                if !grids[v].contains(&x) {
                    grids[v].push(x);
                }
            }
        }
        for g in &mut grids {
            g.sort_by(|a: &f64, b| a.total_cmp(b));
        }
        Domain::new(grids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Domain::new(vec![]).is_err());
        assert!(Domain::new(vec![vec![]]).is_err());
        assert!(Domain::new(vec![vec![0.0, 0.0]]).is_err());
        assert!(Domain::new(vec![vec![0.0, 1.0], vec![2.0]]).is_ok());
    }

    #[test]
    fn odometer_matches_decode() {
        let sizes = [2, 3, 2];
        let mut digits = vec![0; 3];
        let mut k = 0;
        loop {
            let mut d = vec![0; 3];
            decode_index(k, &sizes, &mut d);
            assert_eq!(d, digits);
            let st = strides(&sizes);
            assert_eq!(d.iter().zip(&st).map(|(a, b)| a * b).sum::<usize>(), k);
            k += 1;
            if !advance(&mut digits, &sizes) {
                break;
            }
        }
        assert_eq!(k, 12);
    }

    #[test]
    fn observation_lengths_must_agree() {
        assert!(ObservationSet::new(1, vec![vec![0.0]], vec![]).is_err());
        assert!(ObservationSet::new(2, vec![vec![0.0]], vec![1.0]).is_err());
    }

    #[test]
    fn induced_domain_sorts_distinct_values() {
        let obs = ObservationSet::new(1, vec![vec![0.5], vec![0.1], vec![0.5]], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(obs.induced_domain().unwrap().values(0), &[0.1, 0.5]);
    }
}
