use crate::domain::{advance, strides, Domain};
use crate::error::{Error, Result};

/// A real-valued function on the configurations of a variable group, stored
/// densely in lexicographic order (first variable most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTable {
    vars: Vec<usize>,
    sizes: Vec<usize>,
    values: Vec<f64>,
}

impl ComponentTable {
    pub fn new(vars: Vec<usize>, domain: &Domain, values: Vec<f64>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::invalid("a table needs at least one variable"));
        }
        if !vars.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("table variables must be strictly increasing"));
        }
        if vars.iter().any(|&v| v >= domain.dim()) {
            return Err(Error::invalid("table variable outside the domain"));
        }
        let count = domain
            .config_count(&vars)
            .ok_or_else(|| Error::Capacity("table size overflows".into()))?;
        if values.len() != count {
            return Err(Error::invalid(format!(
                "table over {vars:?} needs {count} entries, got {}",
                values.len()
            )));
        }
        let sizes = domain.sizes(&vars);
        Ok(ComponentTable { vars, sizes, values })
    }

    /// Tabulates `f` over every configuration of `vars`; `f` receives the
    /// group-local grid indices.
    pub fn from_fn(
        vars: Vec<usize>,
        domain: &Domain,
        max_entries: usize,
        mut f: impl FnMut(&[usize]) -> Result<f64>,
    ) -> Result<Self> {
        let count = domain
            .config_count(&vars)
            .filter(|&c| c <= max_entries)
            .ok_or_else(|| Error::Capacity(format!("table over {vars:?} exceeds {max_entries} entries")))?;
        let sizes = domain.sizes(&vars);
        let mut values = Vec::with_capacity(count);
        let mut digits = vec![0; vars.len()];
        loop {
            values.push(f(&digits)?);
            if !advance(&mut digits, &sizes) {
                break;
            }
        }
        ComponentTable::new(vars, domain, values)
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a full-dimensional grid point.
    pub fn at(&self, point: &[usize]) -> f64 {
        let st = strides(&self.sizes);
        let idx: usize = self.vars.iter().zip(&st).map(|(&v, s)| point[v] * s).sum();
        self.values[idx]
    }
}

/// `Σ_i table_i(x)` at a full-dimensional grid point.
pub fn evaluate_sum(tables: &[ComponentTable], point: &[usize]) -> f64 {
    tables.iter().map(|t| t.at(point)).sum()
}
