use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::RegressError;

/// A model variable: one of the study covariates x1..x58, or the
/// propensity score V1 attached by the propensity stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Score,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{i}"),
            Var::Score => write!(f, "V1"),
        }
    }
}

impl FromStr for Var {
    type Err = RegressError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("v1") {
            return Ok(Var::Score);
        }
        let idx = s
            .strip_prefix('x')
            .or_else(|| s.strip_prefix('X'))
            .and_then(|rest| rest.parse::<usize>().ok())
            .filter(|&i| i >= 1)
            .ok_or_else(|| RegressError::Parse(format!("bad variable `{s}`")))?;
        Ok(Var::X(idx))
    }
}

/// Column store of model-coded values, all columns of equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    n: usize,
    columns: BTreeMap<Var, Vec<f64>>,
}

impl Table {
    pub fn new(n: usize) -> Self {
        Table { n, columns: BTreeMap::new() }
    }

    pub fn insert(&mut self, var: Var, values: Vec<f64>) -> Result<(), RegressError> {
        if values.len() != self.n {
            return Err(RegressError::LengthMismatch { expected: self.n, got: values.len() });
        }
        self.columns.insert(var, values);
        Ok(())
    }

    pub fn with(mut self, var: Var, values: Vec<f64>) -> Result<Self, RegressError> {
        self.insert(var, values)?;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn column(&self, var: Var) -> Result<&[f64], RegressError> {
        self.columns
            .get(&var)
            .map(Vec::as_slice)
            .ok_or(RegressError::MissingVariable(var))
    }

    pub fn has(&self, var: Var) -> bool {
        self.columns.contains_key(&var)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.columns.keys().copied()
    }

    /// Rows at `rows`, in that order.
    pub fn subset(&self, rows: &[usize]) -> Table {
        Table {
            n: rows.len(),
            columns: self
                .columns
                .iter()
                .map(|(&v, col)| (v, rows.iter().map(|&r| col[r]).collect()))
                .collect(),
        }
    }
}
