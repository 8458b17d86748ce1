use std::fmt;
use std::str::FromStr;

use super::{RegressError, Table, Var};

/// One column of a design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelTerm {
    Intercept,
    Main(Var),
    Square(Var),
    /// Product of two distinct variables, stored with the smaller first.
    Interaction(Var, Var),
}

impl ModelTerm {
    /// Pairwise product term; the same variable twice becomes a square.
    pub fn product(a: Var, b: Var) -> ModelTerm {
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => ModelTerm::Square(a),
            std::cmp::Ordering::Less => ModelTerm::Interaction(a, b),
            std::cmp::Ordering::Greater => ModelTerm::Interaction(b, a),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        match *self {
            ModelTerm::Intercept => vec![],
            ModelTerm::Main(v) | ModelTerm::Square(v) => vec![v],
            ModelTerm::Interaction(a, b) => vec![a, b],
        }
    }

    pub fn column(&self, table: &Table) -> Result<Vec<f64>, RegressError> {
        Ok(match *self {
            ModelTerm::Intercept => vec![1.0; table.n_rows()],
            ModelTerm::Main(v) => table.column(v)?.to_vec(),
            ModelTerm::Square(v) => table.column(v)?.iter().map(|x| x * x).collect(),
            ModelTerm::Interaction(a, b) => {
                let (ca, cb) = (table.column(a)?, table.column(b)?);
                ca.iter().zip(cb).map(|(x, y)| x * y).collect()
            }
        })
    }
}

impl fmt::Display for ModelTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelTerm::Intercept => write!(f, "1"),
            ModelTerm::Main(v) => write!(f, "{v}"),
            ModelTerm::Square(v) => write!(f, "{v}*{v}"),
            ModelTerm::Interaction(a, b) => write!(f, "{a}*{b}"),
        }
    }
}

impl FromStr for ModelTerm {
    type Err = RegressError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "1" {
            return Ok(ModelTerm::Intercept);
        }
        if let Some(base) = s.strip_suffix("^2") {
            return Ok(ModelTerm::Square(base.parse()?));
        }
        match s.split_once('*') {
            Some((a, b)) => Ok(ModelTerm::product(a.parse()?, b.parse()?)),
            None => Ok(ModelTerm::Main(s.parse()?)),
        }
    }
}

/// Ordered list of distinct terms, always starting with the intercept.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    terms: Vec<ModelTerm>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::intercept_only()
    }
}

impl ModelSpec {
    pub fn intercept_only() -> Self {
        ModelSpec { terms: vec![ModelTerm::Intercept] }
    }

    /// Intercept followed by `terms`; duplicates and extra intercepts are
    /// rejected.
    pub fn new(terms: impl IntoIterator<Item = ModelTerm>) -> Result<Self, RegressError> {
        let mut spec = Self::intercept_only();
        for t in terms {
            if t == ModelTerm::Intercept {
                continue;
            }
            if spec.contains(&t) {
                return Err(RegressError::DuplicateTerm(t.to_string()));
            }
            spec.terms.push(t);
        }
        Ok(spec)
    }

    pub fn from_mains(vars: impl IntoIterator<Item = Var>) -> Result<Self, RegressError> {
        Self::new(vars.into_iter().map(ModelTerm::Main))
    }

    pub fn terms(&self) -> &[ModelTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, term: &ModelTerm) -> bool {
        self.terms.contains(term)
    }

    pub fn has_main(&self, v: Var) -> bool {
        self.contains(&ModelTerm::Main(v))
    }

    /// Variables entering as main effects, in spec order.
    pub fn main_vars(&self) -> Vec<Var> {
        self.terms
            .iter()
            .filter_map(|t| match t {
                ModelTerm::Main(v) => Some(*v),
                _ => None,
            })
            .collect()
    }

    /// Copy with `term` appended.
    pub fn with_term(&self, term: ModelTerm) -> Result<Self, RegressError> {
        if self.contains(&term) {
            return Err(RegressError::DuplicateTerm(term.to_string()));
        }
        let mut out = self.clone();
        out.terms.push(term);
        Ok(out)
    }

    pub fn position(&self, term: &ModelTerm) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for ModelSpec {
    type Err = RegressError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let terms = s
            .split('+')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<ModelTerm>, _>>()?;
        ModelSpec::new(terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let s: ModelSpec = "1 + x11 + x12 + x40*x43 + x43*x43 + V1".parse().unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.terms()[4], ModelTerm::Square(Var::X(43)));
        assert_eq!(s.to_string(), "1 + x11 + x12 + x40*x43 + x43*x43 + V1");
        let again: ModelSpec = s.to_string().parse().unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn intercept_is_implicit_and_first() {
        let s: ModelSpec = "x5 + x2".parse().unwrap();
        assert_eq!(s.terms()[0], ModelTerm::Intercept);
        assert_eq!(s.to_string(), "1 + x5 + x2");
    }

    #[test]
    fn interaction_is_ordered() {
        assert_eq!(
            "x43*x40".parse::<ModelTerm>().unwrap(),
            ModelTerm::Interaction(Var::X(40), Var::X(43))
        );
        assert_eq!("x7^2".parse::<ModelTerm>().unwrap(), ModelTerm::Square(Var::X(7)));
    }

    #[test]
    fn duplicates_rejected() {
        assert!("x1 + x1".parse::<ModelSpec>().is_err());
        assert!("x1*x2 + x2*x1".parse::<ModelSpec>().is_err());
        assert!("x0".parse::<ModelSpec>().is_err());
    }
}
