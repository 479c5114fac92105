//! Exponent-vector arithmetic for monomial ideals.
//!
//! A monomial scheme is presented by finitely many lattice points in the
//! nonnegative orthant of `Z^m`, one coordinate per divisor `X_1, ..., X_m`.
//! Variables are 0-based here; the 1-based convention lives only in the
//! parser and in human-facing output.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multiplicities `(a_1, ..., a_m)` of the divisor `a_1 X_1 + ... + a_m X_m`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentVector(pub Vec<u32>);

impl ExponentVector {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Componentwise `self <= other`, i.e. the monomial `self` divides `other`.
    pub fn divides(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Indices with a nonzero entry.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
    }

    pub fn total_degree(&self) -> u64 {
        self.0.iter().map(|&e| u64::from(e)).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference; callers guarantee `other` divides `self`.
    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for ExponentVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// A monomial ideal given by generators in a fixed ordered list of divisors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialPresentation {
    num_vars: usize,
    generators: Vec<ExponentVector>,
    labels: Vec<String>,
}

pub fn default_labels(num_vars: usize) -> Vec<String> {
    (1..=num_vars).map(|k| format!("X{k}")).collect()
}

impl MonomialPresentation {
    /// Builds a presentation with default labels `X1, ..., Xm`.
    pub fn new(num_vars: usize, generators: Vec<ExponentVector>) -> Result<Self> {
        Self::with_labels(num_vars, generators, default_labels(num_vars))
    }

    pub fn with_labels(
        num_vars: usize,
        generators: Vec<ExponentVector>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::InvalidPresentation(
                "need at least one variable".into(),
            ));
        }
        if generators.is_empty() {
            return Err(Error::InvalidPresentation("no generators".into()));
        }
        if labels.len() != num_vars {
            return Err(Error::InvalidPresentation(format!(
                "{} labels for {num_vars} variables",
                labels.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for g in &generators {
            if g.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    found: g.len(),
                });
            }
            if !seen.insert(g.clone()) {
                return Err(Error::InvalidPresentation(format!(
                    "duplicate generator {g}"
                )));
            }
        }
        Ok(Self {
            num_vars,
            generators,
            labels,
        })
    }

    /// Shorthand for tests and examples.
    pub fn from_rows(num_vars: usize, rows: &[&[u32]]) -> Result<Self> {
        Self::new(
            num_vars,
            rows.iter().map(|r| ExponentVector(r.to_vec())).collect(),
        )
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn generators(&self) -> &[ExponentVector] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn has_zero_generator(&self) -> bool {
        self.generators.iter().any(ExponentVector::is_zero)
    }

    /// Same generators with the variables reordered: new variable `k` is old
    /// variable `perm[k]`.
    pub fn permute_vars(&self, perm: &[usize]) -> Result<Self> {
        let generators = self
            .generators
            .iter()
            .map(|g| ExponentVector(perm.iter().map(|&k| g.0[k]).collect()))
            .collect();
        let labels = perm.iter().map(|&k| self.labels[k].clone()).collect();
        Self::with_labels(self.num_vars, generators, labels)
    }
}

/// Drops every generator divisible by another one. Survivors keep their order.
pub fn minimalize(p: &MonomialPresentation) -> MonomialPresentation {
    let gens = p.generators();
    let kept = gens
        .iter()
        .enumerate()
        .filter(|(k, u)| {
            !gens
                .iter()
                .enumerate()
                .any(|(l, v)| l != *k && v.divides(u))
        })
        .map(|(_, u)| u.clone())
        .collect();
    MonomialPresentation {
        num_vars: p.num_vars,
        generators: kept,
        labels: p.labels.clone(),
    }
}

/// Splits off the largest common monomial factor: returns `(d, r)` with `d` the
/// componentwise minimum of the generators and `r` the translated generators.
pub fn residual_split(p: &MonomialPresentation) -> (ExponentVector, MonomialPresentation) {
    let d = gcd_vector(p.generators());
    let generators = p.generators.iter().map(|g| g.sub(&d)).collect();
    let r = MonomialPresentation {
        num_vars: p.num_vars,
        generators,
        labels: p.labels.clone(),
    };
    (d, r)
}

pub fn gcd_vector(gens: &[ExponentVector]) -> ExponentVector {
    let m = gens[0].len();
    ExponentVector(
        (0..m)
            .map(|i| gens.iter().map(|g| g.0[i]).min().unwrap_or(0))
            .collect(),
    )
}

/// Some generator divides all others.
pub fn is_principal(p: &MonomialPresentation) -> bool {
    let d = gcd_vector(p.generators());
    p.generators.contains(&d)
}

/// Whether the ideal generated by `{X_j : j in vars}` contains the monomial
/// ideal, i.e. every generator involves some variable from `vars`.
pub fn support_cover_check(p: &MonomialPresentation, vars: &BTreeSet<usize>) -> bool {
    p.generators
        .iter()
        .all(|g| vars.iter().any(|&j| g.0.get(j).is_some_and(|&e| e > 0)))
}
