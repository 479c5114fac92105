//! Truncated multivariate power series over exact rationals.
//!
//! A [`TruncatedSeries`] stores every coefficient of total degree at most its
//! degree bound; everything above the bound is unknown and dropped. Binary
//! operations truncate at the smaller of the two bounds. Terms are kept in
//! graded lexicographic order (total degree first, then larger exponents of
//! earlier variables first) so iteration and printing are stable.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::ExponentVector;

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exponent tuple of a monomial, ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    degree: u32,
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        let degree = exps.iter().sum();
        Self { degree, exps }
    }

    pub fn one(num_vars: usize) -> Self {
        Self::new(vec![0; num_vars])
    }

    pub fn var(num_vars: usize, i: usize) -> Self {
        let mut exps = vec![0; num_vars];
        exps[i] = 1;
        Self::new(exps)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            degree: self.degree + other.degree,
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Variables with a positive exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    num_vars: usize,
    degree_bound: u32,
    terms: BTreeMap<Monomial, Rational>,
}

impl TruncatedSeries {
    pub fn zero(num_vars: usize, degree_bound: u32) -> Self {
        Self {
            num_vars,
            degree_bound,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, degree_bound: u32, c: Rational) -> Self {
        let mut s = Self::zero(num_vars, degree_bound);
        s.add_term(Monomial::one(num_vars), c);
        s
    }

    pub fn one(num_vars: usize, degree_bound: u32) -> Self {
        Self::constant(num_vars, degree_bound, Rational::one())
    }

    pub fn var(num_vars: usize, degree_bound: u32, i: usize) -> Self {
        let mut s = Self::zero(num_vars, degree_bound);
        s.add_term(Monomial::var(num_vars, i), Rational::one());
        s
    }

    /// `c * X^exps`, or zero when the degree exceeds the bound.
    pub fn monomial(num_vars: usize, degree_bound: u32, exps: Vec<u32>, c: Rational) -> Self {
        assert_eq!(exps.len(), num_vars, "exponent length");
        let mut s = Self::zero(num_vars, degree_bound);
        s.add_term(Monomial::new(exps), c);
        s
    }

    pub fn from_terms(
        num_vars: usize,
        degree_bound: u32,
        terms: impl IntoIterator<Item = (Vec<u32>, Rational)>,
    ) -> Self {
        let mut s = Self::zero(num_vars, degree_bound);
        for (e, c) in terms {
            assert_eq!(e.len(), num_vars, "exponent length");
            s.add_term(Monomial::new(e), c);
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in graded lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        self.terms
            .get(&Monomial::new(exps.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Accumulates `c * m`, dropping it if beyond the bound and removing the
    /// entry if the coefficient cancels.
    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if m.degree > self.degree_bound || c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_vars(&self, other: &Self) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::VariableCountMismatch(self.num_vars, other.num_vars));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let mut out = self.truncate(self.degree_bound.min(other.degree_bound));
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&-other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let bound = self.degree_bound.min(other.degree_bound);
        let mut out = Self::zero(self.num_vars, bound);
        for (ma, ca) in &self.terms {
            if ma.degree > bound {
                break;
            }
            let room = bound - ma.degree;
            for (mb, cb) in &other.terms {
                if mb.degree > room {
                    break;
                }
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.num_vars, self.degree_bound);
        }
        Self {
            num_vars: self.num_vars,
            degree_bound: self.degree_bound,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.num_vars, self.degree_bound);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Drops every term of total degree above `bound` and lowers the bound.
    pub fn truncate(&self, bound: u32) -> Self {
        let bound = bound.min(self.degree_bound);
        Self {
            num_vars: self.num_vars,
            degree_bound: bound,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree <= bound)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Keeps only the terms for which `keep` holds.
    pub fn filter_terms(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Self {
        Self {
            num_vars: self.num_vars,
            degree_bound: self.degree_bound,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&vec![0; self.num_vars])
    }

    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    /// First term (in graded-lex order) where the two series disagree, up to
    /// the smaller bound.
    pub fn first_difference(&self, other: &Self) -> Option<(Monomial, Rational, Rational)> {
        let bound = self.degree_bound.min(other.degree_bound);
        let a = self.truncate(bound);
        let b = other.truncate(bound);
        let keys: std::collections::BTreeSet<&Monomial> =
            a.terms.keys().chain(b.terms.keys()).collect();
        let first = keys.into_iter().find_map(|m| {
            let ca = a.terms.get(m).cloned().unwrap_or_else(Rational::zero);
            let cb = b.terms.get(m).cloned().unwrap_or_else(Rational::zero);
            (ca != cb).then(|| (m.clone(), ca, cb))
        });
        first
    }

    /// Rewrites each monomial through `f`, which returns the image in a series
    /// over `num_vars` variables. Used for substitutions and push-forwards.
    pub fn map_monomials(
        &self,
        num_vars: usize,
        mut f: impl FnMut(&Monomial) -> TruncatedSeries,
    ) -> Self {
        let mut out = Self::zero(num_vars, self.degree_bound);
        for (m, c) in &self.terms {
            let image = f(m);
            for (mi, ci) in image.terms {
                out.add_term(mi, ci * c);
            }
        }
        out
    }

    /// Renders with the given variable names, e.g. `1 - X1 + 2*X1^2*X2`.
    pub fn display_with<'a>(&'a self, labels: &'a [String]) -> SeriesDisplay<'a> {
        SeriesDisplay {
            series: self,
            labels,
        }
    }
}

/// `sum_p c^(p)`: the homogeneous part of total degree `p`.
pub fn graded_piece(c: &TruncatedSeries, p: u32) -> TruncatedSeries {
    c.filter_terms(|m| m.degree == p)
}

/// An affine form `constant + sum_i coefficients[i] * X_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub constant: Rational,
    pub coefficients: Vec<Rational>,
}

impl LinearForm {
    pub fn new(constant: Rational, coefficients: Vec<Rational>) -> Self {
        Self {
            constant,
            coefficients,
        }
    }

    /// `1 + v . X`.
    pub fn one_plus(v: &ExponentVector) -> Self {
        Self::new(
            Rational::one(),
            v.0.iter().map(|&e| rat(i64::from(e))).collect(),
        )
    }

    /// `v . X` with no constant term.
    pub fn homogeneous(v: &ExponentVector) -> Self {
        Self::new(
            Rational::zero(),
            v.0.iter().map(|&e| rat(i64::from(e))).collect(),
        )
    }

    pub fn num_vars(&self) -> usize {
        self.coefficients.len()
    }

    /// The constant-free part as a series.
    pub fn linear_part(&self, degree_bound: u32) -> TruncatedSeries {
        let n = self.num_vars();
        let mut s = TruncatedSeries::zero(n, degree_bound);
        for (i, c) in self.coefficients.iter().enumerate() {
            s.add_term(Monomial::var(n, i), c.clone());
        }
        s
    }

    pub fn to_series(&self, degree_bound: u32) -> TruncatedSeries {
        let mut s = self.linear_part(degree_bound);
        s.add_term(Monomial::one(self.num_vars()), self.constant.clone());
        s
    }
}

/// Expands `1 / f` for `f = 1 + g` with `g` constant-free.
pub fn reciprocal_one_plus(f: &LinearForm, degree_bound: u32) -> Result<TruncatedSeries> {
    if !f.constant.is_one() {
        return Err(Error::NonUnitConstant(f.constant.to_string()));
    }
    let neg_g = -f.linear_part(degree_bound);
    let mut out = TruncatedSeries::one(f.num_vars(), degree_bound);
    if neg_g.is_zero() {
        return Ok(out);
    }
    let mut power = out.clone();
    for _ in 0..degree_bound {
        power = &power * &neg_g;
        out = &out + &power;
    }
    Ok(out)
}

/// The twist `c ⊗ O(L)`: the degree-`p` piece of `c` is divided by `(1 + L)^p`.
pub fn tensor_line(c: &TruncatedSeries, line: &LinearForm) -> Result<TruncatedSeries> {
    if !line.constant.is_zero() {
        return Err(Error::NonUnitConstant(format!(
            "line class must be constant-free, got constant {}",
            line.constant
        )));
    }
    if line.num_vars() != c.num_vars() {
        return Err(Error::VariableCountMismatch(c.num_vars(), line.num_vars()));
    }
    let bound = c.degree_bound();
    let inv = reciprocal_one_plus(
        &LinearForm::new(Rational::one(), line.coefficients.clone()),
        bound,
    )?;
    let mut out = TruncatedSeries::zero(c.num_vars(), bound);
    let mut inv_power = TruncatedSeries::one(c.num_vars(), bound);
    for p in 0..=bound {
        let piece = graded_piece(c, p);
        if !piece.is_zero() {
            out = &out + &(&piece * &inv_power);
        }
        inv_power = &inv_power * &inv;
    }
    Ok(out)
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries {
            num_vars: self.num_vars,
            degree_bound: self.degree_bound,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        -&self
    }
}

// The operator forms panic on a variable-count mismatch; `try_*` report it.
impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.try_add(rhs).expect("series variable counts differ")
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.try_sub(rhs).expect("series variable counts differ")
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.try_mul(rhs).expect("series variable counts differ")
    }
}

pub struct SeriesDisplay<'a> {
    series: &'a TruncatedSeries,
    labels: &'a [String],
}

impl fmt::Display for SeriesDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.series.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.series.terms().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = m
                .exps()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    let name = self
                        .labels
                        .get(i)
                        .cloned()
                        .unwrap_or_else(|| format!("x{i}"));
                    if e == 1 {
                        name
                    } else {
                        format!("{name}^{e}")
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{abs}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = crate::lattice::default_labels(self.num_vars);
        write!(f, "{}", self.display_with(&labels))
    }
}

/// Interchange form of one term. Coefficients are strings (`"-3"`, `"1/2"`)
/// so that arbitrary-precision values survive any JSON reader.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub coefficient: String,
    pub exponents: Vec<u32>,
}

impl TruncatedSeries {
    /// Terms in graded-lex order.
    pub fn to_term_list(&self) -> Vec<SeriesTerm> {
        self.terms
            .iter()
            .map(|(m, c)| SeriesTerm {
                coefficient: c.to_string(),
                exponents: m.exps.clone(),
            })
            .collect()
    }

    pub fn from_term_list(
        num_vars: usize,
        degree_bound: u32,
        terms: &[SeriesTerm],
    ) -> Result<Self> {
        let mut s = Self::zero(num_vars, degree_bound);
        for t in terms {
            if t.exponents.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    found: t.exponents.len(),
                });
            }
            let c: Rational = t
                .coefficient
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient {:?}", t.coefficient)))?;
            s.add_term(Monomial::new(t.exponents.clone()), c);
        }
        Ok(s)
    }
}

impl Serialize for TruncatedSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_term_list().serialize(serializer)
    }
}
