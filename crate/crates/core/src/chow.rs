//! Formal intersection rings of simple-normal-crossing divisor configurations.
//!
//! A [`LevelRing`] is the polynomial model of one stage of a blow-up tower:
//! its variables are the divisor classes and its nil pairs record which
//! pairwise intersections are empty. Blowing up `Y_i ∩ Y_j` adds an
//! exceptional class `E` in front of the proper transforms. Push-forward is
//! computed by a normal form: substitute `Ỹ_i = π*Y_i - E` and
//! `Ỹ_j = π*Y_j - E`, lower powers of `E` with
//! `E^2 = E·π*(Y_i + Y_j) - π*(Y_i Y_j)` (the expansion of `Ỹ_i Ỹ_j = 0`), and
//! keep the `E`-free part.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{residual_split, ExponentVector, MonomialPresentation};
use crate::series::{Monomial, Rational, TruncatedSeries};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelRing {
    ambient_dim: usize,
    level: usize,
    labels: Vec<String>,
    nil_pairs: BTreeSet<(usize, usize)>,
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl LevelRing {
    /// The generic base ring: `n` divisors in an `n`-dimensional ambient space
    /// with no known empty intersections.
    pub fn base(n: usize) -> Self {
        Self {
            ambient_dim: n,
            level: 0,
            labels: crate::lattice::default_labels(n),
            nil_pairs: BTreeSet::new(),
        }
    }

    pub fn with_labels(ambient_dim: usize, labels: Vec<String>) -> Self {
        Self {
            ambient_dim,
            level: 0,
            labels,
            nil_pairs: BTreeSet::new(),
        }
    }

    /// Declares pairs of (0-based) variables whose intersection is empty.
    pub fn with_nil_pairs(mut self, pairs: &[(usize, usize)]) -> Result<Self> {
        for &(a, b) in pairs {
            if a == b || a >= self.labels.len() || b >= self.labels.len() {
                return Err(Error::InvalidPresentation(format!(
                    "bad nil pair ({a}, {b})"
                )));
            }
            self.nil_pairs.insert(ordered(a, b));
        }
        Ok(self)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn num_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn nil_pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.nil_pairs
    }

    pub fn is_nil(&self, a: usize, b: usize) -> bool {
        self.nil_pairs.contains(&ordered(a, b))
    }

    /// Whether a set of variables contains a nil pair.
    pub fn meets_nil(&self, vars: &[usize]) -> bool {
        vars.iter()
            .enumerate()
            .any(|(k, &a)| vars[k + 1..].iter().any(|&b| self.is_nil(a, b)))
    }

    pub fn class(&self, series: TruncatedSeries) -> Result<ChowClass> {
        if series.num_vars() != self.num_vars() {
            return Err(Error::VariableCountMismatch(
                series.num_vars(),
                self.num_vars(),
            ));
        }
        Ok(ChowClass {
            level: self.level,
            series,
        })
    }
}

/// One codimension-2 blow-up linking two levels.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupStep {
    pub lower: LevelRing,
    pub upper: LevelRing,
    /// Center `(i, j)` as lower-level variable indices.
    pub center: (usize, usize),
    /// Index of `E` in the upper ring (always 0).
    pub exceptional: usize,
}

impl BlowupStep {
    /// Upper-level index of the proper transform of lower variable `k`.
    pub fn transform_index(&self, k: usize) -> usize {
        k + 1
    }
}

/// A class in a specific level of a tower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChowClass {
    pub level: usize,
    pub series: TruncatedSeries,
}

pub fn blow_up(r: &LevelRing, i: usize, j: usize) -> Result<BlowupStep> {
    let m = r.num_vars();
    if i == j || i >= m || j >= m {
        return Err(Error::InvalidPresentation(format!(
            "center ({i}, {j}) invalid for {m} variables"
        )));
    }
    if r.is_nil(i, j) {
        return Err(Error::EmptyCenter(r.labels[i].clone(), r.labels[j].clone()));
    }
    let level = r.level + 1;
    let mut labels = Vec::with_capacity(m + 1);
    labels.push(format!("E{level}"));
    // Proper transforms keep one tilde however deep the tower.
    labels.extend(r.labels.iter().map(|l| {
        if l.starts_with('~') {
            l.clone()
        } else {
            format!("~{l}")
        }
    }));

    let mut nil_pairs: BTreeSet<(usize, usize)> =
        r.nil_pairs.iter().map(|&(a, b)| (a + 1, b + 1)).collect();
    nil_pairs.insert(ordered(i + 1, j + 1));
    for c in 0..m {
        if r.is_nil(i, c) || r.is_nil(j, c) {
            nil_pairs.insert((0, c + 1));
        }
    }
    let upper = LevelRing {
        ambient_dim: r.ambient_dim,
        level,
        labels,
        nil_pairs,
    };
    Ok(BlowupStep {
        lower: r.clone(),
        upper,
        center: (i, j),
        exceptional: 0,
    })
}

/// Total transforms of the generators: `D = Σ a_k Y_k` pulls back to
/// `(a_i + a_j) E + Σ a_k Ỹ_k`.
pub fn pullback_generators(
    s: &BlowupStep,
    p: &MonomialPresentation,
) -> Result<MonomialPresentation> {
    if p.num_vars() != s.lower.num_vars() {
        return Err(Error::VariableCountMismatch(
            p.num_vars(),
            s.lower.num_vars(),
        ));
    }
    let (i, j) = s.center;
    let generators = p
        .generators()
        .iter()
        .map(|v| {
            let mut lifted = Vec::with_capacity(v.len() + 1);
            lifted.push(v.0[i] + v.0[j]);
            lifted.extend_from_slice(v.entries());
            ExponentVector(lifted)
        })
        .collect();
    MonomialPresentation::with_labels(s.upper.num_vars(), generators, s.upper.labels.clone())
}

/// `π*`: substitutes `Y_i ↦ Ỹ_i + E`, `Y_j ↦ Ỹ_j + E`, `Y_k ↦ Ỹ_k`.
pub fn pullback_series(s: &BlowupStep, beta: &TruncatedSeries) -> Result<TruncatedSeries> {
    if beta.num_vars() != s.lower.num_vars() {
        return Err(Error::VariableCountMismatch(
            beta.num_vars(),
            s.lower.num_vars(),
        ));
    }
    let up = s.upper.num_vars();
    let bound = beta.degree_bound();
    let (i, j) = s.center;
    let e = TruncatedSeries::var(up, bound, s.exceptional);
    let images: Vec<TruncatedSeries> = (0..s.lower.num_vars())
        .map(|k| {
            let t = TruncatedSeries::var(up, bound, s.transform_index(k));
            if k == i || k == j {
                &t + &e
            } else {
                t
            }
        })
        .collect();
    Ok(beta.map_monomials(up, |m| {
        let mut out = TruncatedSeries::one(up, bound);
        for (k, &ex) in m.exps().iter().enumerate() {
            if ex > 0 {
                out = &out * &images[k].pow(ex);
            }
        }
        out
    }))
}

/// Polynomial in `(E, P_i, P_j)` keyed by exponent triples.
type Local = HashMap<(u32, u32, u32), Rational>;

fn local_add(p: &mut Local, key: (u32, u32, u32), c: Rational) {
    let slot = p.entry(key).or_insert_with(Rational::zero);
    *slot += c;
    if slot.is_zero() {
        p.remove(&key);
    }
}

fn binomial_row(k: u32) -> Vec<Rational> {
    let mut row = vec![Rational::one()];
    for t in 1..=k {
        let prev = row[t as usize - 1].clone();
        row.push(
            prev * Rational::from_integer((k - t + 1).into()) / Rational::from_integer(t.into()),
        );
    }
    row
}

/// Exponents of the two center transforms and a coefficient.
type LocalTerm = ((u32, u32), Rational);

/// `π_*(E^c Ỹ_i^a Ỹ_j^b)` as a polynomial in `(Y_i, Y_j)`.
fn local_pushforward(c: u32, a: u32, b: u32) -> Vec<LocalTerm> {
    // (P_i - E)^a (P_j - E)^b E^c
    let mut poly = Local::new();
    let ra = binomial_row(a);
    let rb = binomial_row(b);
    for (s, ca) in ra.iter().enumerate() {
        for (t, cb) in rb.iter().enumerate() {
            let (s, t) = (s as u32, t as u32);
            let sign = if (s + t) % 2 == 0 { 1 } else { -1 };
            local_add(
                &mut poly,
                (c + s + t, a - s, b - t),
                ca * cb * Rational::from_integer(sign.into()),
            );
        }
    }
    // E^e -> E^{e-1} (P_i + P_j) - E^{e-2} P_i P_j, highest power first.
    while let Some(&key) = poly.keys().filter(|k| k.0 >= 2).max_by_key(|k| k.0) {
        let coef = poly.remove(&key).unwrap();
        let (e, pi, pj) = key;
        local_add(&mut poly, (e - 1, pi + 1, pj), coef.clone());
        local_add(&mut poly, (e - 1, pi, pj + 1), coef.clone());
        local_add(&mut poly, (e - 2, pi + 1, pj + 1), -coef);
    }
    let mut out: Vec<LocalTerm> = poly
        .into_iter()
        .filter(|((e, _, _), _)| *e == 0)
        .map(|((_, pi, pj), c)| ((pi, pj), c))
        .collect();
    out.sort_by_key(|x| x.0);
    out
}

/// `π_*` from the upper level to the lower level.
pub fn pushforward(s: &BlowupStep, c: &ChowClass) -> Result<ChowClass> {
    if c.level != s.upper.level {
        return Err(Error::LevelMismatch {
            expected: s.upper.level,
            found: c.level,
        });
    }
    if c.series.num_vars() != s.upper.num_vars() {
        return Err(Error::VariableCountMismatch(
            c.series.num_vars(),
            s.upper.num_vars(),
        ));
    }
    let low = s.lower.num_vars();
    let (i, j) = s.center;
    let (ti, tj) = (s.transform_index(i), s.transform_index(j));
    let mut table: HashMap<(u32, u32, u32), Vec<LocalTerm>> = HashMap::new();
    let bound = c.series.degree_bound();
    let mut out = TruncatedSeries::zero(low, bound);
    for (m, coef) in c.series.terms() {
        let ex = m.exps();
        let key = (ex[s.exceptional], ex[ti], ex[tj]);
        let local = table
            .entry(key)
            .or_insert_with(|| local_pushforward(key.0, key.1, key.2));
        if local.is_empty() {
            continue;
        }
        let mut rest: Vec<u32> = (0..low).map(|k| ex[s.transform_index(k)]).collect();
        rest[i] = 0;
        rest[j] = 0;
        for ((pi, pj), lc) in local.iter() {
            let mut exps = rest.clone();
            exps[i] = *pi;
            exps[j] = *pj;
            out.add_term(Monomial::new(exps), lc * coef);
        }
    }
    Ok(ChowClass {
        level: s.lower.level,
        series: out,
    })
}

/// Drops every monomial whose support contains a nil pair.
pub fn reduce_nils(r: &LevelRing, c: &ChowClass) -> Result<ChowClass> {
    if c.level != r.level {
        return Err(Error::LevelMismatch {
            expected: r.level,
            found: c.level,
        });
    }
    Ok(ChowClass {
        level: c.level,
        series: reduce_series(r, &c.series),
    })
}

pub(crate) fn reduce_series(r: &LevelRing, s: &TruncatedSeries) -> TruncatedSeries {
    if r.nil_pairs.is_empty() {
        return s.clone();
    }
    s.filter_terms(|m| {
        let support: Vec<usize> = m.support().collect();
        !r.meets_nil(&support)
    })
}

/// Whether the intersection of the monomial divisors is empty in the model:
/// it is nonempty iff some set of at most `ambient_dim` variables, containing
/// no nil pair, meets the support of every generator.
pub fn scheme_is_empty(r: &LevelRing, p: &MonomialPresentation) -> bool {
    if p.has_zero_generator() {
        return true;
    }
    let supports: Vec<Vec<usize>> = p
        .generators()
        .iter()
        .map(|g| g.support().collect())
        .collect();
    let mut chosen = Vec::new();
    !find_transversal(r, &supports, &mut chosen)
}

fn find_transversal(r: &LevelRing, supports: &[Vec<usize>], chosen: &mut Vec<usize>) -> bool {
    let Some(open) = supports
        .iter()
        .find(|s| !s.iter().any(|v| chosen.contains(v)))
    else {
        return true;
    };
    if chosen.len() == r.ambient_dim {
        return false;
    }
    for &v in open {
        if chosen.iter().any(|&c| r.is_nil(c, v)) {
            continue;
        }
        chosen.push(v);
        if find_transversal(r, supports, chosen) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// The divisor `d` when the scheme equals the common factor of its
/// generators, i.e. the residual scheme is empty.
pub fn scheme_is_divisor(r: &LevelRing, p: &MonomialPresentation) -> Option<ExponentVector> {
    let (d, residual) = residual_split(p);
    scheme_is_empty(r, &residual).then_some(d)
}
