//! Exact polyhedral engine for configurations with vertices at infinity.
//!
//! Finite points `v` and coordinate rays `e_j` are homogenized to `(v, 1)` and
//! `(e_j, 0)`; a polyhedron `conv(points) + cone(rays)` becomes the pointed
//! cone over these vectors and every geometric predicate is the sign of an
//! integer determinant. Placing triangulations work in the linear span of the
//! elements placed so far, so lower-dimensional prefixes (such as a
//! triangulation living inside the hyperplane `a_0 = a_i + a_j`) are handled
//! the same way as full-dimensional ones.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{ExponentVector, MonomialPresentation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ElementKind {
    Finite(ExponentVector),
    /// Vertex at infinity in the direction of the given (0-based) coordinate.
    Ray(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Element {
    pub label: String,
    pub kind: ElementKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointConfiguration {
    dim: usize,
    elements: Vec<Element>,
}

impl PointConfiguration {
    pub fn new(dim: usize, elements: Vec<Element>) -> Result<Self> {
        let mut labels = BTreeSet::new();
        let mut rays = BTreeSet::new();
        for e in &elements {
            if !labels.insert(e.label.as_str()) {
                return Err(Error::InvalidPresentation(format!(
                    "duplicate label {}",
                    e.label
                )));
            }
            match &e.kind {
                ElementKind::Finite(v) if v.len() != dim => {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: v.len(),
                    })
                }
                ElementKind::Ray(j) if *j >= dim || !rays.insert(*j) => {
                    return Err(Error::InvalidPresentation(format!("bad ray {}", e.label)))
                }
                _ => {}
            }
        }
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn finite_points(&self) -> impl Iterator<Item = (usize, &ExponentVector)> {
        self.elements
            .iter()
            .enumerate()
            .filter_map(|(k, e)| match &e.kind {
                ElementKind::Finite(v) => Some((k, v)),
                ElementKind::Ray(_) => None,
            })
    }

    pub fn rays(&self) -> BTreeSet<usize> {
        self.elements
            .iter()
            .filter_map(|e| match e.kind {
                ElementKind::Ray(j) => Some(j),
                ElementKind::Finite(_) => None,
            })
            .collect()
    }

    pub fn ray_element(&self, j: usize) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| e.kind == ElementKind::Ray(j))
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.label == label)
    }

    fn homogeneous(&self, k: usize) -> Vec<BigInt> {
        let mut h = vec![BigInt::zero(); self.dim + 1];
        match &self.elements[k].kind {
            ElementKind::Finite(v) => {
                for (slot, &x) in h.iter_mut().zip(v.entries()) {
                    *slot = BigInt::from(x);
                }
                h[self.dim] = BigInt::from(1);
            }
            ElementKind::Ray(j) => h[*j] = BigInt::from(1),
        }
        h
    }

    /// Adds a finite point labelled `label` (used to cone the origin over the
    /// staircase side of the complement).
    pub fn with_point(&self, label: &str, v: ExponentVector) -> Result<Self> {
        let mut elements = self.elements.clone();
        elements.push(Element {
            label: label.to_string(),
            kind: ElementKind::Finite(v),
        });
        Self::new(self.dim, elements)
    }
}

fn ray_label(j: usize) -> String {
    format!("a{}", j + 1)
}

/// `conv(generators) + (nonnegative orthant)`, the convex complement of the
/// Newton region. Finite points are labelled `v0, v1, ...` in generator order,
/// rays `a1, ..., an`.
pub fn complement_configuration(p: &MonomialPresentation) -> PointConfiguration {
    let n = p.num_vars();
    let mut elements: Vec<Element> = p
        .generators()
        .iter()
        .enumerate()
        .map(|(k, g)| Element {
            label: format!("v{k}"),
            kind: ElementKind::Finite(g.clone()),
        })
        .collect();
    elements.extend((0..n).map(|j| Element {
        label: ray_label(j),
        kind: ElementKind::Ray(j),
    }));
    PointConfiguration::new(n, elements).expect("presentation is well formed")
}

/// Lifts a configuration to the hyperplane `a_0 = a_i + a_j` of `R^{n+1}`.
///
/// The new coordinate `a_0` is prepended, so old coordinate `k` becomes `k+1`.
/// Finite labels gain a `^` prefix; the new ray is labelled `a0`.
pub fn lift_to_h(c: &PointConfiguration, i: usize, j: usize) -> Result<PointConfiguration> {
    if i == j || i >= c.dim || j >= c.dim {
        return Err(Error::InvalidPresentation(format!(
            "lift pair ({i}, {j}) invalid in dimension {}",
            c.dim
        )));
    }
    let mut elements: Vec<Element> = c
        .elements
        .iter()
        .map(|e| match &e.kind {
            ElementKind::Finite(v) => {
                let mut lifted = Vec::with_capacity(c.dim + 1);
                lifted.push(v.0[i] + v.0[j]);
                lifted.extend_from_slice(v.entries());
                Element {
                    label: format!("^{}", e.label),
                    kind: ElementKind::Finite(ExponentVector(lifted)),
                }
            }
            ElementKind::Ray(k) => Element {
                label: e.label.clone(),
                kind: ElementKind::Ray(k + 1),
            },
        })
        .collect();
    elements.push(Element {
        label: "a0".into(),
        kind: ElementKind::Ray(0),
    });
    PointConfiguration::new(c.dim + 1, elements)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub elements: Vec<usize>,
    pub labels: Vec<String>,
}

/// Simplex with finite vertices and vertices at infinity along coordinate
/// directions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HalfSimplex {
    pub finite_vertices: Vec<ExponentVector>,
    pub infinite_directions: BTreeSet<usize>,
    pub provenance: Option<Provenance>,
}

impl HalfSimplex {
    pub fn new(finite_vertices: Vec<ExponentVector>, infinite_directions: BTreeSet<usize>) -> Self {
        Self {
            finite_vertices,
            infinite_directions,
            provenance: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.finite_vertices.first().map_or(0, ExponentVector::len)
    }

    /// Coordinates not among the infinite directions.
    pub fn finite_directions(&self) -> BTreeSet<usize> {
        (0..self.dim())
            .filter(|k| !self.infinite_directions.contains(k))
            .collect()
    }

    pub fn is_top_dimensional(&self) -> bool {
        !self.finite_vertices.is_empty()
            && self.finite_vertices.len() - 1 + self.infinite_directions.len() == self.dim()
    }

    /// Order-independent identity of the cell.
    pub fn key(&self) -> (BTreeSet<ExponentVector>, BTreeSet<usize>) {
        (
            self.finite_vertices.iter().cloned().collect(),
            self.infinite_directions.clone(),
        )
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.provenance.as_ref().map(|p| p.labels.as_slice())
    }
}

/// Normalized volume of the projection along the infinite directions.
pub fn hvol(s: &HalfSimplex) -> Result<u64> {
    let Some(v0) = s.finite_vertices.first() else {
        return Err(Error::DegenerateConfiguration(
            "simplex without finite vertex".into(),
        ));
    };
    let coords: Vec<usize> = s.finite_directions().into_iter().collect();
    let r = s.finite_vertices.len() - 1;
    if coords.len() != r {
        return Err(Error::DimensionMismatch {
            expected: coords.len(),
            found: r,
        });
    }
    for v in &s.finite_vertices {
        if v.len() != v0.len() {
            return Err(Error::DimensionMismatch {
                expected: v0.len(),
                found: v.len(),
            });
        }
    }
    let rows: Vec<Vec<BigInt>> = s.finite_vertices[1..]
        .iter()
        .map(|v| {
            coords
                .iter()
                .map(|&k| BigInt::from(v.0[k]) - BigInt::from(v0.0[k]))
                .collect()
        })
        .collect();
    det(rows)
        .abs()
        .to_u64()
        .ok_or_else(|| Error::DegenerateConfiguration("volume overflows u64".into()))
}

/// Determinant by fraction-free (Bareiss) elimination.
pub(crate) fn det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut sign = 1;
    let mut prev = BigInt::from(1);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// Row-reduces `rows` and returns the pivot columns (one per independent row).
fn pivot_columns(rows: &[Vec<BigInt>]) -> Vec<usize> {
    let mut m: Vec<Vec<BigInt>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let g = m[r][c].clone();
                let pivot_row = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                    *x = &*x * &g - y * &f;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    pivots
}

/// Named placement orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OrderPreset {
    /// Finite points in input order, then rays by increasing coordinate.
    Default,
    /// Rays by increasing coordinate, then finite points.
    RaysFirst,
    /// Finite points in reverse order, then rays by decreasing coordinate.
    Reverse,
    /// Order used for the blow-up comparison on a lifted configuration:
    /// finite points, the rays lying in the hyperplane, then `first`, then
    /// `second`, then `exceptional` (all lifted coordinate indices).
    Blowup {
        first: usize,
        second: usize,
        exceptional: usize,
    },
}

impl OrderPreset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::Default),
            "rays-first" => Ok(Self::RaysFirst),
            "reverse" => Ok(Self::Reverse),
            other => Err(Error::InvalidOrder(format!(
                "unknown order preset {other:?}"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Default => "default".into(),
            Self::RaysFirst => "rays-first".into(),
            Self::Reverse => "reverse".into(),
            Self::Blowup { first, second, .. } => format!("blowup({first},{second})"),
        }
    }

    /// Element indices of `c` in placement order.
    pub fn order(&self, c: &PointConfiguration) -> Result<Vec<usize>> {
        let finite: Vec<usize> = c.finite_points().map(|(k, _)| k).collect();
        let ray = |j: usize| {
            c.ray_element(j)
                .ok_or_else(|| Error::InvalidOrder(format!("configuration lacks ray a{j}")))
        };
        let rays: Vec<usize> = c.rays().into_iter().map(|j| ray(j).unwrap()).collect();
        Ok(match *self {
            Self::Default => finite.into_iter().chain(rays).collect(),
            Self::RaysFirst => rays.into_iter().chain(finite).collect(),
            Self::Reverse => finite
                .into_iter()
                .rev()
                .chain(rays.into_iter().rev())
                .collect(),
            Self::Blowup {
                first,
                second,
                exceptional,
            } => {
                let mut out = finite;
                out.extend(
                    c.rays()
                        .into_iter()
                        .filter(|j| ![first, second, exceptional].contains(j))
                        .map(|j| ray(j).unwrap()),
                );
                out.push(ray(first)?);
                out.push(ray(second)?);
                out.push(ray(exceptional)?);
                out
            }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Triangulation {
    pub config: PointConfiguration,
    /// Each cell as sorted element indices.
    pub cell_elements: Vec<Vec<usize>>,
    pub cells: Vec<HalfSimplex>,
    pub placement_order: Vec<String>,
}

impl Triangulation {
    fn from_cells(
        config: PointConfiguration,
        cell_elements: Vec<Vec<usize>>,
        order: &[usize],
    ) -> Self {
        let cells = cell_elements
            .iter()
            .map(|ids| cell_simplex(&config, ids))
            .collect();
        let placement_order = order
            .iter()
            .map(|&k| config.elements[k].label.clone())
            .collect();
        Self {
            config,
            cell_elements,
            cells,
            placement_order,
        }
    }
}

fn cell_simplex(config: &PointConfiguration, ids: &[usize]) -> HalfSimplex {
    let mut finite = Vec::new();
    let mut dirs = BTreeSet::new();
    for &k in ids {
        match &config.elements[k].kind {
            ElementKind::Finite(v) => finite.push(v.clone()),
            ElementKind::Ray(j) => {
                dirs.insert(*j);
            }
        }
    }
    HalfSimplex {
        finite_vertices: finite,
        infinite_directions: dirs,
        provenance: Some(Provenance {
            elements: ids.to_vec(),
            labels: ids
                .iter()
                .map(|&k| config.elements[k].label.clone())
                .collect(),
        }),
    }
}

/// Incremental placing state over homogeneous coordinates.
struct Placer {
    homog: Vec<Vec<BigInt>>,
    basis: Vec<Vec<BigInt>>,
    proj: Vec<usize>,
    cells: Vec<Vec<usize>>,
}

impl Placer {
    fn new(config: &PointConfiguration) -> Self {
        let homog = (0..config.elements.len())
            .map(|k| config.homogeneous(k))
            .collect();
        Self {
            homog,
            basis: Vec::new(),
            proj: Vec::new(),
            cells: Vec::new(),
        }
    }

    fn span_dim(&self) -> usize {
        self.basis.len()
    }

    fn projected_sign(&self, ids: impl Iterator<Item = usize>) -> i32 {
        let rows: Vec<Vec<BigInt>> = ids
            .map(|k| {
                self.proj
                    .iter()
                    .map(|&c| self.homog[k][c].clone())
                    .collect()
            })
            .collect();
        let d = det(rows);
        if d.is_zero() {
            0
        } else if d.is_positive() {
            1
        } else {
            -1
        }
    }

    fn place(&mut self, w: usize) {
        let mut extended = self.basis.clone();
        extended.push(self.homog[w].clone());
        let pivots = pivot_columns(&extended);
        if pivots.len() > self.basis.len() {
            // Outside the current span: cone over everything.
            self.basis = extended;
            self.proj = pivots;
            if self.cells.is_empty() {
                self.cells.push(vec![w]);
            } else {
                for cell in &mut self.cells {
                    cell.push(w);
                    cell.sort_unstable();
                }
            }
            return;
        }
        // Boundary facets are those lying in exactly one cell.
        let mut facets: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
        for cell in &self.cells {
            for (pos, &opposite) in cell.iter().enumerate() {
                let mut facet = cell.clone();
                facet.remove(pos);
                facets.entry(facet).or_insert((opposite, 0)).1 += 1;
            }
        }
        let mut added = Vec::new();
        for (facet, (opposite, count)) in &facets {
            if *count != 1 {
                continue;
            }
            let inner = self.projected_sign(facet.iter().copied().chain([*opposite]));
            let outer = self.projected_sign(facet.iter().copied().chain([w]));
            if outer != 0 && outer == -inner {
                let mut cell = facet.clone();
                cell.push(w);
                cell.sort_unstable();
                added.push(cell);
            }
        }
        self.cells.extend(added);
    }
}

/// Placing triangulation of `conv(c)` for the given element order.
pub fn placing_triangulation(c: &PointConfiguration, order: &[usize]) -> Result<Triangulation> {
    let mut seen = BTreeSet::new();
    for &k in order {
        if k >= c.elements.len() || !seen.insert(k) {
            return Err(Error::InvalidOrder(format!(
                "element {k} repeated or unknown"
            )));
        }
    }
    if seen.len() != c.elements.len() {
        return Err(Error::InvalidOrder(format!(
            "order lists {} of {} elements",
            seen.len(),
            c.elements.len()
        )));
    }
    let mut placer = Placer::new(c);
    for &k in order {
        placer.place(k);
    }
    if placer.span_dim() != c.dim + 1 {
        return Err(Error::DegenerateConfiguration(format!(
            "elements span dimension {} of {}",
            placer.span_dim().saturating_sub(1),
            c.dim
        )));
    }
    Ok(Triangulation::from_cells(c.clone(), placer.cells, order))
}

/// Same as [`placing_triangulation`] with the order given by labels.
pub fn placing_triangulation_by_labels(
    c: &PointConfiguration,
    order: &[&str],
) -> Result<Triangulation> {
    let ids = order
        .iter()
        .map(|l| {
            c.index_of(l)
                .ok_or_else(|| Error::InvalidOrder(format!("unknown label {l}")))
        })
        .collect::<Result<Vec<_>>>()?;
    placing_triangulation(c, &ids)
}

pub fn preset_triangulation(c: &PointConfiguration, preset: OrderPreset) -> Result<Triangulation> {
    placing_triangulation(c, &preset.order(c)?)
}

/// Triangulations of the complement `N'` and of the Newton region `N` itself.
///
/// The complement is placed with `preset`; the origin is then placed last,
/// which cones it over the staircase side of `N'` and fills exactly the
/// closure of `N`. When the origin is a generator `N` is empty.
#[derive(Clone, Debug, Serialize)]
pub struct RegionTriangulation {
    pub complement: Triangulation,
    pub region_cells: Vec<HalfSimplex>,
}

pub fn region_triangulation(
    p: &MonomialPresentation,
    preset: OrderPreset,
) -> Result<RegionTriangulation> {
    let config = complement_configuration(p);
    let order = preset.order(&config)?;
    let complement = placing_triangulation(&config, &order)?;
    if p.has_zero_generator() {
        return Ok(RegionTriangulation {
            complement,
            region_cells: Vec::new(),
        });
    }
    let with_origin = config.with_point("o", ExponentVector::zeros(p.num_vars()))?;
    let origin = with_origin.elements.len() - 1;
    let mut full_order = order;
    full_order.push(origin);
    let full = placing_triangulation(&with_origin, &full_order)?;
    let region_cells = full
        .cell_elements
        .iter()
        .zip(&full.cells)
        .filter(|(ids, _)| ids.contains(&origin))
        .map(|(_, cell)| cell.clone())
        .collect();
    Ok(RegionTriangulation {
        complement,
        region_cells,
    })
}

/// The four-way split of top cells of a lifted triangulation by which of
/// `a_0` (exceptional), `a_first`, `a_second` they contain.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BlowupPartition {
    /// `a_0`, neither of the other two.
    pub u0: Vec<HalfSimplex>,
    /// `a_first` only.
    pub u1: Vec<HalfSimplex>,
    /// `a_0` and at least one of the other two.
    pub u_prime: Vec<HalfSimplex>,
    /// No `a_0`, and both or none of the other two.
    pub u_double_prime: Vec<HalfSimplex>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlowupClass {
    U0,
    U1,
    UPrime,
    UDoublePrime,
}

/// Lifted coordinate roles for a blow-up along `X_i ∩ X_j` (base indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlowupRoles {
    pub exceptional: usize,
    pub first: usize,
    pub second: usize,
}

impl BlowupRoles {
    pub fn for_center(i: usize, j: usize) -> Self {
        Self {
            exceptional: 0,
            first: i + 1,
            second: j + 1,
        }
    }

    pub fn preset(&self) -> OrderPreset {
        OrderPreset::Blowup {
            first: self.first,
            second: self.second,
            exceptional: self.exceptional,
        }
    }

    pub fn classify(&self, cell: &HalfSimplex) -> Result<BlowupClass> {
        let has = |j: usize| cell.infinite_directions.contains(&j);
        let (e, f, s) = (has(self.exceptional), has(self.first), has(self.second));
        match (e, f, s) {
            (true, false, false) => Ok(BlowupClass::U0),
            (false, true, false) => Ok(BlowupClass::U1),
            (true, _, _) => Ok(BlowupClass::UPrime),
            (false, true, true) | (false, false, false) => Ok(BlowupClass::UDoublePrime),
            (false, false, true) => Err(Error::Classification(format!(
                "cell {} contains the second ray without the exceptional or first ray",
                describe(cell)
            ))),
        }
    }
}

pub(crate) fn describe(cell: &HalfSimplex) -> String {
    match cell.labels() {
        Some(l) => l.join(""),
        None => format!("{:?}", cell.key()),
    }
}

pub fn classify_blowup_cells(t: &Triangulation, roles: BlowupRoles) -> Result<BlowupPartition> {
    let mut out = BlowupPartition::default();
    for cell in &t.cells {
        let bucket = match roles.classify(cell)? {
            BlowupClass::U0 => &mut out.u0,
            BlowupClass::U1 => &mut out.u1,
            BlowupClass::UPrime => &mut out.u_prime,
            BlowupClass::UDoublePrime => &mut out.u_double_prime,
        };
        bucket.push(cell.clone());
    }
    Ok(out)
}

/// Removes the ray `drop` and deletes the exceptional coordinate from every
/// vertex, shifting later coordinates down.
fn contract(cell: &HalfSimplex, roles: BlowupRoles, drop: usize) -> HalfSimplex {
    let ex = roles.exceptional;
    let finite_vertices = cell
        .finite_vertices
        .iter()
        .map(|v| {
            ExponentVector(
                v.entries()
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != ex)
                    .map(|(_, &x)| x)
                    .collect(),
            )
        })
        .collect();
    let infinite_directions = cell
        .infinite_directions
        .iter()
        .filter(|&&j| j != drop)
        .map(|&j| if j > ex { j - 1 } else { j })
        .collect();
    let provenance = cell.provenance.as_ref().map(|p| {
        let keep: Vec<usize> = (0..p.labels.len())
            .filter(|&k| p.labels[k] != ray_label_lifted(drop))
            .collect();
        Provenance {
            elements: Vec::new(),
            labels: keep
                .iter()
                .map(|&k| p.labels[k].trim_start_matches('^').to_string())
                .collect(),
        }
    });
    HalfSimplex {
        finite_vertices,
        infinite_directions,
        provenance,
    }
}

fn ray_label_lifted(j: usize) -> String {
    format!("a{j}")
}

/// Base cell matched to a lifted cell in `U'` (link of `a_0`, contracted) or
/// `U_1` (the pyramid's base face, contracted).
pub fn alpha(cell: &HalfSimplex, roles: BlowupRoles) -> Result<HalfSimplex> {
    match roles.classify(cell)? {
        BlowupClass::UPrime => Ok(contract(cell, roles, roles.exceptional)),
        BlowupClass::U1 => Ok(contract(cell, roles, roles.first)),
        other => Err(Error::Classification(format!(
            "alpha is undefined on {} (class {other:?})",
            describe(cell)
        ))),
    }
}

/// Links of `a_0` in a lifted triangulation, contracted along `a_0`: a
/// triangulation of the base complement.
pub fn link_contraction(t: &Triangulation, roles: BlowupRoles) -> Vec<HalfSimplex> {
    t.cells
        .iter()
        .filter(|c| c.infinite_directions.contains(&roles.exceptional))
        .map(|c| contract(c, roles, roles.exceptional))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(v: &[u32]) -> ExponentVector {
        ExponentVector(v.to_vec())
    }

    fn simplex(finite: &[&[u32]], dirs: &[usize]) -> HalfSimplex {
        HalfSimplex::new(
            finite.iter().map(|v| ev(v)).collect(),
            dirs.iter().copied().collect(),
        )
    }

    fn cell_names(t: &Triangulation) -> BTreeSet<String> {
        t.cells
            .iter()
            .map(|c| {
                let mut l = c.labels().unwrap().to_vec();
                l.sort();
                l.join(" ")
            })
            .collect()
    }

    fn names(list: &[&str]) -> BTreeSet<String> {
        list.iter()
            .map(|s| {
                let mut parts: Vec<&str> = s.split(' ').collect();
                parts.sort();
                parts.join(" ")
            })
            .collect()
    }

    #[test]
    fn hvol_examples() {
        assert_eq!(
            hvol(&simplex(&[&[0, 0, 1], &[1, 0, 2], &[0, 2, 3]], &[2])).unwrap(),
            2
        );
        for n in 1..5 {
            let mut verts = vec![vec![0u32; n]];
            for i in 0..n {
                let mut e = vec![0; n];
                e[i] = 1;
                verts.push(e);
            }
            let s = HalfSimplex::new(
                verts.into_iter().map(ExponentVector).collect(),
                BTreeSet::new(),
            );
            assert_eq!(hvol(&s).unwrap(), 1);
        }
        assert_eq!(
            hvol(&simplex(&[&[0, 0], &[1, 1], &[2, 2]], &[])).unwrap(),
            0
        );
    }

    #[test]
    fn hvol_rejects_non_square_projection() {
        let s = simplex(&[&[0, 0, 1], &[1, 0, 2]], &[2]);
        assert!(matches!(hvol(&s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn det_small() {
        let m = |rows: &[&[i64]]| -> Vec<Vec<BigInt>> {
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect()
        };
        assert_eq!(det(m(&[&[2, 1], &[1, 3]])), BigInt::from(5));
        assert_eq!(det(m(&[&[0, 1], &[1, 0]])), BigInt::from(-1));
        assert_eq!(
            det(m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]])),
            BigInt::from(-3)
        );
        assert_eq!(
            det(m(&[&[0, 0, 1], &[0, 1, 0], &[1, 0, 0]])),
            BigInt::from(-1)
        );
    }

    #[test]
    fn complement_configurations() {
        let p = MonomialPresentation::from_rows(2, &[&[3, 0], &[1, 1], &[0, 3]]).unwrap();
        let c = complement_configuration(&p);
        assert_eq!(c.finite_points().count(), 3);
        assert_eq!(c.rays(), BTreeSet::from([0, 1]));

        let p = MonomialPresentation::from_rows(2, &[&[1, 1]]).unwrap();
        let c = complement_configuration(&p);
        assert_eq!(
            c.finite_points()
                .map(|(_, v)| v.clone())
                .collect::<Vec<_>>(),
            vec![ev(&[1, 1])]
        );
        assert_eq!(c.rays(), BTreeSet::from([0, 1]));
    }

    #[test]
    fn lift_examples() {
        let p = MonomialPresentation::from_rows(2, &[&[3, 0], &[1, 1], &[0, 3]]).unwrap();
        let lifted = lift_to_h(&complement_configuration(&p), 0, 1).unwrap();
        let pts: Vec<_> = lifted.finite_points().map(|(_, v)| v.0.clone()).collect();
        assert_eq!(pts, vec![vec![3, 3, 0], vec![2, 1, 1], vec![3, 0, 3]]);
        assert_eq!(lifted.rays(), BTreeSet::from([0, 1, 2]));
        assert_eq!(lifted.dim(), 3);
        assert!(lift_to_h(&complement_configuration(&p), 1, 1).is_err());
    }

    #[test]
    fn placing_single_point() {
        let p = MonomialPresentation::from_rows(2, &[&[1, 1]]).unwrap();
        let c = complement_configuration(&p);
        for order in [["v0", "a1", "a2"], ["a2", "v0", "a1"], ["a1", "a2", "v0"]] {
            let t = placing_triangulation_by_labels(&c, &order).unwrap();
            assert_eq!(cell_names(&t), names(&["v0 a1 a2"]));
        }
    }

    #[test]
    fn placing_two_points() {
        let p = MonomialPresentation::from_rows(2, &[&[1, 0], &[0, 1]]).unwrap();
        let c = complement_configuration(&p);
        let t = placing_triangulation_by_labels(&c, &["v0", "v1", "a1", "a2"]).unwrap();
        assert_eq!(cell_names(&t), names(&["v0 v1 a1", "v1 a1 a2"]));
    }

    #[test]
    fn placing_golden_lift() {
        let p = MonomialPresentation::from_rows(2, &[&[3, 0], &[1, 1], &[0, 3]]).unwrap();
        let lifted = lift_to_h(&complement_configuration(&p), 0, 1).unwrap();
        let t = placing_triangulation_by_labels(&lifted, &["^v0", "^v1", "^v2", "a1", "a2", "a0"])
            .unwrap();
        assert_eq!(
            cell_names(&t),
            names(&[
                "^v0 ^v1 ^v2 a1",
                "^v1 ^v2 a1 a2",
                "^v0 ^v1 ^v2 a0",
                "^v0 ^v2 a1 a0",
                "^v2 a1 a2 a0",
            ])
        );
        let preset = BlowupRoles::for_center(0, 1).preset();
        assert_eq!(
            cell_names(&preset_triangulation(&lifted, preset).unwrap()),
            cell_names(&t)
        );
    }

    #[test]
    fn golden_partition_and_alpha() {
        let p = MonomialPresentation::from_rows(2, &[&[3, 0], &[1, 1], &[0, 3]]).unwrap();
        let roles = BlowupRoles::for_center(0, 1);
        let lifted = lift_to_h(&complement_configuration(&p), 0, 1).unwrap();
        let t = preset_triangulation(&lifted, roles.preset()).unwrap();
        let part = classify_blowup_cells(&t, roles).unwrap();
        let set = |cells: &[HalfSimplex]| -> BTreeSet<String> {
            cells
                .iter()
                .map(|c| {
                    let mut l = c.labels().unwrap().to_vec();
                    l.sort();
                    l.join(" ")
                })
                .collect()
        };
        assert_eq!(set(&part.u0), names(&["^v0 ^v1 ^v2 a0"]));
        assert_eq!(set(&part.u1), names(&["^v0 ^v1 ^v2 a1"]));
        assert_eq!(
            set(&part.u_prime),
            names(&["^v0 ^v2 a1 a0", "^v2 a1 a2 a0"])
        );
        assert_eq!(set(&part.u_double_prime), names(&["^v1 ^v2 a1 a2"]));

        let images: BTreeSet<String> = part
            .u_prime
            .iter()
            .chain(&part.u1)
            .map(|c| {
                let mut l = alpha(c, roles).unwrap().labels().unwrap().to_vec();
                l.sort();
                l.join(" ")
            })
            .collect();
        assert_eq!(images, names(&["v0 v2 a1", "v2 a1 a2", "v0 v1 v2"]));

        let links: BTreeSet<_> = link_contraction(&t, roles)
            .iter()
            .map(HalfSimplex::key)
            .collect();
        let alphas: BTreeSet<_> = part
            .u_prime
            .iter()
            .chain(&part.u1)
            .map(|c| alpha(c, roles).unwrap().key())
            .collect();
        assert_eq!(links, alphas);
        assert!(alpha(&part.u0[0], roles).is_err());
    }

    #[test]
    fn single_generator_lift_lands_in_u_prime() {
        let p = MonomialPresentation::from_rows(2, &[&[1, 1]]).unwrap();
        let roles = BlowupRoles::for_center(0, 1);
        let lifted = lift_to_h(&complement_configuration(&p), 0, 1).unwrap();
        let t = preset_triangulation(&lifted, roles.preset()).unwrap();
        let part = classify_blowup_cells(&t, roles).unwrap();
        let keys: Vec<_> = part.u_prime.iter().map(HalfSimplex::key).collect();
        assert!(keys.contains(&(BTreeSet::from([ev(&[2, 1, 1])]), BTreeSet::from([0, 1, 2]))));
        assert_eq!(part.u_prime.len() + part.u1.len(), 1);
    }

    #[test]
    fn forbidden_cell_is_rejected() {
        let roles = BlowupRoles::for_center(0, 1);
        let cell = simplex(&[&[2, 1, 1], &[3, 0, 3], &[3, 3, 0]], &[2]);
        assert!(matches!(
            roles.classify(&cell),
            Err(Error::Classification(_))
        ));
    }

    #[test]
    fn order_must_be_a_permutation() {
        let p = MonomialPresentation::from_rows(2, &[&[1, 1]]).unwrap();
        let c = complement_configuration(&p);
        assert!(placing_triangulation(&c, &[0, 1]).is_err());
        assert!(placing_triangulation(&c, &[0, 1, 1]).is_err());
    }

    #[test]
    fn region_cells_fill_newton_region() {
        let p = MonomialPresentation::from_rows(2, &[&[1, 0], &[0, 1]]).unwrap();
        let r = region_triangulation(&p, OrderPreset::Default).unwrap();
        assert_eq!(r.region_cells.len(), 1);
        assert_eq!(hvol(&r.region_cells[0]).unwrap(), 1);
        let unit = MonomialPresentation::from_rows(2, &[&[0, 0], &[1, 3]]).unwrap();
        assert!(region_triangulation(&unit, OrderPreset::Default)
            .unwrap()
            .region_cells
            .is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn points(n: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
            prop::collection::btree_set(prop::collection::vec(0u32..=4, n), n + 1..=n + 4)
                .prop_map(|s| s.into_iter().collect())
        }

        fn finite_config(pts: &[Vec<u32>]) -> PointConfiguration {
            let n = pts[0].len();
            PointConfiguration::new(
                n,
                pts.iter()
                    .enumerate()
                    .map(|(k, v)| Element {
                        label: format!("p{k}"),
                        kind: ElementKind::Finite(ExponentVector(v.clone())),
                    })
                    .collect(),
            )
            .unwrap()
        }

        fn total_volume(t: &Triangulation) -> u64 {
            t.cells.iter().map(|c| hvol(c).unwrap()).sum()
        }

        proptest! {
            #[test]
            fn hvol_symmetries(pts in prop::collection::vec(prop::collection::vec(0u32..=5, 3), 4), shift in prop::collection::vec(0u32..=3, 3), rot in 0usize..4) {
                let s = HalfSimplex::new(pts.iter().cloned().map(ExponentVector).collect(), BTreeSet::new());
                let v = hvol(&s).unwrap();
                let mut perm = pts.clone();
                perm.rotate_left(rot);
                let sp = HalfSimplex::new(perm.into_iter().map(ExponentVector).collect(), BTreeSet::new());
                prop_assert_eq!(hvol(&sp).unwrap(), v);
                let shifted = HalfSimplex::new(
                    pts.iter().map(|p| ExponentVector(p.iter().zip(&shift).map(|(a, b)| a + b).collect())).collect(),
                    BTreeSet::new(),
                );
                prop_assert_eq!(hvol(&shifted).unwrap(), v);
            }

            #[test]
            fn volume_is_order_independent(pts in points(2), seed in 0usize..24) {
                let c = finite_config(&pts);
                let forward: Vec<usize> = (0..pts.len()).collect();
                let mut other = forward.clone();
                other.rotate_left(seed % pts.len());
                if seed % 2 == 1 { other.reverse(); }
                match (placing_triangulation(&c, &forward), placing_triangulation(&c, &other)) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(total_volume(&a), total_volume(&b)),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "degeneracy must not depend on order"),
                }
            }

            #[test]
            fn volume_is_order_independent_3d(pts in points(3), seed in 0usize..24) {
                let c = finite_config(&pts);
                let forward: Vec<usize> = (0..pts.len()).collect();
                let mut other = forward.clone();
                other.rotate_left(seed % pts.len());
                if seed % 2 == 1 { other.reverse(); }
                match (placing_triangulation(&c, &forward), placing_triangulation(&c, &other)) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(total_volume(&a), total_volume(&b)),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "degeneracy must not depend on order"),
                }
            }

            #[test]
            fn lift_preserves_hvol(pts in prop::collection::vec(prop::collection::vec(0u32..=5, 2), 3)) {
                let s = HalfSimplex::new(pts.iter().cloned().map(ExponentVector).collect(), BTreeSet::new());
                let lifted = HalfSimplex::new(
                    pts.iter().map(|p| ExponentVector(vec![p[0] + p[1], p[0], p[1]])).collect(),
                    BTreeSet::from([0]),
                );
                prop_assert_eq!(hvol(&lifted).unwrap(), hvol(&s).unwrap());
            }
        }
    }
}
