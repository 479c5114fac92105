//! The two Segre-class pipelines and the checks that tie them together.
//!
//! The integral pipeline triangulates the convex complement `N'` of the
//! Newton region, sums the closed-form simplex contributions and subtracts
//! from 1 (the whole orthant integrates to 1). The tower pipeline principalizes
//! the ideal, writes down `D/(1+D)` for the resulting divisor and pushes it
//! back to the base level.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::chow::{blow_up, pushforward, reduce_series, BlowupStep, LevelRing};
use crate::error::{Error, Result};
use crate::lattice::{residual_split, support_cover_check, ExponentVector, MonomialPresentation};
use crate::polytope::{
    alpha, classify_blowup_cells, complement_configuration, hvol, lift_to_h, link_contraction,
    preset_triangulation, region_triangulation, BlowupClass, BlowupRoles, HalfSimplex, OrderPreset,
};
use crate::principalize::{principalize, Strategy, TowerTrace, DEFAULT_CAP};
use crate::series::{
    reciprocal_one_plus, tensor_line, LinearForm, Monomial, Rational, TruncatedSeries,
};

/// Truncation used when none is given: `n + 3`.
pub fn default_degree_bound(n: usize) -> u32 {
    n as u32 + 3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Integral,
    Tower,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimplexTerm {
    pub simplex: HalfSimplex,
    pub hvol: u64,
    pub contribution: TruncatedSeries,
    /// Finite directions of the cell: the variables its contribution is
    /// divisible by.
    pub support: BTreeSet<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SegreResult {
    pub pipeline: Pipeline,
    pub series: TruncatedSeries,
    /// Cells of the Newton region itself, when the integral pipeline ran.
    pub per_simplex: Vec<SimplexTerm>,
    /// Cells of the complement `N'`, whose total is subtracted from 1.
    pub complement: Vec<SimplexTerm>,
    pub order: Option<String>,
    pub trace: Option<TowerTrace>,
}

/// `hvol(t) · Π_{j finite} X_j · Π_v 1/(1 + v·X)`, expanded to `degree_bound`.
pub fn simplex_contribution(t: &HalfSimplex, degree_bound: u32) -> Result<TruncatedSeries> {
    let n = t.dim();
    let vol = hvol(t)?;
    let mut out = TruncatedSeries::zero(n, degree_bound);
    let finite = t.finite_directions();
    let shift_degree = finite.len() as u32;
    if vol == 0 || shift_degree > degree_bound {
        return Ok(out);
    }
    // Expanding the denominators only as far as the numerator leaves room
    // for keeps the intermediate products small.
    let inner = degree_bound - shift_degree;
    let mut product = TruncatedSeries::one(n, inner);
    for v in &t.finite_vertices {
        if !v.is_zero() {
            product = &product * &reciprocal_one_plus(&LinearForm::one_plus(v), inner)?;
        }
    }
    let mut shift = vec![0; n];
    for j in finite {
        shift[j] = 1;
    }
    let shift = Monomial::new(shift);
    let vol = Rational::from_integer(vol.into());
    for (m, c) in product.terms() {
        out.add_term(m.mul(&shift), c * &vol);
    }
    Ok(out)
}

fn simplex_term(t: &HalfSimplex, degree_bound: u32) -> Result<SimplexTerm> {
    Ok(SimplexTerm {
        simplex: t.clone(),
        hvol: hvol(t)?,
        contribution: simplex_contribution(t, degree_bound)?,
        support: t.finite_directions(),
    })
}

fn total(n: usize, degree_bound: u32, terms: &[SimplexTerm]) -> TruncatedSeries {
    terms
        .iter()
        .fold(TruncatedSeries::zero(n, degree_bound), |acc, t| {
            &acc + &t.contribution
        })
}

/// The Newton-region integral in the generic model (no empty intersections).
pub fn segre_integral(
    p: &MonomialPresentation,
    degree_bound: u32,
    preset: OrderPreset,
) -> Result<SegreResult> {
    let n = p.num_vars();
    let region = region_triangulation(p, preset)?;
    let complement = region
        .complement
        .cells
        .iter()
        .map(|c| simplex_term(c, degree_bound))
        .collect::<Result<Vec<_>>>()?;
    let per_simplex = region
        .region_cells
        .iter()
        .map(|c| simplex_term(c, degree_bound))
        .collect::<Result<Vec<_>>>()?;
    let series = if p.has_zero_generator() {
        TruncatedSeries::zero(n, degree_bound)
    } else {
        &TruncatedSeries::one(n, degree_bound) - &total(n, degree_bound, &complement)
    };
    Ok(SegreResult {
        pipeline: Pipeline::Integral,
        series,
        per_simplex,
        complement,
        order: Some(preset.name()),
        trace: None,
    })
}

/// The integral read in a ring with declared empty intersections.
pub fn segre_integral_in(
    r: &LevelRing,
    p: &MonomialPresentation,
    degree_bound: u32,
    preset: OrderPreset,
) -> Result<SegreResult> {
    if r.num_vars() != p.num_vars() {
        return Err(Error::VariableCountMismatch(p.num_vars(), r.num_vars()));
    }
    let mut result = segre_integral(p, degree_bound, preset)?;
    result.series = reduce_series(r, &result.series);
    for t in result
        .per_simplex
        .iter_mut()
        .chain(result.complement.iter_mut())
    {
        t.contribution = reduce_series(r, &t.contribution);
    }
    Ok(result)
}

/// `D/(1+D)` in `r`, dropping nil monomials after every multiplication.
pub fn divisor_class(r: &LevelRing, d: &ExponentVector, degree_bound: u32) -> TruncatedSeries {
    let line = LinearForm::homogeneous(d).linear_part(degree_bound);
    let mut out = TruncatedSeries::zero(r.num_vars(), degree_bound);
    let mut power = line.clone();
    let mut positive = true;
    while !power.is_zero() {
        out = if positive {
            &out + &power
        } else {
            &out - &power
        };
        power = reduce_series(r, &(&power * &line));
        positive = !positive;
    }
    out
}

/// Pushes a top-level class down through every step of a tower.
pub fn push_down(steps: &[BlowupStep], top: TruncatedSeries) -> Result<TruncatedSeries> {
    let mut c = top;
    for step in steps.iter().rev() {
        c = pushforward(step, &step.upper.class(c)?)?.series;
        c = reduce_series(&step.lower, &c);
    }
    Ok(c)
}

/// The tower pipeline in the generic model.
pub fn segre_tower(
    p: &MonomialPresentation,
    degree_bound: u32,
    strategy: Strategy,
) -> Result<SegreResult> {
    segre_tower_in(
        &LevelRing::base(p.num_vars()),
        p,
        degree_bound,
        strategy,
        DEFAULT_CAP,
    )
}

pub fn segre_tower_in(
    r: &LevelRing,
    p: &MonomialPresentation,
    degree_bound: u32,
    strategy: Strategy,
    cap: usize,
) -> Result<SegreResult> {
    let trace = principalize(r, p, strategy, cap)?;
    let top = trace.top();
    let d = trace
        .terminal_divisor
        .as_ref()
        .expect("terminated tower has a divisor");
    let top_class = divisor_class(&top.ring, d, degree_bound);
    let series = push_down(&trace.steps, top_class)?;
    Ok(SegreResult {
        pipeline: Pipeline::Tower,
        series,
        per_simplex: Vec::new(),
        complement: Vec::new(),
        order: None,
        trace: Some(trace),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl CheckStatus {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

/// First term on which two series disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TermDifference {
    pub exponents: Vec<u32>,
    pub left: String,
    pub right: String,
}

pub fn compare(a: &TruncatedSeries, b: &TruncatedSeries) -> Option<TermDifference> {
    a.first_difference(b).map(|(m, x, y)| TermDifference {
        exponents: m.exps().to_vec(),
        left: x.to_string(),
        right: y.to_string(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub status: CheckStatus,
    pub common_factor: ExponentVector,
    pub difference: Option<TermDifference>,
}

/// Checks `∫_N = D/(1+D) + (1/(1+D)) · (∫_{N_R} ⊗ O(D))` where `D` is the
/// common factor of the generators and `R` the residual.
pub fn residual_identity_check(
    p: &MonomialPresentation,
    degree_bound: u32,
    preset: OrderPreset,
) -> Result<ResidualReport> {
    let (d, residual) = residual_split(p);
    if d.is_zero() {
        return Ok(ResidualReport {
            status: CheckStatus::Skipped,
            common_factor: d,
            difference: None,
        });
    }
    let n = p.num_vars();
    let lhs = segre_integral(p, degree_bound, preset)?.series;
    let inv = reciprocal_one_plus(&LinearForm::one_plus(&d), degree_bound)?;
    let d_over = &TruncatedSeries::one(n, degree_bound) - &inv;
    let twisted = tensor_line(
        &segre_integral(&residual, degree_bound, preset)?.series,
        &LinearForm::homogeneous(&d),
    )?;
    let rhs = &d_over + &(&inv * &twisted);
    let difference = compare(&lhs, &rhs);
    Ok(ResidualReport {
        status: CheckStatus::from_bool(difference.is_none()),
        common_factor: d,
        difference,
    })
}

/// One lifted cell together with its push-forward.
#[derive(Clone, Debug, Serialize)]
pub struct LiftedCell {
    pub cell: HalfSimplex,
    pub class: String,
    pub contribution: TruncatedSeries,
    pub pushed: TruncatedSeries,
    /// `α(cell)` and its contribution, for cells in `U'` and `U_1`.
    pub image: Option<SimplexTerm>,
}

/// Everything computed while comparing a blow-up with its base.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupReplay {
    pub step: BlowupStep,
    pub cells: Vec<LiftedCell>,
    /// The base triangulation read off as links of the exceptional ray.
    pub base_cells: Vec<SimplexTerm>,
}

fn class_name(c: BlowupClass) -> &'static str {
    match c {
        BlowupClass::U0 => "U0",
        BlowupClass::U1 => "U1",
        BlowupClass::UPrime => "U'",
        BlowupClass::UDoublePrime => "U''",
    }
}

impl BlowupReplay {
    pub fn in_class(&self, name: &str) -> impl Iterator<Item = &LiftedCell> {
        let name = name.to_string();
        self.cells.iter().filter(move |c| c.class == name)
    }

    /// Sum of push-forwards over the given classes.
    pub fn pushed_total(&self, classes: &[&str]) -> TruncatedSeries {
        let n = self.step.lower.num_vars();
        let bound = self.cells.first().map_or(0, |c| c.pushed.degree_bound());
        self.cells
            .iter()
            .filter(|c| classes.contains(&c.class.as_str()))
            .fold(TruncatedSeries::zero(n, bound), |acc, c| &acc + &c.pushed)
    }
}

/// Lifts the complement of `p` to the hyperplane `a_0 = a_i + a_j`, places
/// it with the blow-up order, classifies the cells and pushes every cell
/// contribution down.
pub fn blowup_replay(
    p: &MonomialPresentation,
    i: usize,
    j: usize,
    degree_bound: u32,
) -> Result<BlowupReplay> {
    let n = p.num_vars();
    let step = blow_up(&LevelRing::base(n), i, j)?;
    let roles = BlowupRoles::for_center(i, j);
    let lifted = lift_to_h(&complement_configuration(p), i, j)?;
    let t = preset_triangulation(&lifted, roles.preset())?;
    let mut cells = Vec::with_capacity(t.cells.len());
    for cell in &t.cells {
        let class = roles.classify(cell)?;
        let contribution = simplex_contribution(cell, degree_bound)?;
        let pushed = pushforward(&step, &step.upper.class(contribution.clone())?)?.series;
        let image = match class {
            BlowupClass::UPrime | BlowupClass::U1 => {
                Some(simplex_term(&alpha(cell, roles)?, degree_bound)?)
            }
            BlowupClass::U0 | BlowupClass::UDoublePrime => None,
        };
        cells.push(LiftedCell {
            cell: cell.clone(),
            class: class_name(class).to_string(),
            contribution,
            pushed,
            image,
        });
    }
    // Validates that the classification is total before it is used.
    classify_blowup_cells(&t, roles)?;
    let base_cells = link_contraction(&t, roles)
        .iter()
        .map(|c| simplex_term(c, degree_bound))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlowupReplay {
        step,
        cells,
        base_cells,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CellCheck {
    pub cell: String,
    pub class: String,
    pub image: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub center: (usize, usize),
    pub status: CheckStatus,
    pub cells: Vec<CellCheck>,
    /// `α` is a bijection onto the links of the exceptional ray.
    pub alpha_bijective: bool,
    /// The lifted total pushes to the base total, and `1 -` that total is the
    /// integral over the base with the default order.
    pub totals_equal: bool,
}

fn describe(cell: &HalfSimplex) -> String {
    match cell.labels() {
        Some(l) => l.join(" "),
        None => format!("{:?}", cell.key()),
    }
}

pub fn blowup_invariance_check(
    p: &MonomialPresentation,
    i: usize,
    j: usize,
    degree_bound: u32,
) -> Result<InvarianceReport> {
    let n = p.num_vars();
    let replay = blowup_replay(p, i, j, degree_bound)?;
    let mut cells = Vec::with_capacity(replay.cells.len());
    let mut images = Vec::new();
    for c in &replay.cells {
        let passed = match &c.image {
            None => c.pushed.is_zero(),
            Some(img) => {
                images.push(img.simplex.key());
                c.pushed == img.contribution
            }
        };
        cells.push(CellCheck {
            cell: describe(&c.cell),
            class: c.class.clone(),
            image: c.image.as_ref().map(|t| describe(&t.simplex)),
            passed,
        });
    }
    let mut links: Vec<_> = replay.base_cells.iter().map(|t| t.simplex.key()).collect();
    images.sort();
    links.sort();
    let alpha_bijective = images == links && images.windows(2).all(|w| w[0] != w[1]);

    let all: Vec<&str> = vec!["U0", "U1", "U'", "U''"];
    let pushed_total = replay.pushed_total(&all);
    let base_total = total(n, degree_bound, &replay.base_cells);
    let integral = segre_integral(p, degree_bound, OrderPreset::Default)?.series;
    let from_base = &TruncatedSeries::one(n, degree_bound) - &base_total;
    let totals_equal =
        pushed_total == base_total && (p.has_zero_generator() || from_base == integral);

    let ok = cells.iter().all(|c| c.passed) && alpha_bijective && totals_equal;
    Ok(InvarianceReport {
        center: (i, j),
        status: CheckStatus::from_bool(ok),
        cells,
        alpha_bijective,
        totals_equal,
    })
}

/// Settings for [`verify`].
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub degree_bound: u32,
    pub strategy: Strategy,
    pub cap: usize,
    pub presets: Vec<OrderPreset>,
    /// Declared empty intersections of the base divisors.
    pub nil_pairs: Vec<(usize, usize)>,
}

impl VerifyConfig {
    pub fn for_vars(n: usize) -> Self {
        Self {
            degree_bound: default_degree_bound(n),
            strategy: Strategy::default(),
            cap: DEFAULT_CAP,
            presets: vec![
                OrderPreset::Default,
                OrderPreset::RaysFirst,
                OrderPreset::Reverse,
            ],
            nil_pairs: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    /// Wall time; left out of serialized reports so they stay byte-stable.
    #[serde(skip)]
    pub millis: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub generators: Vec<ExponentVector>,
    pub degree_bound: u32,
    pub strategy: String,
    pub integral: TruncatedSeries,
    pub tower_depth: Option<usize>,
    /// The tower hit the iteration cap; the pipeline comparison was skipped.
    pub diverged: bool,
    pub checks: Vec<CheckResult>,
    pub residual: Option<ResidualReport>,
    pub invariance: Vec<InvarianceReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

struct Recorder {
    checks: Vec<CheckResult>,
}

impl Recorder {
    fn run<T>(
        &mut self,
        name: &str,
        f: impl FnOnce() -> Result<(CheckStatus, String, T)>,
    ) -> Option<T> {
        let start = Instant::now();
        let outcome = f();
        let millis = start.elapsed().as_secs_f64() * 1000.0;
        let (status, detail, value) = match outcome {
            Ok((s, d, v)) => (s, d, Some(v)),
            Err(e) => (CheckStatus::Fail, e.to_string(), None),
        };
        self.checks.push(CheckResult {
            name: name.to_string(),
            status,
            detail,
            millis,
        });
        value
    }
}

fn difference_detail(d: &Option<TermDifference>) -> String {
    match d {
        None => "equal".into(),
        Some(d) => format!(
            "first difference at exponents {:?}: {} vs {}",
            d.exponents, d.left, d.right
        ),
    }
}

/// Runs every check on one presentation.
pub fn verify(p: &MonomialPresentation, config: &VerifyConfig) -> Result<VerifyReport> {
    let n = p.num_vars();
    let bound = config.degree_bound;
    let ring = LevelRing::with_labels(n, p.labels().to_vec()).with_nil_pairs(&config.nil_pairs)?;
    let first_preset = config
        .presets
        .first()
        .copied()
        .unwrap_or(OrderPreset::Default);
    let integral = segre_integral_in(&ring, p, bound, first_preset)?;
    let mut rec = Recorder { checks: Vec::new() };

    let mut diverged = false;
    let mut tower_depth = None;
    rec.run("pipeline-equality", || {
        match segre_tower_in(&ring, p, bound, config.strategy, config.cap) {
            Ok(tower) => {
                tower_depth = tower.trace.as_ref().map(TowerTrace::depth);
                let diff = compare(&integral.series, &tower.series);
                Ok((
                    CheckStatus::from_bool(diff.is_none()),
                    difference_detail(&diff),
                    (),
                ))
            }
            Err(Error::TowerDivergence(trace)) => {
                diverged = true;
                Ok((
                    CheckStatus::Skipped,
                    format!("tower diverged after {} blow-ups", trace.iterations_used),
                    (),
                ))
            }
            Err(e) => Err(e),
        }
    });

    let residual = rec.run("residual-identity", || {
        let r = residual_identity_check(p, bound, first_preset)?;
        let detail = match r.status {
            CheckStatus::Skipped => "no common factor".to_string(),
            _ => difference_detail(&r.difference),
        };
        Ok((r.status, detail, r))
    });

    let mut invariance = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || ring.is_nil(i, j) {
                continue;
            }
            let name = format!("blowup-invariance({},{})", i + 1, j + 1);
            if let Some(r) = rec.run(&name, || {
                let r = blowup_invariance_check(p, i, j, bound)?;
                let bad: Vec<&str> = r
                    .cells
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.cell.as_str())
                    .collect();
                let detail = if bad.is_empty() {
                    format!(
                        "{} lifted cells, alpha bijective: {}, totals equal: {}",
                        r.cells.len(),
                        r.alpha_bijective,
                        r.totals_equal
                    )
                } else {
                    format!("mismatched cells: {}", bad.join(", "))
                };
                Ok((r.status, detail, r))
            }) {
                invariance.push(r);
            }
        }
    }

    rec.run("integrality", || {
        let ok = integral.series.is_integral();
        Ok((
            CheckStatus::from_bool(ok),
            format!("{} terms", integral.series.len()),
            (),
        ))
    });

    rec.run("support", || {
        let bad: Vec<String> = integral
            .per_simplex
            .iter()
            .filter(|t| !support_cover_check(p, &t.support))
            .map(|t| describe(&t.simplex))
            .collect();
        let detail = if bad.is_empty() {
            format!("{} region cells", integral.per_simplex.len())
        } else {
            format!("uncovered: {}", bad.join(", "))
        };
        Ok((CheckStatus::from_bool(bad.is_empty()), detail, ()))
    });

    rec.run("orthant-normalization", || {
        let orthant = HalfSimplex::new(vec![ExponentVector::zeros(n)], (0..n).collect());
        let unit = simplex_contribution(&orthant, bound)?;
        let generic = segre_integral(p, bound, first_preset)?;
        let sum = &total(n, bound, &generic.per_simplex) + &total(n, bound, &generic.complement);
        let one = TruncatedSeries::one(n, bound);
        let ok = unit == one && (p.has_zero_generator() || sum == one);
        Ok((
            CheckStatus::from_bool(ok),
            difference_detail(&compare(&sum, &one)),
            (),
        ))
    });

    rec.run("order-independence", || {
        let mut names = Vec::new();
        let mut diff = None;
        for &preset in &config.presets {
            names.push(preset.name());
            let other = segre_integral_in(&ring, p, bound, preset)?.series;
            if diff.is_none() {
                diff = compare(&integral.series, &other);
            }
        }
        let status = if config.presets.len() < 2 {
            CheckStatus::Skipped
        } else {
            CheckStatus::from_bool(diff.is_none())
        };
        Ok((
            status,
            format!("{}: {}", names.join(", "), difference_detail(&diff)),
            (),
        ))
    });

    Ok(VerifyReport {
        generators: p.generators().to_vec(),
        degree_bound: bound,
        strategy: config.strategy.name().to_string(),
        integral: integral.series,
        tower_depth,
        diverged,
        checks: rec.checks,
        residual,
        invariance,
    })
}
