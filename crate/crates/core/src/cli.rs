//! Command-line surface: input parsing, subcommands, report formatting and
//! the n = 2 figure.
//!
//! Exit codes: 0 success, 1 verification failure or runtime error, 2 usage or
//! input error, 3 tower divergence.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chow::LevelRing;
use crate::error::{Error, Result};
use crate::lattice::{default_labels, ExponentVector, MonomialPresentation};
use crate::polytope::{region_triangulation, HalfSimplex, OrderPreset};
use crate::principalize::{Strategy, TowerTrace, DEFAULT_CAP};
use crate::segre::{
    default_degree_bound, segre_integral_in, segre_tower_in, verify, CheckStatus, SimplexTerm,
    VerifyConfig, VerifyReport,
};
use crate::series::{SeriesTerm, TruncatedSeries};

/// Environment variable that replaces the `n + 3` default truncation.
pub const DMAX_ENV: &str = "SEGRE_DMAX";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "segre", version, about = "Segre classes of monomial schemes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Newton-region integral; prints the expanded series.
    Compute(InputArgs),
    /// Principalization tower and push-down; prints the series and the trace.
    Tower(TowerArgs),
    /// Runs every consistency check on one presentation.
    Verify(TowerArgs),
    /// Lists the cells of the complement and region triangulations.
    Triangulate(InputArgs),
    /// Draws the Newton region and triangulation of a planar ideal as SVG.
    Render(InputArgs),
    /// Verifies a seeded batch of random presentations.
    Corpus(CorpusArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Generators as "a,b;c,d;..." (one exponent vector per monomial).
    #[arg(long, conflicts_with = "input")]
    pub gens: Option<String>,
    /// Number of variables; inferred from the generators when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    /// JSON input document.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Declared empty intersections as "1,2;2,3" (1-based).
    #[arg(long)]
    pub nil: Option<String>,
    /// Truncation degree (default: document value, then $SEGRE_DMAX, then n+3).
    #[arg(long)]
    pub dmax: Option<u32>,
    /// Placement order preset: default, rays-first or reverse.
    #[arg(long, default_value = "default")]
    pub order: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TowerArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Center selection strategy: heaviest-crossing, lex-first or max-drop.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Maximum number of blow-ups.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Truncation degree (default: $SEGRE_DMAX, then n+3 per instance).
    #[arg(long)]
    pub dmax: Option<u32>,
    #[arg(long, default_value = "heaviest-crossing")]
    pub strategy: String,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// The interchange document. Unknown fields are ignored, so the JSON written
/// by `compute` reads back as input.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDoc {
    pub n: usize,
    pub generators: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// 1-based variable pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nil_pairs: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmax: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
}

/// A fully resolved job.
#[derive(Clone, Debug)]
pub struct Job {
    pub presentation: MonomialPresentation,
    pub ring: LevelRing,
    pub nil_pairs: Vec<(usize, usize)>,
    pub degree_bound: u32,
    pub strategy: Strategy,
}

impl Job {
    pub fn doc(&self) -> InputDoc {
        let p = &self.presentation;
        let labels = p.labels().to_vec();
        InputDoc {
            n: p.num_vars(),
            generators: p.generators().iter().map(|g| g.0.clone()).collect(),
            labels: (labels != default_labels(p.num_vars())).then_some(labels),
            nil_pairs: self
                .nil_pairs
                .iter()
                .map(|&(a, b)| (a + 1, b + 1))
                .collect(),
            dmax: Some(self.degree_bound),
            strategy: None,
        }
    }
}

fn parse_rows(text: &str) -> Result<Vec<Vec<u32>>> {
    text.split(';')
        .map(str::trim)
        .filter(|row| !row.is_empty())
        .map(|row| {
            row.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Parse(format!("bad exponent {x:?} in {row:?}")))
                })
                .collect()
        })
        .collect()
}

/// Parses the inline generator grammar `"3,0;1,1;0,3"`.
pub fn parse_generators(text: &str, n: Option<usize>) -> Result<MonomialPresentation> {
    let rows = parse_rows(text)?;
    let n = match (n, rows.first()) {
        (Some(n), _) => n,
        (None, Some(r)) => r.len(),
        (None, None) => return Err(Error::Parse("no generators given".into())),
    };
    MonomialPresentation::new(n, rows.into_iter().map(ExponentVector).collect())
}

fn parse_nil_pairs(text: &str, n: usize) -> Result<Vec<(usize, usize)>> {
    parse_rows(text)?
        .into_iter()
        .map(|row| match row[..] {
            [a, b] if a >= 1 && b >= 1 && (a as usize) <= n && (b as usize) <= n && a != b => {
                Ok((a as usize - 1, b as usize - 1))
            }
            _ => Err(Error::Parse(format!("bad nil pair {row:?}"))),
        })
        .collect()
}

fn env_degree_bound() -> Result<Option<u32>> {
    match std::env::var(DMAX_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("{DMAX_ENV}={v:?} is not a degree"))),
        Err(_) => Ok(None),
    }
}

fn resolve_degree(flag: Option<u32>, doc: Option<u32>, n: usize) -> Result<u32> {
    let d = match flag.or(doc) {
        Some(d) => d,
        None => env_degree_bound()?.unwrap_or_else(|| default_degree_bound(n)),
    };
    if d == 0 {
        return Err(Error::Parse("dmax must be at least 1".into()));
    }
    Ok(d)
}

/// Resolves the input source, nil pairs, truncation and strategy.
pub fn load_job(args: &InputArgs, strategy_flag: Option<&str>) -> Result<Job> {
    let (presentation, doc_nils, doc_dmax, doc_strategy) = match (&args.gens, &args.input) {
        (Some(g), None) => (parse_generators(g, args.n)?, Vec::new(), None, None),
        (None, Some(path)) => {
            let doc: InputDoc = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            let gens = doc.generators.iter().cloned().map(ExponentVector).collect();
            let p = match doc.labels.clone() {
                Some(l) => MonomialPresentation::with_labels(doc.n, gens, l)?,
                None => MonomialPresentation::new(doc.n, gens)?,
            };
            let nils = doc
                .nil_pairs
                .iter()
                .map(|&(a, b)| {
                    if a == 0 || b == 0 || a > doc.n || b > doc.n || a == b {
                        Err(Error::Parse(format!("bad nil pair ({a}, {b})")))
                    } else {
                        Ok((a - 1, b - 1))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            (p, nils, doc.dmax, doc.strategy)
        }
        _ => return Err(Error::Parse("give exactly one of --gens or --input".into())),
    };
    let n = presentation.num_vars();
    if let Some(flag_n) = args.n {
        if flag_n != n {
            return Err(Error::DimensionMismatch {
                expected: flag_n,
                found: n,
            });
        }
    }
    let mut nil_pairs = doc_nils;
    if let Some(text) = &args.nil {
        nil_pairs.extend(parse_nil_pairs(text, n)?);
    }
    let ring =
        LevelRing::with_labels(n, presentation.labels().to_vec()).with_nil_pairs(&nil_pairs)?;
    let strategy = match strategy_flag.map(str::to_string).or(doc_strategy) {
        Some(s) => Strategy::parse(&s)?,
        None => Strategy::default(),
    };
    Ok(Job {
        degree_bound: resolve_degree(args.dmax, doc_dmax, n)?,
        presentation,
        ring,
        nil_pairs,
        strategy,
    })
}

fn series_text(s: &TruncatedSeries, labels: &[String]) -> String {
    s.display_with(labels).to_string()
}

#[derive(Serialize)]
struct ComputeOutput {
    #[serde(flatten)]
    input: InputDoc,
    order: String,
    series: Vec<SeriesTerm>,
}

fn compute(args: &InputArgs) -> Result<String> {
    let job = load_job(args, None)?;
    let preset = OrderPreset::parse(&args.order)?;
    let result = segre_integral_in(&job.ring, &job.presentation, job.degree_bound, preset)?;
    Ok(match args.format {
        Format::Text => format!(
            "{}\n",
            series_text(&result.series, job.presentation.labels())
        ),
        Format::Json => {
            let out = ComputeOutput {
                input: job.doc(),
                order: preset.name(),
                series: result.series.to_term_list(),
            };
            serde_json::to_string_pretty(&out)? + "\n"
        }
    })
}

#[derive(Serialize)]
struct TowerOutput<'a> {
    #[serde(flatten)]
    input: InputDoc,
    strategy: &'static str,
    series: Vec<SeriesTerm>,
    trace: &'a TowerTrace,
}

fn trace_text(trace: &TowerTrace) -> String {
    let mut out = String::new();
    for (k, level) in trace.levels.iter().enumerate() {
        let labels = level.ring.labels();
        let gens: Vec<String> = level
            .presentation
            .generators()
            .iter()
            .map(ExponentVector::to_string)
            .collect();
        let _ = write!(
            out,
            "level {k}: [{}] generators {}",
            labels.join(", "),
            gens.join(" ")
        );
        if let Some(step) = trace.steps.get(k) {
            let (i, j) = step.center;
            let _ = write!(out, "; blow up {} ∩ {}", labels[i], labels[j]);
        }
        out.push('\n');
    }
    if let Some(d) = &trace.terminal_divisor {
        let _ = writeln!(out, "terminal divisor {d} after {} blow-ups", trace.depth());
    }
    out
}

fn tower(args: &TowerArgs) -> Result<String> {
    let job = load_job(&args.input, args.strategy.as_deref())?;
    let result = segre_tower_in(
        &job.ring,
        &job.presentation,
        job.degree_bound,
        job.strategy,
        args.cap,
    )?;
    let trace = result
        .trace
        .as_ref()
        .expect("tower result carries its trace");
    Ok(match args.input.format {
        Format::Text => format!(
            "{}{}\n",
            trace_text(trace),
            series_text(&result.series, job.presentation.labels())
        ),
        Format::Json => {
            let out = TowerOutput {
                input: job.doc(),
                strategy: job.strategy.name(),
                series: result.series.to_term_list(),
                trace,
            };
            serde_json::to_string_pretty(&out)? + "\n"
        }
    })
}

fn status_word(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "PASS",
        CheckStatus::Fail => "FAIL",
        CheckStatus::Skipped => "SKIP",
    }
}

fn report_text(report: &VerifyReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let _ = writeln!(out, "{} {}: {}", status_word(c.status), c.name, c.detail);
    }
    out
}

fn verify_exit(report: &VerifyReport) -> i32 {
    if !report.passed() {
        EXIT_FAILURE
    } else if report.diverged {
        EXIT_DIVERGED
    } else {
        EXIT_OK
    }
}

fn verify_job(job: &Job, cap: usize) -> Result<VerifyReport> {
    let mut config = VerifyConfig::for_vars(job.presentation.num_vars());
    config.degree_bound = job.degree_bound;
    config.strategy = job.strategy;
    config.cap = cap;
    config.nil_pairs = job.nil_pairs.clone();
    verify(&job.presentation, &config)
}

fn verify_cmd(args: &TowerArgs, err: &mut dyn Write) -> Result<(String, i32)> {
    let job = load_job(&args.input, args.strategy.as_deref())?;
    let report = verify_job(&job, args.cap)?;
    for c in &report.checks {
        let _ = writeln!(err, "{:>10.2} ms  {}", c.millis, c.name);
    }
    let text = match args.input.format {
        Format::Text => report_text(&report),
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    Ok((text, verify_exit(&report)))
}

#[derive(Serialize)]
struct CellRow {
    cell: String,
    hvol: u64,
    support: Vec<usize>,
    contribution: Vec<SeriesTerm>,
}

fn cell_name(t: &HalfSimplex) -> String {
    t.labels()
        .map_or_else(|| format!("{:?}", t.key()), |l| l.join(" "))
}

fn cell_rows(terms: &[SimplexTerm]) -> Vec<CellRow> {
    terms
        .iter()
        .map(|t| CellRow {
            cell: cell_name(&t.simplex),
            hvol: t.hvol,
            support: t.support.iter().map(|k| k + 1).collect(),
            contribution: t.contribution.to_term_list(),
        })
        .collect()
}

fn triangulate(args: &InputArgs) -> Result<String> {
    let job = load_job(args, None)?;
    let preset = OrderPreset::parse(&args.order)?;
    let result = segre_integral_in(&job.ring, &job.presentation, job.degree_bound, preset)?;
    let labels = job.presentation.labels();
    Ok(match args.format {
        Format::Json => {
            let doc = serde_json::json!({
                "order": preset.name(),
                "complement": cell_rows(&result.complement),
                "region": cell_rows(&result.per_simplex),
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Text => {
            let mut out = String::new();
            for (title, terms) in [
                ("complement", &result.complement),
                ("region", &result.per_simplex),
            ] {
                let _ = writeln!(out, "{title} ({} cells)", terms.len());
                for t in terms {
                    let support: Vec<&str> =
                        t.support.iter().map(|&k| labels[k].as_str()).collect();
                    let _ = writeln!(
                        out,
                        "  {}  hvol {}  support {{{}}}  {}",
                        cell_name(&t.simplex),
                        t.hvol,
                        support.join(","),
                        series_text(&t.contribution, labels)
                    );
                }
            }
            out
        }
    })
}

/// Convex hull of a small planar point set, counter-clockwise.
fn hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn cell_polygon(t: &HalfSimplex, reach: f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for v in &t.finite_vertices {
        let base = (f64::from(v.0[0]), f64::from(v.0[1]));
        pts.push(base);
        for &j in &t.infinite_directions {
            let mut far = base;
            if j == 0 {
                far.0 += reach;
            } else {
                far.1 += reach;
            }
            pts.push(far);
        }
    }
    hull(pts)
}

/// SVG of the Newton region for `n = 2`: the convex complement `N'` shaded
/// with its triangulation, the region cells dashed, the staircase of the
/// ideal and the generators, clipped to a box one unit past the largest
/// exponent. One lattice unit is 40 pixels.
pub fn render_svg(p: &MonomialPresentation, preset: OrderPreset) -> Result<String> {
    if p.num_vars() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: p.num_vars(),
        });
    }
    let region = region_triangulation(p, preset)?;
    let extent = p
        .generators()
        .iter()
        .flat_map(|g| g.0.iter().copied())
        .max()
        .unwrap_or(0)
        + 1;
    let size = f64::from(extent);
    let unit = 40.0;
    let margin = 30.0;
    let px = |x: f64| margin + x * unit;
    let py = |y: f64| margin + (size - y) * unit;
    let poly = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let width = 2.0 * margin + size * unit;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{width:.0}" viewBox="0 0 {width:.0} {width:.0}">"#
    );
    let _ = writeln!(
        svg,
        r#"<defs><clipPath id="box"><rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}"/></clipPath></defs>"#,
        px(0.0),
        py(size),
        size * unit,
        size * unit
    );
    let _ = writeln!(svg, r#"<g clip-path="url(#box)">"#);
    for cell in &region.complement.cells {
        let _ = writeln!(
            svg,
            r##"<polygon points="{}" fill="#c8d6e8" stroke="#2b4c7e" stroke-width="1.5"><title>{}</title></polygon>"##,
            poly(&cell_polygon(cell, 2.0 * size)),
            cell_name(cell)
        );
    }
    for cell in &region.region_cells {
        let _ = writeln!(
            svg,
            r##"<polygon points="{}" fill="none" stroke="#999999" stroke-dasharray="4 3"><title>{}</title></polygon>"##,
            poly(&cell_polygon(cell, 2.0 * size)),
            cell_name(cell)
        );
    }
    let minimal = crate::lattice::minimalize(p);
    let mut stairs: Vec<&ExponentVector> = minimal.generators().iter().collect();
    stairs.sort_by_key(|g| (g.0[0], std::cmp::Reverse(g.0[1])));
    let mut path = Vec::new();
    if let Some(first) = stairs.first() {
        path.push((f64::from(first.0[0]), 2.0 * size));
    }
    for (k, g) in stairs.iter().enumerate() {
        let (x, y) = (f64::from(g.0[0]), f64::from(g.0[1]));
        path.push((x, y));
        let next_x = stairs.get(k + 1).map_or(2.0 * size, |h| f64::from(h.0[0]));
        path.push((next_x, y));
    }
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#b03a2e" stroke-width="2"/>"##,
        poly(&path)
    );
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="black"/>"##,
        poly(&[(0.0, size), (0.0, 0.0), (size, 0.0)])
    );
    for (k, g) in p.generators().iter().enumerate() {
        let (x, y) = (f64::from(g.0[0]), f64::from(g.0[1]));
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.1}" cy="{:.1}" r="3.5"/><text x="{:.1}" y="{:.1}" font-size="12" font-family="sans-serif">v{k} {g}</text>"#,
            px(x),
            py(y),
            px(x) + 5.0,
            py(y) - 5.0
        );
    }
    let labels = p.labels();
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" font-family="sans-serif">{}</text><text x="{:.1}" y="{:.1}" font-size="12" font-family="sans-serif">{}</text>"#,
        px(size) - 10.0,
        py(0.0) + 18.0,
        labels[0],
        px(0.0) - 22.0,
        py(size) + 4.0,
        labels[1]
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn render(args: &InputArgs) -> Result<String> {
    let job = load_job(args, None)?;
    render_svg(&job.presentation, OrderPreset::parse(&args.order)?)
}

/// `count` random presentations: `n` in {2, 3}, one to four distinct
/// generators, exponents at most 4.
pub fn generate_corpus(seed: u64, count: usize) -> Vec<MonomialPresentation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.gen_range(2..=3);
        let k = rng.gen_range(1..=4);
        let mut rows: BTreeSet<Vec<u32>> = BTreeSet::new();
        while rows.len() < k {
            rows.insert((0..n).map(|_| rng.gen_range(0..=4)).collect());
        }
        let gens: Vec<ExponentVector> = rows.into_iter().map(ExponentVector).collect();
        out.push(MonomialPresentation::new(n, gens).expect("corpus rows are well formed"));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry {
    pub index: usize,
    pub input: InputDoc,
    pub passed: bool,
    pub diverged: bool,
    pub tower_depth: Option<usize>,
    pub failures: Vec<String>,
    /// Smallest failing presentation found by shrinking, when this entry failed.
    pub counterexample: Option<InputDoc>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusSummary {
    pub seed: u64,
    pub count: usize,
    pub passed: usize,
    pub failed: usize,
    pub diverged: usize,
    pub max_tower_depth: usize,
    pub entries: Vec<CorpusEntry>,
}

fn doc_of(p: &MonomialPresentation, degree_bound: u32) -> InputDoc {
    InputDoc {
        n: p.num_vars(),
        generators: p.generators().iter().map(|g| g.0.clone()).collect(),
        dmax: Some(degree_bound),
        ..InputDoc::default()
    }
}

fn fails(p: &MonomialPresentation, config: &VerifyConfig) -> bool {
    verify(p, config).map_or(true, |r| !r.passed())
}

/// Greedy shrinking: drop generators, then lower exponents, while the
/// presentation keeps failing.
pub fn shrink(p: &MonomialPresentation, config: &VerifyConfig) -> MonomialPresentation {
    let mut best = p.clone();
    loop {
        let gens = best.generators().to_vec();
        let mut candidates = Vec::new();
        if gens.len() > 1 {
            for k in 0..gens.len() {
                let mut g = gens.clone();
                g.remove(k);
                candidates.push(g);
            }
        }
        for k in 0..gens.len() {
            for c in 0..best.num_vars() {
                if gens[k].0[c] > 0 {
                    let mut g = gens.clone();
                    g[k].0[c] -= 1;
                    candidates.push(g);
                }
            }
        }
        let next = candidates.into_iter().find_map(|g| {
            MonomialPresentation::new(best.num_vars(), g)
                .ok()
                .filter(|q| fails(q, config))
        });
        match next {
            Some(q) => best = q,
            None => return best,
        }
    }
}

pub fn run_corpus(
    seed: u64,
    count: usize,
    degree_bound: Option<u32>,
    strategy: Strategy,
    cap: usize,
) -> CorpusSummary {
    let corpus = generate_corpus(seed, count);
    let entries: Vec<CorpusEntry> = corpus
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let n = p.num_vars();
            let mut config = VerifyConfig::for_vars(n);
            if let Some(d) = degree_bound {
                config.degree_bound = d;
            }
            config.strategy = strategy;
            config.cap = cap;
            let input = doc_of(p, config.degree_bound);
            match verify(p, &config) {
                Ok(report) => {
                    let passed = report.passed();
                    CorpusEntry {
                        index,
                        input,
                        passed,
                        diverged: report.diverged,
                        tower_depth: report.tower_depth,
                        failures: report
                            .failures()
                            .map(|c| format!("{}: {}", c.name, c.detail))
                            .collect(),
                        counterexample: (!passed)
                            .then(|| doc_of(&shrink(p, &config), config.degree_bound)),
                    }
                }
                Err(e) => CorpusEntry {
                    index,
                    input,
                    passed: false,
                    diverged: false,
                    tower_depth: None,
                    failures: vec![e.to_string()],
                    counterexample: None,
                },
            }
        })
        .collect();
    CorpusSummary {
        seed,
        count,
        passed: entries.iter().filter(|e| e.passed).count(),
        failed: entries.iter().filter(|e| !e.passed).count(),
        diverged: entries.iter().filter(|e| e.diverged).count(),
        max_tower_depth: entries
            .iter()
            .filter_map(|e| e.tower_depth)
            .max()
            .unwrap_or(0),
        entries,
    }
}

fn corpus_cmd(args: &CorpusArgs) -> Result<(String, i32)> {
    let strategy = Strategy::parse(&args.strategy)?;
    let degree_bound = match args.dmax {
        Some(d) => Some(d),
        None => env_degree_bound()?,
    };
    let start = Instant::now();
    let summary = run_corpus(args.seed, args.count, degree_bound, strategy, args.cap);
    let code = if summary.failed > 0 {
        EXIT_FAILURE
    } else if summary.diverged > 0 {
        EXIT_DIVERGED
    } else {
        EXIT_OK
    };
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&summary)? + "\n",
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "seed {} count {}: {} passed, {} failed, {} diverged, deepest tower {} ({:.1} s)",
                summary.seed,
                summary.count,
                summary.passed,
                summary.failed,
                summary.diverged,
                summary.max_tower_depth,
                start.elapsed().as_secs_f64()
            );
            for e in summary.entries.iter().filter(|e| !e.passed || e.diverged) {
                let _ = writeln!(
                    out,
                    "#{} {}: {}",
                    e.index,
                    serde_json::to_string(&e.input)?,
                    if e.diverged {
                        "tower diverged".to_string()
                    } else {
                        e.failures.join("; ")
                    }
                );
                if let Some(c) = &e.counterexample {
                    let _ = writeln!(out, "  shrunk to {}", serde_json::to_string(c)?);
                }
            }
            out
        }
    };
    Ok((text, code))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::TowerDivergence(_) => EXIT_DIVERGED,
        Error::Io(_) | Error::NoAdmissibleCenter(_) | Error::Classification(_) => EXIT_FAILURE,
        _ => EXIT_USAGE,
    }
}

fn emit(out_path: Option<&PathBuf>, text: &str, out: &mut dyn Write) -> Result<()> {
    match out_path {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Compute(a) => compute(a).map(|t| (t, EXIT_OK, a.out.clone())),
        Command::Tower(a) => tower(a).map(|t| (t, EXIT_OK, a.input.out.clone())),
        Command::Verify(a) => verify_cmd(a, err).map(|(t, c)| (t, c, a.input.out.clone())),
        Command::Triangulate(a) => triangulate(a).map(|t| (t, EXIT_OK, a.out.clone())),
        Command::Render(a) => render(a).map(|t| (t, EXIT_OK, a.out.clone())),
        Command::Corpus(a) => corpus_cmd(a).map(|(t, c)| (t, c, a.out.clone())),
    };
    match outcome {
        Ok((text, code, path)) => match emit(path.as_ref(), &text, out) {
            Ok(()) => code,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_FAILURE
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
