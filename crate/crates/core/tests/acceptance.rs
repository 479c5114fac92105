//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use segre_core::chow::{blow_up, pushforward, LevelRing};
use segre_core::cli::{self, generate_corpus};
use segre_core::lattice::{support_cover_check, ExponentVector, MonomialPresentation};
use segre_core::polytope::{hvol, HalfSimplex, OrderPreset};
use segre_core::principalize::{Strategy, DEFAULT_CAP};
use segre_core::segre::{
    blowup_replay, default_degree_bound, residual_identity_check, segre_integral,
    segre_integral_in, segre_tower_in, simplex_contribution, verify, CheckStatus, VerifyConfig,
    VerifyReport,
};
use segre_core::series::{rat, reciprocal_one_plus, LinearForm, TruncatedSeries};

const CORPUS_SEED: u64 = 20_240_517;
const CORPUS_SIZE: usize = 100;

type Outcome = std::result::Result<String, String>;

fn pres(n: usize, rows: &[&[u32]]) -> MonomialPresentation {
    MonomialPresentation::from_rows(n, rows).unwrap()
}

fn ev(v: &[u32]) -> ExponentVector {
    ExponentVector(v.to_vec())
}

fn inv(v: &[u32], d: u32) -> TruncatedSeries {
    reciprocal_one_plus(&LinearForm::one_plus(&ev(v)), d).unwrap()
}

fn var(n: usize, d: u32, i: usize) -> TruncatedSeries {
    TruncatedSeries::var(n, d, i)
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn golden() -> MonomialPresentation {
    pres(2, &[&[3, 0], &[1, 1], &[0, 3]])
}

/// The three base fractions of the (x^3, xy, y^3) complement.
fn golden_fractions(d: u32) -> [TruncatedSeries; 3] {
    let x1 = var(2, d, 0);
    let x2 = var(2, d, 1);
    [
        &(&x2.scale(&rat(3)) * &inv(&[3, 0], d)) * &inv(&[0, 3], d),
        inv(&[0, 3], d),
        &(&(&(&x1 * &x2).scale(&rat(3)) * &inv(&[3, 0], d)) * &inv(&[1, 1], d)) * &inv(&[0, 3], d),
    ]
}

fn golden_compute() -> Outcome {
    let d = 6;
    let [a, b, c] = golden_fractions(d);
    let expected = &TruncatedSeries::one(2, d) - &(&(&a + &b) + &c);
    let start = Instant::now();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(
        [
            "segre",
            "compute",
            "--gens",
            "3,0;1,1;0,3",
            "--n",
            "2",
            "--dmax",
            "6",
            "--format",
            "json",
        ],
        &mut out,
        &mut err,
    );
    let elapsed = start.elapsed();
    ensure(code == 0, || {
        format!("exit code {code}: {}", String::from_utf8_lossy(&err))
    })?;
    let doc: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let terms: Vec<segre_core::series::SeriesTerm> =
        serde_json::from_value(doc["series"].clone()).map_err(|e| e.to_string())?;
    let got = TruncatedSeries::from_term_list(2, d, &terms).map_err(|e| e.to_string())?;
    if let Some((m, l, r)) = got.first_difference(&expected) {
        return Err(format!("differs at {:?}: {l} vs {r}", m.exps()));
    }
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} terms, {:.1} ms",
        expected.len(),
        elapsed.as_secs_f64() * 1e3
    ))
}

fn column_simplex() -> Outcome {
    let t = HalfSimplex::new(
        vec![ev(&[0, 0, 1]), ev(&[1, 0, 2]), ev(&[0, 2, 3])],
        BTreeSet::from([2]),
    );
    let v = hvol(&t).map_err(|e| e.to_string())?;
    ensure(v == 2, || format!("hvol {v}"))?;
    let d = 4;
    let expected = &(&(&var(3, d, 0) * &var(3, d, 1)).scale(&rat(2))
        * &(&inv(&[0, 0, 1], d) * &inv(&[1, 0, 2], d)))
        * &inv(&[0, 2, 3], d);
    let got = simplex_contribution(&t, d).map_err(|e| e.to_string())?;
    ensure(got == expected, || "contribution differs".into())?;
    Ok(format!("hvol 2, {} terms", got.len()))
}

fn label_set(labels: &[&str]) -> BTreeSet<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

fn replay() -> Outcome {
    let d = 6;
    let r = blowup_replay(&golden(), 0, 1, d).map_err(|e| e.to_string())?;
    let classes = |name: &str| -> BTreeSet<BTreeSet<String>> {
        r.in_class(name)
            .map(|c| {
                c.cell
                    .labels()
                    .unwrap_or_default()
                    .iter()
                    .cloned()
                    .collect()
            })
            .collect()
    };
    let expect = |cells: &[&[&str]]| -> BTreeSet<BTreeSet<String>> {
        cells.iter().map(|c| label_set(c)).collect()
    };
    for (name, cells) in [
        ("U0", expect(&[&["^v0", "^v1", "^v2", "a0"]])),
        ("U1", expect(&[&["^v0", "^v1", "^v2", "a1"]])),
        (
            "U'",
            expect(&[&["^v0", "^v2", "a1", "a0"], &["^v2", "a1", "a2", "a0"]]),
        ),
        ("U''", expect(&[&["^v1", "^v2", "a1", "a2"]])),
    ] {
        let got = classes(name);
        ensure(got == cells, || format!("{name} is {got:?}"))?;
    }
    ensure(r.cells.len() == 5, || {
        format!("{} lifted cells", r.cells.len())
    })?;

    let alpha_expected = [
        (
            label_set(&["^v0", "^v2", "a1", "a0"]),
            label_set(&["v0", "v2", "a1"]),
        ),
        (
            label_set(&["^v2", "a1", "a2", "a0"]),
            label_set(&["v2", "a1", "a2"]),
        ),
        (
            label_set(&["^v0", "^v1", "^v2", "a1"]),
            label_set(&["v0", "v1", "v2"]),
        ),
    ];
    let [fa, fb, fc] = golden_fractions(d);
    let fraction_of = |image: &BTreeSet<String>| {
        if *image == label_set(&["v0", "v2", "a1"]) {
            fa.clone()
        } else if *image == label_set(&["v2", "a1", "a2"]) {
            fb.clone()
        } else {
            fc.clone()
        }
    };
    for (lifted, image) in &alpha_expected {
        let cell = r
            .cells
            .iter()
            .find(|c| {
                c.cell
                    .labels()
                    .map(|l| l.iter().cloned().collect::<BTreeSet<_>>())
                    .as_ref()
                    == Some(lifted)
            })
            .ok_or_else(|| format!("no lifted cell {lifted:?}"))?;
        let got: BTreeSet<String> = cell
            .image
            .as_ref()
            .and_then(|t| t.simplex.labels())
            .map(|l| l.iter().cloned().collect())
            .unwrap_or_default();
        ensure(&got == image, || format!("alpha({lifted:?}) = {got:?}"))?;
        ensure(cell.pushed == fraction_of(image), || {
            format!("{lifted:?} does not push to its base fraction")
        })?;
    }
    for cell in r.in_class("U0").chain(r.in_class("U''")) {
        ensure(cell.pushed.is_zero(), || {
            format!("{:?} pushes to a nonzero class", cell.cell.labels())
        })?;
    }
    Ok("U0, U1, U', U'' and alpha as listed; pushes term-exact at degree 6".into())
}

fn named_examples() -> Vec<(&'static str, MonomialPresentation)> {
    vec![
        ("(x^3,xy,y^3)", golden()),
        ("(x,y)", pres(2, &[&[1, 0], &[0, 1]])),
        ("(xy)", pres(2, &[&[1, 1]])),
        ("(x,y,z)", pres(3, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])),
        (
            "(x^2y,y^3z,xz^2)",
            pres(3, &[&[2, 1, 0], &[0, 3, 1], &[1, 0, 2]]),
        ),
        (
            "(x^4,y^4,z^4,xyz)",
            pres(3, &[&[4, 0, 0], &[0, 4, 0], &[0, 0, 4], &[1, 1, 1]]),
        ),
        ("(xz,yz)", pres(3, &[&[1, 0, 1], &[0, 1, 1]])),
    ]
}

struct Sweep {
    reports: Vec<(String, VerifyReport)>,
    elapsed: Duration,
}

fn sweep() -> Sweep {
    let start = Instant::now();
    let mut inputs: Vec<(String, MonomialPresentation)> = named_examples()
        .into_iter()
        .map(|(name, p)| (name.to_string(), p))
        .collect();
    inputs.extend(
        generate_corpus(CORPUS_SEED, CORPUS_SIZE)
            .into_iter()
            .enumerate()
            .map(|(k, p)| (format!("corpus #{k}"), p)),
    );
    let reports = inputs
        .par_iter()
        .map(|(name, p)| {
            let report = verify(p, &VerifyConfig::for_vars(p.num_vars()))
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            (name.clone(), report)
        })
        .collect();
    Sweep {
        reports,
        elapsed: start.elapsed(),
    }
}

fn check_named(sweep: &Sweep, check: &str) -> Vec<String> {
    sweep
        .reports
        .iter()
        .flat_map(|(name, r)| {
            r.checks
                .iter()
                .filter(|c| c.name.starts_with(check) && c.status == CheckStatus::Fail)
                .map(move |c| format!("{name} {}: {}", c.name, c.detail))
        })
        .collect()
}

fn dual_pipeline(sweep: &Sweep) -> Outcome {
    let failures = check_named(sweep, "pipeline-equality");
    let diverged: Vec<&str> = sweep
        .reports
        .iter()
        .filter(|(_, r)| r.diverged)
        .map(|(n, _)| n.as_str())
        .collect();
    let deepest = sweep
        .reports
        .iter()
        .filter_map(|(_, r)| r.tower_depth)
        .max()
        .unwrap_or(0);
    ensure(failures.is_empty(), || failures.join("; "))?;
    ensure(sweep.elapsed < Duration::from_secs(120), || {
        format!("took {:.1} s", sweep.elapsed.as_secs_f64())
    })?;
    Ok(format!(
        "{} instances equal, {} diverged {:?}, deepest tower {deepest}, {:.1} s",
        sweep.reports.len() - diverged.len(),
        diverged.len(),
        diverged,
        sweep.elapsed.as_secs_f64()
    ))
}

fn residual_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 1);
    let bases = generate_corpus(CORPUS_SEED + 2, 24);
    let mut passed = 0;
    for base in &bases {
        let n = base.num_vars();
        let factor: Vec<u32> = loop {
            let f: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
            if f.iter().any(|&x| x > 0) {
                break f;
            }
        };
        let gens = base
            .generators()
            .iter()
            .map(|g| g.add(&ExponentVector(factor.clone())))
            .collect();
        let p = MonomialPresentation::new(n, gens).map_err(|e| e.to_string())?;
        let r = residual_identity_check(&p, default_degree_bound(n), OrderPreset::Default)
            .map_err(|e| e.to_string())?;
        ensure(r.status == CheckStatus::Pass, || {
            format!("{p:?}: {:?}", r.difference)
        })?;
        passed += 1;
    }
    ensure(passed >= 20, || format!("only {passed} instances"))?;
    Ok(format!("{passed} instances with a common factor"))
}

fn normalization(sweep: &Sweep) -> Outcome {
    for n in [2, 3] {
        let orthant = HalfSimplex::new(vec![ExponentVector::zeros(n)], (0..n).collect());
        let d = default_degree_bound(n);
        let c = simplex_contribution(&orthant, d).map_err(|e| e.to_string())?;
        ensure(c == TruncatedSeries::one(n, d), || {
            format!("orthant in dimension {n} is {c:?}")
        })?;
    }
    let mut failures = check_named(sweep, "orthant-normalization");
    failures.extend(check_named(sweep, "order-independence"));
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!(
        "{} instances, presets default, rays-first, reverse",
        sweep.reports.len()
    ))
}

fn integrality(sweep: &Sweep) -> Outcome {
    let failures = check_named(sweep, "integrality");
    ensure(failures.is_empty(), || failures.join("; "))?;
    for (name, p) in named_examples() {
        let s = segre_integral(&p, default_degree_bound(p.num_vars()), OrderPreset::Default)
            .map_err(|e| e.to_string())?;
        ensure(s.series.is_integral(), || {
            format!("{name} has a fractional coefficient")
        })?;
    }
    Ok(format!("{} instances", sweep.reports.len()))
}

fn pushforward_units() -> Outcome {
    let d = 6;
    let step3 = blow_up(&LevelRing::base(3), 0, 1).map_err(|e| e.to_string())?;
    // Upper ring order: E, ~X1, ~X2, ~X3.
    let push3 = |exps: [u32; 4]| -> std::result::Result<TruncatedSeries, String> {
        let c = step3
            .upper
            .class(TruncatedSeries::monomial(4, d, exps.to_vec(), rat(1)))
            .map_err(|e| e.to_string())?;
        Ok(pushforward(&step3, &c).map_err(|e| e.to_string())?.series)
    };
    let mono3 = |exps: [u32; 3]| TruncatedSeries::monomial(3, d, exps.to_vec(), rat(1));
    for (what, exps, expected) in [
        ("E*~X2", [1, 0, 1, 0], mono3([1, 1, 0])),
        ("~X1*~X2", [0, 1, 1, 0], TruncatedSeries::zero(3, d)),
        ("E*~X3", [1, 0, 0, 1], TruncatedSeries::zero(3, d)),
        ("~X1*~X3", [0, 1, 0, 1], mono3([1, 0, 1])),
    ] {
        let got = push3(exps)?;
        ensure(got == expected, || format!("push of {what} is {got:?}"))?;
    }
    let step2 = blow_up(&LevelRing::base(2), 0, 1).map_err(|e| e.to_string())?;
    let e = TruncatedSeries::var(3, d, 0);
    let e_over = &e * &inv(&[1, 0, 0], d);
    let c = step2.upper.class(e_over).map_err(|e| e.to_string())?;
    let got = pushforward(&step2, &c).map_err(|e| e.to_string())?.series;
    let expected = &(&var(2, d, 0) * &var(2, d, 1)) * &(&inv(&[1, 0], d) * &inv(&[0, 1], d));
    ensure(got == expected, || "push of E/(1+E) differs".into())?;
    Ok("four monomial pushes and E/(1+E) at degree 6".into())
}

fn support(sweep: &Sweep) -> Outcome {
    let failures = check_named(sweep, "support");
    ensure(failures.is_empty(), || failures.join("; "))?;
    let mut cells = 0;
    for (name, p) in named_examples() {
        let s = segre_integral(&p, default_degree_bound(p.num_vars()), OrderPreset::Default)
            .map_err(|e| e.to_string())?;
        for t in &s.per_simplex {
            cells += 1;
            ensure(support_cover_check(&p, &t.support), || {
                format!("{name}: support {:?} does not cover", t.support)
            })?;
        }
    }

    // X1 and X2 disjoint: (x, y) cuts out nothing, and (xz, yz) is X3.
    let d = 6;
    let r2 = LevelRing::base(2)
        .with_nil_pairs(&[(0, 1)])
        .map_err(|e| e.to_string())?;
    let empty = pres(2, &[&[1, 0], &[0, 1]]);
    let i = segre_integral_in(&r2, &empty, d, OrderPreset::Default).map_err(|e| e.to_string())?;
    let t = segre_tower_in(&r2, &empty, d, Strategy::default(), DEFAULT_CAP)
        .map_err(|e| e.to_string())?;
    ensure(i.series.is_zero() && t.series.is_zero(), || {
        "empty scheme has a nonzero class".into()
    })?;
    let r3 = LevelRing::base(3)
        .with_nil_pairs(&[(0, 1)])
        .map_err(|e| e.to_string())?;
    let divisor = pres(3, &[&[1, 0, 1], &[0, 1, 1]]);
    let expected = &TruncatedSeries::one(3, d) - &inv(&[0, 0, 1], d);
    let i = segre_integral_in(&r3, &divisor, d, OrderPreset::Default).map_err(|e| e.to_string())?;
    ensure(i.series == expected, || "(xz, yz) is not X3/(1+X3)".into())?;
    Ok(format!(
        "{} corpus instances and {cells} named cells covered; empty class is 0",
        sweep.reports.len()
    ))
}

#[test]
fn acceptance() {
    let sweep = sweep();
    let criteria: Vec<(&str, Outcome)> = vec![
        ("1 golden example", golden_compute()),
        ("2 column simplex", column_simplex()),
        ("3 blow-up replay", replay()),
        ("4 dual-pipeline equality", dual_pipeline(&sweep)),
        ("5 residual identity", residual_identity()),
        (
            "6 orthant normalization and order independence",
            normalization(&sweep),
        ),
        ("7 integer coefficients", integrality(&sweep)),
        ("8 push-forward units", pushforward_units()),
        ("9 support and empty schemes", support(&sweep)),
    ];
    // Written to the raw handle so the lines survive output capture.
    let mut stdout = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (name, outcome) in &criteria {
        match outcome {
            Ok(detail) => writeln!(stdout, "PASS {name}: {detail}").unwrap(),
            Err(detail) => {
                writeln!(stdout, "FAIL {name}: {detail}").unwrap();
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
