//! Principalization towers of codimension-2 monomial blow-ups.
//!
//! The driver blows up intersections of two divisors until the total
//! transform of the scheme is a divisor. Common factors are carried along;
//! divisor detection looks at the residual without modifying the presentation.

use std::fmt;

use serde::Serialize;

use crate::chow::{blow_up, pullback_generators, scheme_is_divisor, BlowupStep, LevelRing};
use crate::error::{Error, Result};
use crate::lattice::{ExponentVector, MonomialPresentation};

pub const DEFAULT_CAP: usize = 200;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Strategy {
    /// First admissible pair in lexicographic order of variable indices.
    LexFirst,
    /// Admissible pair maximizing `Σ min(|u_i - v_i|, |u_j - v_j|)` over
    /// generator pairs, lexicographically first on ties.
    MaxDrop,
    /// Resolves generator pairs one at a time in lexicographic order, always
    /// blowing up the heaviest crossing of the current pair.
    #[default]
    HeaviestCrossing,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Self::LexFirst, Self::MaxDrop, Self::HeaviestCrossing];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "lex-first" => Ok(Self::LexFirst),
            "max-drop" => Ok(Self::MaxDrop),
            "heaviest-crossing" => Ok(Self::HeaviestCrossing),
            other => Err(Error::Parse(format!("unknown strategy {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LexFirst => "lex-first",
            Self::MaxDrop => "max-drop",
            Self::HeaviestCrossing => "heaviest-crossing",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A coordinate pair crossed by the difference of two generators: the
/// difference is positive on one coordinate and negative on the other, so the
/// pair of generators is not principal where both coordinates vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crossing {
    pub generators: (usize, usize),
    pub center: (usize, usize),
    /// `|f_i| + |f_j|` for the generator difference `f`.
    pub weight: u64,
}

fn crossings(r: &LevelRing, p: &MonomialPresentation) -> Vec<Crossing> {
    let g = p.generators();
    let m = p.num_vars();
    let mut out = Vec::new();
    for a in 0..g.len() {
        for b in a + 1..g.len() {
            let f: Vec<i64> = (0..m)
                .map(|k| i64::from(g[a].0[k]) - i64::from(g[b].0[k]))
                .collect();
            for i in 0..m {
                for j in i + 1..m {
                    if f[i] * f[j] < 0 && !r.is_nil(i, j) {
                        out.push(Crossing {
                            generators: (a, b),
                            center: (i, j),
                            weight: f[i].unsigned_abs() + f[j].unsigned_abs(),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Heaviest crossing, first in lexicographic order on ties.
fn heaviest<'a>(it: impl Iterator<Item = &'a Crossing>) -> Option<&'a Crossing> {
    it.fold(None, |best: Option<&Crossing>, c| match best {
        Some(b) if b.weight >= c.weight => Some(b),
        _ => Some(c),
    })
}

pub fn is_admissible(r: &LevelRing, p: &MonomialPresentation, i: usize, j: usize) -> bool {
    let pair = if i < j { (i, j) } else { (j, i) };
    crossings(r, p).iter().any(|c| c.center == pair)
}

fn drop_score(p: &MonomialPresentation, i: usize, j: usize) -> u64 {
    let g = p.generators();
    let mut score = 0;
    for (k, u) in g.iter().enumerate() {
        for v in &g[k + 1..] {
            score += u64::from(u.0[i].abs_diff(v.0[i]).min(u.0[j].abs_diff(v.0[j])));
        }
    }
    score
}

/// Picks the next center, or `None` when no pair is admissible.
///
/// For `HeaviestCrossing`, blowing up the heaviest crossing of one generator
/// pair strictly shrinks the multiset of that pair's crossing weights (each
/// new crossing is lighter than the one removed), and a resolved pair stays
/// resolved. Towers under that strategy therefore always terminate; the
/// other two carry no such guarantee.
pub fn select_center(
    r: &LevelRing,
    p: &MonomialPresentation,
    strategy: Strategy,
) -> Option<(usize, usize)> {
    let all = crossings(r, p);
    match strategy {
        Strategy::LexFirst => all.iter().map(|c| c.center).min(),
        Strategy::MaxDrop => {
            let mut centers: Vec<(usize, usize)> = all.iter().map(|c| c.center).collect();
            centers.sort_unstable();
            centers.dedup();
            let mut best: Option<((usize, usize), u64)> = None;
            for (i, j) in centers {
                let score = drop_score(p, i, j);
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some(((i, j), score));
                }
            }
            best.map(|(pair, _)| pair)
        }
        Strategy::HeaviestCrossing => {
            let first = all.first()?.generators;
            heaviest(all.iter().filter(|c| c.generators == first)).map(|c| c.center)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerLevel {
    pub ring: LevelRing,
    pub presentation: MonomialPresentation,
}

/// Full record of a principalization run.
#[derive(Clone, Debug, Serialize)]
pub struct TowerTrace {
    pub levels: Vec<TowerLevel>,
    pub steps: Vec<BlowupStep>,
    /// Divisor of the top level; absent only in a trace attached to a
    /// divergence error.
    pub terminal_divisor: Option<ExponentVector>,
    pub strategy_name: String,
    pub iterations_used: usize,
}

impl TowerTrace {
    pub fn top(&self) -> &TowerLevel {
        self.levels.last().expect("trace has a base level")
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }
}

pub fn principalize(
    r0: &LevelRing,
    p0: &MonomialPresentation,
    strategy: Strategy,
    cap: usize,
) -> Result<TowerTrace> {
    if p0.num_vars() != r0.num_vars() {
        return Err(Error::VariableCountMismatch(p0.num_vars(), r0.num_vars()));
    }
    let mut trace = TowerTrace {
        levels: vec![TowerLevel {
            ring: r0.clone(),
            presentation: p0.clone(),
        }],
        steps: Vec::new(),
        terminal_divisor: None,
        strategy_name: strategy.name().to_string(),
        iterations_used: 0,
    };
    loop {
        let top = trace.top();
        if let Some(d) = scheme_is_divisor(&top.ring, &top.presentation) {
            trace.terminal_divisor = Some(d);
            return Ok(trace);
        }
        if trace.iterations_used >= cap {
            return Err(Error::TowerDivergence(Box::new(trace)));
        }
        let Some((i, j)) = select_center(&top.ring, &top.presentation, strategy) else {
            return Err(Error::NoAdmissibleCenter(top.ring.level()));
        };
        let step = blow_up(&top.ring, i, j)?;
        let presentation = pullback_generators(&step, &top.presentation)?;
        trace.levels.push(TowerLevel {
            ring: step.upper.clone(),
            presentation,
        });
        trace.steps.push(step);
        trace.iterations_used += 1;
    }
}
