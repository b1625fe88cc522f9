//! Partial maps `U ⊂ R -> R` and their composition.
//!
//! The composite `g ∘ f` is defined on `dom(f) ∩ f⁻¹(dom(g))`. The preimage
//! is computed per monotone piece of `f`: critical points are located by
//! sign changes of the symbolic derivative on a scan grid, and every
//! boundary crossing is isolated to the exact double by bisection on the
//! ordered bit patterns. A double `p` therefore lies in the computed domain
//! exactly when `p ∈ dom(f)` and the evaluated `f(p)` lies in `dom(g)`,
//! as long as `f` evaluates monotonically on each piece.
//!
//! Overflow to `±∞` counts as membership in an unbounded end of `dom(g)`,
//! so total maps compose to total maps.

use crate::expr::{Expr, VectorExpr};
use crate::report::CheckReport;

use super::open_set::{Interval, OpenSet1D};
use super::{GermError, Result};

/// Scan grid: uniform points on the core window plus geometric tails.
const CORE_WINDOW: f64 = 1000.0;
const CORE_POINTS: usize = 4096;
const TAIL_RATIO: f64 = 1.05;
const TAIL_LIMIT: f64 = 1e12;
const VALIDATION_POINTS: usize = 33;

pub const GERM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PartialMap {
    domain: OpenSet1D,
    map: Expr,
    codomain: OpenSet1D,
}

impl PartialMap {
    /// Validates that `map` is defined on probe points of `domain` and
    /// sends them into `codomain`.
    pub fn new(domain: OpenSet1D, map: Expr, codomain: OpenSet1D) -> Result<Self> {
        if map.arity() != 1 {
            return Err(GermError::Arity(map.arity()));
        }
        for c in domain.components() {
            for x in probe_points(*c, VALIDATION_POINTS) {
                let y = map
                    .eval(&[x], 0.0)
                    .map_err(|e| GermError::Undefined { x, reason: e.to_string() })?;
                if !codomain.contains(y) {
                    return Err(GermError::ImageOutside { x, value: y });
                }
            }
        }
        Ok(PartialMap { domain, map, codomain })
    }

    /// Parses `map` in the variable `x1`.
    pub fn parse(domain: OpenSet1D, map: &str, codomain: OpenSet1D) -> Result<Self> {
        Self::new(domain, crate::expr::parse(map, 1)?, codomain)
    }

    pub fn identity(domain: OpenSet1D) -> Self {
        let map = Expr::var(1, 1).expect("x1 has arity 1");
        PartialMap { codomain: domain.clone(), domain, map }
    }

    pub fn domain(&self) -> &OpenSet1D {
        &self.domain
    }

    pub fn map(&self) -> &Expr {
        &self.map
    }

    pub fn codomain(&self) -> &OpenSet1D {
        &self.codomain
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(GermError::NotInDomain(x));
        }
        Ok(self.map.eval(&[x], 0.0)?)
    }

    /// `{x ∈ dom(self) : self(x) ∈ target}`.
    pub fn preimage(&self, target: &OpenSet1D) -> Result<OpenSet1D> {
        preimage(&self.map, &self.domain, target)
    }
}

/// `g ∘ f` with domain `dom(f) ∩ f⁻¹(dom(g))` and codomain that of `g`.
pub fn compose_partial(f: &PartialMap, g: &PartialMap) -> Result<PartialMap> {
    let domain = f.preimage(&g.domain)?;
    let inner = VectorExpr::new(vec![f.map.clone()], 1)?;
    let map = g.map.compose(&inner)?;
    Ok(PartialMap { domain, map, codomain: g.codomain.clone() })
}

/// Equivalence class of partial maps that agree near `basepoint`.
#[derive(Debug, Clone, PartialEq)]
pub struct Germ {
    representative: PartialMap,
    basepoint: f64,
}

impl Germ {
    pub fn new(representative: PartialMap, basepoint: f64) -> Result<Self> {
        if !representative.domain.contains(basepoint) {
            return Err(GermError::NotInDomain(basepoint));
        }
        Ok(Germ { representative, basepoint })
    }

    pub fn representative(&self) -> &PartialMap {
        &self.representative
    }

    pub fn basepoint(&self) -> f64 {
        self.basepoint
    }
}

/// Compares two germs on `samples` points of the component of
/// `dom(a) ∩ dom(b)` around the shared basepoint (clipped to a window of
/// half-width 10 around it), plus the basepoint itself.
///
/// Germs at different basepoints never compare equal.
pub fn germ_equal(a: &Germ, b: &Germ, samples: usize) -> Result<CheckReport> {
    if a.basepoint != b.basepoint {
        return Ok(CheckReport::exact(
            0,
            1,
            Some(format!("no common basepoint: {} vs {}", a.basepoint, b.basepoint)),
        ));
    }
    let x0 = a.basepoint;
    let common = a.representative.domain.intersect(&b.representative.domain);
    let component = common.component_containing(x0).ok_or(GermError::EmptyComponent(x0))?;
    let window = Interval::new(component.lo.max(x0 - 10.0), component.hi.min(x0 + 10.0));
    let mut points = probe_points(window, samples);
    points.push(x0);

    let mut worst = 0.0f64;
    let mut witness = None;
    for &x in &points {
        let (fa, fb) = (a.representative.map.eval(&[x], 0.0)?, b.representative.map.eval(&[x], 0.0)?);
        let r = (fa - fb).abs();
        if r > worst || r.is_nan() {
            worst = r;
            witness = Some(format!("x = {x}: {fa} vs {fb}"));
        }
    }
    Ok(CheckReport::numeric(worst, GERM_TOLERANCE, points.len(), witness))
}

/// Deterministic points strictly inside `c`: uniform on bounded intervals,
/// geometric offsets from the finite end (or from 0) otherwise.
pub(crate) fn probe_points(c: Interval, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let offsets = |k: usize| 1e-3 * 1e5f64.powf(k as f64 / n.saturating_sub(1).max(1) as f64);
    let pts: Vec<f64> = match (c.lo.is_finite(), c.hi.is_finite()) {
        (true, true) => (0..n).map(|k| c.lo + (c.hi - c.lo) * (k as f64 + 0.5) / n as f64).collect(),
        (true, false) => (0..n).map(|k| c.lo + offsets(k)).collect(),
        (false, true) => (0..n).map(|k| c.hi - offsets(k)).collect(),
        (false, false) => (0..n)
            .map(|k| if k % 2 == 0 { offsets(k) } else { -offsets(k) })
            .collect(),
    };
    pts.into_iter().filter(|x| c.contains(*x)).collect()
}

fn key(x: f64) -> i128 {
    let bits = x.to_bits();
    let magnitude = (bits & !(1u64 << 63)) as i128;
    if x.is_sign_negative() {
        -magnitude
    } else {
        magnitude
    }
}

fn unkey(k: i128) -> f64 {
    let v = f64::from_bits(k.unsigned_abs() as u64);
    if k < 0 {
        -v
    } else {
        v
    }
}

/// Largest double in `[lo, hi]` where `pred` holds, for a predicate that is
/// true on a prefix of the range.
fn last_true(lo: f64, hi: f64, pred: impl Fn(f64) -> bool) -> Option<f64> {
    if !pred(lo) {
        return None;
    }
    if pred(hi) {
        return Some(hi);
    }
    let (mut a, mut b) = (key(lo), key(hi));
    while b - a > 1 {
        let m = a + (b - a) / 2;
        if pred(unkey(m)) {
            a = m;
        } else {
            b = m;
        }
    }
    Some(unkey(a))
}

fn above_lower(y: f64, c: f64) -> bool {
    if c == f64::NEG_INFINITY {
        !y.is_nan()
    } else {
        y > c
    }
}

fn below_upper(y: f64, d: f64) -> bool {
    if d == f64::INFINITY {
        !y.is_nan()
    } else {
        y < d
    }
}

fn member(y: f64, set: &OpenSet1D) -> bool {
    set.components().iter().any(|c| above_lower(y, c.lo) && below_upper(y, c.hi))
}

fn scan_grid(c: Interval) -> Vec<f64> {
    let (mut wl, mut wh) = (c.lo.max(-CORE_WINDOW), c.hi.min(CORE_WINDOW));
    if wl >= wh {
        if c.is_bounded() {
            (wl, wh) = (c.lo, c.hi);
        } else if c.hi <= -CORE_WINDOW {
            (wl, wh) = (c.hi - 2.0 * CORE_WINDOW, c.hi);
        } else {
            (wl, wh) = (c.lo, c.lo + 2.0 * CORE_WINDOW);
        }
    }
    let mut grid: Vec<f64> = (0..=CORE_POINTS)
        .map(|k| wl + (wh - wl) * k as f64 / CORE_POINTS as f64)
        .collect();
    if c.lo < wl {
        let mut x = wl;
        loop {
            x = if x < 0.0 { x * TAIL_RATIO } else { x - CORE_WINDOW };
            if x <= c.lo || x < -TAIL_LIMIT {
                break;
            }
            grid.push(x);
        }
    }
    if c.hi > wh {
        let mut x = wh;
        loop {
            x = if x > 0.0 { x * TAIL_RATIO } else { x + CORE_WINDOW };
            if x >= c.hi || x > TAIL_LIMIT {
                break;
            }
            grid.push(x);
        }
    }
    grid.retain(|x| c.contains(*x));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Interior critical points of `f` on `c`, located at sign changes of `df`.
fn critical_points(df: &Expr, grid: &[f64]) -> Vec<f64> {
    let signs: Vec<(f64, f64)> = grid
        .iter()
        .map(|&x| (x, df.eval_unchecked(&[x], 0.0)))
        .filter(|(_, d)| !d.is_nan())
        .map(|(x, d)| (x, if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 }))
        .collect();
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut zeros: Vec<f64> = Vec::new();
    for &(x, s) in &signs {
        if s == 0.0 {
            zeros.push(x);
            continue;
        }
        if let Some((px, ps)) = prev {
            if ps != s {
                if zeros.is_empty() {
                    let sign_of = |v: f64| df.eval_unchecked(&[v], 0.0).signum();
                    let last = last_true(px, x, |v| sign_of(v) == ps).unwrap_or(px);
                    let next = last.next_up();
                    let pick = if df.eval_unchecked(&[last], 0.0).abs() <= df.eval_unchecked(&[next], 0.0).abs() {
                        last
                    } else {
                        next
                    };
                    out.push(pick);
                } else {
                    out.push(zeros[zeros.len() / 2]);
                }
            }
        }
        zeros.clear();
        prev = Some((x, s));
    }
    out.retain(|c| grid.first().is_some_and(|g| g <= c) && grid.last().is_some_and(|g| c <= g));
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Direction of `f` on `piece`, judged from the scan grid.
fn check_monotone(f: &Expr, grid: &[f64], piece: Interval) -> Result<bool> {
    let values: Vec<f64> = grid
        .iter()
        .filter(|x| piece.contains(**x))
        .map(|&x| f.eval_unchecked(&[x], 0.0))
        .filter(|v| !v.is_nan())
        .collect();
    let (Some(first), Some(last)) = (values.first(), values.last()) else {
        let probe = |x: f64| f.eval_unchecked(&[x], 0.0);
        return Ok(probe(piece.lo.next_up()) <= probe(piece.hi.next_down()));
    };
    let increasing = first <= last;
    let slack = |a: f64, b: f64| 1e-9 * a.abs().max(b.abs()).max(1.0);
    for w in values.windows(2) {
        let drop = if increasing { w[0] - w[1] } else { w[1] - w[0] };
        if drop > slack(w[0], w[1]) {
            return Err(GermError::NonMonotone { lo: piece.lo, hi: piece.hi });
        }
    }
    Ok(increasing)
}

fn piece_preimage(f: &Expr, piece: Interval, increasing: bool, target: &OpenSet1D, out: &mut Vec<Interval>) {
    let (lo, hi) = (piece.lo.next_up(), piece.hi.next_down());
    if lo > hi {
        return;
    }
    let eval = |x: f64| f.eval_unchecked(&[x], 0.0);
    for c in target.components() {
        // `before` holds on the part of the piece preceding the preimage,
        // `not_past` on everything up to its end.
        let (lower, upper) = if increasing {
            (
                last_true(lo, hi, |x| !above_lower(eval(x), c.lo)),
                last_true(lo, hi, |x| below_upper(eval(x), c.hi)),
            )
        } else {
            (
                last_true(lo, hi, |x| !below_upper(eval(x), c.hi)),
                last_true(lo, hi, |x| above_lower(eval(x), c.lo)),
            )
        };
        let start = match lower {
            None => piece.lo,
            Some(x) if x == hi => continue,
            Some(x) => x,
        };
        let end = match upper {
            None => continue,
            Some(x) if x == hi => piece.hi,
            Some(x) => x.next_up(),
        };
        out.push(Interval::new(start, end));
    }
}

/// `{x ∈ within : f(x) ∈ target}` for a one-variable expression.
pub fn preimage(f: &Expr, within: &OpenSet1D, target: &OpenSet1D) -> Result<OpenSet1D> {
    if f.arity() != 1 {
        return Err(GermError::Arity(f.arity()));
    }
    let df = f.differentiate(1)?;
    let mut out = Vec::new();
    for &comp in within.components() {
        let grid = scan_grid(comp);
        let crits = critical_points(&df, &grid);
        let mut cuts = vec![comp.lo];
        cuts.extend(crits.iter().copied());
        cuts.push(comp.hi);
        for w in cuts.windows(2) {
            let piece = Interval::new(w[0], w[1]);
            let increasing = check_monotone(f, &grid, piece)?;
            piece_preimage(f, piece, increasing, target, &mut out);
        }
        for &c in &crits {
            if member(f.eval_unchecked(&[c], 0.0), target) {
                out.push(Interval::new(c.next_down(), c.next_up()));
            }
        }
    }
    Ok(OpenSet1D::from_intervals(out))
}
