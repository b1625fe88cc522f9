use std::fmt;
use std::str::FromStr;

use super::GermError;

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// No double lies strictly between the endpoints.
    fn is_float_empty(&self) -> bool {
        self.lo.is_nan() || self.hi.is_nan() || self.hi <= self.lo.next_up()
    }
}

/// Shortest round-trip form, in scientific notation for very small or
/// very large magnitudes.
fn endpoint(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || a.is_infinite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", endpoint(self.lo), endpoint(self.hi))
    }
}

/// Finite union of pairwise disjoint open intervals of the real line,
/// kept sorted.
///
/// Normalization drops intervals that contain no double and merges
/// intervals that overlap. Touching intervals such as `(0,1)` and `(1,2)`
/// stay separate because the shared endpoint is not in the set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OpenSet1D {
    components: Vec<Interval>,
}

impl OpenSet1D {
    pub fn empty() -> Self {
        OpenSet1D::default()
    }

    pub fn real_line() -> Self {
        Self::interval(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::from_intervals([Interval::new(lo, hi)])
    }

    /// The real line with finitely many points removed.
    pub fn punctured_line(points: &[f64]) -> Self {
        let mut cuts: Vec<f64> = points.iter().copied().filter(|p| p.is_finite()).collect();
        cuts.sort_by(f64::total_cmp);
        let mut lo = f64::NEG_INFINITY;
        let mut parts = Vec::with_capacity(cuts.len() + 1);
        for c in cuts {
            parts.push(Interval::new(lo, c));
            lo = c;
        }
        parts.push(Interval::new(lo, f64::INFINITY));
        Self::from_intervals(parts)
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(intervals: I) -> Self {
        let mut parts: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_float_empty()).collect();
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut components: Vec<Interval> = Vec::with_capacity(parts.len());
        for next in parts {
            match components.last_mut() {
                Some(last) if next.lo < last.hi => last.hi = last.hi.max(next.hi),
                _ => components.push(next),
            }
        }
        OpenSet1D { components }
    }

    pub fn components(&self) -> &[Interval] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.component_containing(x).is_some()
    }

    pub fn component_containing(&self, x: f64) -> Option<Interval> {
        let idx = self.components.partition_point(|c| c.hi <= x);
        self.components.get(idx).copied().filter(|c| c.contains(x))
    }

    pub fn intersect(&self, other: &OpenSet1D) -> OpenSet1D {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.components.len() && j < other.components.len() {
            let (a, b) = (self.components[i], other.components[j]);
            out.push(Interval::new(a.lo.max(b.lo), a.hi.min(b.hi)));
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_intervals(out)
    }

    pub fn union(&self, other: &OpenSet1D) -> OpenSet1D {
        Self::from_intervals(self.components.iter().chain(&other.components).copied())
    }
}

impl fmt::Display for OpenSet1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("∅");
        }
        for (k, c) in self.components.iter().enumerate() {
            if k > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for OpenSet1D {
    type Err = GermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "∅" {
            return Ok(OpenSet1D::empty());
        }
        let bad = || GermError::OpenSetSyntax(s.to_string());
        let mut parts = Vec::new();
        for piece in s.split('∪') {
            let inner = piece
                .trim()
                .strip_prefix('(')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(bad)?;
            let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(GermError::OpenSetSyntax(format!("empty interval ({lo},{hi})")));
            }
            parts.push(Interval::new(lo, hi));
        }
        Ok(OpenSet1D::from_intervals(parts))
    }
}
