//! Continuous-time systems `ẋ = X(x)` on open boxes of `R^n`, optionally
//! with finitely many points removed.
//!
//! A smooth map `f` is a morphism `(M, X) -> (N, Y)` when the pushforward of
//! `X` agrees with `Y` along `f`: `J_f(x) X(x) = Y(f(x))`. Jacobians come from
//! symbolic differentiation, so the only approximation in a relatedness check
//! is floating-point evaluation.

mod checks;
mod integrate;

use thiserror::Error;

use crate::expr::{ExprError, Jacobian, VectorExpr};
use crate::report::{format_vec, CheckReport};

pub use checks::{
    check_periodic_orbit, check_solution_preservation, solution_defect, PreservationReport,
};
pub use integrate::{integrate, IntegrateOptions, Termination, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuousError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("point {0} lies outside the domain")]
    OutsideDomain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("integration span must be finite and non-zero, got {0}")]
    InvalidSpan(f64),
    #[error("step size underflow at t = {at} (problem may be stiff)")]
    StepSizeUnderflow { at: f64 },
    #[error("maximum number of steps exceeded at t = {at}")]
    MaxSteps { at: f64 },
    #[error("trajectory terminated at t = {at} ({termination:?}) before reaching {requested}")]
    Truncated { at: f64, requested: f64, termination: Termination },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T, E = ContinuousError> = std::result::Result<T, E>;

/// Open box `(lo_1, hi_1) × ... × (lo_n, hi_n)` minus finitely many points.
/// Bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
    punctures: Vec<Vec<f64>>,
}

impl Domain {
    pub fn whole(n: usize) -> Self {
        Domain { lo: vec![f64::NEG_INFINITY; n], hi: vec![f64::INFINITY; n], punctures: Vec::new() }
    }

    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(ContinuousError::Dimension { expected: lo.len(), got: hi.len() });
        }
        for (a, b) in lo.iter().zip(&hi) {
            if a.is_nan() || b.is_nan() || a >= b {
                return Err(ContinuousError::InvalidDomain(format!("empty interval ({a}, {b})")));
            }
        }
        Ok(Domain { lo, hi, punctures: Vec::new() })
    }

    pub fn with_punctures(mut self, punctures: Vec<Vec<f64>>) -> Result<Self> {
        for p in &punctures {
            if p.len() != self.lo.len() {
                return Err(ContinuousError::Dimension { expected: self.lo.len(), got: p.len() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(ContinuousError::InvalidDomain("puncture must be finite".into()));
            }
        }
        self.punctures = punctures;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn punctures(&self) -> &[Vec<f64>] {
        &self.punctures
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a < *v && *v < *b)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.in_box(x) && !self.punctures.iter().any(|p| p.as_slice() == x)
    }

    /// Whether the straight segment from `a` to `b` meets a puncture
    /// (within `tol` for `n > 1`; exact sign test on the line).
    pub fn segment_hits_puncture(&self, a: &[f64], b: &[f64], tol: f64) -> bool {
        self.punctures.iter().any(|p| {
            if p.len() == 1 {
                return (a[0] - p[0]) * (b[0] - p[0]) <= 0.0;
            }
            let d: Vec<f64> = b.iter().zip(a).map(|(bi, ai)| bi - ai).collect();
            let dd: f64 = d.iter().map(|v| v * v).sum();
            let s = if dd == 0.0 {
                0.0
            } else {
                (p.iter().zip(a).zip(&d).map(|((pi, ai), di)| (pi - ai) * di).sum::<f64>() / dd)
                    .clamp(0.0, 1.0)
            };
            let dist2: f64 = p
                .iter()
                .zip(a)
                .zip(&d)
                .map(|((pi, ai), di)| (ai + s * di - pi).powi(2))
                .sum();
            dist2.sqrt() <= tol
        })
    }

    /// Finite box used for sampling: infinite bounds are replaced by a window
    /// of half-width `window` around the finite bound (or the origin).
    pub fn sampling_box(&self, window: f64) -> (Vec<f64>, Vec<f64>) {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| match (a.is_finite(), b.is_finite()) {
                (true, true) => (a, b),
                (true, false) => (a, a + 2.0 * window),
                (false, true) => (b - 2.0 * window, b),
                (false, false) => (-window, window),
            })
            .unzip()
    }
}

/// `ẋ = X(x)`. The field may mention `t`; relatedness and equilibrium checks
/// evaluate it at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSystem {
    domain: Domain,
    field: VectorExpr,
}

impl ContinuousSystem {
    pub fn new(domain: Domain, field: VectorExpr) -> Result<Self> {
        let n = domain.dimension();
        if field.len() != n {
            return Err(ContinuousError::Dimension { expected: n, got: field.len() });
        }
        if field.arity() != n {
            return Err(ContinuousError::Dimension { expected: n, got: field.arity() });
        }
        Ok(ContinuousSystem { domain, field })
    }

    /// Convenience: parse one expression per component on all of `R^n`.
    pub fn parse<S: AsRef<str>>(field: &[S]) -> Result<Self> {
        let n = field.len();
        Self::new(Domain::whole(n), VectorExpr::parse(field, n)?)
    }

    /// The time system `(R, d/dt)`.
    pub fn time() -> Self {
        Self::parse(&["1"]).expect("constant field parses")
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn field(&self) -> &VectorExpr {
        &self.field
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.field.eval(x, t)?)
    }

    fn require_inside(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(ContinuousError::Dimension { expected: self.dimension(), got: x.len() });
        }
        if !self.domain.contains(x) {
            return Err(ContinuousError::OutsideDomain(format_vec(x)));
        }
        Ok(())
    }
}

/// A smooth map `R^n -> R^m` given by expressions, with its symbolic Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    components: VectorExpr,
    jacobian: Jacobian,
}

impl SmoothMap {
    pub fn new(components: VectorExpr) -> Self {
        let jacobian = components.jacobian();
        SmoothMap { components, jacobian }
    }

    pub fn parse<S: AsRef<str>>(components: &[S], source_dim: usize) -> Result<Self> {
        Ok(Self::new(VectorExpr::parse(components, source_dim)?))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(VectorExpr::identity(n))
    }

    pub fn source_dim(&self) -> usize {
        self.components.arity()
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &VectorExpr {
        &self.components
    }

    pub fn jacobian(&self) -> &Jacobian {
        &self.jacobian
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.components.eval(x, 0.0)?)
    }

    /// `Tf` at `x` applied to the tangent vector `v`.
    pub fn pushforward(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jacobian.apply(x, 0.0, v)?)
    }

    /// `self ∘ inner`, formed by substitution.
    pub fn after(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        Ok(Self::new(self.components.compose(&inner.components)?))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while k > 0 {
        value += (k % base) as f64 * scale;
        k /= base;
        scale *= inv;
    }
    value
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Halton points in the box `[lo, hi]`.
pub fn halton_points(lo: &[f64], hi: &[f64], count: usize) -> Vec<Vec<f64>> {
    (1..=count as u64)
        .map(|k| {
            lo.iter()
                .zip(hi)
                .enumerate()
                .map(|(d, (a, b))| a + (b - a) * radical_inverse(k, PRIMES[d % PRIMES.len()]))
                .collect()
        })
        .collect()
}

pub const DEFAULT_SAMPLE_COUNT: usize = 200;
pub const DEFAULT_SAMPLE_WINDOW: f64 = 5.0;

/// Deterministic low-discrepancy samples inside the system's domain.
pub fn default_samples(domain: &Domain, count: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = domain.sampling_box(DEFAULT_SAMPLE_WINDOW);
    halton_points(&lo, &hi, count)
        .into_iter()
        .filter(|p| domain.contains(p))
        .collect()
}

/// Residual `max_x ‖J_f(x) X(x) − Y(f(x))‖` over `samples`.
pub fn check_f_relatedness(
    f: &SmoothMap,
    src: &ContinuousSystem,
    dst: &ContinuousSystem,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    if f.source_dim() != src.dimension() {
        return Err(ContinuousError::Dimension { expected: src.dimension(), got: f.source_dim() });
    }
    if f.target_dim() != dst.dimension() {
        return Err(ContinuousError::Dimension { expected: dst.dimension(), got: f.target_dim() });
    }
    let mut worst = 0.0f64;
    let mut witness = None;
    for x in samples {
        src.require_inside(x)?;
        let fx = f.apply(x)?;
        if !dst.domain.contains(&fx) {
            return Err(ContinuousError::OutsideDomain(format!(
                "f({}) = {}",
                format_vec(x),
                format_vec(&fx)
            )));
        }
        let pushed = f.pushforward(x, &src.eval(x, 0.0)?)?;
        let target = dst.eval(&fx, 0.0)?;
        let r = distance(&pushed, &target);
        if r > worst || r.is_nan() {
            worst = r;
            witness = Some(format!(
                "x = {}: Tf(X(x)) = {}, Y(f(x)) = {}",
                format_vec(x),
                format_vec(&pushed),
                format_vec(&target)
            ));
        }
    }
    Ok(CheckReport::numeric(worst, tol, samples.len(), witness))
}

/// The one-point inclusion `{x_e} -> (M, X)` is a morphism iff `X(x_e) = 0`.
pub fn check_equilibrium_morphism(sys: &ContinuousSystem, x_e: &[f64], tol: f64) -> Result<CheckReport> {
    sys.require_inside(x_e)?;
    let v = sys.eval(x_e, 0.0)?;
    let r = norm(&v);
    let witness = format!("X({}) = {}", format_vec(x_e), format_vec(&v));
    Ok(CheckReport::numeric(r, tol, 1, Some(witness)))
}

const NEWTON_MAX_ITER: usize = 100;
pub const EQUILIBRIUM_DEDUP_RADIUS: f64 = 1e-6;

/// Zeros of the field inside the closed box `[lo, hi]`.
///
/// Cells of a `resolution`-per-axis grid whose corner values admit a sign
/// change in every component seed a damped Newton iteration with the
/// symbolic Jacobian. Seeds that diverge are skipped.
pub fn find_equilibria(
    sys: &ContinuousSystem,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
    tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = sys.dimension();
    if lo.len() != n || hi.len() != n {
        return Err(ContinuousError::Dimension { expected: n, got: lo.len().min(hi.len()) });
    }
    let d = sys.domain();
    for i in 0..n {
        if lo[i].is_nan() || hi[i].is_nan() || lo[i] >= hi[i] || !(lo[i].is_finite() && hi[i].is_finite()) {
            return Err(ContinuousError::InvalidDomain(format!("search interval ({}, {})", lo[i], hi[i])));
        }
        if lo[i] < d.lo[i] || hi[i] > d.hi[i] {
            return Err(ContinuousError::InvalidDomain("search box must lie inside the domain".into()));
        }
    }
    let res = resolution.max(1);
    let nodes_per_axis = res + 1;
    let node_count = nodes_per_axis.pow(n as u32);
    let node_point = |mut k: usize| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let j = k % nodes_per_axis;
                k /= nodes_per_axis;
                lo[i] + (hi[i] - lo[i]) * j as f64 / res as f64
            })
            .collect()
    };
    let values: Vec<Option<Vec<f64>>> = (0..node_count)
        .map(|k| sys.eval(&node_point(k), 0.0).ok())
        .collect();

    let jac = sys.field().jacobian();
    let mut found: Vec<Vec<f64>> = Vec::new();
    for cell in 0..res.pow(n as u32) {
        let mut base = vec![0usize; n];
        let mut c = cell;
        for b in base.iter_mut() {
            *b = c % res;
            c /= res;
        }
        let mut lo_vals = vec![f64::INFINITY; n];
        let mut hi_vals = vec![f64::NEG_INFINITY; n];
        let mut complete = true;
        for corner in 0..(1usize << n) {
            let mut k = 0;
            let mut stride = 1;
            for (i, b) in base.iter().enumerate() {
                k += (b + ((corner >> i) & 1)) * stride;
                stride *= nodes_per_axis;
            }
            match &values[k] {
                Some(v) => {
                    for i in 0..n {
                        lo_vals[i] = lo_vals[i].min(v[i]);
                        hi_vals[i] = hi_vals[i].max(v[i]);
                    }
                }
                None => complete = false,
            }
        }
        if !complete || (0..n).any(|i| lo_vals[i] > 0.0 || hi_vals[i] < 0.0) {
            continue;
        }
        let seed: Vec<f64> = (0..n)
            .map(|i| lo[i] + (hi[i] - lo[i]) * (base[i] as f64 + 0.5) / res as f64)
            .collect();
        if let Some(x) = newton(sys, &jac, seed, tol) {
            let inside = x
                .iter()
                .enumerate()
                .all(|(i, v)| *v >= lo[i] - 1e-9 && *v <= hi[i] + 1e-9);
            if inside
                && sys.domain().contains(&x)
                && !found.iter().any(|y| distance(y, &x) <= EQUILIBRIUM_DEDUP_RADIUS)
            {
                found.push(x);
            }
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(found)
}

fn newton(sys: &ContinuousSystem, jac: &Jacobian, mut x: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let n = x.len();
    let mut fx = sys.eval(&x, 0.0).ok()?;
    for _ in 0..NEWTON_MAX_ITER {
        let r = norm(&fx);
        if r <= tol {
            return Some(x);
        }
        let j = jac.eval(&x, 0.0).ok()?;
        let m = nalgebra::DMatrix::from_fn(n, n, |i, k| j[i][k]);
        let step = m.lu().solve(&nalgebra::DVector::from_column_slice(&fx))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi - lambda * si).collect();
            if let Ok(ft) = sys.eval(&trial, 0.0) {
                if sys.domain().contains(&trial) && norm(&ft) < r {
                    x = trial;
                    fx = ft;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return None;
            }
        }
    }
    (norm(&fx) <= tol).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_relates_system_to_itself() {
        let sys = ContinuousSystem::parse(&["x2", "-x1"]).unwrap();
        let samples = default_samples(sys.domain(), 50);
        let r = check_f_relatedness(&SmoothMap::identity(2), &sys, &sys, &samples, 1e-12).unwrap();
        assert!(r.passed());
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn translation_of_time_is_a_morphism() {
        let time = ContinuousSystem::time();
        let f = SmoothMap::parse(&["x1 + 2.5"], 1).unwrap();
        let samples = default_samples(time.domain(), 200);
        let r = check_f_relatedness(&f, &time, &time, &samples, 1e-12).unwrap();
        assert!(r.passed());
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn exp_relates_time_to_growth() {
        let time = ContinuousSystem::time();
        let growth = ContinuousSystem::new(
            Domain::new(vec![0.0], vec![f64::INFINITY]).unwrap(),
            VectorExpr::parse(&["x1"], 1).unwrap(),
        )
        .unwrap();
        let f = SmoothMap::parse(&["exp(x1)"], 1).unwrap();
        let samples = default_samples(time.domain(), 200);
        let r = check_f_relatedness(&f, &time, &growth, &samples, 1e-10).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn doubling_is_not_a_morphism_of_time() {
        let time = ContinuousSystem::time();
        let f = SmoothMap::parse(&["2*x1"], 1).unwrap();
        let r = check_f_relatedness(&f, &time, &time, &[vec![0.0]], 1e-8).unwrap();
        assert!(!r.passed());
        assert_eq!(r.residual, 1.0);
        assert!(r.witness.is_some());
    }

    #[test]
    fn relatedness_rejects_samples_mapped_outside_target() {
        let time = ContinuousSystem::time();
        let positive = ContinuousSystem::new(
            Domain::new(vec![0.0], vec![f64::INFINITY]).unwrap(),
            VectorExpr::parse(&["1"], 1).unwrap(),
        )
        .unwrap();
        let f = SmoothMap::identity(1);
        let err = check_f_relatedness(&f, &time, &positive, &[vec![-1.0]], 1e-8).unwrap_err();
        assert!(matches!(err, ContinuousError::OutsideDomain(_)));
    }

    #[test]
    fn punctured_domain_membership() {
        let d = Domain::whole(1).with_punctures(vec![vec![0.0]]).unwrap();
        assert!(d.contains(&[0.5]));
        assert!(!d.contains(&[0.0]));
        assert!(d.segment_hits_puncture(&[1.0], &[-3.0], 1e-9));
        assert!(!d.segment_hits_puncture(&[1.0], &[0.1], 1e-9));
    }

    #[test]
    fn equilibria_of_logistic() {
        let sys = ContinuousSystem::parse(&["x1*(1 - x1)"]).unwrap();
        let eq = find_equilibria(&sys, &[-0.5], &[1.5], 20, 1e-12).unwrap();
        assert_eq!(eq.len(), 2);
        assert!(eq[0][0].abs() < 1e-12);
        assert!((eq[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equilibria_of_nowhere_zero_field() {
        let sys = ContinuousSystem::time();
        assert!(find_equilibria(&sys, &[-3.0], &[3.0], 30, 1e-12).unwrap().is_empty());
    }

    #[test]
    fn equilibria_of_rotation() {
        let sys = ContinuousSystem::parse(&["x2", "-x1"]).unwrap();
        let eq = find_equilibria(&sys, &[-1.0, -1.0], &[1.3, 1.3], 7, 1e-12).unwrap();
        assert_eq!(eq.len(), 1);
        assert!(norm(&eq[0]) < 1e-12);
    }

    #[test]
    fn equilibria_search_box_must_be_in_domain() {
        let sys = ContinuousSystem::new(
            Domain::new(vec![0.0], vec![2.0]).unwrap(),
            VectorExpr::parse(&["x1 - 1"], 1).unwrap(),
        )
        .unwrap();
        assert!(find_equilibria(&sys, &[-1.0], &[1.0], 10, 1e-12).is_err());
        let eq = find_equilibria(&sys, &[0.5], &[1.5], 10, 1e-12).unwrap();
        assert_eq!(eq, vec![vec![1.0]]);
    }

    #[test]
    fn equilibrium_morphism_examples() {
        let sys = ContinuousSystem::parse(&["x1*(1 - x1)"]).unwrap();
        assert!(check_equilibrium_morphism(&sys, &[1.0], 1e-12).unwrap().passed());
        let r = check_equilibrium_morphism(&sys, &[0.5], 1e-12).unwrap();
        assert!(!r.passed());
        assert_eq!(r.residual, 0.25);
        let bounded = ContinuousSystem::new(
            Domain::new(vec![0.0], vec![1.0]).unwrap(),
            VectorExpr::parse(&["x1"], 1).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            check_equilibrium_morphism(&bounded, &[2.0], 1e-12),
            Err(ContinuousError::OutsideDomain(_))
        ));
    }

    #[test]
    fn halton_points_fill_the_box() {
        let pts = halton_points(&[0.0, -1.0], &[1.0, 1.0], 100);
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| p[0] > 0.0 && p[0] < 1.0 && p[1] > -1.0 && p[1] < 1.0));
    }
}
