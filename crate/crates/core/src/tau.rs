//! Systems given by a carrier together with a section of a projection
//! `τ_c: T(c) -> U(c)`.
//!
//! Each [`TauInstance`] fixes what carriers, total-space points, maps and
//! sections are, and how a map acts on carriers (`Uf`) and on total spaces
//! (`Tf`). A system is a pair `(c, X)` with `τ_c ∘ X = id`, and a morphism
//! `f: (c, X) -> (d, Y)` satisfies `Tf ∘ X = Y ∘ Uf`.
//!
//! Three instances are provided: finite sets with `T(c) = c × c`, open
//! subsets of `R^n` with their tangent bundles, and open subsets of the line
//! with partial maps.

use thiserror::Error;

use crate::continuous::{ContinuousError, ContinuousSystem, Domain, SmoothMap};
use crate::discrete::{DiscreteError, DiscreteMap, DiscreteSystem};
use crate::expr::{Expr, ExprError, VectorExpr};
use crate::germ::{GermError, GermedSystem, OpenSet1D, PartialMap};
use crate::report::{format_vec, CheckReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TauError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
    #[error(transparent)]
    Continuous(#[from] ContinuousError),
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error("{0} is not in the carrier")]
    OutsideCarrier(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T, E = TauError> = std::result::Result<T, E>;

pub trait TauInstance {
    type Carrier;
    type Point: Clone;
    type Total: Clone;
    type Map;
    type Section;

    fn name(&self) -> &'static str;

    /// Whether equality of points is decided exactly rather than up to a
    /// tolerance.
    fn exact(&self) -> bool;

    /// Whether solutions, as morphisms out of a time system, are available
    /// for this instance.
    fn has_solutions(&self) -> bool;

    fn contains(&self, carrier: &Self::Carrier, x: &Self::Point) -> bool;

    fn apply_section(&self, carrier: &Self::Carrier, section: &Self::Section, x: &Self::Point) -> Result<Self::Total>;

    /// `τ_c`.
    fn project(&self, carrier: &Self::Carrier, v: &Self::Total) -> Self::Point;

    /// `Uf`.
    fn apply_on_carrier(&self, f: &Self::Map, x: &Self::Point) -> Result<Self::Point>;

    /// `Tf`.
    fn apply_on_total(&self, f: &Self::Map, v: &Self::Total) -> Result<Self::Total>;

    /// A section that exists for every carrier.
    fn canonical_section(&self, carrier: &Self::Carrier) -> Self::Section;

    fn point_distance(&self, a: &Self::Point, b: &Self::Point) -> f64;

    fn total_distance(&self, a: &Self::Total, b: &Self::Total) -> f64;

    /// Rejects maps whose shape does not fit the two carriers.
    fn check_map(&self, _f: &Self::Map, _src: &Self::Carrier, _dst: &Self::Carrier) -> Result<()> {
        Ok(())
    }

    fn show_point(&self, carrier: &Self::Carrier, x: &Self::Point) -> String;

    fn show_total(&self, carrier: &Self::Carrier, v: &Self::Total) -> String;
}

/// A carrier with a chosen section. Construction does not check the
/// section law; use [`check_section`].
#[derive(Debug, Clone, PartialEq)]
pub struct TauSystem<I: TauInstance> {
    pub instance: I,
    pub carrier: I::Carrier,
    pub section: I::Section,
}

impl<I: TauInstance> TauSystem<I> {
    pub fn new(instance: I, carrier: I::Carrier, section: I::Section) -> Self {
        TauSystem { instance, carrier, section }
    }

    pub fn with_canonical_section(instance: I, carrier: I::Carrier) -> Self {
        let section = instance.canonical_section(&carrier);
        TauSystem { instance, carrier, section }
    }

    fn require(&self, x: &I::Point) -> Result<()> {
        if self.instance.contains(&self.carrier, x) {
            Ok(())
        } else {
            Err(TauError::OutsideCarrier(self.instance.show_point(&self.carrier, x)))
        }
    }
}

struct Worst {
    exact: bool,
    tol: f64,
    worst: f64,
    violations: usize,
    witness: Option<String>,
}

impl Worst {
    fn new(exact: bool, tol: f64) -> Self {
        Worst { exact, tol, worst: 0.0, violations: 0, witness: None }
    }

    fn record(&mut self, r: f64, describe: impl FnOnce() -> String) {
        if self.exact {
            if r != 0.0 {
                self.violations += 1;
                self.witness.get_or_insert_with(describe);
            }
        } else if r > self.worst || r.is_nan() {
            self.worst = r;
            self.witness = Some(describe());
        }
    }

    fn finish(self, samples: usize) -> CheckReport {
        if self.exact {
            CheckReport::exact(samples, self.violations, self.witness)
        } else {
            CheckReport::numeric(self.worst, self.tol, samples, self.witness)
        }
    }
}

/// `τ_c(X(x)) = x` at every sample. `tol` is ignored by exact instances.
pub fn check_section<I: TauInstance>(sys: &TauSystem<I>, samples: &[I::Point], tol: f64) -> Result<CheckReport> {
    let inst = &sys.instance;
    let mut acc = Worst::new(inst.exact(), tol);
    for x in samples {
        sys.require(x)?;
        let v = inst.apply_section(&sys.carrier, &sys.section, x)?;
        let back = inst.project(&sys.carrier, &v);
        acc.record(inst.point_distance(&back, x), || {
            format!(
                "x = {}: X(x) = {}, τ(X(x)) = {}",
                inst.show_point(&sys.carrier, x),
                inst.show_total(&sys.carrier, &v),
                inst.show_point(&sys.carrier, &back)
            )
        });
    }
    Ok(acc.finish(samples.len()))
}

/// `Tf(X(x)) = Y(Uf(x))` at every sample. `tol` is ignored by exact instances.
pub fn check_tau_morphism<I: TauInstance>(
    f: &I::Map,
    src: &TauSystem<I>,
    dst: &TauSystem<I>,
    samples: &[I::Point],
    tol: f64,
) -> Result<CheckReport> {
    let inst = &src.instance;
    inst.check_map(f, &src.carrier, &dst.carrier)?;
    let mut acc = Worst::new(inst.exact(), tol);
    for x in samples {
        src.require(x)?;
        let fx = inst.apply_on_carrier(f, x)?;
        dst.require(&fx)?;
        let lhs = inst.apply_on_total(f, &inst.apply_section(&src.carrier, &src.section, x)?)?;
        let rhs = inst.apply_section(&dst.carrier, &dst.section, &fx)?;
        acc.record(inst.total_distance(&lhs, &rhs), || {
            format!(
                "x = {}: Tf(X(x)) = {}, Y(Uf(x)) = {}",
                inst.show_point(&src.carrier, x),
                inst.show_total(&dst.carrier, &lhs),
                inst.show_total(&dst.carrier, &rhs)
            )
        });
    }
    Ok(acc.finish(samples.len()))
}

/// Finite sets with `T(c) = c × c` and `τ_c` the first projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DiscreteTau;

/// A map `c -> c × c` given by its two coordinate tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSection {
    pub base: Vec<usize>,
    pub next: Vec<usize>,
}

impl DiscreteTau {
    /// `x ↦ (x, X(x))`.
    pub fn system(sys: &DiscreteSystem) -> TauSystem<DiscreteTau> {
        let section = PairSection { base: (0..sys.len()).collect(), next: sys.endomap().to_vec() };
        TauSystem::new(DiscreteTau, sys.elements().to_vec(), section)
    }
}

impl TauInstance for DiscreteTau {
    type Carrier = Vec<String>;
    type Point = usize;
    type Total = (usize, usize);
    type Map = DiscreteMap;
    type Section = PairSection;

    fn name(&self) -> &'static str {
        "discrete"
    }

    fn exact(&self) -> bool {
        true
    }

    fn has_solutions(&self) -> bool {
        true
    }

    fn contains(&self, carrier: &Vec<String>, x: &usize) -> bool {
        *x < carrier.len()
    }

    fn apply_section(&self, carrier: &Vec<String>, section: &PairSection, x: &usize) -> Result<(usize, usize)> {
        let pick = |table: &[usize]| -> Result<usize> {
            let v = *table.get(*x).ok_or(DiscreteError::SizeMismatch { expected: carrier.len(), got: table.len() })?;
            if v >= carrier.len() {
                return Err(DiscreteError::IndexOutOfRange { index: v, size: carrier.len() }.into());
            }
            Ok(v)
        };
        Ok((pick(&section.base)?, pick(&section.next)?))
    }

    fn project(&self, _carrier: &Vec<String>, v: &(usize, usize)) -> usize {
        v.0
    }

    fn apply_on_carrier(&self, f: &DiscreteMap, x: &usize) -> Result<usize> {
        Ok(f.apply(*x))
    }

    fn apply_on_total(&self, f: &DiscreteMap, v: &(usize, usize)) -> Result<(usize, usize)> {
        Ok((f.apply(v.0), f.apply(v.1)))
    }

    /// The diagonal `x ↦ (x, x)`.
    fn canonical_section(&self, carrier: &Vec<String>) -> PairSection {
        let ids: Vec<usize> = (0..carrier.len()).collect();
        PairSection { base: ids.clone(), next: ids }
    }

    fn point_distance(&self, a: &usize, b: &usize) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }

    fn total_distance(&self, a: &(usize, usize), b: &(usize, usize)) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }

    fn check_map(&self, f: &DiscreteMap, src: &Vec<String>, dst: &Vec<String>) -> Result<()> {
        if f.source_len() != src.len() {
            return Err(DiscreteError::SizeMismatch { expected: src.len(), got: f.source_len() }.into());
        }
        if f.target_len() != dst.len() {
            return Err(DiscreteError::SizeMismatch { expected: dst.len(), got: f.target_len() }.into());
        }
        Ok(())
    }

    fn show_point(&self, carrier: &Vec<String>, x: &usize) -> String {
        carrier.get(*x).cloned().unwrap_or_else(|| format!("#{x}"))
    }

    fn show_total(&self, carrier: &Vec<String>, v: &(usize, usize)) -> String {
        format!("({}, {})", self.show_point(carrier, &v.0), self.show_point(carrier, &v.1))
    }
}

/// Open subsets of `R^n` with the tangent bundle `T(M) = M × R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContinuousTau;

/// A map `M -> T(M)`, `x ↦ (base(x), fiber(x))`. Vector fields have
/// `base = id`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSection {
    pub base: VectorExpr,
    pub fiber: VectorExpr,
}

impl ContinuousTau {
    pub fn system(sys: &ContinuousSystem) -> TauSystem<ContinuousTau> {
        let n = sys.dimension();
        let section = TangentSection { base: VectorExpr::identity(n), fiber: sys.field().clone() };
        TauSystem::new(ContinuousTau, sys.domain().clone(), section)
    }
}

impl TauInstance for ContinuousTau {
    type Carrier = Domain;
    type Point = Vec<f64>;
    type Total = (Vec<f64>, Vec<f64>);
    type Map = SmoothMap;
    type Section = TangentSection;

    fn name(&self) -> &'static str {
        "continuous"
    }

    fn exact(&self) -> bool {
        false
    }

    fn has_solutions(&self) -> bool {
        true
    }

    fn contains(&self, carrier: &Domain, x: &Vec<f64>) -> bool {
        carrier.contains(x)
    }

    /// Sections are evaluated at `t = 0`, as in the relatedness checks.
    fn apply_section(&self, carrier: &Domain, section: &TangentSection, x: &Vec<f64>) -> Result<Self::Total> {
        let n = carrier.dimension();
        for part in [&section.base, &section.fiber] {
            if part.len() != n {
                return Err(TauError::Dimension { expected: n, got: part.len() });
            }
        }
        Ok((section.base.eval(x, 0.0)?, section.fiber.eval(x, 0.0)?))
    }

    fn project(&self, _carrier: &Domain, v: &Self::Total) -> Vec<f64> {
        v.0.clone()
    }

    fn apply_on_carrier(&self, f: &SmoothMap, x: &Vec<f64>) -> Result<Vec<f64>> {
        Ok(f.apply(x)?)
    }

    fn apply_on_total(&self, f: &SmoothMap, v: &Self::Total) -> Result<Self::Total> {
        Ok((f.apply(&v.0)?, f.pushforward(&v.0, &v.1)?))
    }

    /// The zero vector field.
    fn canonical_section(&self, carrier: &Domain) -> TangentSection {
        let n = carrier.dimension();
        TangentSection { base: VectorExpr::identity(n), fiber: VectorExpr::zero(n, n) }
    }

    fn point_distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        euclid(a, b)
    }

    fn total_distance(&self, a: &Self::Total, b: &Self::Total) -> f64 {
        euclid(&a.0, &b.0).hypot(euclid(&a.1, &b.1))
    }

    fn check_map(&self, f: &SmoothMap, src: &Domain, dst: &Domain) -> Result<()> {
        if f.source_dim() != src.dimension() {
            return Err(TauError::Dimension { expected: src.dimension(), got: f.source_dim() });
        }
        if f.target_dim() != dst.dimension() {
            return Err(TauError::Dimension { expected: dst.dimension(), got: f.target_dim() });
        }
        Ok(())
    }

    fn show_point(&self, _carrier: &Domain, x: &Vec<f64>) -> String {
        format_vec(x)
    }

    fn show_total(&self, _carrier: &Domain, v: &Self::Total) -> String {
        format!("({}, {})", format_vec(&v.0), format_vec(&v.1))
    }
}

/// Open subsets of the line with partial maps; `T(U) = U × R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GermedTau;

/// One-variable section `x ↦ (base(x), fiber(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSection {
    pub base: Expr,
    pub fiber: Expr,
}

impl GermedTau {
    pub fn system(sys: &GermedSystem) -> TauSystem<GermedTau> {
        let section = LineSection {
            base: Expr::var(1, 1).expect("x1 has arity 1"),
            fiber: sys.system().field().components()[0].clone(),
        };
        TauSystem::new(GermedTau, sys.carrier(), section)
    }
}

impl TauInstance for GermedTau {
    type Carrier = OpenSet1D;
    type Point = f64;
    type Total = (f64, f64);
    type Map = PartialMap;
    type Section = LineSection;

    fn name(&self) -> &'static str {
        "germed"
    }

    fn exact(&self) -> bool {
        false
    }

    fn has_solutions(&self) -> bool {
        true
    }

    fn contains(&self, carrier: &OpenSet1D, x: &f64) -> bool {
        carrier.contains(*x)
    }

    fn apply_section(&self, _carrier: &OpenSet1D, section: &LineSection, x: &f64) -> Result<(f64, f64)> {
        Ok((section.base.eval(&[*x], 0.0)?, section.fiber.eval(&[*x], 0.0)?))
    }

    fn project(&self, _carrier: &OpenSet1D, v: &(f64, f64)) -> f64 {
        v.0
    }

    fn apply_on_carrier(&self, f: &PartialMap, x: &f64) -> Result<f64> {
        Ok(f.apply(*x)?)
    }

    fn apply_on_total(&self, f: &PartialMap, v: &(f64, f64)) -> Result<(f64, f64)> {
        let slope = f.map().differentiate(1)?.eval(&[v.0], 0.0)?;
        Ok((f.apply(v.0)?, slope * v.1))
    }

    fn canonical_section(&self, _carrier: &OpenSet1D) -> LineSection {
        LineSection { base: Expr::var(1, 1).expect("x1 has arity 1"), fiber: Expr::constant(0.0, 1) }
    }

    fn point_distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    fn total_distance(&self, a: &(f64, f64), b: &(f64, f64)) -> f64 {
        (a.0 - b.0).hypot(a.1 - b.1)
    }

    fn show_point(&self, _carrier: &OpenSet1D, x: &f64) -> String {
        x.to_string()
    }

    fn show_total(&self, _carrier: &OpenSet1D, v: &(f64, f64)) -> String {
        format!("({}, {})", v.0, v.1)
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::{check_f_relatedness, default_samples};
    use crate::discrete::check_dt_morphism;

    fn swap() -> DiscreteSystem {
        DiscreteSystem::from_table(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap()
    }

    #[test]
    fn discrete_section_acts_as_identity_on_first_factor() {
        let sys = DiscreteTau::system(&swap());
        let r = check_section(&sys, &[0, 1], 0.0).unwrap();
        assert!(r.passed());
        assert_eq!(r.tolerance, None);
    }

    #[test]
    fn broken_discrete_section_fails() {
        let mut sys = DiscreteTau::system(&swap());
        sys.section.base = vec![1, 0];
        let r = check_section(&sys, &[0, 1], 0.0).unwrap();
        assert!(!r.passed());
        assert_eq!(r.residual, 2.0);
        assert!(r.witness.unwrap().starts_with("x = a"));
    }

    #[test]
    fn continuous_section_projects_back() {
        let sys = ContinuousTau::system(&ContinuousSystem::parse(&["x2", "-x1*sin(x2)"]).unwrap());
        let samples = default_samples(&sys.carrier, 50);
        let r = check_section(&sys, &samples, 1e-12).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn broken_continuous_section_fails() {
        let mut sys = ContinuousTau::system(&ContinuousSystem::parse(&["1"]).unwrap());
        sys.section.base = VectorExpr::parse(&["x1 + 1"], 1).unwrap();
        let r = check_section(&sys, &[vec![0.5]], 1e-12).unwrap();
        assert!(!r.passed());
        assert!((r.residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_sections_satisfy_the_law() {
        let d = TauSystem::with_canonical_section(DiscreteTau, vec!["p".into(), "q".into(), "r".into()]);
        assert!(check_section(&d, &[0, 1, 2], 0.0).unwrap().passed());
        let c = TauSystem::with_canonical_section(ContinuousTau, Domain::whole(3));
        assert!(check_section(&c, &[vec![1.0, -2.0, 3.0]], 1e-12).unwrap().passed());
        let g = TauSystem::with_canonical_section(GermedTau, OpenSet1D::punctured_line(&[0.0]));
        assert!(check_section(&g, &[-1.0, 2.0], 1e-12).unwrap().passed());
    }

    #[test]
    fn sample_outside_carrier_is_an_error() {
        let g = TauSystem::with_canonical_section(GermedTau, OpenSet1D::punctured_line(&[0.0]));
        assert!(matches!(check_section(&g, &[0.0], 1e-12), Err(TauError::OutsideCarrier(_))));
        let d = DiscreteTau::system(&swap());
        assert!(check_section(&d, &[5], 0.0).is_err());
    }

    #[test]
    fn discrete_morphisms_agree_with_direct_check() {
        let src = swap();
        let dst = DiscreteSystem::identity(&["a", "b"]).unwrap();
        let point = DiscreteSystem::identity(&["*"]).unwrap();
        let cases = [
            (DiscreteMap::identity(2), &src, &src),
            (DiscreteMap::identity(2), &src, &dst),
            (DiscreteMap::constant(2, 1, 0).unwrap(), &src, &point),
            (DiscreteMap::constant(2, 2, 1).unwrap(), &dst, &dst),
        ];
        for (alpha, s, d) in cases {
            let direct = check_dt_morphism(&alpha, s, d).unwrap();
            let tau = check_tau_morphism(&alpha, &DiscreteTau::system(s), &DiscreteTau::system(d), &[0, 1], 0.0).unwrap();
            assert_eq!(direct.verdict, tau.verdict);
            assert_eq!(direct.residual, tau.residual);
        }
    }

    #[test]
    fn continuous_morphisms_agree_with_direct_check() {
        let time = ContinuousSystem::time();
        let growth = ContinuousSystem::new(
            Domain::new(vec![0.0], vec![f64::INFINITY]).unwrap(),
            VectorExpr::parse(&["x1"], 1).unwrap(),
        )
        .unwrap();
        let samples = default_samples(time.domain(), 40);
        for (f, dst) in [
            (SmoothMap::parse(&["exp(x1)"], 1).unwrap(), &growth),
            (SmoothMap::parse(&["x1 + 2"], 1).unwrap(), &time),
            (SmoothMap::parse(&["3*x1"], 1).unwrap(), &time),
        ] {
            let direct = check_f_relatedness(&f, &time, dst, &samples, 1e-8).unwrap();
            let tau = check_tau_morphism(&f, &ContinuousTau::system(&time), &ContinuousTau::system(dst), &samples, 1e-8)
                .unwrap();
            assert_eq!(direct.verdict, tau.verdict);
            assert_eq!(direct.residual, tau.residual);
        }
    }

    #[test]
    fn germed_translation_of_punctured_line() {
        let sys = GermedSystem::parse("1", f64::NEG_INFINITY, f64::INFINITY, &[0.0]).unwrap();
        let shifted = GermedSystem::parse("1", f64::NEG_INFINITY, f64::INFINITY, &[3.0]).unwrap();
        let f = PartialMap::parse(sys.carrier(), "x1 + 3", shifted.carrier()).unwrap();
        let r = check_tau_morphism(&f, &GermedTau::system(&sys), &GermedTau::system(&shifted), &[-2.0, 0.5, 4.0], 1e-12)
            .unwrap();
        assert!(r.passed(), "{r}");
        let g = PartialMap::parse(OpenSet1D::interval(0.0, f64::INFINITY), "x1^2", OpenSet1D::interval(0.0, f64::INFINITY))
            .unwrap();
        let pos = GermedSystem::parse("1", 0.0, f64::INFINITY, &[]).unwrap();
        let r = check_tau_morphism(&g, &GermedTau::system(&pos), &GermedTau::system(&pos), &[0.5, 2.0], 1e-12).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn map_shape_is_checked() {
        let s = DiscreteTau::system(&swap());
        let err = check_tau_morphism(&DiscreteMap::identity(3), &s, &s, &[0], 0.0).unwrap_err();
        assert!(matches!(err, TauError::Discrete(DiscreteError::SizeMismatch { .. })));
        let c = ContinuousTau::system(&ContinuousSystem::time());
        let f = SmoothMap::identity(2);
        assert!(matches!(check_tau_morphism(&f, &c, &c, &[vec![0.0]], 1e-8), Err(TauError::Dimension { .. })));
    }

    #[test]
    fn capability_flags() {
        assert!(DiscreteTau.exact() && DiscreteTau.has_solutions());
        assert!(!ContinuousTau.exact() && ContinuousTau.has_solutions());
        assert_eq!(GermedTau.name(), "germed");
    }
}
