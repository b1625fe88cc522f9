//! Morphisms between systems of any kind, their composition, and initiality
//! of the discrete time system among pointed systems.

use thiserror::Error;

use crate::continuous::{check_f_relatedness, default_samples, ContinuousError, ContinuousSystem, SmoothMap, DEFAULT_SAMPLE_COUNT};
use crate::discrete::{check_dt_morphism, DiscreteError, DiscreteMap, DiscreteSystem};
use crate::germ::{compose_partial, GermError, GermedSystem, PartialMap};
use crate::report::{format_vec, CheckReport};
use crate::tau::{check_tau_morphism, GermedTau, TauError};

pub const INITIALITY_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CategoryError {
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
    #[error(transparent)]
    Continuous(#[from] ContinuousError),
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error(transparent)]
    Tau(#[from] TauError),
    #[error("systems do not match: {0}")]
    SystemMismatch(String),
    #[error("expected a {expected} state or system, got {got}")]
    KindMismatch { expected: &'static str, got: &'static str },
    #[error("basepoint {0} is not in the carrier")]
    BasepointOutside(String),
    #[error("enumerating {size}^{} maps exceeds the cap of {cap}", horizon + 1)]
    CarrierTooLarge { size: usize, horizon: usize, cap: u64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T, E = CategoryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Discrete(DiscreteSystem),
    Continuous(ContinuousSystem),
    Germed(GermedSystem),
}

impl SystemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemSpec::Discrete(_) => "discrete",
            SystemSpec::Continuous(_) => "continuous",
            SystemSpec::Germed(_) => "germed",
        }
    }

    pub fn contains(&self, x: &State) -> bool {
        match (self, x) {
            (SystemSpec::Discrete(s), State::Element(e)) => s.index_of(e).is_ok(),
            (SystemSpec::Continuous(s), State::Vector(v)) => s.domain().contains(v),
            (SystemSpec::Germed(s), State::Vector(v)) => v.len() == 1 && s.carrier().contains(v[0]),
            _ => false,
        }
    }

    /// Deterministic sample states: the whole carrier when finite.
    pub fn samples(&self, count: usize) -> Vec<State> {
        match self {
            SystemSpec::Discrete(s) => s.elements().iter().cloned().map(State::Element).collect(),
            SystemSpec::Continuous(s) => default_samples(s.domain(), count).into_iter().map(State::Vector).collect(),
            SystemSpec::Germed(s) => default_samples(s.system().domain(), count).into_iter().map(State::Vector).collect(),
        }
    }
}

/// A point of a carrier.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Element(String),
    Vector(Vec<f64>),
}

impl State {
    fn kind(&self) -> &'static str {
        match self {
            State::Element(_) => "element",
            State::Vector(_) => "vector",
        }
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            State::Element(e) => f.write_str(e),
            State::Vector(v) => f.write_str(&format_vec(v)),
        }
    }
}

/// A system with a chosen state.
#[derive(Debug, Clone, PartialEq)]
pub struct PointedSystem {
    system: SystemSpec,
    basepoint: State,
}

impl PointedSystem {
    pub fn new(system: SystemSpec, basepoint: State) -> Result<Self> {
        if !system.contains(&basepoint) {
            return Err(CategoryError::BasepointOutside(basepoint.to_string()));
        }
        Ok(PointedSystem { system, basepoint })
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn basepoint(&self) -> &State {
        &self.basepoint
    }
}

/// A map together with the systems it claims to relate.
#[derive(Debug, Clone, PartialEq)]
pub enum MorphismCandidate {
    Discrete { map: DiscreteMap, source: DiscreteSystem, target: DiscreteSystem },
    Smooth { map: SmoothMap, source: ContinuousSystem, target: ContinuousSystem },
    Partial { map: PartialMap, source: GermedSystem, target: GermedSystem },
}

impl MorphismCandidate {
    pub fn identity(system: &SystemSpec) -> Self {
        match system {
            SystemSpec::Discrete(s) => MorphismCandidate::Discrete {
                map: DiscreteMap::identity(s.len()),
                source: s.clone(),
                target: s.clone(),
            },
            SystemSpec::Continuous(s) => MorphismCandidate::Smooth {
                map: SmoothMap::identity(s.dimension()),
                source: s.clone(),
                target: s.clone(),
            },
            SystemSpec::Germed(s) => MorphismCandidate::Partial {
                map: PartialMap::identity(s.carrier()),
                source: s.clone(),
                target: s.clone(),
            },
        }
    }

    pub fn source(&self) -> SystemSpec {
        match self {
            MorphismCandidate::Discrete { source, .. } => SystemSpec::Discrete(source.clone()),
            MorphismCandidate::Smooth { source, .. } => SystemSpec::Continuous(source.clone()),
            MorphismCandidate::Partial { source, .. } => SystemSpec::Germed(source.clone()),
        }
    }

    pub fn target(&self) -> SystemSpec {
        match self {
            MorphismCandidate::Discrete { target, .. } => SystemSpec::Discrete(target.clone()),
            MorphismCandidate::Smooth { target, .. } => SystemSpec::Continuous(target.clone()),
            MorphismCandidate::Partial { target, .. } => SystemSpec::Germed(target.clone()),
        }
    }

    /// The underlying map applied to a state of the source.
    pub fn apply(&self, x: &State) -> Result<State> {
        match (self, x) {
            (MorphismCandidate::Discrete { map, source, target }, State::Element(e)) => {
                let i = source.index_of(e)?;
                Ok(State::Element(target.name(map.apply(i)).to_string()))
            }
            (MorphismCandidate::Smooth { map, .. }, State::Vector(v)) => Ok(State::Vector(map.apply(v)?)),
            (MorphismCandidate::Partial { map, .. }, State::Vector(v)) if v.len() == 1 => {
                Ok(State::Vector(vec![map.apply(v[0])?]))
            }
            _ => Err(CategoryError::KindMismatch { expected: self.source().kind(), got: x.kind() }),
        }
    }
}

/// `g ∘ f`. Expression-backed composites are formed by substitution.
pub fn compose_morphisms(f: &MorphismCandidate, g: &MorphismCandidate) -> Result<MorphismCandidate> {
    use MorphismCandidate as M;
    match (f, g) {
        (M::Discrete { map: mf, source, target: mid }, M::Discrete { map: mg, source: mid2, target }) => {
            require_same(mid == mid2, "discrete")?;
            Ok(M::Discrete { map: mg.after(mf)?, source: source.clone(), target: target.clone() })
        }
        (M::Smooth { map: mf, source, target: mid }, M::Smooth { map: mg, source: mid2, target }) => {
            require_same(mid == mid2, "continuous")?;
            Ok(M::Smooth { map: mg.after(mf)?, source: source.clone(), target: target.clone() })
        }
        (M::Partial { map: mf, source, target: mid }, M::Partial { map: mg, source: mid2, target }) => {
            require_same(mid == mid2, "germed")?;
            Ok(M::Partial { map: compose_partial(mf, mg)?, source: source.clone(), target: target.clone() })
        }
        _ => Err(CategoryError::SystemMismatch(format!(
            "cannot compose a {} morphism with a {} morphism",
            f.source().kind(),
            g.source().kind()
        ))),
    }
}

fn require_same(same: bool, kind: &str) -> Result<()> {
    if same {
        Ok(())
    } else {
        Err(CategoryError::SystemMismatch(format!("target of the first {kind} morphism is not the source of the second")))
    }
}

fn vectors(samples: &[State]) -> Result<Vec<Vec<f64>>> {
    samples
        .iter()
        .map(|s| match s {
            State::Vector(v) => Ok(v.clone()),
            State::Element(_) => Err(CategoryError::KindMismatch { expected: "vector", got: "element" }),
        })
        .collect()
}

/// Relatedness of the candidate at `samples`. Discrete candidates are
/// checked exactly on the whole carrier; an empty sample list selects the
/// default low-discrepancy samples for the other kinds.
pub fn check_morphism(m: &MorphismCandidate, samples: &[State], tol: f64) -> Result<CheckReport> {
    let samples = if samples.is_empty() { m.source().samples(DEFAULT_SAMPLE_COUNT) } else { samples.to_vec() };
    match m {
        MorphismCandidate::Discrete { map, source, target } => Ok(check_dt_morphism(map, source, target)?),
        MorphismCandidate::Smooth { map, source, target } => {
            Ok(check_f_relatedness(map, source, target, &vectors(&samples)?, tol)?)
        }
        MorphismCandidate::Partial { map, source, target } => {
            let pts: Vec<f64> = vectors(&samples)?.into_iter().map(|v| v[0]).collect();
            let (src, dst) = (GermedTau::system(source), GermedTau::system(target));
            Ok(check_tau_morphism(map, &src, &dst, &pts, tol)?)
        }
    }
}

/// Given that `f: X -> Y` is related at `samples` and `g: Y -> Z` at their
/// images, checks that `g ∘ f` relates `X` and `Z` at `samples`.
pub fn check_composition_closure(
    f: &MorphismCandidate,
    g: &MorphismCandidate,
    samples: &[State],
    tol: f64,
) -> Result<CheckReport> {
    let samples = if samples.is_empty() { f.source().samples(DEFAULT_SAMPLE_COUNT) } else { samples.to_vec() };
    let first = check_morphism(f, &samples, tol)?;
    if !first.passed() {
        return Err(CategoryError::Precondition(format!("first map is not a morphism: {first}")));
    }
    let images = samples.iter().map(|x| f.apply(x)).collect::<Result<Vec<_>>>()?;
    let second = check_morphism(g, &images, tol)?;
    if !second.passed() {
        return Err(CategoryError::Precondition(format!("second map is not a morphism: {second}")));
    }
    check_morphism(&compose_morphisms(f, g)?, &samples, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialityReport {
    pub report: CheckReport,
    /// Basepoint-preserving maps `{0..=horizon} -> carrier` that respect the dynamics.
    pub count: u64,
    /// All maps enumerated.
    pub enumerated: u64,
    /// The morphism when it is unique.
    pub morphism: Option<Vec<String>>,
}

/// Enumerates every function `{0, …, horizon} -> carrier` and counts those
/// with `α(0) = basepoint` and `α(n + 1) = X(α(n))`. Passes when exactly one
/// exists.
pub fn verify_initiality_discrete(horizon: usize, target: &PointedSystem, cap: u64) -> Result<InitialityReport> {
    let SystemSpec::Discrete(sys) = target.system() else {
        return Err(CategoryError::KindMismatch { expected: "discrete", got: target.system().kind() });
    };
    let State::Element(c0) = target.basepoint() else {
        return Err(CategoryError::KindMismatch { expected: "element", got: "vector" });
    };
    let base = sys.index_of(c0)?;
    let n = sys.len();
    let too_large = CategoryError::CarrierTooLarge { size: n, horizon, cap };
    let total = u32::try_from(horizon + 1)
        .ok()
        .and_then(|e| (n as u64).checked_pow(e))
        .filter(|t| *t <= cap)
        .ok_or(too_large)?;

    let mut digits = vec![0usize; horizon + 1];
    let mut count = 0u64;
    let mut found = None;
    for _ in 0..total {
        let respects = digits[0] == base && digits.windows(2).all(|w| w[1] == sys.step(w[0]));
        if respects {
            count += 1;
            found.get_or_insert_with(|| digits.clone());
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    let names = |ix: &[usize]| ix.iter().map(|&i| sys.name(i).to_string()).collect::<Vec<_>>();
    let witness = match count {
        1 => None,
        0 => Some("no basepoint-preserving morphism exists".to_string()),
        _ => Some(format!("{count} morphisms, e.g. [{}]", names(found.as_deref().unwrap_or(&[])).join(", "))),
    };
    let morphism = if count == 1 { found.map(|f| names(&f)) } else { None };
    Ok(InitialityReport {
        report: CheckReport::exact(total as usize, count.abs_diff(1) as usize, witness),
        count,
        enumerated: total,
        morphism,
    })
}
