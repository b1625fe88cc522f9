//! One-dimensional germed systems: open subsets of the line, partial maps,
//! germs at a basepoint and maximal solution intervals.

mod open_set;
mod partial;

use serde::Serialize;
use thiserror::Error;

use crate::continuous::{integrate, ContinuousError, ContinuousSystem, Domain, IntegrateOptions, Termination, Trajectory};
use crate::expr::{ExprError, VectorExpr};

pub use open_set::{Interval, OpenSet1D};
pub use partial::{compose_partial, germ_equal, preimage, Germ, PartialMap, GERM_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GermError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Continuous(#[from] ContinuousError),
    #[error("malformed open set: {0}")]
    OpenSetSyntax(String),
    #[error("partial maps take one variable, got arity {0}")]
    Arity(usize),
    #[error("map undefined at {x}: {reason}")]
    Undefined { x: f64, reason: String },
    #[error("image of {x} is {value}, outside the declared codomain")]
    ImageOutside { x: f64, value: f64 },
    #[error("{0} is not in the domain")]
    NotInDomain(f64),
    #[error("map is not monotone between detected critical points on ({lo}, {hi})")]
    NonMonotone { lo: f64, hi: f64 },
    #[error("domains share no component around {0}")]
    EmptyComponent(f64),
    #[error("germed systems are one-dimensional, got dimension {0}")]
    Dimension(usize),
}

pub type Result<T, E = GermError> = std::result::Result<T, E>;

/// A system `ẋ = X(x)` on an open subset of the line.
#[derive(Debug, Clone, PartialEq)]
pub struct GermedSystem {
    system: ContinuousSystem,
}

impl GermedSystem {
    pub fn new(system: ContinuousSystem) -> Result<Self> {
        if system.dimension() != 1 {
            return Err(GermError::Dimension(system.dimension()));
        }
        Ok(GermedSystem { system })
    }

    /// `ẋ = field` on `(lo, hi)` minus `punctures`.
    pub fn parse(field: &str, lo: f64, hi: f64, punctures: &[f64]) -> Result<Self> {
        let domain = Domain::new(vec![lo], vec![hi])?.with_punctures(punctures.iter().map(|p| vec![*p]).collect())?;
        Self::new(ContinuousSystem::new(domain, VectorExpr::parse(&[field], 1)?)?)
    }

    pub fn system(&self) -> &ContinuousSystem {
        &self.system
    }

    /// The state space as an open subset of the line.
    pub fn carrier(&self) -> OpenSet1D {
        let d = self.system.domain();
        let cuts: Vec<f64> = d.punctures().iter().map(|p| p[0]).collect();
        OpenSet1D::punctured_line(&cuts).intersect(&OpenSet1D::interval(d.lo()[0], d.hi()[0]))
    }
}

/// Why a maximal solution interval ends where it does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "time", rename_all = "kebab-case")]
pub enum Endpoint {
    /// The search horizon was reached; the solution may extend further.
    Horizon(f64),
    /// The state reached the boundary of the domain.
    Boundary(f64),
    /// The state escaped to infinity.
    BlowUp(f64),
}

impl Endpoint {
    pub fn time(&self) -> f64 {
        match *self {
            Endpoint::Horizon(t) | Endpoint::Boundary(t) | Endpoint::BlowUp(t) => t,
        }
    }

    fn from_trajectory(traj: &Trajectory, t: f64) -> Self {
        match traj.termination {
            Termination::ReachedSpan => Endpoint::Horizon(t),
            Termination::LeftDomain => Endpoint::Boundary(t),
            Termination::BlowUp => Endpoint::BlowUp(t),
        }
    }
}

/// Interval of definition of the solution through `x0`, as far as it could
/// be followed within `[-horizon, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximalSolution {
    pub interval: OpenSet1D,
    pub lower: Endpoint,
    pub upper: Endpoint,
    pub backward: Trajectory,
    pub forward: Trajectory,
}

pub fn maximal_solution_domain(
    sys: &GermedSystem,
    x0: f64,
    horizon: f64,
    opts: &IntegrateOptions,
) -> Result<MaximalSolution> {
    let forward = integrate(&sys.system, &[x0], horizon, opts)?;
    let backward = integrate(&sys.system, &[x0], -horizon, opts)?;
    let lower = Endpoint::from_trajectory(&backward, backward.t_lo);
    let upper = Endpoint::from_trajectory(&forward, forward.t_hi);
    Ok(MaximalSolution {
        interval: OpenSet1D::interval(lower.time(), upper.time()),
        lower,
        upper,
        backward,
        forward,
    })
}
