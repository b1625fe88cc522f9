//! TOML system descriptions.
//!
//! ```toml
//! kind = "discrete"
//! elements = ["a", "b"]
//! basepoint = "a"
//! [endomap]
//! a = "b"
//! b = "b"
//! ```
//!
//! ```toml
//! kind = "continuous"          # or "germed" (one-dimensional)
//! dimension = 2
//! field = ["x2", "-x1"]
//! basepoint = [1.0, 0.0]
//! [domain]
//! lo = [-inf, -inf]
//! hi = [inf, inf]
//! punctures = [[0.0, 0.0]]
//! ```
//!
//! A `section_base` entry replaces the first component of the section
//! `x ↦ (x, X(x))`; it exists to exercise the section law on broken input.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::CliError;
use crate::category::{State, SystemSpec};
use crate::continuous::{ContinuousSystem, Domain, SmoothMap};
use crate::discrete::{DiscreteMap, DiscreteSystem};
use crate::expr::VectorExpr;
use crate::germ::{GermedSystem, PartialMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Discrete,
    Continuous,
    Germed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Numbers {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Numbers {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Numbers::Scalar(v) => vec![v],
            Numbers::Vector(v) => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Strings {
    One(String),
    Many(Vec<String>),
}

impl Strings {
    fn into_vec(self) -> Vec<String> {
        match self {
            Strings::One(s) => vec![s],
            Strings::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Punctures {
    Points(Vec<Vec<f64>>),
    Line(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum BasepointSpec {
    Element(String),
    Numbers(Numbers),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum SectionBaseSpec {
    Table(BTreeMap<String, String>),
    Expressions(Strings),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSpec {
    lo: Option<Numbers>,
    hi: Option<Numbers>,
    punctures: Option<Punctures>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: Kind,
    elements: Option<Vec<String>>,
    endomap: Option<BTreeMap<String, String>>,
    dimension: Option<usize>,
    field: Option<Strings>,
    domain: Option<DomainSpec>,
    basepoint: Option<BasepointSpec>,
    section_base: Option<SectionBaseSpec>,
}

/// First component of a replacement section.
#[derive(Debug, Clone, PartialEq)]
pub enum SectionBase {
    Table(Vec<usize>),
    Expressions(VectorExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub system: SystemSpec,
    pub basepoint: Option<State>,
    pub section_base: Option<SectionBase>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Spec(msg.into())
}

impl SpecFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Spec(m) => CliError::Spec(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| invalid(e.message().to_string()))?;
        let system = match raw.kind {
            Kind::Discrete => SystemSpec::Discrete(discrete_system(&raw)?),
            Kind::Continuous => SystemSpec::Continuous(continuous_system(&raw)?),
            Kind::Germed => SystemSpec::Germed(
                GermedSystem::new(continuous_system(&raw)?).map_err(|e| invalid(e.to_string()))?,
            ),
        };
        let basepoint = raw.basepoint.clone().map(|b| parse_state(&system, b)).transpose()?;
        if let Some(b) = &basepoint {
            if !system.contains(b) {
                return Err(invalid(format!("basepoint {b} is not in the carrier")));
            }
        }
        let section_base = raw.section_base.clone().map(|s| section_base(&system, s)).transpose()?;
        Ok(SpecFile { system, basepoint, section_base })
    }
}

fn discrete_system(raw: &RawSpec) -> Result<DiscreteSystem, CliError> {
    if raw.field.is_some() || raw.domain.is_some() || raw.dimension.is_some() {
        return Err(invalid("discrete systems take `elements` and `endomap` only"));
    }
    let elements = raw.elements.as_ref().ok_or_else(|| invalid("missing `elements`"))?;
    let endomap = raw.endomap.as_ref().ok_or_else(|| invalid("missing `endomap` table"))?;
    let names: Vec<&str> = elements.iter().map(String::as_str).collect();
    let pairs: Vec<(&str, &str)> = endomap.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    DiscreteSystem::from_table(&names, &pairs).map_err(|e| invalid(e.to_string()))
}

fn continuous_system(raw: &RawSpec) -> Result<ContinuousSystem, CliError> {
    if raw.elements.is_some() || raw.endomap.is_some() {
        return Err(invalid("`elements`/`endomap` belong to discrete systems"));
    }
    let field = raw.field.clone().ok_or_else(|| invalid("missing `field`"))?.into_vec();
    let n = raw.dimension.unwrap_or(field.len());
    if n != field.len() {
        return Err(invalid(format!("dimension is {n} but `field` has {} components", field.len())));
    }
    let spec = raw.domain.clone().unwrap_or_default();
    let bound = |b: Option<Numbers>, fill: f64| -> Result<Vec<f64>, CliError> {
        let v = b.map(Numbers::into_vec).unwrap_or_else(|| vec![fill; n]);
        if v.len() != n {
            return Err(invalid(format!("domain bound has {} entries, expected {n}", v.len())));
        }
        Ok(v)
    };
    let lo = bound(spec.lo, f64::NEG_INFINITY)?;
    let hi = bound(spec.hi, f64::INFINITY)?;
    let punctures = match spec.punctures {
        None => Vec::new(),
        Some(Punctures::Points(p)) => p,
        Some(Punctures::Line(p)) if n == 1 => p.into_iter().map(|v| vec![v]).collect(),
        Some(Punctures::Line(_)) => return Err(invalid("punctures must be a list of points")),
    };
    let domain = Domain::new(lo, hi)
        .and_then(|d| d.with_punctures(punctures))
        .map_err(|e| invalid(e.to_string()))?;
    let field = VectorExpr::parse(&field, n).map_err(|e| invalid(format!("field: {e}")))?;
    ContinuousSystem::new(domain, field).map_err(|e| invalid(e.to_string()))
}

fn parse_state(system: &SystemSpec, b: BasepointSpec) -> Result<State, CliError> {
    match (system, b) {
        (SystemSpec::Discrete(_), BasepointSpec::Element(e)) => Ok(State::Element(e)),
        (SystemSpec::Continuous(_) | SystemSpec::Germed(_), BasepointSpec::Numbers(v)) => Ok(State::Vector(v.into_vec())),
        _ => Err(invalid("basepoint does not match the system kind")),
    }
}

fn section_base(system: &SystemSpec, s: SectionBaseSpec) -> Result<SectionBase, CliError> {
    match (system, s) {
        (SystemSpec::Discrete(sys), SectionBaseSpec::Table(t)) => {
            let pairs: Vec<(&str, &str)> = t.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let map = DiscreteMap::from_pairs(sys, sys, &pairs).map_err(|e| invalid(format!("section_base: {e}")))?;
            Ok(SectionBase::Table(map.table().to_vec()))
        }
        (SystemSpec::Continuous(sys), SectionBaseSpec::Expressions(e)) => expressions(sys.dimension(), e),
        (SystemSpec::Germed(_), SectionBaseSpec::Expressions(e)) => expressions(1, e),
        _ => Err(invalid("section_base does not match the system kind")),
    }
}

fn expressions(n: usize, e: Strings) -> Result<SectionBase, CliError> {
    let exprs = e.into_vec();
    if exprs.len() != n {
        return Err(invalid(format!("section_base has {} components, expected {n}", exprs.len())));
    }
    let v = VectorExpr::parse(&exprs, n).map_err(|e| invalid(format!("section_base: {e}")))?;
    Ok(SectionBase::Expressions(v))
}

/// Parses a state given on the command line: an element name, or
/// comma-separated coordinates.
pub fn parse_cli_state(system: &SystemSpec, text: &str) -> Result<State, CliError> {
    let state = match system {
        SystemSpec::Discrete(_) => State::Element(text.trim().to_string()),
        _ => State::Vector(
            text.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("`{text}` is not a point"))))
                .collect::<Result<_, _>>()?,
        ),
    };
    if !system.contains(&state) {
        return Err(CliError::Usage(format!("{state} is not in the carrier")));
    }
    Ok(state)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMapFile {
    map: MapSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MapSpec {
    Table(BTreeMap<String, String>),
    Expressions(Strings),
}

/// The map of a morphism candidate: `name=name` pairs for discrete systems,
/// one expression per target coordinate otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum MapInput {
    Pairs(Vec<(String, String)>),
    Expressions(Vec<String>),
}

impl MapInput {
    pub fn from_args(args: &[String], kind: &SystemSpec) -> Result<Self, CliError> {
        match kind {
            SystemSpec::Discrete(_) => args
                .iter()
                .map(|a| {
                    a.split_once('=')
                        .map(|(x, y)| (x.trim().to_string(), y.trim().to_string()))
                        .ok_or_else(|| CliError::Usage(format!("expected name=name, got `{a}`")))
                })
                .collect::<Result<_, _>>()
                .map(MapInput::Pairs),
            _ => Ok(MapInput::Expressions(args.to_vec())),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let raw: RawMapFile =
            toml::from_str(&text).map_err(|e| invalid(format!("{}: {}", path.display(), e.message())))?;
        Ok(match raw.map {
            MapSpec::Table(t) => MapInput::Pairs(t.into_iter().collect()),
            MapSpec::Expressions(e) => MapInput::Expressions(e.into_vec()),
        })
    }
}

pub fn build_smooth_map(input: &MapInput, source_dim: usize) -> Result<SmoothMap, CliError> {
    match input {
        MapInput::Expressions(e) => SmoothMap::parse(e, source_dim).map_err(|e| invalid(format!("map: {e}"))),
        MapInput::Pairs(_) => Err(invalid("expected map expressions for a continuous system")),
    }
}

pub fn build_discrete_map(input: &MapInput, src: &DiscreteSystem, dst: &DiscreteSystem) -> Result<DiscreteMap, CliError> {
    match input {
        MapInput::Pairs(p) => {
            let pairs: Vec<(&str, &str)> = p.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            DiscreteMap::from_pairs(src, dst, &pairs).map_err(|e| invalid(format!("map: {e}")))
        }
        MapInput::Expressions(_) => Err(invalid("expected a name=name table for a discrete system")),
    }
}

pub fn build_partial_map(input: &MapInput, src: &GermedSystem, dst: &GermedSystem) -> Result<PartialMap, CliError> {
    match input {
        MapInput::Expressions(e) if e.len() == 1 => {
            PartialMap::parse(src.carrier(), &e[0], dst.carrier()).map_err(|e| invalid(format!("map: {e}")))
        }
        _ => Err(invalid("expected a single map expression for a germed system")),
    }
}
