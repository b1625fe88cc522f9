//! Finite discrete-time systems: a finite set with an endomap.
//!
//! A morphism `α: (c, X) -> (d, Y)` is a function with `Y ∘ α = α ∘ X`. The
//! system `(N, n ↦ n + 1)` with basepoint `0` is initial among pointed
//! systems, and the unique morphism into `((c, X), c0)` is the orbit of `c0`.

use std::collections::HashMap;

use thiserror::Error;

use crate::report::CheckReport;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiscreteError {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("map is not total: no image for `{0}`")]
    NotTotal(String),
    #[error("element `{0}` is assigned more than one image")]
    Ambiguous(String),
    #[error("index {index} out of range for carrier of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("map expects a carrier of size {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
}

pub type Result<T, E = DiscreteError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteSystem {
    elements: Vec<String>,
    index: HashMap<String, usize>,
    endomap: Vec<usize>,
}

fn index_elements(elements: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(elements.len());
    for (i, e) in elements.iter().enumerate() {
        if index.insert(e.clone(), i).is_some() {
            return Err(DiscreteError::DuplicateElement(e.clone()));
        }
    }
    Ok(index)
}

fn table_from_pairs(
    src: &HashMap<String, usize>,
    src_elements: &[String],
    dst: &HashMap<String, usize>,
    pairs: &[(&str, &str)],
) -> Result<Vec<usize>> {
    let mut table = vec![None; src_elements.len()];
    for (from, to) in pairs {
        let i = *src.get(*from).ok_or_else(|| DiscreteError::UnknownElement(from.to_string()))?;
        let j = *dst.get(*to).ok_or_else(|| DiscreteError::UnknownElement(to.to_string()))?;
        match table[i] {
            Some(prev) if prev != j => return Err(DiscreteError::Ambiguous(from.to_string())),
            _ => table[i] = Some(j),
        }
    }
    table
        .into_iter()
        .enumerate()
        .map(|(i, j)| j.ok_or_else(|| DiscreteError::NotTotal(src_elements[i].clone())))
        .collect()
}

impl DiscreteSystem {
    /// Builds a system from element names and an index table for the endomap.
    pub fn from_indices(elements: Vec<String>, endomap: Vec<usize>) -> Result<Self> {
        let index = index_elements(&elements)?;
        if endomap.len() != elements.len() {
            return Err(DiscreteError::SizeMismatch { expected: elements.len(), got: endomap.len() });
        }
        if let Some(&bad) = endomap.iter().find(|&&j| j >= elements.len()) {
            return Err(DiscreteError::IndexOutOfRange { index: bad, size: elements.len() });
        }
        Ok(DiscreteSystem { elements, index, endomap })
    }

    /// Builds a system from `(x, X(x))` name pairs, which must cover the carrier.
    pub fn from_table(elements: &[&str], table: &[(&str, &str)]) -> Result<Self> {
        let elements: Vec<String> = elements.iter().map(|s| s.to_string()).collect();
        let index = index_elements(&elements)?;
        let endomap = table_from_pairs(&index, &elements, &index, table)?;
        Ok(DiscreteSystem { elements, index, endomap })
    }

    pub fn identity(elements: &[&str]) -> Result<Self> {
        let pairs: Vec<(&str, &str)> = elements.iter().map(|e| (*e, *e)).collect();
        Self::from_table(elements, &pairs)
    }

    /// `Z/n` with the successor map; elements are named `"0"`, `"1"`, ...
    pub fn cyclic(n: usize) -> Self {
        let elements = (0..n).map(|i| i.to_string()).collect();
        let endomap = (0..n).map(|i| (i + 1) % n).collect();
        Self::from_indices(elements, endomap).expect("cyclic table is valid")
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn endomap(&self) -> &[usize] {
        &self.endomap
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| DiscreteError::UnknownElement(name.to_string()))
    }

    pub fn name(&self, index: usize) -> &str {
        &self.elements[index]
    }

    pub fn step(&self, index: usize) -> usize {
        self.endomap[index]
    }

    /// Orbit indices `c0, X(c0), ..., X^horizon(c0)`.
    pub fn orbit_indices(&self, start: usize, horizon: usize) -> Vec<usize> {
        let mut points = Vec::with_capacity(horizon + 1);
        let mut x = start;
        points.push(x);
        for _ in 0..horizon {
            x = self.endomap[x];
            points.push(x);
        }
        points
    }
}

/// A function between two finite carriers, stored as an index table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteMap {
    table: Vec<usize>,
    target_len: usize,
}

impl DiscreteMap {
    pub fn from_indices(table: Vec<usize>, target_len: usize) -> Result<Self> {
        if let Some(&bad) = table.iter().find(|&&j| j >= target_len) {
            return Err(DiscreteError::IndexOutOfRange { index: bad, size: target_len });
        }
        Ok(DiscreteMap { table, target_len })
    }

    pub fn from_pairs(src: &DiscreteSystem, dst: &DiscreteSystem, pairs: &[(&str, &str)]) -> Result<Self> {
        let table = table_from_pairs(&src.index, &src.elements, &dst.index, pairs)?;
        Ok(DiscreteMap { table, target_len: dst.len() })
    }

    pub fn identity(n: usize) -> Self {
        DiscreteMap { table: (0..n).collect(), target_len: n }
    }

    pub fn constant(source_len: usize, target_len: usize, value: usize) -> Result<Self> {
        Self::from_indices(vec![value; source_len], target_len)
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn source_len(&self) -> usize {
        self.table.len()
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &DiscreteMap) -> Result<DiscreteMap> {
        if inner.target_len != self.table.len() {
            return Err(DiscreteError::SizeMismatch { expected: self.table.len(), got: inner.target_len });
        }
        Ok(DiscreteMap {
            table: inner.table.iter().map(|&j| self.table[j]).collect(),
            target_len: self.target_len,
        })
    }

    fn check_shape(&self, src: &DiscreteSystem, dst: &DiscreteSystem) -> Result<()> {
        if self.table.len() != src.len() {
            return Err(DiscreteError::SizeMismatch { expected: src.len(), got: self.table.len() });
        }
        if self.target_len != dst.len() {
            return Err(DiscreteError::SizeMismatch { expected: dst.len(), got: self.target_len });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    pub start: String,
    pub points: Vec<String>,
}

impl Orbit {
    pub fn horizon(&self) -> usize {
        self.points.len() - 1
    }
}

pub fn iterate(sys: &DiscreteSystem, c0: &str, horizon: usize) -> Result<Orbit> {
    let start = sys.index_of(c0)?;
    let points = sys
        .orbit_indices(start, horizon)
        .into_iter()
        .map(|i| sys.elements[i].clone())
        .collect();
    Ok(Orbit { start: c0.to_string(), points })
}

/// The solution of `sys` through `c0`: the unique basepoint-preserving
/// morphism from `(N, successor, 0)`, restricted to `0..=horizon`.
pub fn solve(sys: &DiscreteSystem, c0: &str, horizon: usize) -> Result<Orbit> {
    iterate(sys, c0, horizon)
}

/// Exact check of `Y ∘ α = α ∘ X`; the witness is the first violating element.
pub fn check_dt_morphism(alpha: &DiscreteMap, src: &DiscreteSystem, dst: &DiscreteSystem) -> Result<CheckReport> {
    alpha.check_shape(src, dst)?;
    let mut violations = 0;
    let mut witness = None;
    for x in 0..src.len() {
        let lhs = dst.step(alpha.apply(x));
        let rhs = alpha.apply(src.step(x));
        if lhs != rhs {
            violations += 1;
            witness.get_or_insert_with(|| {
                format!(
                    "x = {}: Y(α(x)) = {}, α(X(x)) = {}",
                    src.name(x),
                    dst.name(lhs),
                    dst.name(rhs)
                )
            });
        }
    }
    Ok(CheckReport::exact(src.len(), violations, witness))
}

/// `{x : X(x) = x}`, in carrier order.
pub fn fixed_points(sys: &DiscreteSystem) -> Vec<String> {
    (0..sys.len())
        .filter(|&x| sys.step(x) == x)
        .map(|x| sys.elements[x].clone())
        .collect()
}

/// Every endomap of an `n`-element carrier named `"0".."n-1"`, in
/// lexicographic table order.
pub fn all_endomaps(n: usize) -> impl Iterator<Item = DiscreteSystem> {
    let total = (n as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    let elements: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    (0..total).map(move |mut code| {
        let mut table = vec![0; n];
        for slot in table.iter_mut().rev() {
            *slot = (code % n as u64) as usize;
            code /= n as u64;
        }
        DiscreteSystem::from_indices(elements.clone(), table).expect("generated table is valid")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn funnel() -> DiscreteSystem {
        DiscreteSystem::from_table(&["a", "b"], &[("a", "b"), ("b", "b")]).unwrap()
    }

    #[test]
    fn iterate_identity_is_constant() {
        let sys = DiscreteSystem::identity(&["a", "b"]).unwrap();
        assert_eq!(iterate(&sys, "a", 4).unwrap().points, vec!["a"; 5]);
    }

    #[test]
    fn iterate_cyclic_matches_modular_arithmetic() {
        let sys = DiscreteSystem::cyclic(3);
        let orbit = iterate(&sys, "0", 5).unwrap();
        let expected: Vec<String> = (0..=5).map(|k| (k % 3).to_string()).collect();
        assert_eq!(orbit.points, expected);
    }

    #[test]
    fn iterate_funnel() {
        assert_eq!(iterate(&funnel(), "a", 3).unwrap().points, vec!["a", "b", "b", "b"]);
        assert_eq!(solve(&funnel(), "a", 3).unwrap(), iterate(&funnel(), "a", 3).unwrap());
    }

    #[test]
    fn iterate_unknown_element() {
        assert_eq!(iterate(&funnel(), "z", 3), Err(DiscreteError::UnknownElement("z".into())));
    }

    #[test]
    fn table_must_be_total_and_known() {
        assert_eq!(
            DiscreteSystem::from_table(&["a", "b"], &[("a", "b")]),
            Err(DiscreteError::NotTotal("b".into()))
        );
        assert!(DiscreteSystem::from_table(&["a", "a"], &[]).is_err());
        assert!(DiscreteSystem::from_table(&["a"], &[("a", "q")]).is_err());
        assert!(DiscreteSystem::from_table(&["a", "b"], &[("a", "a"), ("a", "b"), ("b", "b")]).is_err());
    }

    #[test]
    fn identity_morphism_passes() {
        let sys = funnel();
        assert!(check_dt_morphism(&DiscreteMap::identity(2), &sys, &sys).unwrap().passed());
    }

    #[test]
    fn constant_into_terminal_passes() {
        let src = DiscreteSystem::cyclic(2);
        let dst = DiscreteSystem::identity(&["*"]).unwrap();
        let alpha = DiscreteMap::constant(2, 1, 0).unwrap();
        assert!(check_dt_morphism(&alpha, &src, &dst).unwrap().passed());
    }

    #[test]
    fn swap_to_identity_fails_at_a() {
        let src = DiscreteSystem::from_table(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        let dst = DiscreteSystem::identity(&["a", "b"]).unwrap();
        let alpha = DiscreteMap::from_pairs(&src, &dst, &[("a", "a"), ("b", "b")]).unwrap();
        let report = check_dt_morphism(&alpha, &src, &dst).unwrap();
        assert!(!report.passed());
        assert!(report.witness.unwrap().starts_with("x = a:"));
        assert_eq!(report.residual, 2.0);
    }

    #[test]
    fn morphism_map_must_match_carriers() {
        let src = funnel();
        let alpha = DiscreteMap::identity(3);
        assert!(check_dt_morphism(&alpha, &src, &src).is_err());
        let dst = DiscreteSystem::identity(&["p"]).unwrap();
        assert_eq!(
            DiscreteMap::from_pairs(&src, &dst, &[("a", "p")]),
            Err(DiscreteError::NotTotal("b".into()))
        );
    }

    #[test]
    fn fixed_point_examples() {
        let id = DiscreteSystem::identity(&["a", "b", "c"]).unwrap();
        assert_eq!(fixed_points(&id), vec!["a", "b", "c"]);
        assert!(fixed_points(&DiscreteSystem::cyclic(3)).is_empty());
        assert_eq!(fixed_points(&funnel()), vec!["b"]);
    }

    #[test]
    fn all_endomaps_counts() {
        assert_eq!(all_endomaps(3).count(), 27);
        assert_eq!(all_endomaps(1).count(), 1);
        let tables: Vec<Vec<usize>> = all_endomaps(2).map(|s| s.endomap().to_vec()).collect();
        assert_eq!(tables, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }
}
