//! Fock-level dynamics: all operators used by the protocol are either diagonal
//! in the occupation basis or permutations of it, so each is applied
//! branch-wise in closed form.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockState, PhysicalParams};

/// Clock offsets `θ_k = t_k − t_0` of the peripheral nodes `1..=d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::InvalidParameter(
                "phase vector needs at least one offset".into(),
            ));
        }
        if let Some(bad) = thetas.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("offset {bad} is not finite")));
        }
        Ok(Self(thetas))
    }

    /// `d` copies of the same offset.
    pub fn uniform(d: usize, theta: f64) -> Result<Self> {
        Self::new(vec![theta; d])
    }

    pub fn zeros(d: usize) -> Result<Self> {
        Self::uniform(d, 0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Average offset `θ̄`.
    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|t| -t).collect())
    }
}

fn map_diagonal(s: &FockState, phase_of: impl Fn(&[usize]) -> f64) -> FockState {
    let terms: BTreeMap<_, _> = s
        .terms()
        .map(|(occ, c)| (occ.clone(), c * Complex64::from_polar(1.0, phase_of(occ.as_slice()))))
        .collect();
    FockState::from_unitary_image(s.caps().clone(), terms)
}

/// Evolves the qubits of the `active` nodes under `H = E_0|0⟩⟨0| + E_1|1⟩⟨1|`
/// for `duration`. Inactive nodes are left untouched.
pub fn free_evolve(
    s: &FockState,
    params: &PhysicalParams,
    duration: f64,
    active: &[usize],
) -> Result<FockState> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "evolution duration must be finite and non-negative, got {duration}"
        )));
    }
    for &node in active {
        s.caps().check_node(node)?;
    }
    if duration == 0.0 {
        return Ok(s.clone());
    }
    let caps = s.caps().as_slice();
    let (e0, e1) = (params.e0(), params.e1());
    Ok(map_diagonal(s, |occ| {
        let energy: f64 = active
            .iter()
            .map(|&k| e1 * occ[k] as f64 + e0 * (caps[k] - occ[k]) as f64)
            .sum();
        -energy * duration
    }))
}

/// Free evolution of every node.
pub fn free_evolve_all(s: &FockState, params: &PhysicalParams, duration: f64) -> Result<FockState> {
    let all: Vec<usize> = (0..s.num_nodes()).collect();
    free_evolve(s, params, duration, &all)
}

/// `σ_x` on every qubit of `node`: occupation `k` becomes `n_node − k`.
pub fn collective_not(s: &FockState, node: usize) -> Result<FockState> {
    s.caps().check_node(node)?;
    let cap = s.caps().as_slice()[node];
    let terms: BTreeMap<_, _> = s
        .terms()
        .map(|(occ, c)| {
            let mut flipped = occ.clone();
            let slot = &mut flipped.as_mut_slice()[node];
            *slot = cap - *slot;
            (flipped, *c)
        })
        .collect();
    Ok(FockState::from_unitary_image(s.caps().clone(), terms))
}

/// Applies `exp(−2iω Σ_{k=1..d} n̂_k θ_k)`.
pub fn apply_phase_generator(
    s: &FockState,
    params: &PhysicalParams,
    thetas: &PhaseVector,
) -> Result<FockState> {
    let d = s.caps().num_peripheral();
    if thetas.len() != d {
        return Err(Error::Shape(format!(
            "state has {d} peripheral nodes but {} offsets were given",
            thetas.len()
        )));
    }
    let omega = params.omega();
    let th = thetas.as_slice();
    Ok(map_diagonal(s, |occ| {
        let weighted: f64 = occ[1..].iter().zip(th).map(|(&n, &t)| n as f64 * t).sum();
        -2.0 * omega * weighted
    }))
}
