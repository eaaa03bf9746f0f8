//! Multi-node Fock-basis pure states.
//!
//! A node holding `n_k` indistinguishable two-level qubits is described by the
//! number of excited qubits `0..=n_k`. A [`FockState`] is a sparse
//! superposition over [`OccupationVector`]s, one entry per node, with a fixed
//! set of [`NodeCapacities`]. Terms are kept in a `BTreeMap`, so iteration is
//! lexicographic on the occupation vectors and therefore deterministic.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes below this magnitude are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-12;
/// Allowed deviation of `Σ|c_a|²` from one.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Two-level energy structure shared by every qubit (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    omega: f64,
    e0: f64,
    e1: f64,
}

impl PhysicalParams {
    /// Ground energy at zero, excited energy at `omega`.
    pub fn new(omega: f64) -> Result<Self> {
        Self::with_energies(0.0, omega)
    }

    pub fn with_energies(e0: f64, e1: f64) -> Result<Self> {
        let omega = e1 - e0;
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "transition frequency must be positive and finite, got E1 - E0 = {omega}"
            )));
        }
        Ok(Self { omega, e0, e1 })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn e1(&self) -> f64 {
        self.e1
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            e0: 0.0,
            e1: 1.0,
        }
    }
}

/// Qubit count held by each node, node 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeCapacities(Vec<usize>);

impl NodeCapacities {
    pub fn new(caps: Vec<usize>) -> Result<Self> {
        if caps.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least two nodes, got {}",
                caps.len()
            )));
        }
        if caps.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidParameter(
                "total qubit count must be at least one".into(),
            ));
        }
        Ok(Self(caps))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn num_nodes(&self) -> usize {
        self.0.len()
    }

    /// Number of peripheral nodes `d` (all nodes except node 0).
    pub fn num_peripheral(&self) -> usize {
        self.0.len() - 1
    }

    pub fn total_qubits(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.0.get(node).copied()
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node < self.0.len() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node,
                num_nodes: self.0.len(),
            })
        }
    }
}

/// Excited-qubit count per node for one branch of a superposition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OccupationVector(Vec<usize>);

impl OccupationVector {
    pub fn new(occ: Vec<usize>) -> Self {
        Self(occ)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total excitation count of the branch.
    pub fn excitations(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn check_within(&self, caps: &NodeCapacities) -> Result<()> {
        if self.0.len() != caps.num_nodes() {
            return Err(Error::Shape(format!(
                "occupation vector has {} entries, capacities have {}",
                self.0.len(),
                caps.num_nodes()
            )));
        }
        for (node, (&occupation, &capacity)) in self.0.iter().zip(caps.as_slice()).enumerate() {
            if occupation > capacity {
                return Err(Error::OccupationOutOfBounds {
                    node,
                    occupation,
                    capacity,
                });
            }
        }
        Ok(())
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [usize] {
        &mut self.0
    }
}

impl From<Vec<usize>> for OccupationVector {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[usize; N]> for OccupationVector {
    fn from(v: [usize; N]) -> Self {
        Self(v.to_vec())
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str(">")
    }
}

/// Normalized sparse superposition over occupation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    caps: NodeCapacities,
    terms: BTreeMap<OccupationVector, Complex64>,
}

impl FockState {
    /// Builds a normalized state. Duplicate occupation vectors are summed
    /// before normalizing.
    pub fn new_superposition<I, O>(caps: NodeCapacities, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (O, Complex64)>,
        O: Into<OccupationVector>,
    {
        let mut map: BTreeMap<OccupationVector, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            let occ = occ.into();
            occ.check_within(&caps)?;
            *map.entry(occ).or_default() += amp;
        }
        if map.is_empty() {
            return Err(Error::DegenerateState("no terms supplied".into()));
        }
        let norm = map.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::DegenerateState(format!("total norm is {norm}")));
        }
        for c in map.values_mut() {
            *c /= norm;
        }
        map.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
        Ok(Self { caps, terms: map })
    }

    /// Single basis state with unit amplitude.
    pub fn basis(caps: NodeCapacities, occ: impl Into<OccupationVector>) -> Result<Self> {
        Self::new_superposition(caps, [(occ.into(), Complex64::new(1.0, 0.0))])
    }

    /// Wraps an already normalized map produced by a unitary map of a valid
    /// state. Only pruning is applied.
    pub(crate) fn from_unitary_image(
        caps: NodeCapacities,
        mut terms: BTreeMap<OccupationVector, Complex64>,
    ) -> Self {
        terms.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
        debug_assert!(!terms.is_empty());
        Self { caps, terms }
    }

    pub fn caps(&self) -> &NodeCapacities {
        &self.caps
    }

    pub fn num_nodes(&self) -> usize {
        self.caps.num_nodes()
    }

    /// Terms in lexicographic order of their occupation vectors.
    pub fn terms(&self) -> impl Iterator<Item = (&OccupationVector, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn amplitude(&self, occ: &OccupationVector) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let factor = Complex64::from_polar(1.0, phase);
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| (k.clone(), c * factor))
            .collect();
        Self {
            caps: self.caps.clone(),
            terms,
        }
    }

    fn check_same_caps(&self, other: &Self) -> Result<()> {
        if self.caps == other.caps {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "capacities differ: {:?} vs {:?}",
                self.caps.as_slice(),
                other.caps.as_slice()
            )))
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        self.check_same_caps(other)?;
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::default();
        for (occ, c) in &small.terms {
            if let Some(d) = large.terms.get(occ) {
                acc += if conj_small { c.conj() * d } else { d.conj() * c };
            }
        }
        Ok(acc)
    }

    /// `|⟨self|other⟩|`, insensitive to a global phase.
    pub fn fidelity_global_phase(&self, other: &Self) -> Result<f64> {
        Ok(self.inner_product(other)?.norm().min(1.0))
    }

    /// True iff every branch carries the same total excitation count.
    pub fn is_energy_eigenstate(&self) -> bool {
        let mut sums = self.terms.keys().map(OccupationVector::excitations);
        match sums.next() {
            Some(first) => sums.all(|s| s == first),
            None => true,
        }
    }

    /// Total excitation count when the state is an energy eigenstate.
    pub fn energy_level(&self) -> Option<usize> {
        if self.is_energy_eigenstate() {
            self.terms.keys().next().map(OccupationVector::excitations)
        } else {
            None
        }
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (occ, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:.6}{:+.6}i){}", c.re, c.im, occ)?;
        }
        Ok(())
    }
}

fn equal_weight(caps: NodeCapacities, branches: Vec<Vec<usize>>) -> Result<FockState> {
    let amp = Complex64::new(1.0 / (branches.len() as f64).sqrt(), 0.0);
    FockState::new_superposition(caps, branches.into_iter().map(|b| (b, amp)))
}

/// `(|0 n⟩ + |n 0⟩)/√2` on two nodes with `n` qubits each.
pub fn prepare_noon(n: usize) -> Result<FockState> {
    if n == 0 {
        return Err(Error::DegenerateProbe("NOON state needs n >= 1".into()));
    }
    equal_weight(NodeCapacities::new(vec![n, n])?, vec![vec![0, n], vec![n, 0]])
}

/// `(|dn 0 … 0⟩ + |0 n … n⟩)/√2`: node 0 holds `dn` qubits, each of the `d`
/// peripheral nodes holds `n`.
pub fn prepare_average_state(d: usize, n: usize) -> Result<FockState> {
    if d == 0 || n == 0 {
        return Err(Error::DegenerateProbe(format!(
            "average-time probe needs d >= 1 and n >= 1, got d={d}, n={n}"
        )));
    }
    let mut caps = vec![n; d + 1];
    caps[0] = d * n;
    let mut concentrated = vec![0; d + 1];
    concentrated[0] = d * n;
    let mut spread = vec![n; d + 1];
    spread[0] = 0;
    equal_weight(NodeCapacities::new(caps)?, vec![concentrated, spread])
}

/// Uniform single-excitation superposition over `d + 1` single-qubit nodes.
pub fn prepare_w(d: usize) -> Result<FockState> {
    if d == 0 {
        return Err(Error::DegenerateProbe("W state needs d >= 1".into()));
    }
    let branches = (0..=d)
        .map(|k| {
            let mut occ = vec![0; d + 1];
            occ[k] = 1;
            occ
        })
        .collect();
    equal_weight(NodeCapacities::new(vec![1; d + 1])?, branches)
}
