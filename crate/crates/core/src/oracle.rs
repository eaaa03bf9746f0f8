//! Dense qubit-level statevector simulator used as an independent check of
//! the Fock-level engine.
//!
//! Basis index bit `q` holds qubit `q`. Qubits are assigned to nodes
//! contiguously, node 0 first.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockState, NodeCapacities, OccupationVector, PhysicalParams};
use crate::protocols::ClockTopology;

pub const MAX_QUBITS: usize = 20;

/// Post-measurement branch probabilities below this are reported as empty.
const EMPTY_BRANCH: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct QubitRegister {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
    node_map: Vec<usize>,
    /// Includes nodes that own no qubits.
    num_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct PmMeasurement {
    pub p_plus: f64,
    /// `None` when the `|+⟩` outcome has zero probability.
    pub collapsed_plus: Option<QubitRegister>,
    /// `None` when the `|−⟩` outcome has zero probability.
    pub collapsed_minus: Option<QubitRegister>,
}

fn check_size(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_QUBITS {
        Err(Error::Capacity {
            requested: num_qubits,
            max: MAX_QUBITS,
        })
    } else {
        Ok(())
    }
}

fn contiguous_node_map(caps: &[usize]) -> Vec<usize> {
    caps.iter()
        .enumerate()
        .flat_map(|(node, &n)| std::iter::repeat_n(node, n))
        .collect()
}

impl QubitRegister {
    pub fn from_amplitudes(node_map: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let num_qubits = node_map.len();
        check_size(num_qubits)?;
        if num_qubits == 0 {
            return Err(Error::InvalidParameter("register needs at least one qubit".into()));
        }
        if amplitudes.len() != 1 << num_qubits {
            return Err(Error::Shape(format!(
                "{} amplitudes for {num_qubits} qubits",
                amplitudes.len()
            )));
        }
        if node_map.windows(2).any(|w| w[1] < w[0] || w[1] > w[0] + 1) || node_map[0] != 0 {
            return Err(Error::InvalidParameter(
                "qubit-to-node map must be contiguous and start at node 0".into(),
            ));
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::DegenerateState(format!("register norm² is {norm}")));
        }
        let num_nodes = node_map[num_qubits - 1] + 1;
        Ok(Self {
            num_qubits,
            amplitudes,
            node_map,
            num_nodes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn node_map(&self) -> &[usize] {
        &self.node_map
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Bit mask of the qubits owned by `node`.
    fn node_mask(&self, node: usize) -> usize {
        self.node_map
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == node)
            .fold(0, |m, (q, _)| m | (1 << q))
    }

    /// `σ_x` on every qubit of `node`.
    pub fn apply_not(&self, node: usize) -> Result<Self> {
        let mask = self.node_mask(node);
        if mask == 0 {
            return Err(Error::NodeOutOfRange {
                node,
                num_nodes: self.num_nodes(),
            });
        }
        let mut out = self.clone();
        for (i, amp) in out.amplitudes.iter_mut().enumerate() {
            *amp = self.amplitudes[i ^ mask];
        }
        Ok(out)
    }

    fn evolve_masked(&self, params: &PhysicalParams, duration: f64, mask: usize) -> Self {
        let total = mask.count_ones() as f64;
        let mut out = self.clone();
        for (i, amp) in out.amplitudes.iter_mut().enumerate() {
            let excited = (i & mask).count_ones() as f64;
            let energy = params.e1() * excited + params.e0() * (total - excited);
            *amp *= Complex64::from_polar(1.0, -energy * duration);
        }
        out
    }

    /// Every qubit evolves under `H = E_0|0⟩⟨0| + E_1|1⟩⟨1|`.
    pub fn evolve(&self, params: &PhysicalParams, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::InvalidParameter(format!("bad duration {duration}")));
        }
        Ok(self.evolve_masked(params, duration, (1 << self.num_qubits) - 1))
    }

    /// Evolution restricted to the qubits of `nodes`.
    pub fn evolve_nodes(&self, params: &PhysicalParams, duration: f64, nodes: &[usize]) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::InvalidParameter(format!("bad duration {duration}")));
        }
        let mut mask = 0;
        for &node in nodes {
            let m = self.node_mask(node);
            if m == 0 {
                return Err(Error::NodeOutOfRange {
                    node,
                    num_nodes: self.num_nodes(),
                });
            }
            mask |= m;
        }
        Ok(self.evolve_masked(params, duration, mask))
    }

    /// Measures `qubit` in the `{|+⟩, |−⟩}` basis, returning the exact Born
    /// probability of `|+⟩` and both renormalized post-measurement registers.
    pub fn measure_pm(&self, qubit: usize) -> Result<PmMeasurement> {
        if qubit >= self.num_qubits {
            return Err(Error::InvalidParameter(format!(
                "qubit {qubit} out of range for {} qubits",
                self.num_qubits
            )));
        }
        let bit = 1usize << qubit;
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let mut plus = vec![Complex64::default(); self.amplitudes.len()];
        let mut minus = plus.clone();
        let (mut p_plus, mut p_minus) = (0.0, 0.0);
        for i in (0..self.amplitudes.len()).filter(|i| i & bit == 0) {
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
            let up = (a0 + a1) * half;
            let down = (a0 - a1) * half;
            p_plus += up.norm_sqr();
            p_minus += down.norm_sqr();
            plus[i] = up * half;
            plus[i | bit] = up * half;
            minus[i] = down * half;
            minus[i | bit] = -down * half;
        }
        let collapse = |mut amps: Vec<Complex64>, p: f64| {
            (p > EMPTY_BRANCH).then(|| {
                let scale = 1.0 / p.sqrt();
                amps.iter_mut().for_each(|a| *a *= scale);
                Self {
                    num_qubits: self.num_qubits,
                    amplitudes: amps,
                    node_map: self.node_map.clone(),
                    num_nodes: self.num_nodes,
                }
            })
        };
        Ok(PmMeasurement {
            p_plus,
            collapsed_plus: collapse(plus, p_plus),
            collapsed_minus: collapse(minus, p_minus),
        })
    }

    /// Embeds a Fock state whose branches have every node either fully
    /// excited or fully in the ground state.
    pub fn from_fock(state: &FockState) -> Result<Self> {
        let caps = state.caps().as_slice();
        let num_qubits = state.caps().total_qubits();
        check_size(num_qubits)?;
        let node_map = contiguous_node_map(caps);
        let mut offsets = Vec::with_capacity(caps.len());
        let mut acc = 0;
        for &n in caps {
            offsets.push(acc);
            acc += n;
        }
        let mut amplitudes = vec![Complex64::default(); 1 << num_qubits];
        for (occ, c) in state.terms() {
            let mut index = 0usize;
            for (node, (&k, &n)) in occ.as_slice().iter().zip(caps).enumerate() {
                if k == n {
                    index |= ((1usize << n) - 1) << offsets[node];
                } else if k != 0 {
                    return Err(Error::UnsupportedProbe(format!(
                        "node {node} is partially excited ({k} of {n}) in branch {occ}"
                    )));
                }
            }
            amplitudes[index] = *c;
        }
        Ok(Self {
            num_qubits,
            amplitudes,
            node_map,
            num_nodes: caps.len(),
        })
    }

    /// Groups basis states by their per-node excitation counts.
    pub fn to_fock(&self) -> Result<FockState> {
        let num_nodes = self.num_nodes();
        let mut caps = vec![0; num_nodes];
        for &n in &self.node_map {
            caps[n] += 1;
        }
        let masks: Vec<usize> = (0..num_nodes).map(|k| self.node_mask(k)).collect();
        let terms = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(i, c)| {
                let occ: Vec<usize> = masks.iter().map(|m| (i & m).count_ones() as usize).collect();
                (OccupationVector::new(occ), *c)
            });
        FockState::new_superposition(NodeCapacities::new(caps)?, terms)
    }
}

/// W state over `num_qubits` single-qubit nodes.
pub fn oracle_prepare_w(num_qubits: usize) -> Result<QubitRegister> {
    check_size(num_qubits)?;
    if num_qubits == 0 {
        return Err(Error::InvalidParameter("W state needs at least one qubit".into()));
    }
    let mut amplitudes = vec![Complex64::default(); 1 << num_qubits];
    let amp = Complex64::new(1.0 / (num_qubits as f64).sqrt(), 0.0);
    for q in 0..num_qubits {
        amplitudes[1 << q] = amp;
    }
    Ok(QubitRegister {
        num_qubits,
        amplitudes,
        node_map: (0..num_qubits).collect(),
        num_nodes: num_qubits,
    })
}

/// Full measurement-triggered pipeline on `d + 1` qubits: node 0 measures
/// `|+⟩`, the remaining register evolves for `delta`, and the `|+⟩`
/// probability of node 1 is returned.
pub fn oracle_w_conditional(d: usize, params: &PhysicalParams, delta: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("W protocol needs d >= 1".into()));
    }
    let reg = oracle_prepare_w(d + 1)?;
    let collapsed = reg
        .measure_pm(0)?
        .collapsed_plus
        .ok_or_else(|| Error::DegenerateState("node 0 cannot observe |+>".into()))?;
    let evolved = collapsed.evolve(params, delta.abs())?;
    Ok(evolved.measure_pm(1)?.p_plus)
}

/// The operation-triggered protocol at qubit level, concentrating one time
/// unit after the last trigger.
pub fn oracle_operation_protocol(top: &ClockTopology, initial: &FockState) -> Result<QubitRegister> {
    if initial.caps() != top.caps() {
        return Err(Error::Shape("probe does not match topology".into()));
    }
    let params = top.params();
    let mut reg = QubitRegister::from_fock(initial)?;
    let nodes: Vec<usize> = (0..top.num_nodes()).filter(|&k| top.caps().as_slice()[k] > 0).collect();

    let mut schedule: Vec<(f64, usize)> = nodes.iter().map(|&k| (top.trigger_time(k), k)).collect();
    schedule.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut now = schedule[0].0;
    for &(t, k) in &schedule {
        reg = reg.evolve(params, t - now)?.apply_not(k)?;
        now = t;
    }
    let concentrate_at = top.latest_trigger() + 1.0;
    reg = reg.evolve(params, concentrate_at - now)?;
    for &k in &nodes {
        reg = reg.apply_not(k)?;
    }
    let peripheral: Vec<usize> = nodes.iter().copied().filter(|&k| k > 0).collect();
    if top.node0_delay() > 0.0 && !peripheral.is_empty() {
        reg = reg.evolve_nodes(params, 2.0 * top.node0_delay(), &peripheral)?;
    }
    Ok(reg)
}
