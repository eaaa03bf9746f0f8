//! Clock-synchronization protocols.
//!
//! The operation-triggered protocol runs through five stages: prepare,
//! distribute, trigger (every node flips its qubits when its own clock reads
//! the agreed time), concentrate, and a final collective flip at node 0. The
//! engine orders all events by real time and applies the exact diagonal free
//! evolution between consecutive events.
//!
//! The measurement-triggered W-state protocol is modelled through its
//! conditional outcome probabilities.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_phase_generator, collective_not, free_evolve, free_evolve_all, PhaseVector};
use crate::error::{Error, Result};
use crate::fock::{FockState, NodeCapacities, PhysicalParams};
use crate::report::format_sig;

pub const DEFAULT_NODE0_DELAY: f64 = 1.0;

/// Gap between the logical prepare/distribute stages and the first trigger.
const SETUP_LEAD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockTopology {
    caps: NodeCapacities,
    params: PhysicalParams,
    offsets: PhaseVector,
    agreed_time: f64,
    node0_delay: f64,
}

impl ClockTopology {
    pub fn new(caps: NodeCapacities, params: PhysicalParams, offsets: PhaseVector) -> Result<Self> {
        if offsets.len() != caps.num_peripheral() {
            return Err(Error::Shape(format!(
                "{} offsets for {} peripheral nodes",
                offsets.len(),
                caps.num_peripheral()
            )));
        }
        Ok(Self {
            caps,
            params,
            offsets,
            agreed_time: 0.0,
            node0_delay: DEFAULT_NODE0_DELAY,
        })
    }

    pub fn with_agreed_time(mut self, agreed_time: f64) -> Result<Self> {
        if !agreed_time.is_finite() {
            return Err(Error::InvalidParameter("agreed time must be finite".into()));
        }
        self.agreed_time = agreed_time;
        Ok(self)
    }

    pub fn with_node0_delay(mut self, delay: f64) -> Result<Self> {
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "node 0 delay must be finite and non-negative, got {delay}"
            )));
        }
        self.node0_delay = delay;
        Ok(self)
    }

    pub fn caps(&self) -> &NodeCapacities {
        &self.caps
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn offsets(&self) -> &PhaseVector {
        &self.offsets
    }

    pub fn agreed_time(&self) -> f64 {
        self.agreed_time
    }

    pub fn node0_delay(&self) -> f64 {
        self.node0_delay
    }

    pub fn num_nodes(&self) -> usize {
        self.caps.num_nodes()
    }

    /// Real time at which `node` applies its trigger flip.
    pub fn trigger_time(&self, node: usize) -> f64 {
        if node == 0 {
            self.agreed_time + self.node0_delay
        } else {
            self.agreed_time + self.offsets.as_slice()[node - 1]
        }
    }

    pub fn latest_trigger(&self) -> f64 {
        (0..self.num_nodes())
            .map(|k| self.trigger_time(k))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Prepare,
    Distribute,
    TriggerFlip,
    Concentrate,
    FinalFlip,
    /// Node 0 removes the phase its own deliberate trigger delay imprinted.
    DelayCompensation,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Prepare => "prepare",
            EventKind::Distribute => "distribute",
            EventKind::TriggerFlip => "trigger-flip",
            EventKind::Concentrate => "concentrate",
            EventKind::FinalFlip => "final-flip",
            EventKind::DelayCompensation => "delay-compensation",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolEvent {
    pub time: f64,
    pub kind: EventKind,
    pub node: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTranscript {
    pub events: Vec<ProtocolEvent>,
    pub final_state: FockState,
}

impl ProtocolTranscript {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// `time<TAB>event<TAB>node<TAB>detail`, one line per event, times with
    /// nine significant digits.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&format_sig(e.time, 9));
            out.push('\t');
            out.push_str(e.kind.as_str());
            out.push('\t');
            out.push_str(&e.node.to_string());
            out.push('\t');
            out.push_str(&e.detail);
            out.push('\n');
        }
        out
    }
}

/// Runs the operation-triggered protocol on `initial` and records every
/// stage. `concentrate_at` must lie after every node's trigger.
pub fn run_operation_triggered(
    top: &ClockTopology,
    initial: &FockState,
    concentrate_at: f64,
) -> Result<ProtocolTranscript> {
    if initial.caps() != top.caps() {
        return Err(Error::Shape(format!(
            "probe capacities {:?} do not match topology {:?}",
            initial.caps().as_slice(),
            top.caps().as_slice()
        )));
    }
    if !initial.is_energy_eigenstate() {
        return Err(Error::ProtocolPrecondition(
            "initial state is not an energy eigenstate and would evolve before the triggers".into(),
        ));
    }
    let latest = top.latest_trigger();
    if !(concentrate_at.is_finite() && concentrate_at > latest) {
        return Err(Error::Scheduling(format!(
            "concentration at {concentrate_at} is not after the last trigger at {latest}"
        )));
    }

    let params = top.params();
    let caps = top.caps().as_slice();
    let mut triggers: Vec<(f64, usize)> = (0..top.num_nodes()).map(|k| (top.trigger_time(k), k)).collect();
    triggers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let start = triggers[0].0 - SETUP_LEAD;
    let mut events = vec![ProtocolEvent {
        time: start,
        kind: EventKind::Prepare,
        node: 0,
        detail: format!("{} qubits, {} branches", top.caps().total_qubits(), initial.num_terms()),
    }];
    for (k, &n_k) in caps.iter().enumerate().skip(1) {
        events.push(ProtocolEvent {
            time: start,
            kind: EventKind::Distribute,
            node: k,
            detail: format!("{n_k} qubits"),
        });
    }

    let mut state = initial.clone();
    let mut clock = start;
    for &(t, k) in &triggers {
        state = free_evolve_all(&state, params, t - clock)?;
        state = collective_not(&state, k)?;
        clock = t;
        events.push(ProtocolEvent {
            time: t,
            kind: EventKind::TriggerFlip,
            node: k,
            detail: format!("sigma_x on {} qubits", caps[k]),
        });
    }

    state = free_evolve_all(&state, params, concentrate_at - clock)?;
    events.push(ProtocolEvent {
        time: concentrate_at,
        kind: EventKind::Concentrate,
        node: 0,
        detail: format!("{} qubits at node 0", top.caps().total_qubits()),
    });
    for k in 0..top.num_nodes() {
        state = collective_not(&state, k)?;
    }
    events.push(ProtocolEvent {
        time: concentrate_at,
        kind: EventKind::FinalFlip,
        node: 0,
        detail: format!("sigma_x on all {} qubits", top.caps().total_qubits()),
    });

    // Flipping node 0 late by D leaves a relative phase exp(-2iωD n̂_0); up to
    // a global phase that equals exp(-2iωD Σ_{k≥1} n̂_k), i.e. letting the
    // returned peripheral qubits idle for 2D.
    let delay = top.node0_delay();
    if delay != 0.0 {
        let peripheral: Vec<usize> = (1..top.num_nodes()).collect();
        state = free_evolve(&state, params, 2.0 * delay, &peripheral)?;
        events.push(ProtocolEvent {
            time: concentrate_at,
            kind: EventKind::DelayCompensation,
            node: 0,
            detail: format!("peripheral qubits idle for {}", format_sig(2.0 * delay, 9)),
        });
    }

    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.node.cmp(&b.node)));
    Ok(ProtocolTranscript {
        events,
        final_state: state,
    })
}

/// The final state in closed form: `exp(−2iω Σ_k n̂_k θ_k) |Ψ_i⟩`.
pub fn closed_form_final(top: &ClockTopology, initial: &FockState) -> Result<FockState> {
    apply_phase_generator(initial, top.params(), top.offsets())
}

/// Outcome probabilities `(P(+), P(−))` at a peripheral node whose
/// measurement lags node 0 by `delta`, given node 0 observed `|+⟩`.
pub fn w_conditional_probability(d: usize, params: &PhysicalParams, delta: f64) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::InvalidParameter("W protocol needs d >= 1".into()));
    }
    let swing = (params.omega() * delta).cos() / (d + 1) as f64;
    Ok((0.5 + swing, 0.5 - swing))
}

/// Outcome counts at one peripheral node, split by node 0's published result.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCounts {
    pub plus_given_plus: u64,
    pub minus_given_plus: u64,
    pub plus_given_minus: u64,
    pub minus_given_minus: u64,
}

impl NodeCounts {
    /// Empirical `P(+)` given node 0 saw `|+⟩`.
    pub fn frequency_plus_given_plus(&self) -> Option<f64> {
        let total = self.plus_given_plus + self.minus_given_plus;
        (total > 0).then(|| self.plus_given_plus as f64 / total as f64)
    }

    pub fn frequency_plus_given_minus(&self) -> Option<f64> {
        let total = self.plus_given_minus + self.minus_given_minus;
        (total > 0).then(|| self.plus_given_minus as f64 / total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WProtocolCounts {
    pub shots: u64,
    pub node0_plus: u64,
    pub node0_minus: u64,
    /// Entry `i` belongs to node `i + 1`.
    pub nodes: Vec<NodeCounts>,
}

/// Samples the measurement-triggered protocol. Node 0 sees `±` with equal
/// probability; each peripheral node then samples from the conditional
/// distribution for its own offset, with the sign of the cosine term flipped
/// when node 0 saw `|−⟩`.
pub fn run_w_protocol_sampled(
    d: usize,
    params: &PhysicalParams,
    offsets: &PhaseVector,
    shots: u64,
    seed: u64,
) -> Result<WProtocolCounts> {
    if offsets.len() != d {
        return Err(Error::Shape(format!("{} offsets for {d} peripheral nodes", offsets.len())));
    }
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be >= 1".into()));
    }
    let p_plus: Vec<f64> = offsets
        .as_slice()
        .iter()
        .map(|&delta| w_conditional_probability(d, params, delta).map(|p| p.0))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = WProtocolCounts {
        shots,
        node0_plus: 0,
        node0_minus: 0,
        nodes: vec![NodeCounts::default(); d],
    };
    for _ in 0..shots {
        let node0_plus = rng.gen::<f64>() < 0.5;
        if node0_plus {
            counts.node0_plus += 1;
        } else {
            counts.node0_minus += 1;
        }
        for (node, &p) in counts.nodes.iter_mut().zip(&p_plus) {
            let p = if node0_plus { p } else { 1.0 - p };
            let plus = rng.gen::<f64>() < p;
            match (node0_plus, plus) {
                (true, true) => node.plus_given_plus += 1,
                (true, false) => node.minus_given_plus += 1,
                (false, true) => node.plus_given_minus += 1,
                (false, false) => node.minus_given_minus += 1,
            }
        }
    }
    Ok(counts)
}
