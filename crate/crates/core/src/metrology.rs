//! Quantum Fisher information and Cramér-Rao bounds.
//!
//! Two independent routes to the QFI of a pure-state family are provided:
//! a finite-difference evaluation of `4[⟨∂Ψ|∂Ψ⟩ − |⟨∂Ψ|Ψ⟩|²]`
//! ([`qfi_pure_numeric`]) and the generator variance `4 Var(G)` for families
//! `e^{−iGθ}|Ψ⟩` with `G` diagonal in the Fock basis ([`qfi_generator`]).
//! The remaining functions are the closed-form precision expressions for the
//! probes analysed here.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_phase_generator, free_evolve, PhaseVector};
use crate::error::{Error, Result};
use crate::fock::{
    prepare_average_state, prepare_noon, FockState, NodeCapacities, OccupationVector, PhysicalParams,
    NORM_TOLERANCE,
};

pub const DEFAULT_STEP: f64 = 1e-5;

type Evaluator = dyn Fn(f64) -> Result<FockState> + Send + Sync;

/// Differentiable pure-state family `θ ↦ |Ψ(θ)⟩` whose relative phase is
/// `scale · θ`.
#[derive(Clone)]
pub struct PhaseFamily {
    evaluator: Arc<Evaluator>,
    scale: f64,
}

impl fmt::Debug for PhaseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseFamily").field("scale", &self.scale).finish_non_exhaustive()
    }
}

impl PhaseFamily {
    pub fn new<F>(scale: f64, evaluator: F) -> Self
    where
        F: Fn(f64) -> Result<FockState> + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(evaluator),
            scale,
        }
    }

    /// NOON probe after the protocol with offset `θ_1 = θ`; scale `2ωn`.
    pub fn noon(n: usize, params: PhysicalParams) -> Result<Self> {
        let probe = prepare_noon(n)?;
        Ok(Self::new(2.0 * params.omega() * n as f64, move |theta| {
            apply_phase_generator(&probe, &params, &PhaseVector::new(vec![theta])?)
        }))
    }

    /// Average-time probe parametrized by the mean offset `θ̄`; scale `2ωnd`.
    pub fn average(d: usize, n: usize, params: PhysicalParams) -> Result<Self> {
        let probe = prepare_average_state(d, n)?;
        Ok(Self::new(2.0 * params.omega() * (d * n) as f64, move |theta| {
            apply_phase_generator(&probe, &params, &PhaseVector::uniform(d, theta)?)
        }))
    }

    /// `(|0⟩ + e^{−i n_k ω θ}|n_k⟩)/√2` held by one node after evolving for
    /// `θ`; scale `n_k ω`.
    pub fn local_optimal(n_k: usize, params: PhysicalParams) -> Result<Self> {
        if n_k == 0 {
            return Err(Error::DegenerateProbe("local probe needs n_k >= 1".into()));
        }
        let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let probe = FockState::new_superposition(
            NodeCapacities::new(vec![0, n_k])?,
            [(vec![0, 0], amp), (vec![0, n_k], amp)],
        )?;
        Ok(Self::new(params.omega() * n_k as f64, move |theta| {
            if theta >= 0.0 {
                free_evolve(&probe, &params, theta, &[1])
            } else {
                // backwards evolution: conjugate phase of forward evolution
                let fwd = free_evolve(&probe, &params, -theta, &[1])?;
                FockState::new_superposition(
                    fwd.caps().clone(),
                    fwd.terms().map(|(k, c)| (k.clone(), c.conj())),
                )
            }
        }))
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn evaluate(&self, theta: f64) -> Result<FockState> {
        let s = (self.evaluator)(theta)?;
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Family(format!("state at θ = {theta} has norm² {norm}")));
        }
        Ok(s)
    }

    /// Overlap `|⟨Ψ(θ)|Ψ(θ+h)⟩|` used as a continuity check.
    pub fn continuity_overlap(&self, theta: f64, h: f64) -> Result<f64> {
        self.evaluate(theta)?.fidelity_global_phase(&self.evaluate(theta + h)?)
    }
}

fn as_map(s: &FockState) -> BTreeMap<OccupationVector, Complex64> {
    s.terms().map(|(k, c)| (k.clone(), *c)).collect()
}

/// QFI by central finite differences of the state vector.
pub fn qfi_pure_numeric(fam: &PhaseFamily, theta: f64, h: f64) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let centre = fam.evaluate(theta)?;
    let ahead = fam.evaluate(theta + h)?;
    let behind = fam.evaluate(theta - h)?;
    if ahead.caps() != centre.caps() || behind.caps() != centre.caps() {
        return Err(Error::Family("capacities change along the family".into()));
    }

    let mut derivative = as_map(&ahead);
    for c in derivative.values_mut() {
        *c /= 2.0 * h;
    }
    for (k, c) in behind.terms() {
        *derivative.entry(k.clone()).or_default() -= c / (2.0 * h);
    }

    let dd: f64 = derivative.values().map(|c| c.norm_sqr()).sum();
    let dpsi: Complex64 = derivative
        .iter()
        .map(|(k, dc)| dc.conj() * centre.amplitude(k))
        .sum();
    Ok((4.0 * (dd - dpsi.norm_sqr())).max(0.0))
}

/// QFI of `e^{−iGθ}|s⟩` with `G = 2ω Σ_k w_k n̂_k`, i.e. `4 Var(G)`.
pub fn qfi_generator(s: &FockState, params: &PhysicalParams, weights: &[f64]) -> Result<f64> {
    if weights.len() != s.num_nodes() {
        return Err(Error::Shape(format!(
            "{} weights for {} nodes",
            weights.len(),
            s.num_nodes()
        )));
    }
    let omega = params.omega();
    let (mut mean, mut second) = (0.0, 0.0);
    for (occ, c) in s.terms() {
        let g = 2.0 * omega * occ.as_slice().iter().zip(weights).map(|(&n, w)| n as f64 * w).sum::<f64>();
        let p = c.norm_sqr();
        mean += p * g;
        second += p * g * g;
    }
    Ok((4.0 * (second - mean * mean)).max(0.0))
}

/// `δθ ≥ 1/√(μ F_Q)`.
pub fn crb(qfi: f64, mu: u64) -> Result<f64> {
    if mu == 0 {
        return Err(Error::InvalidParameter("need at least one measurement".into()));
    }
    if !(qfi.is_finite() && qfi > 0.0) {
        return Err(Error::Unidentifiable(format!("Fisher information is {qfi}")));
    }
    Ok(1.0 / (mu as f64 * qfi).sqrt())
}

fn require_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::InvalidParameter(format!("{name} must be >= 1")))
    } else {
        Ok(())
    }
}

/// `4ω²n²`.
pub fn noon_qfi(n: usize, params: &PhysicalParams) -> Result<f64> {
    require_positive("n", n)?;
    Ok((2.0 * params.omega() * n as f64).powi(2))
}

/// `(2ωdn)²` for the mean offset `θ̄`.
pub fn average_qfi(d: usize, n: usize, params: &PhysicalParams) -> Result<f64> {
    require_positive("d", d)?;
    require_positive("n", n)?;
    Ok((2.0 * params.omega() * (d * n) as f64).powi(2))
}

/// `n_k²ω²`, the best a single node can do after a measurement trigger.
pub fn local_optimal_qfi(n_k: usize, params: &PhysicalParams) -> Result<f64> {
    require_positive("n_k", n_k)?;
    Ok((params.omega() * n_k as f64).powi(2))
}

/// `√d/(Nω)`: lower bound on the mean-offset deviation of any
/// measurement-triggered strategy. Not attainable.
pub fn mt_average_bound(d: usize, total: usize, params: &PhysicalParams) -> Result<f64> {
    require_positive("d", d)?;
    if total < d {
        return Err(Error::InvalidParameter(format!(
            "need at least one qubit per node: N = {total} < d = {d}"
        )));
    }
    Ok((d as f64).sqrt() / (total as f64 * params.omega()))
}

/// Mean-offset deviation of the simultaneous bipartite-entanglement
/// measurement-triggered scheme: `(1/(2ω√d)) · N/(N−1)`.
pub fn ren2012_reference(d: usize, total: usize, params: &PhysicalParams) -> Result<f64> {
    require_positive("d", d)?;
    if total < 2 {
        return Err(Error::InvalidParameter(format!("N/(N-1) undefined for N = {total}")));
    }
    let n = total as f64;
    Ok(1.0 / (2.0 * params.omega() * (d as f64).sqrt()) * (n / (n - 1.0)))
}

/// QFI together with the bound it implies after `mu` measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub qfi: f64,
    pub mu: u64,
    pub crb: f64,
}

impl PrecisionReport {
    pub fn new(qfi: f64, mu: u64) -> Result<Self> {
        Ok(Self {
            qfi,
            mu,
            crb: crb(qfi, mu)?,
        })
    }
}
