//! Readout sampling and maximum-likelihood estimation of the imprinted
//! phase.
//!
//! The final state of both probes is a two-branch superposition
//! `(|A⟩ + e^{iφ}|B⟩)/√2` with `φ = arg(c_B/c_A)`. Half of the shots are
//! measured in the X setting `{(|A⟩ ± |B⟩)/√2}` and half in the Y setting
//! `{(|A⟩ ± i|B⟩)/√2}`, giving `P_x(+) = (1 + cos φ)/2` and
//! `P_y(+) = (1 + sin φ)/2`. Each shot carries unit Fisher information about
//! `φ`, so the pair of settings saturates the quantum bound and resolves the
//! sign of `φ`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::PhaseVector;
use crate::error::{Error, Result};
use crate::fock::{prepare_average_state, prepare_noon, FockState, OccupationVector, PhysicalParams};
use crate::metrology::{average_qfi, crb, noon_qfi};
use crate::protocols::{closed_form_final, ClockTopology};

/// Grid resolution of the coarse likelihood scan.
pub const GRID_POINTS: usize = 4096;
/// Golden-section steps on the best grid bracket.
pub const REFINE_STEPS: usize = 60;
pub const MIN_TRIALS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadoutCounts {
    pub x_plus: u64,
    pub x_minus: u64,
    pub y_plus: u64,
    pub y_minus: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBranchReadout {
    /// Radians of imprinted phase per unit offset.
    pub phase_scale: f64,
    pub shots_x: u64,
    pub shots_y: u64,
    pub counts: ReadoutCounts,
}

impl TwoBranchReadout {
    pub fn new(phase_scale: f64, counts: ReadoutCounts) -> Self {
        Self {
            phase_scale,
            shots_x: counts.x_plus + counts.x_minus,
            shots_y: counts.y_plus + counts.y_minus,
            counts,
        }
    }

    pub fn total_shots(&self) -> u64 {
        self.shots_x + self.shots_y
    }
}

/// `(P_x(+), P_y(+))` for relative phase `phi`.
pub fn readout_probabilities(phi: f64) -> (f64, f64) {
    ((1.0 + phi.cos()) / 2.0, (1.0 + phi.sin()) / 2.0)
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut w = phi.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

fn bernoulli_count(rng: &mut ChaCha8Rng, trials: u64, p: f64) -> u64 {
    (0..trials).filter(|_| rng.gen::<f64>() < p).count() as u64
}

/// Samples `shots` readouts of `final_state`, which must be supported on
/// exactly `branch_a` and `branch_b`. X gets the odd shot.
pub fn sample_readout(
    final_state: &FockState,
    branch_a: &OccupationVector,
    branch_b: &OccupationVector,
    shots: u64,
    seed: u64,
    phase_scale: f64,
) -> Result<TwoBranchReadout> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_readout_with(final_state, branch_a, branch_b, shots, phase_scale, &mut rng)
}

fn relative_phase(final_state: &FockState, a: &OccupationVector, b: &OccupationVector) -> Result<f64> {
    if a == b {
        return Err(Error::UnsupportedState("readout branches coincide".into()));
    }
    if let Some((occ, _)) = final_state.terms().find(|(k, _)| *k != a && *k != b) {
        return Err(Error::UnsupportedState(format!("amplitude on {occ}")));
    }
    let (ca, cb) = (final_state.amplitude(a), final_state.amplitude(b));
    if ca.norm() == 0.0 || cb.norm() == 0.0 {
        return Err(Error::UnsupportedState("one readout branch is empty".into()));
    }
    Ok((cb / ca).arg())
}

fn sample_readout_with(
    final_state: &FockState,
    branch_a: &OccupationVector,
    branch_b: &OccupationVector,
    shots: u64,
    phase_scale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<TwoBranchReadout> {
    if shots < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 shots, got {shots}")));
    }
    let phi = relative_phase(final_state, branch_a, branch_b)?;
    let (px, py) = readout_probabilities(phi);
    let shots_y = shots / 2;
    let shots_x = shots - shots_y;
    let x_plus = bernoulli_count(rng, shots_x, px);
    let y_plus = bernoulli_count(rng, shots_y, py);
    Ok(TwoBranchReadout {
        phase_scale,
        shots_x,
        shots_y,
        counts: ReadoutCounts {
            x_plus,
            x_minus: shots_x - x_plus,
            y_plus,
            y_minus: shots_y - y_plus,
        },
    })
}

fn log_likelihood(c: &ReadoutCounts, phi: f64) -> f64 {
    fn term(count: u64, p: f64) -> f64 {
        if count == 0 {
            0.0
        } else {
            count as f64 * p.ln()
        }
    }
    let (px, py) = readout_probabilities(phi);
    term(c.x_plus, px) + term(c.x_minus, 1.0 - px) + term(c.y_plus, py) + term(c.y_minus, 1.0 - py)
}

/// Maximum-likelihood relative phase in `(−π, π]`: a uniform grid scan with
/// ties going to the smallest angle, then golden-section refinement on the
/// bracket around the best grid point.
pub fn mle_phase(r: &TwoBranchReadout) -> Result<f64> {
    if r.total_shots() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 shots, got {}",
            r.total_shots()
        )));
    }
    let step = TAU / GRID_POINTS as f64;
    let grid = |j: usize| -PI + (j + 1) as f64 * step;
    let mut best = (0, f64::NEG_INFINITY);
    for j in 0..GRID_POINTS {
        let ll = log_likelihood(&r.counts, grid(j));
        if ll > best.1 {
            best = (j, ll);
        }
    }
    let centre = grid(best.0);

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (centre - step, centre + step);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = log_likelihood(&r.counts, x1);
    let mut f2 = log_likelihood(&r.counts, x2);
    for _ in 0..REFINE_STEPS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = log_likelihood(&r.counts, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = log_likelihood(&r.counts, x2);
        }
    }
    let refined = 0.5 * (lo + hi);
    let chosen = if log_likelihood(&r.counts, refined) >= best.1 { refined } else { centre };
    Ok(wrap_phase(chosen))
}

/// Offset estimate `−φ̂/s` in the window `(−π/|s|, π/|s|]`.
pub fn estimate_theta(r: &TwoBranchReadout) -> Result<f64> {
    let s = r.phase_scale;
    if !(s.is_finite() && s != 0.0) {
        return Err(Error::Unidentifiable(format!("phase scale is {s}")));
    }
    let half_window = PI / s.abs();
    let mut theta = -mle_phase(r)? / s;
    if theta <= -half_window {
        theta += 2.0 * half_window;
    } else if theta > half_window {
        theta -= 2.0 * half_window;
    }
    Ok(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "lowercase")]
pub enum Probe {
    Noon { n: usize },
    Average { d: usize, n: usize },
}

impl Probe {
    pub fn peripheral_nodes(&self) -> usize {
        match *self {
            Probe::Noon { .. } => 1,
            Probe::Average { d, .. } => d,
        }
    }

    pub fn total_qubits(&self) -> usize {
        match *self {
            Probe::Noon { n } => 2 * n,
            Probe::Average { d, n } => 2 * d * n,
        }
    }

    pub fn initial_state(&self) -> Result<FockState> {
        match *self {
            Probe::Noon { n } => prepare_noon(n),
            Probe::Average { d, n } => prepare_average_state(d, n),
        }
    }

    /// Single-copy QFI for the offset (NOON) or mean offset (average probe).
    pub fn qfi(&self, params: &PhysicalParams) -> Result<f64> {
        match *self {
            Probe::Noon { n } => noon_qfi(n, params),
            Probe::Average { d, n } => average_qfi(d, n, params),
        }
    }

    pub fn phase_scale(&self, params: &PhysicalParams) -> f64 {
        match *self {
            Probe::Noon { n } => 2.0 * params.omega() * n as f64,
            Probe::Average { d, n } => 2.0 * params.omega() * (d * n) as f64,
        }
    }

    /// Reference branch (all excitations at node 0) and the phased branch.
    pub fn branches(&self) -> (OccupationVector, OccupationVector) {
        match *self {
            Probe::Noon { n } => (vec![n, 0].into(), vec![0, n].into()),
            Probe::Average { d, n } => {
                let mut reference = vec![0; d + 1];
                reference[0] = d * n;
                let mut phased = vec![n; d + 1];
                phased[0] = 0;
                (reference.into(), phased.into())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub theta_true: f64,
    pub trials: usize,
    #[serde(rename = "shots")]
    pub shots_per_trial: u64,
    pub estimates: Vec<f64>,
    pub empirical_dev: f64,
    pub crb: f64,
}

/// Repeats the full protocol-readout-estimation chain `trials` times. Trial
/// `i` draws from its own stream seeded with `seed + i`, so the result does
/// not depend on how trials are scheduled across threads.
pub fn monte_carlo_deviation(
    probe: Probe,
    params: &PhysicalParams,
    theta_true: f64,
    shots: u64,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    let scale = probe.phase_scale(params);
    if (theta_true * scale).abs() >= PI / 2.0 || !theta_true.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "|θ·s| = {} must stay below π/2",
            (theta_true * scale).abs()
        )));
    }
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let initial = probe.initial_state()?;
    let offsets = PhaseVector::uniform(probe.peripheral_nodes(), theta_true)?;
    let top = ClockTopology::new(initial.caps().clone(), *params, offsets)?;
    let final_state = closed_form_final(&top, &initial)?;
    let (branch_a, branch_b) = probe.branches();

    let estimates = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let readout = sample_readout_with(&final_state, &branch_a, &branch_b, shots, scale, &mut rng)?;
            estimate_theta(&readout)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mse = estimates.iter().map(|e| (e - theta_true).powi(2)).sum::<f64>() / trials as f64;
    Ok(MonteCarloResult {
        theta_true,
        trials,
        shots_per_trial: shots,
        estimates,
        empirical_dev: mse.sqrt(),
        crb: crb(probe.qfi(params)?, shots)?,
    })
}
