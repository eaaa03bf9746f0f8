#![allow(dead_code)]

use std::collections::BTreeSet;

use qcs::dynamics::PhaseVector;
use qcs::fock::{FockState, NodeCapacities};
use qcs::Complex64;
use rand::Rng;

/// Random capacities with 2..=5 nodes and at most 3 qubits per node.
pub fn random_caps<R: Rng>(rng: &mut R) -> NodeCapacities {
    loop {
        let nodes = rng.gen_range(2..=5);
        let caps: Vec<usize> = (0..nodes).map(|_| rng.gen_range(0..=3)).collect();
        if let Ok(c) = NodeCapacities::new(caps) {
            return c;
        }
    }
}

fn random_occupation<R: Rng>(rng: &mut R, caps: &NodeCapacities) -> Vec<usize> {
    caps.as_slice().iter().map(|&c| rng.gen_range(0..=c)).collect()
}

fn random_amplitude<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Superposition of up to four branches sharing one excitation count.
pub fn random_eigenstate<R: Rng>(rng: &mut R) -> FockState {
    loop {
        let caps = random_caps(rng);
        let level: usize = random_occupation(rng, &caps).iter().sum();
        let mut branches = BTreeSet::new();
        for _ in 0..200 {
            let o = random_occupation(rng, &caps);
            if o.iter().sum::<usize>() == level {
                branches.insert(o);
            }
            if branches.len() == 4 {
                break;
            }
        }
        let terms: Vec<_> = branches.into_iter().map(|o| (o, random_amplitude(rng))).collect();
        if let Ok(s) = FockState::new_superposition(caps, terms) {
            return s;
        }
    }
}

/// Arbitrary superposition, not necessarily stationary.
pub fn random_state<R: Rng>(rng: &mut R) -> FockState {
    loop {
        let caps = random_caps(rng);
        let k = rng.gen_range(1..=6);
        let terms: Vec<_> = (0..k)
            .map(|_| (random_occupation(rng, &caps), random_amplitude(rng)))
            .collect();
        if let Ok(s) = FockState::new_superposition(caps, terms) {
            return s;
        }
    }
}

pub fn random_offsets<R: Rng>(rng: &mut R, d: usize) -> PhaseVector {
    PhaseVector::new((0..d).map(|_| rng.gen_range(-1.5..1.5)).collect()).unwrap()
}

pub fn max_amplitude_gap(a: &FockState, b: &FockState) -> f64 {
    let keys: BTreeSet<_> = a.terms().chain(b.terms()).map(|(k, _)| k.clone()).collect();
    keys.iter()
        .map(|k| (a.amplitude(k) - b.amplitude(k)).norm())
        .fold(0.0, f64::max)
}
