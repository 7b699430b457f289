#![allow(dead_code)]

use gwht_core::exponents::{HypothesisPair, RateVector};
use gwht_core::prob::{Alphabet, CondPmf, JointPmf};
use gwht_testkit::exponents::CopyInstance;
use rand::Rng;

pub fn ax(label: &str, size: usize) -> Alphabet {
    Alphabet::new(label, size).unwrap()
}

/// Random point of the simplex with every entry at least `floor`.
pub fn random_pmf<R: Rng>(rng: &mut R, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| floor + (1.0 - k as f64 * floor) * v / s).collect()
}

pub fn random_joint<R: Rng>(rng: &mut R, axes: Vec<Alphabet>, floor: f64) -> JointPmf {
    let k = axes.iter().map(|a| a.size).product();
    JointPmf::new(axes, random_pmf(rng, k, floor)).unwrap()
}

pub fn random_row<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> [f64; 2] {
    let a = rng.random_range(lo..hi);
    [a, 1.0 - a]
}

/// Random binary instance with one shared output copy.
pub fn random_copy_instance<R: Rng>(rng: &mut R) -> CopyInstance {
    CopyInstance {
        px: random_row(rng, 0.2, 0.8),
        z_null: [random_row(rng, 0.05, 0.95), random_row(rng, 0.05, 0.95)],
        z_alt: [random_row(rng, 0.05, 0.95), random_row(rng, 0.05, 0.95)],
        y_given_x: [random_row(rng, 0.05, 0.95), random_row(rng, 0.05, 0.95)],
        r: [rng.random_range(0.0..0.8), rng.random_range(0.0..0.8), rng.random_range(0.0..0.8)],
        rt: [rng.random_range(0.0..0.3), rng.random_range(0.0..0.3), rng.random_range(0.0..0.3)],
    }
}

/// Core objects for a [`CopyInstance`]; both detectors see the same
/// conditionally independent side-information law.
pub fn to_core(inst: &CopyInstance) -> (HypothesisPair, CondPmf, RateVector) {
    let law = |rows: [[f64; 2]; 2]| {
        JointPmf::from_fn(vec![ax("X", 2), ax("Z1", 2), ax("Z2", 2)], |v| {
            inst.px[v[0]] * rows[v[0]][v[1]] * rows[v[0]][v[2]]
        })
        .unwrap()
    };
    let hyp = HypothesisPair::new(law(inst.z_null), law(inst.z_alt)).unwrap();
    let chan = CondPmf::from_fn(vec![ax("X", 2)], vec![ax("Y0", 2), ax("Y1", 2), ax("Y2", 2)], |x, y| {
        if y[0] == y[1] && y[1] == y[2] {
            inst.y_given_x[x[0]][y[0]]
        } else {
            0.0
        }
    })
    .unwrap();
    (hyp, chan, RateVector::new(inst.r, inst.rt).unwrap())
}
