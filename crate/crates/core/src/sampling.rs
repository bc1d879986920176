//! Deterministic random streams, sample points and random trigonometric fields.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::excalc::{increasing_tuples, DifferentialForm, VectorField};
use crate::symfield::{Chart, Expr};

pub type Stream = ChaCha8Rng;

/// The stream for one sample of one identity: a hash of the run seed, the
/// scenario, the identity id and the sample index.
pub fn stream(seed: u64, scenario: &str, id: &str, sample: usize) -> Stream {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((scenario.len() as u64).to_le_bytes());
    h.update(scenario.as_bytes());
    h.update((id.len() as u64).to_le_bytes());
    h.update(id.as_bytes());
    h.update((sample as u64).to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

pub fn uniform(rng: &mut Stream, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// A point drawn uniformly from the fundamental domain `[0, 2π)^n`.
pub fn point(rng: &mut Stream, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// A trigonometric polynomial of degree at most 2 in each coordinate: a
/// constant plus `terms` products of one factor from
/// `{1, cos x_i, sin x_i, cos 2x_i, sin 2x_i}` per coordinate, coefficients
/// uniform in `[-amp, amp]`.
pub fn trig_poly(rng: &mut Stream, dim: usize, terms: usize, amp: f64) -> Expr {
    let mut e = Expr::constant(rng.random_range(-amp..amp));
    for _ in 0..terms {
        let mut t = Expr::constant(rng.random_range(-amp..amp));
        for i in 0..dim {
            let x = Expr::var(i);
            let f = match rng.random_range(0..5) {
                0 => continue,
                1 => x.cos(),
                2 => x.sin(),
                3 => x.scale(2.0).cos(),
                _ => x.scale(2.0).sin(),
            };
            t = t * f;
        }
        e = e + t;
    }
    e
}

pub const DEFAULT_TERMS: usize = 3;

pub fn random_function(rng: &mut Stream, chart: &Arc<Chart>) -> Expr {
    trig_poly(rng, chart.dim(), DEFAULT_TERMS, 1.0)
}

pub fn random_vector_field(rng: &mut Stream, chart: &Arc<Chart>) -> VectorField {
    let comps = (0..chart.dim()).map(|_| random_function(rng, chart)).collect();
    VectorField::new(chart.clone(), comps).expect("dimension matches")
}

/// A random `k`-form with every component populated.
pub fn random_form(rng: &mut Stream, chart: &Arc<Chart>, k: usize) -> DifferentialForm {
    let mut w = DifferentialForm::zero(chart, k);
    for idx in increasing_tuples(chart.dim(), k) {
        w.add_term(idx, random_function(rng, chart));
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_separated() {
        let a: f64 = stream(42, "t3_flat", "dgla.jacobi", 3).random();
        let b: f64 = stream(42, "t3_flat", "dgla.jacobi", 3).random();
        let c: f64 = stream(42, "t3_flat", "dgla.jacobi", 4).random();
        let d: f64 = stream(42, "t3_flat", "dgla.jacobj", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn trig_poly_is_periodic() {
        let mut rng = stream(1, "s", "i", 0);
        let e = trig_poly(&mut rng, 3, 4, 1.0);
        let p = [0.3, 1.7, 4.0];
        let q = [0.3 + TAU, 1.7 - TAU, 4.0 + 2.0 * TAU];
        assert!((e.eval(&p).unwrap() - e.eval(&q).unwrap()).abs() < 1e-12);
    }
}
