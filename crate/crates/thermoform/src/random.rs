//! Seeded generators for randomized test sweeps: mixing shifts, depth-1
//! potentials, Markov measures, and carpet systems.  Every generator draws
//! from a caller-supplied RNG, so sweeps are reproducible from a seed.

use rand::Rng;

use crate::carpet::{CarpetRow, CarpetSystem};
use crate::config::Tolerances;
use crate::scalar::Scalar;
use crate::shift::{MarkovMeasure, ShiftSpace};

/// A mixing shift with 2..=max_symbols symbols: random transition pattern
/// with density about 0.6, resampled until primitive.
pub fn random_mixing_shift<R: Rng>(rng: &mut R, max_symbols: usize) -> ShiftSpace {
    let n = rng.random_range(2..=max_symbols.max(2));
    for _ in 0..200 {
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| u8::from(rng.random::<f64>() < 0.6))
                    .collect()
            })
            .collect();
        if let Ok(space) = ShiftSpace::new(rows) {
            if space.is_mixing() {
                return space;
            }
        }
    }
    ShiftSpace::full(n).unwrap()
}

/// Depth-1 potential values, uniform in `[-spread, spread]`.
pub fn random_values<S: Scalar, R: Rng>(rng: &mut R, n: usize, spread: f64) -> Vec<S> {
    (0..n)
        .map(|_| S::of(rng.random_range(-spread..spread)))
        .collect()
}

/// Positive depth-1 values, uniform in `[lo, hi]` with `0 < lo < hi`.
pub fn random_positive_values<S: Scalar, R: Rng>(
    rng: &mut R,
    n: usize,
    lo: f64,
    hi: f64,
) -> Vec<S> {
    (0..n).map(|_| S::of(rng.random_range(lo..hi))).collect()
}

/// A point of the `k`-simplex with strictly positive entries, via
/// normalized exponential spacings.
pub fn random_simplex<S: Scalar, R: Rng>(rng: &mut R, k: usize) -> Vec<S> {
    let raw: Vec<f64> = (0..k)
        .map(|_| -rng.random::<f64>().max(1e-16).ln())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| S::of(v / sum)).collect()
}

/// A stationary Markov measure on `space` with random positive transition
/// probabilities on every allowed edge.
pub fn random_markov<S: Scalar, R: Rng>(
    rng: &mut R,
    space: &ShiftSpace,
    tol: &Tolerances<S>,
) -> MarkovMeasure<S> {
    let n = space.symbol_count();
    let rows: Vec<Vec<S>> = (0..n)
        .map(|a| {
            let slots: Vec<usize> = (0..n).filter(|&b| space.allowed(a, b)).collect();
            let weights = random_simplex::<S, R>(rng, slots.len());
            let mut row = vec![S::zero(); n];
            for (w, &b) in weights.into_iter().zip(&slots) {
                row[b] = w;
            }
            row
        })
        .collect();
    MarkovMeasure::new(space, rows, tol).expect("random rows are valid by construction")
}

/// A random carpet system: mixing base with at most `max_symbols` rows,
/// 1..=max_columns columns per row, fiber exponents in `[1, 2]`, and base
/// exponents drawn below the smallest fiber exponent so domination holds
/// strictly.
pub fn random_carpet<S: Scalar, R: Rng>(
    rng: &mut R,
    max_symbols: usize,
    max_columns: usize,
) -> CarpetSystem<S> {
    loop {
        let base = random_mixing_shift(rng, max_symbols);
        let n = base.symbol_count();
        let rows: Vec<CarpetRow<S>> = (0..n)
            .map(|i| {
                let count = rng.random_range(1..=max_columns.max(1));
                CarpetRow {
                    row: i,
                    columns: (0..count).collect(),
                    phi: random_positive_values(rng, count, 1.0, 2.0),
                }
            })
            .collect();
        let min_phi = rows
            .iter()
            .flat_map(|r| r.phi.iter())
            .fold(f64::INFINITY, |acc, v| acc.min(v.lossy_f64()));
        let psi = random_positive_values(rng, n, 0.2 * min_phi, 0.95 * min_phi);
        match CarpetSystem::new(base, rows, psi) {
            Ok(sys) => return sys,
            Err(_) => continue,
        }
    }
}

/// Per-row random fiber weight vectors for a product measure on `system`.
pub fn random_fiber_weights<S: Scalar, R: Rng>(
    rng: &mut R,
    system: &CarpetSystem<S>,
) -> Vec<Vec<S>> {
    system
        .rows()
        .iter()
        .map(|row| random_simplex(rng, row.columns.len()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let sa = random_mixing_shift(&mut a, 5);
        let sb = random_mixing_shift(&mut b, 5);
        assert_eq!(sa, sb);
        let va: Vec<f64> = random_values(&mut a, 4, 2.0);
        let vb: Vec<f64> = random_values(&mut b, 4, 2.0);
        assert_eq!(va, vb);
        let ca: CarpetSystem<f64> = random_carpet(&mut a, 4, 3);
        let cb: CarpetSystem<f64> = random_carpet(&mut b, 4, 3);
        assert_eq!(ca, cb);
    }

    #[test]
    fn random_shifts_are_mixing_and_markov_valid() {
        let tol = Tolerances::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let space = random_mixing_shift(&mut rng, 5);
            assert!(space.is_mixing());
            let m = random_markov(&mut rng, &space, &tol);
            let sum: f64 = m.stationary.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn random_carpets_satisfy_domination() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let sys: CarpetSystem<f64> = random_carpet(&mut rng, 4, 4);
            let min_phi = sys
                .rows()
                .iter()
                .flat_map(|r| r.phi.iter())
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let max_psi = sys.psi().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(min_phi >= max_psi);
            let weights = random_fiber_weights(&mut rng, &sys);
            for (w, row) in weights.iter().zip(sys.rows()) {
                assert_eq!(w.len(), row.columns.len());
                let s: f64 = w.iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
