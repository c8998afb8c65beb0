//! Seeded random instances for verification trials.
//!
//! All randomness flows from ChaCha streams so reports are reproducible from a
//! single `u64` seed.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{hermitian_eigen, CMatrix, C64};

pub type TrialRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; derives independent per-stream seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hermitian matrix with entries uniform in [−1, 1].
pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(rng.gen_range(-1.0..=1.0), 0.0);
        for j in (i + 1)..dim {
            let z = C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Haar-ish unitary: eigenvectors of a random Hermitian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let (_, vectors) = hermitian_eigen(&random_hermitian(rng, dim)).expect("Jacobi converges on random input");
    vectors
}

/// `U diag(values) U†` for a random unitary `U`.
pub fn random_observable_with_spectrum<R: Rng>(rng: &mut R, values: &[f64]) -> CMatrix {
    let u = random_unitary(rng, values.len());
    let rotated = u.matmul(&CMatrix::from_diag(values)).matmul(&u.adjoint());
    // Symmetrize away rounding so the result is exactly Hermitian.
    (&rotated + &rotated.adjoint()).scale(0.5)
}

/// Full-rank density matrix `G G† / tr(G G†)`.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let mut g = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        }
    }
    let gg = g.matmul(&g.adjoint());
    let gg = (&gg + &gg.adjoint()).scale(0.5);
    let tr = gg.trace().re;
    gg.scale(1.0 / tr)
}

/// Projector onto a random unit vector.
pub fn random_pure<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))).collect();
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    CMatrix::outer(&v).scale(1.0 / n)
}

/// Each of `0..n` kept with probability 1/2.
pub fn random_subset<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}

/// Uniform random non-empty subset of `0..n` (n ≥ 1), as a sorted list.
pub fn random_nonempty_subset<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    loop {
        let s = random_subset(rng, n);
        if !s.is_empty() {
            return s;
        }
    }
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_is_valid() {
        let mut r = rng(7);
        let rho = random_density(&mut r, 3);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert_eq!(rho.hermiticity_defect(), 0.0);
        let (vals, _) = hermitian_eigen(&rho).unwrap();
        assert!(vals[0] > -1e-14);
    }

    #[test]
    fn seeds_are_reproducible() {
        assert_eq!(random_hermitian(&mut rng(3), 2), random_hermitian(&mut rng(3), 2));
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
    }

    #[test]
    fn prescribed_spectrum() {
        let m = random_observable_with_spectrum(&mut rng(1), &[-1.0, 1.0]);
        let (vals, _) = hermitian_eigen(&m).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-13 && (vals[1] - 1.0).abs() < 1e-13);
    }
}
