//! Enumeration helpers: subsets, permutations, mixed-radix counters.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Largest item count accepted by [`max_subset_sum_norm`] (2^27 subsets).
pub const MAX_EXHAUSTIVE_ITEMS: usize = 27;

/// Largest Frobenius norm of `Σ_{i∈S} items[i]` over every subset `S`, and the
/// number of subsets visited (including the empty one).
///
/// Subsets are walked in Gray-code order so each step adds or removes one item.
pub fn max_subset_sum_norm(items: &[CMatrix]) -> Result<(f64, u64)> {
    let m = items.len();
    if m > MAX_EXHAUSTIVE_ITEMS {
        return Err(Error::ResourceLimit { what: "exhaustive set enumeration (items)", required: m, limit: MAX_EXHAUSTIVE_ITEMS });
    }
    let Some(first) = items.first() else {
        return Ok((0.0, 1));
    };
    let d = first.dim();
    // Fixed-size real arrays let the hot loop unroll for small dimensions.
    let worst_sqr = match d {
        1 => gray_walk::<2>(items),
        2 => gray_walk::<8>(items),
        3 => gray_walk::<18>(items),
        4 => gray_walk::<32>(items),
        _ => gray_walk_dyn(items, 2 * d * d),
    };
    Ok((libm::sqrt(worst_sqr), 1u64 << m))
}

fn flatten(c: &CMatrix, out: &mut [f64]) {
    for (pair, z) in out.chunks_exact_mut(2).zip(c.as_slice()) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
}

/// Largest squared norm of a subset sum, for items of exactly `N` reals.
fn gray_walk<const N: usize>(items: &[CMatrix]) -> f64 {
    let flat: Vec<[f64; N]> = items
        .iter()
        .map(|c| {
            let mut a = [0.0; N];
            flatten(c, &mut a);
            a
        })
        .collect();
    let mut running = [0.0f64; N];
    let mut worst_sqr: f64 = 0.0;
    for step in 1..(1u64 << items.len()) {
        let bit = step.trailing_zeros() as usize;
        let src = &flat[bit];
        // Gray code `step ^ (step >> 1)` has `bit` set iff the item was just added.
        if (step ^ (step >> 1)) >> bit & 1 == 1 {
            for k in 0..N {
                running[k] += src[k];
            }
        } else {
            for k in 0..N {
                running[k] -= src[k];
            }
        }
        let mut sqr = 0.0;
        for x in &running {
            sqr += x * x;
        }
        if sqr > worst_sqr || sqr.is_nan() {
            worst_sqr = sqr;
        }
    }
    worst_sqr
}

fn gray_walk_dyn(items: &[CMatrix], len: usize) -> f64 {
    let flat: Vec<Vec<f64>> = items
        .iter()
        .map(|c| {
            let mut a = alloc::vec![0.0; len];
            flatten(c, &mut a);
            a
        })
        .collect();
    let mut running = alloc::vec![0.0f64; len];
    let mut worst_sqr: f64 = 0.0;
    for step in 1..(1u64 << items.len()) {
        let bit = step.trailing_zeros() as usize;
        let sign = if (step ^ (step >> 1)) >> bit & 1 == 1 { 1.0 } else { -1.0 };
        for (r, s) in running.iter_mut().zip(&flat[bit]) {
            *r += sign * s;
        }
        let sqr: f64 = running.iter().map(|x| x * x).sum();
        if sqr > worst_sqr || sqr.is_nan() {
            worst_sqr = sqr;
        }
    }
    worst_sqr
}

/// Every subset of `0..n` as a sorted index list, in binary-counter order.
pub fn all_subsets(n: usize) -> Result<Vec<Vec<usize>>> {
    if n > 20 {
        return Err(Error::ResourceLimit { what: "subset enumeration (items)", required: n, limit: 20 });
    }
    Ok((0u32..(1u32 << n)).map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect()).collect())
}

/// Advances `perm` to the next permutation in lexicographic order.
/// Returns `false` (leaving `perm` sorted ascending) after the last one.
pub fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        perm.reverse();
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Mixed-radix decomposition of `index`; the last digit varies fastest.
pub fn mixed_radix_digits(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = alloc::vec![0; radices.len()];
    for (slot, &r) in digits.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    digits
}

/// Inverse of [`mixed_radix_digits`].
pub fn mixed_radix_index(digits: &[usize], radices: &[usize]) -> usize {
    digits.iter().zip(radices).fold(0, |acc, (&d, &r)| acc * r + d)
}

/// `∏ radices`, failing once the product exceeds `cap`.
pub fn checked_product(radices: &[usize], cap: usize, what: &'static str) -> Result<usize> {
    let mut total: usize = 1;
    for &r in radices {
        total = match total.checked_mul(r) {
            Some(t) if t <= cap => t,
            _ => {
                let required = radices.iter().fold(1usize, |a, &b| a.saturating_mul(b));
                return Err(Error::ResourceLimit { what, required, limit: cap });
            }
        };
    }
    Ok(total)
}

/// Validates that `indices` are distinct and below `len`.
pub fn check_indices(indices: &[usize], len: usize, what: &'static str) -> Result<()> {
    for (k, &i) in indices.iter().enumerate() {
        if i >= len {
            return Err(Error::IndexOutOfRange { what, index: i, len });
        }
        if indices[..k].contains(&i) {
            return Err(Error::DuplicateIndex { what, index: i });
        }
    }
    Ok(())
}

pub(crate) fn describe_indices(indices: &[usize]) -> alloc::string::String {
    format!("{indices:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn permutations_of_three() {
        let mut p = vec![0, 1, 2];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            seen.push(p.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![0, 2, 1]);
        assert_eq!(seen[5], vec![2, 1, 0]);
        assert_eq!(p, vec![0, 1, 2]);
    }

    #[test]
    fn mixed_radix_roundtrip() {
        let radices = [2, 3, 2];
        for i in 0..12 {
            assert_eq!(mixed_radix_index(&mixed_radix_digits(i, &radices), &radices), i);
        }
        assert_eq!(mixed_radix_digits(1, &radices), vec![0, 0, 1]);
    }

    #[test]
    fn gray_code_matches_brute_force() {
        let items: Vec<CMatrix> = [1.0, -2.0, 0.5, 3.0].iter().map(|&v| CMatrix::from_diag(&[v])).collect();
        let (worst, count) = max_subset_sum_norm(&items).unwrap();
        assert_eq!(count, 16);
        // best subset by hand: {1, 0.5, 3} → 4.5
        assert!((worst - 4.5).abs() < 1e-15);
    }

    #[test]
    fn gray_code_agrees_across_dimensions() {
        use crate::random::{random_hermitian, rng};
        let mut r = rng(5);
        for d in 1..=5 {
            let items: Vec<CMatrix> = (0..7).map(|_| random_hermitian(&mut r, d)).collect();
            let mut brute: f64 = 0.0;
            for mask in 0u32..128 {
                let mut sum = CMatrix::zeros(d);
                for (i, m) in items.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        sum += m;
                    }
                }
                brute = brute.max(sum.distance(&CMatrix::zeros(d)));
            }
            let (worst, count) = max_subset_sum_norm(&items).unwrap();
            assert_eq!(count, 128);
            assert!((worst - brute).abs() < 1e-12 * brute.max(1.0), "d = {d}: {worst} vs {brute}");
        }
    }

    #[test]
    fn caps() {
        assert!(checked_product(&[10, 10, 10], 999, "atoms").is_err());
        assert_eq!(checked_product(&[10, 10], 100, "atoms").unwrap(), 100);
        assert!(check_indices(&[0, 0], 3, "x").is_err());
        assert!(check_indices(&[0, 3], 3, "x").is_err());
    }
}
