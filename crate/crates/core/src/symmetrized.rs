//! Symmetrized spectral-product measures.
//!
//! For observables `X₁, …, Xₙ` the measure on rectangles is
//! `𝒫(B₁ × ⋯ × Bₙ) = (1/n!) Σ_σ P_{X_σ(1)}(B_σ(1)) ⋯ P_{X_σ(n)}(B_σ(n))`,
//! a Hermitian-operator-valued, finitely additive, normalized set function.
//! On commuting families it reduces to the joint spectral measure.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::extension::Catalog;
use crate::linalg::CMatrix;
use crate::random;
use crate::report::{CheckReport, Sampling};
use crate::spectral::{commute_check, DensityState, HermitianObservable, Tolerances};
use crate::subsets::{self, check_indices, describe_indices, max_subset_sum_norm, mixed_radix_digits, next_permutation};

/// Cap on the number of instances an exhaustive check may enumerate.
pub(crate) const EXHAUSTIVE_CAP: usize = 1 << 22;

/// `(1/n!) {Z₁ ⋯ Zₙ}_sym`.
///
/// Reversed orderings are mutual adjoints for Hermitian factors, so only the
/// orderings whose first index is below the last are multiplied out, in
/// lexicographic order; the result is `(S + S†)/n!`.
pub fn sym_product(operators: &[&CMatrix], tol: &Tolerances) -> Result<CMatrix> {
    let n = operators.len();
    if n == 0 {
        return Err(Error::InvalidParameter { reason: "symmetrized product needs at least one factor".into() });
    }
    if n > tol.n_max {
        return Err(Error::ResourceLimit { what: "symmetrized product factors", required: n, limit: tol.n_max });
    }
    let d = operators[0].dim();
    if let Some(bad) = operators.iter().find(|m| m.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
    }
    if n == 1 {
        return Ok(operators[0].clone());
    }

    let mut half = CMatrix::zeros(d);
    let mut used = alloc::vec![false; n];
    for first in 0..n {
        used[first] = true;
        accumulate(operators, &mut used, first, operators[first].clone(), 1, &mut half);
        used[first] = false;
    }
    let mut out = &half + &half.adjoint();
    let factorial: f64 = (2..=n).map(|k| k as f64).product();
    out.scale_mut(1.0 / factorial);
    Ok(out)
}

fn accumulate(ops: &[&CMatrix], used: &mut [bool], first: usize, prefix: CMatrix, depth: usize, acc: &mut CMatrix) {
    let n = ops.len();
    if depth == n - 1 {
        // Exactly one factor left; keep the ordering only if it closes above `first`.
        let last = used.iter().position(|u| !u).expect("one unused factor");
        if last > first {
            *acc += &prefix.matmul(ops[last]);
        }
        return;
    }
    for next in 0..n {
        if used[next] {
            continue;
        }
        used[next] = true;
        accumulate(ops, used, first, prefix.matmul(ops[next]), depth + 1, acc);
        used[next] = false;
    }
}

/// One side `B_i` of a rectangle: a catalog observable and a set of its spectral-point indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Side {
    pub observable: usize,
    pub points: Vec<usize>,
}

/// The rectangle `B_{i₁} × ⋯ × B_{i_k}` over a sub-collection of a catalog.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProjectorSelection {
    pub sides: Vec<Side>,
}

impl ProjectorSelection {
    pub fn new(sides: Vec<Side>) -> Self {
        ProjectorSelection { sides }
    }

    /// Builds a selection from eigenvalues rather than spectral indices.
    pub fn from_values(catalog: &Catalog, sides: &[(usize, Vec<f64>)]) -> Result<Self> {
        let mut out = Vec::with_capacity(sides.len());
        for (obs, values) in sides {
            let x = catalog.get(*obs)?;
            let points = values.iter().map(|&v| x.spectral_index(v, catalog.tolerances())).collect::<Result<Vec<_>>>()?;
            out.push(Side { observable: *obs, points });
        }
        Ok(ProjectorSelection { sides: out })
    }

    pub fn observables(&self) -> Vec<usize> {
        self.sides.iter().map(|s| s.observable).collect()
    }

    fn validate(&self, catalog: &Catalog) -> Result<()> {
        check_indices(&self.observables(), catalog.len(), "catalog observable")?;
        for side in &self.sides {
            let len = catalog.observable(side.observable).spectrum().len();
            for &p in &side.points {
                if p >= len {
                    return Err(Error::IndexOutOfRange { what: "spectral point", index: p, len });
                }
            }
        }
        Ok(())
    }
}

/// `𝒫_(X_{i₁},…,X_{i_k})(B_{i₁} × ⋯ × B_{i_k})`; the empty selection gives the identity.
pub fn product_measure_on_rectangle(catalog: &Catalog, selection: &ProjectorSelection) -> Result<CMatrix> {
    selection.validate(catalog)?;
    if selection.sides.is_empty() {
        return Ok(CMatrix::identity(catalog.dim()));
    }
    let projectors = selection
        .sides
        .iter()
        .map(|s| catalog.observable(s.observable).projector_of(&s.points))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&CMatrix> = projectors.iter().collect();
    sym_product(&refs, catalog.tolerances())
}

/// `tr[ρ P_{X₁}(B₁) ⋯ P_{Xₙ}(Bₙ)]` for a pairwise commuting family.
pub fn joint_probability_commuting(
    rho: &DensityState,
    observables: &[&HermitianObservable],
    sets: &[Vec<usize>],
    tol: &Tolerances,
) -> Result<f64> {
    if observables.len() != sets.len() {
        return Err(Error::InvalidParameter {
            reason: format!("{} observables but {} outcome sets", observables.len(), sets.len()),
        });
    }
    for (i, x) in observables.iter().enumerate() {
        if x.dim() != rho.dim() {
            return Err(Error::DimensionMismatch { expected: rho.dim(), found: x.dim() });
        }
        for y in &observables[i + 1..] {
            if !commute_check(x, y, tol)? {
                return Err(Error::NotCommuting { first: x.label().into(), second: y.label().into() });
            }
        }
    }
    let mut product = CMatrix::identity(rho.dim());
    for (x, b) in observables.iter().zip(sets) {
        product = product.matmul(&x.projector_of(b)?);
    }
    Ok(rho.matrix().trace_product(&product).re)
}

/// `𝒫_(X₁,…,X_K)({λ})` for every atom of the catalog, in mixed-radix order.
pub(crate) fn atom_products(catalog: &Catalog) -> Result<Vec<CMatrix>> {
    let tol = catalog.tolerances();
    if catalog.len() > tol.n_max {
        return Err(Error::ResourceLimit { what: "catalog size for symmetrized products", required: catalog.len(), limit: tol.n_max });
    }
    let mut out = Vec::with_capacity(catalog.atom_count());
    for a in 0..catalog.atom_count() {
        let digits = mixed_radix_digits(a, catalog.radices());
        let factors: Vec<&CMatrix> =
            digits.iter().enumerate().map(|(i, &k)| catalog.observable(i).projector(k)).collect();
        out.push(sym_product(&factors, tol)?);
    }
    Ok(out)
}

/// Product measure of every singleton tuple over `sub` (in `sub` order), in mixed-radix order.
pub(crate) fn singleton_products(catalog: &Catalog, sub: &[usize]) -> Result<Vec<CMatrix>> {
    let radices: Vec<usize> = sub.iter().map(|&i| catalog.observable(i).spectrum().len()).collect();
    let count: usize = radices.iter().product();
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let digits = mixed_radix_digits(t, &radices);
        let factors: Vec<&CMatrix> = sub.iter().zip(&digits).map(|(&i, &k)| catalog.observable(i).projector(k)).collect();
        out.push(sym_product(&factors, catalog.tolerances())?);
    }
    Ok(out)
}

fn require_pair(catalog: &Catalog) -> Result<()> {
    if catalog.len() < 2 {
        return Err(Error::InvalidParameter { reason: "consistency checks need at least two catalog observables".into() });
    }
    Ok(())
}

/// Checks `𝒫_(X₁..Xₙ)(B₁×⋯×Bₙ) = 𝒫_(X_{i₁}..X_{iₙ})(B_{i₁}×⋯×B_{iₙ})`.
///
/// Exhaustive mode visits every rectangle (all subsets of every spectrum) under
/// every permutation of the catalog.
pub fn verify_permutation_invariance(catalog: &Catalog, sampling: Sampling) -> Result<CheckReport> {
    require_pair(catalog)?;
    let tol = catalog.tolerances();
    let n = catalog.len();
    let mut report = CheckReport::new("permutation-invariance", tol.check);

    let check = |sets: &[Vec<usize>], perm: &[usize], report: &mut CheckReport| -> Result<()> {
        let projectors = (0..n).map(|i| catalog.observable(i).projector_of(&sets[i])).collect::<Result<Vec<_>>>()?;
        let ordered: Vec<&CMatrix> = projectors.iter().collect();
        let permuted: Vec<&CMatrix> = perm.iter().map(|&i| &projectors[i]).collect();
        let dev = sym_product(&ordered, tol)?.distance(&sym_product(&permuted, tol)?);
        report.record(dev, || format!("rectangle {sets:?} under permutation {perm:?}: deviation {dev:e}"));
        Ok(())
    };

    match sampling {
        Sampling::Exhaustive => {
            let side_counts: Vec<usize> = (0..n).map(|i| 1usize << catalog.observable(i).spectrum().len()).collect();
            let perms: usize = (1..=n).product();
            let rects = subsets::checked_product(&side_counts, EXHAUSTIVE_CAP, "exhaustive rectangles")?;
            if rects.saturating_mul(perms) > EXHAUSTIVE_CAP {
                return Err(Error::ResourceLimit { what: "exhaustive rectangle permutations", required: rects.saturating_mul(perms), limit: EXHAUSTIVE_CAP });
            }
            let spectra: Vec<Vec<Vec<usize>>> =
                (0..n).map(|i| subsets::all_subsets(catalog.observable(i).spectrum().len())).collect::<Result<_>>()?;
            for r in 0..rects {
                let choice = mixed_radix_digits(r, &side_counts);
                let sets: Vec<Vec<usize>> = choice.iter().enumerate().map(|(i, &c)| spectra[i][c].clone()).collect();
                let mut perm: Vec<usize> = (0..n).collect();
                loop {
                    check(&sets, &perm, &mut report)?;
                    if !next_permutation(&mut perm) {
                        break;
                    }
                }
            }
        }
        Sampling::Random { trials, seed } => {
            let mut rng = random::rng(seed);
            for _ in 0..trials {
                let sets: Vec<Vec<usize>> =
                    (0..n).map(|i| random::random_subset(&mut rng, catalog.observable(i).spectrum().len())).collect();
                let perm = random::random_permutation(&mut rng, n);
                check(&sets, &perm, &mut report)?;
            }
        }
    }
    Ok(report)
}

/// Checks that summing `𝒫_(X₁..Xₙ)` over the cylinder extension of `F` gives
/// `𝒫_(X_{i₁}..X_{i_k})(F)` for sub-collections `{X_{i₁},…,X_{i_k}}`.
///
/// Exhaustive mode covers every non-empty sub-collection and every set `F`
/// of outcome tuples over it. Random mode also shuffles the sub-collection order.
pub fn verify_marginal_consistency(catalog: &Catalog, sampling: Sampling) -> Result<CheckReport> {
    require_pair(catalog)?;
    let n = catalog.len();
    let full = atom_products(catalog)?;
    let mut report = CheckReport::new("marginal-consistency", catalog.tolerances().check);

    match sampling {
        Sampling::Exhaustive => {
            for sub in subsets::all_subsets(n)?.into_iter().filter(|s| !s.is_empty()) {
                let deviations = tuple_deviations(catalog, &full, &sub)?;
                let (worst, count) = max_subset_sum_norm(&deviations)?;
                report.record_batch(count, worst, || {
                    format!("sub-collection {}: worst set deviation {worst:e}", describe_indices(&sub))
                });
            }
        }
        Sampling::Random { trials, seed } => {
            let mut rng = random::rng(seed);
            for _ in 0..trials {
                let mut sub = random::random_nonempty_subset(&mut rng, n);
                let perm = random::random_permutation(&mut rng, sub.len());
                sub = perm.iter().map(|&k| sub[k]).collect();
                let radices: Vec<usize> = sub.iter().map(|&i| catalog.observable(i).spectrum().len()).collect();
                let tuples: usize = radices.iter().product();
                let f: Vec<usize> = (0..tuples).filter(|_| rng.gen_bool(0.5)).collect();
                let sub_products = singleton_products(catalog, &sub)?;

                let mut lhs = CMatrix::zeros(catalog.dim());
                for (a, m) in full.iter().enumerate() {
                    let atom = mixed_radix_digits(a, catalog.radices());
                    let t = subsets::mixed_radix_index(&sub.iter().map(|&i| atom[i]).collect::<Vec<_>>(), &radices);
                    if f.binary_search(&t).is_ok() {
                        lhs += m;
                    }
                }
                let mut rhs = CMatrix::zeros(catalog.dim());
                for &t in &f {
                    rhs += &sub_products[t];
                }
                let dev = lhs.distance(&rhs);
                report.record(dev, || format!("sub-collection {sub:?}, F = {f:?}: deviation {dev:e}"));
            }
        }
    }
    Ok(report)
}

/// `D_t = Σ_{λ: λ|sub = t} full[λ] − 𝒫_sub({t})` for every tuple `t` over `sub`.
pub(crate) fn tuple_deviations(catalog: &Catalog, full: &[CMatrix], sub: &[usize]) -> Result<Vec<CMatrix>> {
    let radices: Vec<usize> = sub.iter().map(|&i| catalog.observable(i).spectrum().len()).collect();
    let mut deviations: Vec<CMatrix> = singleton_products(catalog, sub)?.into_iter().map(|m| m.scale(-1.0)).collect();
    for (a, m) in full.iter().enumerate() {
        let atom = mixed_radix_digits(a, catalog.radices());
        let t = subsets::mixed_radix_index(&sub.iter().map(|&i| atom[i]).collect::<Vec<_>>(), &radices);
        deviations[t] += m;
    }
    Ok(deviations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigendecompose;
    use alloc::vec;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn equatorial_projector(deg: f64) -> CMatrix {
        let t = deg.to_radians();
        // (I + cos t σx + sin t σy)/2
        let mut m = CMatrix::identity(2).scale(0.5);
        m[(0, 1)] = crate::C64::new(t.cos() / 2.0, -t.sin() / 2.0);
        m[(1, 0)] = crate::C64::new(t.cos() / 2.0, t.sin() / 2.0);
        m
    }

    #[test]
    fn single_factor_is_identity_map() {
        let p = CMatrix::from_diag(&[1.0, 0.0]);
        assert_eq!(sym_product(&[&p], &tol()).unwrap(), p);
    }

    #[test]
    fn commuting_factors_collapse() {
        let p = CMatrix::from_diag(&[1.0, 0.0, 1.0]);
        let q = CMatrix::from_diag(&[1.0, 1.0, 0.0]);
        assert_eq!(sym_product(&[&p, &q], &tol()).unwrap(), p.matmul(&q));
    }

    #[test]
    fn trine_symmetrized_product() {
        let (p0, pa, pb) = (equatorial_projector(0.0), equatorial_projector(120.0), equatorial_projector(240.0));
        let s = sym_product(&[&pa, &pb], &tol()).unwrap();
        let direct = (&pa.matmul(&pb) + &pb.matmul(&pa)).scale(0.5);
        assert!(s.distance(&direct) < 1e-15);
        assert!((p0.trace_product(&s).re + 0.125).abs() < 1e-15);
    }

    #[test]
    fn too_many_factors() {
        let p = CMatrix::identity(1);
        let ops = vec![&p; 9];
        assert!(matches!(sym_product(&ops, &tol()), Err(Error::ResourceLimit { .. })));
        assert!(sym_product(&[], &tol()).is_err());
    }

    #[test]
    fn three_factor_matches_full_sum() {
        let mut r = random::rng(11);
        let ms: Vec<CMatrix> = (0..3).map(|_| random::random_hermitian(&mut r, 3)).collect();
        let refs: Vec<&CMatrix> = ms.iter().collect();
        let mut full = CMatrix::zeros(3);
        let mut perm = vec![0, 1, 2];
        loop {
            full += &ms[perm[0]].matmul(&ms[perm[1]]).matmul(&ms[perm[2]]);
            if !next_permutation(&mut perm) {
                break;
            }
        }
        full.scale_mut(1.0 / 6.0);
        assert!(sym_product(&refs, &tol()).unwrap().distance(&full) < 1e-14);
    }

    #[test]
    fn joint_probability_on_eigenstate() {
        let z = eigendecompose(&CMatrix::from_diag(&[1.0, -1.0]), &tol()).unwrap();
        let up = crate::validate_state(&CMatrix::from_diag(&[1.0, 0.0]), &tol()).unwrap();
        assert_eq!(joint_probability_commuting(&up, &[&z], &[vec![1]], &tol()).unwrap(), 1.0);
        assert_eq!(joint_probability_commuting(&up, &[&z], &[vec![0, 1]], &tol()).unwrap(), 1.0);
    }

    #[test]
    fn joint_probability_rejects_noncommuting() {
        let z = eigendecompose(&CMatrix::from_diag(&[1.0, -1.0]), &tol()).unwrap().with_label("Z");
        let x = eigendecompose(&CMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap(), &tol()).unwrap().with_label("X");
        let rho = DensityState::maximally_mixed(2);
        let err = joint_probability_commuting(&rho, &[&z, &x], &[vec![0], vec![0]], &tol()).unwrap_err();
        assert_eq!(err, Error::NotCommuting { first: "Z".into(), second: "X".into() });
    }
}
