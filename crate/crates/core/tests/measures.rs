mod common;

use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use qhv_core::random::{random_density, random_hermitian, random_observable_with_spectrum, rng};
use qhv_core::*;

fn catalog(obs: Vec<HermitianObservable>) -> Arc<Catalog> {
    Arc::new(Catalog::new(obs, tol()).unwrap())
}

fn state(m: CMatrix) -> DensityState {
    validate_state(&m, &tol()).unwrap()
}

/// `(I + n·σ)/2` for an equatorial Bloch vector.
fn equatorial_projector(deg: f64) -> CMatrix {
    let mut p = CMatrix::identity(2);
    p += &equatorial(deg);
    p.scale(0.5)
}

fn trine() -> (Arc<Catalog>, DensityState) {
    let cat = catalog(vec![observable("A120", equatorial(120.0)), observable("A240", equatorial(240.0))]);
    (cat, state(equatorial_projector(0.0)))
}

#[test]
fn sym_product_matches_permutation_oracle() {
    let mut r = rng(11);
    for n in 1..=5 {
        for d in [2, 3] {
            let ops: Vec<CMatrix> = (0..n).map(|_| random_hermitian(&mut r, d)).collect();
            let refs: Vec<&CMatrix> = ops.iter().collect();
            let got = sym_product(&refs, &tol()).unwrap();
            assert!(got.distance(&oracle_sym_product(&ops)) < 1e-12, "n = {n}, d = {d}");
            assert!(got.hermiticity_defect() <= tol().check);
        }
    }
}

#[test]
fn sym_product_limits() {
    let p = CMatrix::identity(2);
    let many: Vec<&CMatrix> = (0..9).map(|_| &p).collect();
    assert!(matches!(sym_product(&many, &tol()), Err(Error::ResourceLimit { required: 9, limit: 8, .. })));
    assert!(sym_product(&[], &tol()).is_err());
    let q = CMatrix::identity(3);
    assert!(matches!(sym_product(&[&p, &q], &tol()), Err(Error::DimensionMismatch { .. })));
    assert_eq!(sym_product(&[&p], &tol()).unwrap(), p);
}

#[test]
fn trine_triple_product_oracle() {
    // Re tr[P(0) P(120) P(240)] = (1/4)(1 − 3/2) = −1/8.
    let (p0, pa, pb) = (equatorial_projector(0.0), equatorial_projector(120.0), equatorial_projector(240.0));
    let direct = to_nalgebra(&p0) * to_nalgebra(&pa) * to_nalgebra(&pb);
    assert!((direct.trace().re + 0.125).abs() < 1e-15);
    let sym = sym_product(&[&pa, &pb], &tol()).unwrap();
    assert!((oracle_trace(&p0, &sym) + 0.125).abs() < 1e-15);
}

#[test]
fn rectangle_examples() {
    let z = observable("Z", sigma_z());
    let x = observable("X", sigma_x());
    let cat = catalog(vec![x.clone(), z.clone()]);
    let full = ProjectorSelection::new(vec![Side { observable: 1, points: vec![0, 1] }]);
    assert!(product_measure_on_rectangle(&cat, &full).unwrap().distance(&CMatrix::identity(2)) < 1e-15);
    let up = ProjectorSelection::from_values(&cat, &[(1, vec![1.0])]).unwrap();
    assert_eq!(product_measure_on_rectangle(&cat, &up).unwrap(), CMatrix::from_diag(&[1.0, 0.0]));
    let both = ProjectorSelection::from_values(&cat, &[(0, vec![1.0]), (1, vec![1.0])]).unwrap();
    let value = product_measure_on_rectangle(&cat, &both).unwrap();
    let oracle = oracle_sym_product(&[x.projector(1).clone(), z.projector(1).clone()]);
    assert!(value.distance(&oracle) < 1e-15);
    assert!((oracle_trace(&CMatrix::identity(2).scale(0.5), &value) - 0.25).abs() < 1e-15);
    assert_eq!(product_measure_on_rectangle(&cat, &ProjectorSelection::default()).unwrap(), CMatrix::identity(2));
    assert!(ProjectorSelection::from_values(&cat, &[(1, vec![0.5])]).is_err());
    let bad = ProjectorSelection::new(vec![Side { observable: 2, points: vec![0] }]);
    assert!(product_measure_on_rectangle(&cat, &bad).is_err());
}

#[test]
fn joint_probability_examples() {
    let z = observable("Z", sigma_z());
    assert_eq!(joint_probability_commuting(&state(CMatrix::from_diag(&[1.0, 0.0])), &[&z], &[vec![1]], &tol()).unwrap(), 1.0);
    let za = tensor_embed(&z, 0, &[2, 2]).unwrap();
    let zb = tensor_embed(&z, 1, &[2, 2]).unwrap();
    let mixed = DensityState::maximally_mixed(4);
    let p = joint_probability_commuting(&mixed, &[&za, &zb], &[vec![1], vec![1]], &tol()).unwrap();
    let oracle = oracle_trace(&CMatrix::identity(4).scale(0.25), &oracle_kron(z.projector(1), z.projector(1)));
    assert!((p - oracle).abs() < 1e-15 && (p - 0.25).abs() < 1e-15);
    let all = joint_probability_commuting(&mixed, &[&za, &zb], &[vec![0, 1], vec![0, 1]], &tol()).unwrap();
    assert!((all - 1.0).abs() < 1e-14);
    let x = observable("X", sigma_x());
    let err = joint_probability_commuting(&state(CMatrix::from_diag(&[1.0, 0.0])), &[&z, &x], &[vec![0], vec![0]], &tol());
    assert!(matches!(err, Err(Error::NotCommuting { .. })));
}

#[test]
fn rectangle_consistency_on_pauli_pair() {
    let cat = catalog(vec![observable("X", sigma_x()), observable("Z", sigma_z())]);
    let perm = verify_permutation_invariance(&cat, Sampling::Exhaustive).unwrap();
    assert!(perm.passed() && perm.max_deviation <= 1e-12, "{perm:?}");
    let marg = verify_marginal_consistency(&cat, Sampling::Exhaustive).unwrap();
    assert!(marg.passed(), "{marg:?}");
    let vacuous = verify_permutation_invariance(&cat, Sampling::Random { trials: 0, seed: 0 }).unwrap();
    assert!(vacuous.passed() && vacuous.checks == 0);
    let single = catalog(vec![observable("X", sigma_x())]);
    assert!(verify_marginal_consistency(&single, Sampling::Exhaustive).is_err());
}

#[test]
fn marginalizing_pauli_x_recovers_z_projectors() {
    let cat = catalog(vec![observable("X", sigma_x()), observable("Z", sigma_z())]);
    let m = build_global_measure(Arc::clone(&cat)).unwrap();
    for z in 0..2 {
        let mut sum = CMatrix::zeros(2);
        for x in 0..2 {
            sum += m.atom(cat.atom_index(&OutcomeAtom(vec![x, z])).unwrap());
        }
        assert!(sum.distance(cat.observable(1).projector(z)) < 1e-15);
    }
}

#[test]
fn rectangle_consistency_exhaustive_on_random_qutrit_catalogs() {
    let mut r = rng(5);
    for _ in 0..3 {
        let obs = (0..3).map(|i| observable(&format!("O{i}"), random_hermitian(&mut r, 3))).collect();
        let cat = catalog(obs);
        assert!(verify_permutation_invariance(&cat, Sampling::Exhaustive).unwrap().passed());
        assert!(verify_marginal_consistency(&cat, Sampling::Exhaustive).unwrap().passed());
    }
}

#[test]
fn identity_member_marginalizes_exactly() {
    let cat = catalog(vec![observable("Z", sigma_z()), observable("I", CMatrix::identity(2))]);
    let m = build_global_measure(Arc::clone(&cat)).unwrap();
    assert_eq!(cat.atom_count(), 2);
    for k in 0..2 {
        assert_eq!(m.atom(cat.atom_index(&OutcomeAtom(vec![k, 0])).unwrap()), cat.observable(0).projector(k));
    }
    let marg = verify_marginal_consistency(&cat, Sampling::Exhaustive).unwrap();
    assert_eq!(marg.max_deviation, 0.0);
}

#[test]
fn global_measure_examples() {
    let cat = catalog(vec![observable("Z", sigma_z())]);
    let m = build_global_measure(Arc::clone(&cat)).unwrap();
    assert_eq!(m.atom(0), &CMatrix::from_diag(&[0.0, 1.0]));
    assert_eq!(m.atom(1), &CMatrix::from_diag(&[1.0, 0.0]));

    let cat = catalog(vec![observable("X", sigma_x()), observable("Z", sigma_z())]);
    let m = build_global_measure(Arc::clone(&cat)).unwrap();
    assert!(m.total().distance(&CMatrix::identity(2)) < 1e-12);
    assert!(m.atoms().iter().all(|a| a.hermiticity_defect() <= tol().check));
    assert!(measure_of_cylinder(&m, &CylinderSet::everything()).unwrap().distance(&CMatrix::identity(2)) < 1e-12);
    let empty = CylinderSet::new(&cat, vec![0], vec![]).unwrap();
    assert_eq!(measure_of_cylinder(&m, &empty).unwrap(), CMatrix::zeros(2));
    let z_up = CylinderSet::new(&cat, vec![1], vec![vec![1]]).unwrap();
    assert!(measure_of_cylinder(&m, &z_up).unwrap().distance(&CMatrix::from_diag(&[1.0, 0.0])) < 1e-15);
    assert!(CylinderSet::new(&cat, vec![1], vec![vec![2]]).is_err());
    assert!(CylinderSet::new(&cat, vec![1, 1], vec![vec![0, 0]]).is_err());
}

#[test]
fn catalog_invariants_are_enforced() {
    assert!(matches!(Catalog::new(vec![], tol()), Err(Error::EmptyCatalog)));
    let dup = Catalog::new(vec![observable("A", sigma_z()), observable("B", sigma_z())], tol());
    assert!(matches!(dup, Err(Error::DuplicateObservable { .. })));
    let mixed = Catalog::new(vec![observable("A", sigma_z()), observable("B", CMatrix::identity(3))], tol());
    assert!(matches!(mixed, Err(Error::DimensionMismatch { .. })));
    let small = Tolerances { atom_cap: 3, ..tol() };
    let capped = Catalog::new(vec![observable("X", sigma_x()), observable("Z", sigma_z())], small);
    assert!(matches!(capped, Err(Error::ResourceLimit { required: 4, limit: 3, .. })));
}

#[test]
fn pushforward_exhaustive_small_catalogs() {
    let mut r = rng(9);
    for d in [2, 3] {
        let obs = (0..3).map(|i| observable(&format!("O{i}"), random_hermitian(&mut r, d))).collect();
        let m = build_global_measure(catalog(obs)).unwrap();
        let report = verify_pushforward(&m, Sampling::Exhaustive).unwrap();
        assert!(report.passed() && report.max_deviation <= 1e-10, "{report:?}");
    }
    let m = build_global_measure(trine().0).unwrap();
    assert!(verify_pushforward(&m, Sampling::Random { trials: 0, seed: 1 }).unwrap().checks == 0);
    assert!(verify_pushforward(&m, Sampling::Random { trials: 50, seed: 1 }).unwrap().passed());
}

#[test]
fn pushforward_single_member_is_the_spectral_projector() {
    let (cat, _) = trine();
    let m = build_global_measure(Arc::clone(&cat)).unwrap();
    for i in 0..2 {
        for k in 0..2 {
            let cyl = CylinderSet::new(&cat, vec![i], vec![vec![k]]).unwrap();
            assert!(measure_of_cylinder(&m, &cyl).unwrap().distance(cat.observable(i).projector(k)) < 1e-15);
        }
    }
}

#[test]
fn trine_signed_measure() {
    let (cat, rho) = trine();
    let mu = induce_signed_measure(&build_global_measure(Arc::clone(&cat)).unwrap(), &rho).unwrap();
    let expected = [0.375, 0.375, 0.375, -0.125];
    for (a, e) in mu.values().iter().zip(expected) {
        assert!((a - e).abs() < 1e-12);
    }
    assert_eq!(mu.atom(cat.atom_index(&OutcomeAtom(vec![1, 1])).unwrap()), mu.atom(3));
    let diag = negativity_diagnostics(&mu);
    assert!((diag.total_variation - 1.25).abs() < 1e-12);
    assert!((diag.min_atom + 0.125).abs() < 1e-12);
    assert_eq!(diag.negative_atom_count, 1);
    assert!((mu.total() - 1.0).abs() < 1e-12);
}

#[test]
fn maximally_mixed_pauli_atoms_are_a_quarter() {
    let cat = catalog(vec![observable("X", sigma_x()), observable("Z", sigma_z())]);
    let m = build_global_measure(Arc::clone(&cat)).unwrap();
    let mu = induce_signed_measure(&m, &DensityState::maximally_mixed(2)).unwrap();
    assert!(mu.values().iter().all(|v| (v - 0.25).abs() < 1e-15));
    let up = induce_signed_measure(&m, &state(CMatrix::from_diag(&[1.0, 0.0]))).unwrap();
    let down = induce_signed_measure(&m, &state(CMatrix::from_diag(&[0.0, 1.0]))).unwrap();
    let mix = mixture_measure(&[(0.5, &up), (0.5, &down)]).unwrap();
    assert!(mix.values().iter().all(|v| (v - 0.25).abs() < 1e-15));
    assert_eq!(mixture_measure(&[(1.0, &up)]).unwrap().values(), up.values());
    assert!(mixture_measure(&[(0.5, &up)]).is_err());
    assert!(mixture_measure(&[(1.5, &up), (-0.5, &down)]).is_err());
    assert!(mixture_measure(&[]).is_err());
    let other = build_global_measure(trine().0).unwrap();
    let foreign = induce_signed_measure(&other, &DensityState::maximally_mixed(2)).unwrap();
    assert!(matches!(mixture_measure(&[(0.5, &up), (0.5, &foreign)]), Err(Error::CatalogMismatch)));
    assert!(induce_signed_measure(&m, &DensityState::maximally_mixed(3)).is_err());
}

#[test]
fn single_member_measures_are_born_probabilities() {
    let mut r = rng(17);
    for d in 1..=4 {
        let cat = catalog(vec![observable("X", random_hermitian(&mut r, d))]);
        let mu = induce_signed_measure(&build_global_measure(cat).unwrap(), &state(random_density(&mut r, d))).unwrap();
        let diag = negativity_diagnostics(&mu);
        assert!((diag.total_variation - 1.0).abs() < 1e-12);
        assert_eq!(diag.negative_atom_count, 0);
    }
}

#[test]
fn product_expectation_examples() {
    let cat = catalog(vec![observable("X", sigma_x()), observable("Z", sigma_z())]);
    let m = build_global_measure(Arc::clone(&cat)).unwrap();
    let up = induce_signed_measure(&m, &state(CMatrix::from_diag(&[1.0, 0.0]))).unwrap();
    assert!(product_expectation_via_measure(&up, &[0, 1]).unwrap().abs() < 1e-15);
    assert!((product_expectation_via_measure(&up, &[1]).unwrap() - 1.0).abs() < 1e-15);
    assert!((product_expectation_via_measure(&up, &[]).unwrap() - 1.0).abs() < 1e-15);
    assert!(product_expectation_via_measure(&up, &[2]).is_err());
    assert!(product_expectation_via_measure(&up, &[0, 0]).is_err());
}

#[test]
fn enlarging_the_catalog_changes_atom_values() {
    // The signed measure is relative to the catalog it was built on.
    let rho = state(equatorial_projector(0.0));
    let small = catalog(vec![observable("A120", equatorial(120.0))]);
    let mu_small = induce_signed_measure(&build_global_measure(small).unwrap(), &rho).unwrap();
    let (big, _) = trine();
    let mu_big = induce_signed_measure(&build_global_measure(big).unwrap(), &rho).unwrap();
    assert_eq!(negativity_diagnostics(&mu_small).negative_atom_count, 0);
    assert_eq!(negativity_diagnostics(&mu_big).negative_atom_count, 1);
    // Marginals still agree.
    assert!((mu_big.atom(2) + mu_big.atom(3) - mu_small.atom(1)).abs() < 1e-14);
}

fn random_catalog(seed: u64, n: usize, d: usize, degenerate: bool) -> Arc<Catalog> {
    let mut r = rng(seed);
    let obs = (0..n)
        .map(|i| {
            let m = if degenerate {
                let values: Vec<f64> = (0..d).map(|k| (k % 2) as f64).collect();
                random_observable_with_spectrum(&mut r, &values)
            } else {
                random_hermitian(&mut r, d)
            };
            observable(&format!("O{i}"), m)
        })
        .collect();
    catalog(obs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sym_product_is_hermitian(seed in any::<u64>(), n in 1usize..=6, d in 1usize..=3) {
        let mut r = rng(seed);
        let ops: Vec<CMatrix> = (0..n).map(|_| random_hermitian(&mut r, d)).collect();
        let refs: Vec<&CMatrix> = ops.iter().collect();
        prop_assert!(sym_product(&refs, &tol()).unwrap().hermiticity_defect() <= tol().check);
    }

    #[test]
    fn commuting_factors_collapse_to_ordered_product(seed in any::<u64>(), n in 1usize..=5, d in 1usize..=4) {
        let mut r = rng(seed);
        let u = qhv_core::random::random_unitary(&mut r, d);
        let ops: Vec<CMatrix> = (0..n)
            .map(|_| {
                let diag: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
                u.matmul(&CMatrix::from_diag(&diag)).matmul(&u.adjoint())
            })
            .collect();
        let refs: Vec<&CMatrix> = ops.iter().collect();
        let ordered = ops[1..].iter().fold(ops[0].clone(), |acc, m| acc.matmul(m));
        prop_assert!(sym_product(&refs, &tol()).unwrap().distance(&ordered) <= tol().check);
    }

    #[test]
    fn global_measure_is_normalized(seed in any::<u64>(), n in 1usize..=4, d in 2usize..=3, degenerate in any::<bool>()) {
        let m = build_global_measure(random_catalog(seed, n, d, degenerate)).unwrap();
        prop_assert!(m.total().distance(&CMatrix::identity(d)) <= tol().check);
        prop_assert!(m.atoms().iter().all(|a| a.hermiticity_defect() <= tol().check));
    }

    #[test]
    fn full_rectangle_is_identity(seed in any::<u64>(), n in 1usize..=4, d in 2usize..=3) {
        let cat = random_catalog(seed, n, d, false);
        let sides = (0..n).map(|i| Side { observable: i, points: (0..cat.radices()[i]).collect() }).collect();
        let value = product_measure_on_rectangle(&cat, &ProjectorSelection::new(sides)).unwrap();
        prop_assert!(value.distance(&CMatrix::identity(d)) <= tol().check);
    }

    #[test]
    fn rectangles_are_additive(seed in any::<u64>(), d in 2usize..=3) {
        let cat = random_catalog(seed, 3, d, false);
        let mut r = rng(seed ^ 1);
        let split = qhv_core::random::random_subset(&mut r, cat.radices()[0]);
        let rest: Vec<usize> = (0..cat.radices()[0]).filter(|k| !split.contains(k)).collect();
        let tail: Vec<Side> = (1..3).map(|i| Side { observable: i, points: qhv_core::random::random_subset(&mut r, cat.radices()[i]) }).collect();
        let rect = |points: Vec<usize>| {
            let mut sides = vec![Side { observable: 0, points }];
            sides.extend(tail.iter().cloned());
            product_measure_on_rectangle(&cat, &ProjectorSelection::new(sides)).unwrap()
        };
        let whole = rect((0..cat.radices()[0]).collect());
        prop_assert!(whole.distance(&(&rect(split) + &rect(rest))) <= tol().check);
    }

    #[test]
    fn signed_measures_are_normalized_and_affine(seed in any::<u64>(), n in 1usize..=3, d in 2usize..=3, w in 0.05f64..0.95) {
        let cat = random_catalog(seed, n, d, false);
        let m = build_global_measure(cat).unwrap();
        let mut r = rng(seed ^ 2);
        let (a, b) = (random_density(&mut r, d), random_density(&mut r, d));
        let mu_a = induce_signed_measure(&m, &state(a.clone())).unwrap();
        let mu_b = induce_signed_measure(&m, &state(b.clone())).unwrap();
        prop_assert!((mu_a.total() - 1.0).abs() <= tol().check);
        let mut mixed = a.scale(w);
        mixed.add_scaled(1.0 - w, &b);
        let direct = induce_signed_measure(&m, &state(mixed)).unwrap();
        let combined = mixture_measure(&[(w, &mu_a), (1.0 - w, &mu_b)]).unwrap();
        for (x, y) in direct.values().iter().zip(combined.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn product_expectation_matches_symmetrized_trace(seed in any::<u64>(), n in 1usize..=3, d in 2usize..=3) {
        let cat = random_catalog(seed, n, d, false);
        let m = build_global_measure(Arc::clone(&cat)).unwrap();
        let rho = random_density(&mut rng(seed ^ 3), d);
        let mu = induce_signed_measure(&m, &state(rho.clone())).unwrap();
        let subset: Vec<usize> = (0..n).collect();
        let mats: Vec<CMatrix> = subset.iter().map(|&i| cat.observable(i).matrix().clone()).collect();
        let oracle = oracle_trace(&rho, &oracle_sym_product(&mats));
        prop_assert!((product_expectation_via_measure(&mu, &subset).unwrap() - oracle).abs() <= tol().check);
    }

    #[test]
    fn singleton_cylinders_determine_the_measure(seed in any::<u64>(), d in 2usize..=3) {
        // Two measures agreeing on every singleton-atom cylinder agree on every atom set.
        let cat = random_catalog(seed, 2, d, false);
        let m = build_global_measure(Arc::clone(&cat)).unwrap();
        let rho = state(random_density(&mut rng(seed ^ 4), d));
        let mu = induce_signed_measure(&m, &rho).unwrap();
        let indices: Vec<usize> = (0..cat.len()).collect();
        let rebuilt: Vec<f64> = (0..cat.atom_count())
            .map(|a| mu.of_cylinder(&CylinderSet::new(&cat, indices.clone(), vec![cat.atom(a).0]).unwrap()).unwrap())
            .collect();
        prop_assert_eq!(&rebuilt[..], mu.values());
        let set = AtomSet::from_predicate(cat.atom_count(), |a| a % 2 == 0);
        let sum: f64 = set.iter().map(|a| rebuilt[a]).sum();
        prop_assert_eq!(sum, mu.of_atoms(&set).unwrap());
    }
}
