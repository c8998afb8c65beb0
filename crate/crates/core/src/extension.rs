//! The operator-valued measure on the outcome lattice of a finite catalog and
//! the signed measures it induces.
//!
//! A catalog `X₁, …, X_K` defines the lattice `Λ = sp X₁ × ⋯ × sp X_K`. Its
//! atoms are enumerated in mixed-radix order over increasing eigenvalue
//! indices (last observable fastest), and every reduction over atoms follows
//! that order. The global measure assigns to each atom the symmetrized product
//! of the singleton spectral projectors, `𝕄({λ}) = 𝒫_(X₁..X_K)({λ₁} × ⋯ × {λ_K})`,
//! so every cylinder `π⁻¹_(X_{i₁}..X_{i_k})(F)` receives `𝒫_(X_{i₁}..X_{i_k})(F)`.
//!
//! Signed measures are catalog-relative: enlarging the catalog refines `Λ` and
//! changes individual atom values, while cylinder values over the original
//! observables stay fixed.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::random;
use crate::report::{CheckReport, Sampling};
use crate::spectral::{DensityState, HermitianObservable, Tolerances};
use crate::subsets::{self, check_indices, describe_indices, max_subset_sum_norm, mixed_radix_digits, mixed_radix_index};
use crate::symmetrized::{atom_products, product_measure_on_rectangle, ProjectorSelection, Side};

/// An ordered list of distinct observables on a common Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    observables: Vec<HermitianObservable>,
    dim: usize,
    radices: Vec<usize>,
    atom_count: usize,
    tol: Tolerances,
}

impl Catalog {
    pub fn new(observables: Vec<HermitianObservable>, tol: Tolerances) -> Result<Self> {
        let first = observables.first().ok_or(Error::EmptyCatalog)?;
        let dim = first.dim();
        for (i, x) in observables.iter().enumerate() {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: x.dim() });
            }
            for y in &observables[..i] {
                if x.matrix().distance(y.matrix()) <= tol.check {
                    return Err(Error::DuplicateObservable { first: y.label().into(), second: x.label().into() });
                }
            }
        }
        let radices: Vec<usize> = observables.iter().map(|x| x.spectrum().len()).collect();
        let atom_count = subsets::checked_product(&radices, tol.atom_cap, "outcome lattice atoms")?;
        Ok(Catalog { observables, dim, radices, atom_count, tol })
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn observables(&self) -> &[HermitianObservable] {
        &self.observables
    }

    /// Panics when `index` is out of range; see [`Catalog::get`].
    pub fn observable(&self, index: usize) -> &HermitianObservable {
        &self.observables[index]
    }

    pub fn get(&self, index: usize) -> Result<&HermitianObservable> {
        self.observables.get(index).ok_or(Error::IndexOutOfRange {
            what: "catalog observable",
            index,
            len: self.observables.len(),
        })
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.observables.iter().position(|x| x.label() == label)
    }

    /// Catalog member whose matrix equals `matrix` within the check tolerance.
    pub fn position_of_matrix(&self, matrix: &CMatrix) -> Option<usize> {
        self.observables
            .iter()
            .position(|x| x.dim() == matrix.dim() && x.matrix().distance(matrix) <= self.tol.check)
    }

    /// Spectrum sizes, i.e. the mixed radices of the atom enumeration.
    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn atom(&self, index: usize) -> OutcomeAtom {
        OutcomeAtom(mixed_radix_digits(index, &self.radices))
    }

    pub fn atom_index(&self, atom: &OutcomeAtom) -> Result<usize> {
        if atom.0.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: atom.0.len() });
        }
        for (&k, &r) in atom.0.iter().zip(&self.radices) {
            if k >= r {
                return Err(Error::IndexOutOfRange { what: "spectral point", index: k, len: r });
            }
        }
        Ok(mixed_radix_index(&atom.0, &self.radices))
    }

    /// `π_X(λ)` for every catalog observable.
    pub fn atom_values(&self, index: usize) -> Vec<f64> {
        self.atom(index).0.iter().enumerate().map(|(i, &k)| self.observables[i].eigenvalue(k)).collect()
    }
}

/// A point of `Λ`: one spectral-point index per catalog observable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomeAtom(pub Vec<usize>);

/// `π⁻¹_(X_{i₁}..X_{i_k})(F)`: the atoms whose restriction to `indices` lies in `F`.
///
/// With no indices, `F` is either `{()}` (all of `Λ`) or empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderSet {
    indices: Vec<usize>,
    tuples: Vec<Vec<usize>>,
}

impl CylinderSet {
    pub fn new(catalog: &Catalog, indices: Vec<usize>, mut tuples: Vec<Vec<usize>>) -> Result<Self> {
        check_indices(&indices, catalog.len(), "catalog observable")?;
        for t in &tuples {
            if t.len() != indices.len() {
                return Err(Error::DimensionMismatch { expected: indices.len(), found: t.len() });
            }
            for (&i, &k) in indices.iter().zip(t) {
                let r = catalog.radices()[i];
                if k >= r {
                    return Err(Error::IndexOutOfRange { what: "spectral point", index: k, len: r });
                }
            }
        }
        tuples.sort();
        tuples.dedup();
        Ok(CylinderSet { indices, tuples })
    }

    /// The whole lattice.
    pub fn everything() -> Self {
        CylinderSet { indices: Vec::new(), tuples: alloc::vec![Vec::new()] }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn atoms(&self, catalog: &Catalog) -> Result<AtomSet> {
        check_indices(&self.indices, catalog.len(), "catalog observable")?;
        Ok(AtomSet::from_predicate(catalog.atom_count(), |a| {
            let atom = mixed_radix_digits(a, catalog.radices());
            let restricted: Vec<usize> = self.indices.iter().map(|&i| atom[i]).collect();
            self.tuples.binary_search(&restricted).is_ok()
        }))
    }
}

/// An explicit subset of the atoms of `Λ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomSet {
    mask: Vec<bool>,
}

impl AtomSet {
    pub fn from_predicate(atom_count: usize, mut keep: impl FnMut(usize) -> bool) -> Self {
        AtomSet { mask: (0..atom_count).map(&mut keep).collect() }
    }

    pub fn full(atom_count: usize) -> Self {
        AtomSet { mask: alloc::vec![true; atom_count] }
    }

    pub fn empty(atom_count: usize) -> Self {
        AtomSet { mask: alloc::vec![false; atom_count] }
    }

    /// Size of the underlying lattice.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.mask.get(atom).copied().unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(a, _)| a)
    }

    pub fn intersection(&self, other: &AtomSet) -> AtomSet {
        assert_eq!(self.mask.len(), other.mask.len(), "atom sets over different lattices");
        AtomSet { mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && b).collect() }
    }
}

fn same_catalog(a: &Arc<Catalog>, b: &Arc<Catalog>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `𝕄`: one Hermitian operator per atom; the atoms sum to the identity.
#[derive(Clone, Debug)]
pub struct OperatorValuedMeasure {
    catalog: Arc<Catalog>,
    atoms: Vec<CMatrix>,
}

impl OperatorValuedMeasure {
    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn atom(&self, index: usize) -> &CMatrix {
        &self.atoms[index]
    }

    pub fn atoms(&self) -> &[CMatrix] {
        &self.atoms
    }

    /// `𝕄(A)` for an explicit atom set.
    pub fn of_atoms(&self, set: &AtomSet) -> Result<CMatrix> {
        if set.universe() != self.atoms.len() {
            return Err(Error::CatalogMismatch);
        }
        let mut acc = CMatrix::zeros(self.catalog.dim());
        for a in set.iter() {
            acc += &self.atoms[a];
        }
        Ok(acc)
    }

    /// `𝕄(Λ)`; the identity up to rounding.
    pub fn total(&self) -> CMatrix {
        let mut acc = CMatrix::zeros(self.catalog.dim());
        for m in &self.atoms {
            acc += m;
        }
        acc
    }
}

/// Builds `𝕄({λ}) = 𝒫_(X₁..X_K)({λ₁} × ⋯ × {λ_K})` for every atom.
pub fn build_global_measure(catalog: Arc<Catalog>) -> Result<OperatorValuedMeasure> {
    let atoms = atom_products(&catalog)?;
    Ok(OperatorValuedMeasure { catalog, atoms })
}

/// `𝕄(π⁻¹(F))`, summed over the member atoms in enumeration order.
pub fn measure_of_cylinder(measure: &OperatorValuedMeasure, cylinder: &CylinderSet) -> Result<CMatrix> {
    measure.of_atoms(&cylinder.atoms(&measure.catalog)?)
}

fn singleton_selection(sub: &[usize], tuple: &[usize]) -> ProjectorSelection {
    ProjectorSelection::new(sub.iter().zip(tuple).map(|(&i, &k)| Side { observable: i, points: alloc::vec![k] }).collect())
}

/// Checks `𝕄(π⁻¹_(X_{i₁}..X_{i_k})(F)) = 𝒫_(X_{i₁}..X_{i_k})(F)`.
///
/// The right-hand side is computed independently from the sub-collection's own
/// symmetrized products. Exhaustive mode covers every sub-collection (in
/// catalog order, including the empty one) and every set `F` of outcome tuples.
pub fn verify_pushforward(measure: &OperatorValuedMeasure, sampling: Sampling) -> Result<CheckReport> {
    let catalog = measure.catalog();
    let n = catalog.len();
    let mut report = CheckReport::new("pushforward", catalog.tolerances().check);

    match sampling {
        Sampling::Exhaustive => {
            for sub in subsets::all_subsets(n)? {
                let radices: Vec<usize> = sub.iter().map(|&i| catalog.radices()[i]).collect();
                let tuples: usize = radices.iter().product();
                let mut deviations = Vec::with_capacity(tuples);
                for t in 0..tuples {
                    let tuple = mixed_radix_digits(t, &radices);
                    let cyl = CylinderSet::new(catalog, sub.clone(), alloc::vec![tuple.clone()])?;
                    let lhs = measure_of_cylinder(measure, &cyl)?;
                    let rhs = product_measure_on_rectangle(catalog, &singleton_selection(&sub, &tuple))?;
                    deviations.push(&lhs - &rhs);
                }
                let (worst, count) = max_subset_sum_norm(&deviations)?;
                report.record_batch(count, worst, || {
                    format!("sub-collection {}: worst set deviation {worst:e}", describe_indices(&sub))
                });
            }
        }
        Sampling::Random { trials, seed } => {
            let mut rng = random::rng(seed);
            for _ in 0..trials {
                let picked = random::random_subset(&mut rng, n);
                let perm = random::random_permutation(&mut rng, picked.len());
                let sub: Vec<usize> = perm.iter().map(|&k| picked[k]).collect();
                let radices: Vec<usize> = sub.iter().map(|&i| catalog.radices()[i]).collect();
                let count: usize = radices.iter().product();
                let tuples: Vec<Vec<usize>> =
                    (0..count).filter(|_| rng.gen_bool(0.5)).map(|t| mixed_radix_digits(t, &radices)).collect();
                let lhs = measure_of_cylinder(measure, &CylinderSet::new(catalog, sub.clone(), tuples.clone())?)?;
                let mut rhs = CMatrix::zeros(catalog.dim());
                for t in &tuples {
                    rhs += &product_measure_on_rectangle(catalog, &singleton_selection(&sub, t))?;
                }
                let dev = lhs.distance(&rhs);
                report.record(dev, || format!("sub-collection {sub:?}, F = {tuples:?}: deviation {dev:e}"));
            }
        }
    }
    Ok(report)
}

/// `μ_ρ`: one real value per atom, summing to one, possibly negative.
#[derive(Clone, Debug)]
pub struct SignedMeasure {
    catalog: Arc<Catalog>,
    state_label: String,
    values: Vec<f64>,
}

impl SignedMeasure {
    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn state_label(&self) -> &str {
        &self.state_label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn atom(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn of_atoms(&self, set: &AtomSet) -> Result<f64> {
        if set.universe() != self.values.len() {
            return Err(Error::CatalogMismatch);
        }
        Ok(set.iter().map(|a| self.values[a]).sum())
    }

    pub fn of_cylinder(&self, cylinder: &CylinderSet) -> Result<f64> {
        self.of_atoms(&cylinder.atoms(&self.catalog)?)
    }
}

/// `μ_ρ({λ}) = Re tr[ρ 𝕄({λ})]`.
pub fn induce_signed_measure(measure: &OperatorValuedMeasure, rho: &DensityState) -> Result<SignedMeasure> {
    let dim = measure.catalog.dim();
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
    }
    Ok(SignedMeasure {
        catalog: Arc::clone(&measure.catalog),
        state_label: rho.label().into(),
        values: measure.atoms.iter().map(|m| rho.matrix().trace_product(m).re).collect(),
    })
}

/// Atomwise convex combination `Σ α_j μ_j`.
pub fn mixture_measure(components: &[(f64, &SignedMeasure)]) -> Result<SignedMeasure> {
    let (_, first) = components.first().ok_or_else(|| Error::InvalidMixture { reason: "no components".into() })?;
    let tol = first.catalog.tolerances().check;
    let mut total_weight = 0.0;
    for (w, mu) in components {
        if w.is_nan() || *w <= 0.0 {
            return Err(Error::InvalidMixture { reason: format!("weight {w} is not positive") });
        }
        if !same_catalog(&first.catalog, &mu.catalog) {
            return Err(Error::CatalogMismatch);
        }
        total_weight += w;
    }
    if (total_weight - 1.0).abs() > tol {
        return Err(Error::InvalidMixture { reason: format!("weights sum to {total_weight}, not 1") });
    }
    let mut values = alloc::vec![0.0; first.values.len()];
    for (w, mu) in components {
        for (v, x) in values.iter_mut().zip(&mu.values) {
            *v += w * x;
        }
    }
    let label = components.iter().map(|(w, mu)| format!("{w}*{}", mu.state_label)).collect::<Vec<_>>().join(" + ");
    Ok(SignedMeasure { catalog: Arc::clone(&first.catalog), state_label: label, values })
}

/// `Σ_λ (∏_{i∈subset} π_{X_i}(λ)) μ({λ})`; the empty subset gives `μ(Λ)`.
pub fn product_expectation_via_measure(mu: &SignedMeasure, subset: &[usize]) -> Result<f64> {
    let catalog = &mu.catalog;
    check_indices(subset, catalog.len(), "catalog observable")?;
    let mut acc = 0.0;
    for (a, &v) in mu.values.iter().enumerate() {
        let atom = catalog.atom(a);
        let weight: f64 = subset.iter().map(|&i| catalog.observable(i).eigenvalue(atom.0[i])).product();
        acc += weight * v;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NegativityDiagnostics {
    /// `Σ |μ({λ})|`; exactly one for probability measures.
    pub total_variation: f64,
    pub min_atom: f64,
    /// Atoms below `−tol.check`.
    pub negative_atom_count: usize,
}

pub fn negativity_diagnostics(mu: &SignedMeasure) -> NegativityDiagnostics {
    let tol = mu.catalog.tolerances().check;
    NegativityDiagnostics {
        total_variation: mu.values.iter().map(|v| v.abs()).sum(),
        min_atom: mu.values.iter().copied().fold(f64::INFINITY, f64::min),
        negative_atom_count: mu.values.iter().filter(|&&v| v < -tol).count(),
    }
}
