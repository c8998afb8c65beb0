//! Random variables on the outcome lattice and the qHV representations built from them.
//!
//! The canonical variable `π_X(λ) = λ_X` represents a catalog observable `X`.
//! Under the signed measure `ν_ρ` these variables reproduce every joint von
//! Neumann probability of commuting observables (noncontextual model). A
//! function `φ(Y) = X` gives a second representative `φ ∘ π_Y` of `X`; the two
//! are pointwise different but interchangeable inside every joint-measurement
//! cylinder (context-invariant model).

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::extension::{AtomSet, Catalog, OperatorValuedMeasure, SignedMeasure};
use crate::linalg::CMatrix;
use crate::random;
use crate::report::{CheckReport, Sampling};
use crate::spectral::{
    apply_function, commute_check, eigendecompose, expectation, DensityState, HermitianObservable, SpectrumFunction,
};
use crate::subsets::{self, check_indices, mixed_radix_digits};
use crate::symmetrized::{joint_probability_commuting, EXHAUSTIVE_CAP};

/// A real function on the atoms of a catalog's lattice.
#[derive(Clone, Debug)]
pub struct RandomVariable {
    catalog: Arc<Catalog>,
    label: String,
    values: Vec<f64>,
    range: Vec<f64>,
}

impl RandomVariable {
    pub fn new(catalog: Arc<Catalog>, label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != catalog.atom_count() {
            return Err(Error::DimensionMismatch { expected: catalog.atom_count(), found: values.len() });
        }
        let mut range = values.clone();
        range.sort_by(f64::total_cmp);
        range.dedup();
        Ok(RandomVariable { catalog, label: label.into(), values, range })
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, atom: usize) -> f64 {
        self.values[atom]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Attained values, sorted and distinct.
    pub fn range(&self) -> &[f64] {
        &self.range
    }

    /// Spectral correspondence: the attained values are exactly `sp X`.
    pub fn matches_spectrum(&self, x: &HermitianObservable) -> bool {
        self.range == x.eigenvalues()
    }
}

fn same_catalog(a: &Arc<Catalog>, b: &Arc<Catalog>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `π_X(λ) = λ_X` for the catalog observable at `index`.
pub fn canonical_rv(catalog: &Arc<Catalog>, index: usize) -> Result<RandomVariable> {
    let x = catalog.get(index)?;
    let values = (0..catalog.atom_count()).map(|a| x.eigenvalue(catalog.atom(a).0[index])).collect();
    RandomVariable::new(Arc::clone(catalog), format!("pi[{}]", x.label()), values)
}

/// `φ ∘ g`.
pub fn compose_rv(phi: &SpectrumFunction, g: &RandomVariable) -> Result<RandomVariable> {
    let values = g
        .values
        .iter()
        .map(|&v| phi.eval(v).ok_or(Error::FunctionUndefined { point: v }))
        .collect::<Result<Vec<_>>>()?;
    RandomVariable::new(Arc::clone(&g.catalog), format!("phi o {}", g.label), values)
}

/// A representation `φ(Y) = X` of a target observable through a catalog member `Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalRepresentation {
    base: usize,
    phi: SpectrumFunction,
    target: HermitianObservable,
}

impl FunctionalRepresentation {
    /// Validates `φ(Y) = X` where `Y` is catalog member `base`.
    ///
    /// `φ` must be keyed by the canonical eigenvalues of `Y`. Its values are
    /// snapped onto the canonical eigenvalues of `target`, so the induced
    /// variable attains exactly `sp X`.
    pub fn new(catalog: &Catalog, base: usize, phi: SpectrumFunction, target: HermitianObservable) -> Result<Self> {
        let tol = catalog.tolerances();
        let y = catalog.get(base)?;
        if target.dim() != y.dim() {
            return Err(Error::DimensionMismatch { expected: y.dim(), found: target.dim() });
        }
        let image = apply_function(&phi, y)?;
        let dev = image.matrix().distance(target.matrix());
        if dev > tol.check {
            return Err(Error::InvalidRepresentation {
                reason: format!("phi({}) differs from {} by {dev:e}", y.label(), target.label()),
            });
        }
        let snapped = phi
            .entries()
            .iter()
            .map(|&(k, v)| target.spectral_index(v, tol).map(|b| (k, target.eigenvalue(b))))
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::InvalidRepresentation {
                reason: format!("function values do not lie in the spectrum of {}", target.label()),
            })?;
        let phi = SpectrumFunction::from_pairs(snapped)?;
        Ok(FunctionalRepresentation { base, phi, target })
    }

    /// Representation of `φ(Y)` itself.
    ///
    /// The target is the catalog member equal to `φ(Y)` when there is one;
    /// otherwise `φ(Y)` is decomposed afresh so that values of `φ` that agree
    /// only up to rounding share one spectral point.
    pub fn from_function(catalog: &Catalog, base: usize, phi: SpectrumFunction) -> Result<Self> {
        let y = catalog.get(base)?;
        let image = apply_function(&phi, y)?;
        let target = match catalog.position_of_matrix(image.matrix()) {
            Some(i) => catalog.observable(i).clone(),
            None => eigendecompose(image.matrix(), catalog.tolerances())?.with_label(image.label()),
        };
        Self::new(catalog, base, phi, target)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn phi(&self) -> &SpectrumFunction {
        &self.phi
    }

    pub fn target(&self) -> &HermitianObservable {
        &self.target
    }

    /// The representative `g = φ ∘ π_Y`.
    pub fn variable(&self, catalog: &Arc<Catalog>) -> Result<RandomVariable> {
        compose_rv(&self.phi, &canonical_rv(catalog, self.base)?)
    }
}

/// All representations `φ(Y) = X` with `Y` ranging over the catalog.
///
/// `Y` qualifies when each of its eigenprojectors lies inside one eigenspace of
/// `X` and the eigenprojectors of `X` are the resulting sums.
pub fn find_functional_representations(catalog: &Catalog, x: &HermitianObservable) -> Result<Vec<FunctionalRepresentation>> {
    if x.dim() != catalog.dim() {
        return Err(Error::DimensionMismatch { expected: catalog.dim(), found: x.dim() });
    }
    let tol = catalog.tolerances();
    let mut found = Vec::new();
    'members: for (base, y) in catalog.observables().iter().enumerate() {
        let mut table = Vec::with_capacity(y.spectrum().len());
        for py in y.spectrum() {
            let hit = x.spectrum().iter().find(|px| px.projector.matmul(&py.projector).distance(&py.projector) <= tol.check);
            match hit {
                Some(px) => table.push((py.value, px.value)),
                None => continue 'members,
            }
        }
        for px in x.spectrum() {
            let mut sum = CMatrix::zeros(x.dim());
            for (py, &(_, v)) in y.spectrum().iter().zip(&table) {
                if v == px.value {
                    sum += &py.projector;
                }
            }
            if sum.distance(&px.projector) > tol.check {
                continue 'members;
            }
        }
        let phi = SpectrumFunction::from_pairs(table)?;
        found.push(FunctionalRepresentation { base, phi, target: x.clone() });
    }
    Ok(found)
}

fn check_same_catalog(vars: &[&RandomVariable]) -> Result<Arc<Catalog>> {
    let first = vars.first().ok_or_else(|| Error::InvalidParameter { reason: "no random variables given".into() })?;
    for g in vars {
        if !same_catalog(&first.catalog, &g.catalog) {
            return Err(Error::CatalogMismatch);
        }
    }
    Ok(Arc::clone(&first.catalog))
}

/// `g₁⁻¹(B₁) ∩ ⋯ ∩ gₙ⁻¹(Bₙ)` with exact value membership.
pub fn rv_cylinder(vars: &[&RandomVariable], sets: &[Vec<f64>]) -> Result<AtomSet> {
    let catalog = check_same_catalog(vars)?;
    if vars.len() != sets.len() {
        return Err(Error::InvalidParameter { reason: format!("{} variables but {} value sets", vars.len(), sets.len()) });
    }
    Ok(AtomSet::from_predicate(catalog.atom_count(), |a| vars.iter().zip(sets).all(|(g, b)| b.contains(&g.values[a]))))
}

/// `{λ : (g₁(λ), …, gₙ(λ)) ∈ F}` for a set `F` of value tuples.
pub fn rv_preimage(vars: &[&RandomVariable], tuples: &[Vec<f64>]) -> Result<AtomSet> {
    let catalog = check_same_catalog(vars)?;
    if let Some(t) = tuples.iter().find(|t| t.len() != vars.len()) {
        return Err(Error::DimensionMismatch { expected: vars.len(), found: t.len() });
    }
    Ok(AtomSet::from_predicate(catalog.atom_count(), |a| {
        tuples.iter().any(|t| vars.iter().zip(t).all(|(g, &v)| g.values[a] == v))
    }))
}

/// `Σ_λ ψ(g₁(λ), …, gₙ(λ)) ν({λ})`.
pub fn qhv_average(nu: &SignedMeasure, psi: impl Fn(&[f64]) -> f64, vars: &[&RandomVariable]) -> Result<f64> {
    for g in vars {
        if !same_catalog(nu.catalog(), &g.catalog) {
            return Err(Error::CatalogMismatch);
        }
    }
    let mut args = alloc::vec![0.0; vars.len()];
    let mut acc = 0.0;
    for (a, &w) in nu.values().iter().enumerate() {
        for (slot, g) in args.iter_mut().zip(vars) {
            *slot = g.values[a];
        }
        acc += psi(&args) * w;
    }
    Ok(acc)
}

fn require_commuting(catalog: &Catalog, indices: &[usize]) -> Result<()> {
    let tol = catalog.tolerances();
    for (k, &i) in indices.iter().enumerate() {
        for &j in &indices[k + 1..] {
            if !commute_check(catalog.observable(i), catalog.observable(j), tol)? {
                return Err(Error::NotCommuting {
                    first: catalog.observable(i).label().into(),
                    second: catalog.observable(j).label().into(),
                });
            }
        }
    }
    Ok(())
}

fn check_state(nu: &SignedMeasure, rho: &DensityState) -> Result<()> {
    if rho.dim() != nu.catalog().dim() {
        return Err(Error::DimensionMismatch { expected: nu.catalog().dim(), found: rho.dim() });
    }
    Ok(())
}

/// Checks `tr[ρ P_{X₁,…,Xₙ}(F)] = ν_ρ({λ : (π_{X₁}(λ),…,π_{Xₙ}(λ)) ∈ F})` and
/// `ν_ρ(…) ≥ 0` for a pairwise commuting sub-collection.
///
/// Exhaustive mode covers every set `F` of outcome tuples. Both quantities are
/// additive over tuples, so the extremes over all `F` are the sums of the
/// positive and of the negative per-tuple terms.
pub fn verify_noncontextual_joint(
    nu: &SignedMeasure,
    rho: &DensityState,
    subset: &[usize],
    sampling: Sampling,
) -> Result<CheckReport> {
    let catalog = Arc::clone(nu.catalog());
    let tol = *catalog.tolerances();
    check_state(nu, rho)?;
    check_indices(subset, catalog.len(), "catalog observable")?;
    require_commuting(&catalog, subset)?;

    let vars = subset.iter().map(|&i| canonical_rv(&catalog, i)).collect::<Result<Vec<_>>>()?;
    let var_refs: Vec<&RandomVariable> = vars.iter().collect();
    let observables: Vec<&HermitianObservable> = subset.iter().map(|&i| catalog.observable(i)).collect();
    let radices: Vec<usize> = subset.iter().map(|&i| catalog.radices()[i]).collect();
    let tuples: usize = radices.iter().product();

    // Per-tuple quantum probability and ν_ρ value.
    let mut quantum = Vec::with_capacity(tuples);
    let mut measured = Vec::with_capacity(tuples);
    for t in 0..tuples {
        let digits = mixed_radix_digits(t, &radices);
        let sets: Vec<Vec<usize>> = digits.iter().map(|&k| alloc::vec![k]).collect();
        quantum.push(joint_probability_commuting(rho, &observables, &sets, &tol)?);
        let values: Vec<f64> = digits.iter().zip(&observables).map(|(&k, x)| x.eigenvalue(k)).collect();
        measured.push(nu.of_atoms(&rv_preimage(&var_refs, &[values])?)?);
    }

    let mut report = CheckReport::new("noncontextual-joint", tol.check);
    match sampling {
        Sampling::Exhaustive => {
            if tuples > 62 {
                return Err(Error::ResourceLimit { what: "exhaustive outcome tuples", required: tuples, limit: 62 });
            }
            let count = 1u64 << tuples;
            let (mut pos, mut neg, mut lowest) = (0.0, 0.0, 0.0);
            for (q, m) in quantum.iter().zip(&measured) {
                let d = m - q;
                if d > 0.0 { pos += d } else { neg -= d }
                if *m < 0.0 {
                    lowest += m;
                }
            }
            let worst: f64 = f64::max(pos, neg);
            report.record_batch(count, worst, || format!("joint probabilities over {subset:?}: worst deviation {worst:e}"));
            report.record_batch(count, -lowest, || format!("cylinder over {subset:?} has value {lowest:e}"));
        }
        Sampling::Random { trials, seed } => {
            let mut rng = random::rng(seed);
            for _ in 0..trials {
                let f = random::random_subset(&mut rng, tuples);
                let q: f64 = f.iter().map(|&t| quantum[t]).sum();
                let m: f64 = f.iter().map(|&t| measured[t]).sum();
                report.record((m - q).abs(), || format!("F = {f:?} over {subset:?}: trace {q}, measure {m}"));
                report.record((-m).max(0.0), || format!("F = {f:?} over {subset:?}: negative value {m}"));
            }
        }
    }
    Ok(report)
}

/// One average relation to check against the quantum expectation.
#[derive(Clone, Debug, PartialEq)]
pub enum KsCase {
    /// `⟨φ(X)⟩_ρ = ⟨φ ∘ f_X⟩`.
    Function { observable: usize, phi: SpectrumFunction },
    /// `⟨X₁ + ⋯ + Xₙ⟩_ρ = ⟨f_{X₁} + ⋯ + f_{Xₙ}⟩` for arbitrary members.
    Sum { observables: Vec<usize> },
    /// `⟨X₁ ⋯ Xₙ⟩_ρ = ⟨f_{X₁} ⋯ f_{Xₙ}⟩` for commuting members.
    Product { observables: Vec<usize> },
}

/// Evaluates each case on both sides and records the deviations.
pub fn verify_ks_average_relations(nu: &SignedMeasure, rho: &DensityState, cases: &[KsCase]) -> Result<CheckReport> {
    let catalog = Arc::clone(nu.catalog());
    check_state(nu, rho)?;
    let mut report = CheckReport::new("ks-averages", catalog.tolerances().check);
    for (n, case) in cases.iter().enumerate() {
        let (quantum, hidden) = match case {
            KsCase::Function { observable, phi } => {
                let x = catalog.get(*observable)?;
                let lhs = expectation(rho, &apply_function(phi, x)?)?;
                let f = canonical_rv(&catalog, *observable)?;
                let rhs = qhv_average(nu, |v| phi.eval(v[0]).unwrap_or(f64::NAN), &[&f])?;
                (lhs, rhs)
            }
            KsCase::Sum { observables } => {
                check_indices(observables, catalog.len(), "catalog observable")?;
                let mut sum = CMatrix::zeros(catalog.dim());
                for &i in observables {
                    sum += catalog.observable(i).matrix();
                }
                let lhs = rho.matrix().trace_product(&sum).re;
                let vars = observables.iter().map(|&i| canonical_rv(&catalog, i)).collect::<Result<Vec<_>>>()?;
                let refs: Vec<&RandomVariable> = vars.iter().collect();
                (lhs, qhv_average(nu, |v| v.iter().sum(), &refs)?)
            }
            KsCase::Product { observables } => {
                check_indices(observables, catalog.len(), "catalog observable")?;
                require_commuting(&catalog, observables)?;
                let mut product = CMatrix::identity(catalog.dim());
                for &i in observables {
                    product = product.matmul(catalog.observable(i).matrix());
                }
                let lhs = rho.matrix().trace_product(&product).re;
                let vars = observables.iter().map(|&i| canonical_rv(&catalog, i)).collect::<Result<Vec<_>>>()?;
                let refs: Vec<&RandomVariable> = vars.iter().collect();
                (lhs, qhv_average(nu, |v| v.iter().product(), &refs)?)
            }
        };
        let dev = (quantum - hidden).abs();
        report.record(dev, || format!("case {n} ({case:?}): quantum {quantum}, qHV {hidden}"));
    }
    Ok(report)
}

/// Checks that the representative `φ ∘ π_Y` of `X = φ(Y)` can replace the
/// canonical variable of `X` inside every cylinder with commuting partners.
///
/// For each `B ⊆ sp X` and partner sets `C_j`:
/// * `ν_ρ((φ∘π_Y)⁻¹(B) ∩ ⋂ π_{Z_j}⁻¹(C_j)) = tr[ρ P_X(B) ∏ P_{Z_j}(C_j)]`;
/// * when `X` is itself a catalog member, the same value is obtained with `π_X`.
///
/// The product averages with each representative substituted are checked
/// against `tr[ρ X ∏ Z_j]` once per call.
pub fn verify_context_invariance(
    nu: &SignedMeasure,
    rho: &DensityState,
    rep: &FunctionalRepresentation,
    partners: &[usize],
    sampling: Sampling,
) -> Result<CheckReport> {
    let catalog = Arc::clone(nu.catalog());
    let tol = *catalog.tolerances();
    check_state(nu, rho)?;
    check_indices(partners, catalog.len(), "catalog observable")?;
    // Revalidate against this catalog.
    let rep = FunctionalRepresentation::new(&catalog, rep.base, rep.phi.clone(), rep.target.clone())?;
    let target = &rep.target;
    for &j in partners {
        if !commute_check(target, catalog.observable(j), &tol)? {
            return Err(Error::NotCommuting { first: target.label().into(), second: catalog.observable(j).label().into() });
        }
    }
    if partners.len() > 1 {
        require_commuting(&catalog, partners)?;
    }

    let g = rep.variable(&catalog)?;
    if !g.matches_spectrum(target) {
        return Err(Error::InvalidRepresentation { reason: format!("representative range {:?} is not sp {}", g.range(), target.label()) });
    }
    // The catalog copy of `X` may carry eigenvalues that differ from the
    // target's in the last bits, so value sets are translated point by point.
    let canonical = match catalog.position_of_matrix(target.matrix()) {
        Some(i) => {
            let member = catalog.observable(i);
            let points = target
                .eigenvalues()
                .iter()
                .map(|&v| member.spectral_index(v, &tol).map(|k| member.eigenvalue(k)))
                .collect::<Result<Vec<f64>>>()?;
            Some((canonical_rv(&catalog, i)?, points))
        }
        None => None,
    };
    let partner_vars = partners.iter().map(|&j| canonical_rv(&catalog, j)).collect::<Result<Vec<_>>>()?;

    let mut report = CheckReport::new("context-invariance", tol.check);

    // side_counts[0] enumerates B ⊆ sp X, the rest C_j ⊆ sp Z_j.
    let mut lens = alloc::vec![target.spectrum().len()];
    lens.extend(partners.iter().map(|&j| catalog.radices()[j]));
    let check = |choice: &[Vec<usize>], report: &mut CheckReport| -> Result<()> {
        let mut operator = target.projector_of(&choice[0])?;
        let mut value_sets = alloc::vec![choice[0].iter().map(|&k| target.eigenvalue(k)).collect::<Vec<f64>>()];
        for (c, &j) in choice[1..].iter().zip(partners) {
            let z = catalog.observable(j);
            operator = operator.matmul(&z.projector_of(c)?);
            value_sets.push(c.iter().map(|&k| z.eigenvalue(k)).collect());
        }
        let trace = rho.matrix().trace_product(&operator).re;

        let mut vars: Vec<&RandomVariable> = alloc::vec![&g];
        vars.extend(partner_vars.iter());
        let via_rep = nu.of_atoms(&rv_cylinder(&vars, &value_sets)?)?;
        let dev = (via_rep - trace).abs();
        report.record(dev, || format!("B = {:?}, partner sets {:?}: representative {via_rep}, trace {trace}", choice[0], &choice[1..]));

        if let Some((f, points)) = &canonical {
            vars[0] = f;
            value_sets[0] = choice[0].iter().map(|&k| points[k]).collect();
            let via_canonical = nu.of_atoms(&rv_cylinder(&vars, &value_sets)?)?;
            let dev = (via_canonical - via_rep).abs();
            report.record(dev, || {
                format!("B = {:?}, partner sets {:?}: canonical {via_canonical}, representative {via_rep}", choice[0], &choice[1..])
            });
        }
        Ok(())
    };

    match sampling {
        Sampling::Exhaustive => {
            let counts: Vec<usize> = lens.iter().map(|&l| 1usize << l).collect();
            let total = subsets::checked_product(&counts, EXHAUSTIVE_CAP, "exhaustive cylinder choices")?;
            let all: Vec<Vec<Vec<usize>>> = lens.iter().map(|&l| subsets::all_subsets(l)).collect::<Result<_>>()?;
            for c in 0..total {
                let digits = mixed_radix_digits(c, &counts);
                let choice: Vec<Vec<usize>> = digits.iter().enumerate().map(|(k, &d)| all[k][d].clone()).collect();
                check(&choice, &mut report)?;
            }
        }
        Sampling::Random { trials, seed } => {
            let mut rng = random::rng(seed);
            for _ in 0..trials {
                let choice: Vec<Vec<usize>> = lens.iter().map(|&l| random::random_subset(&mut rng, l)).collect();
                check(&choice, &mut report)?;
            }
        }
    }

    // Product averages with each representative substituted.
    let mut product = target.matrix().clone();
    for &j in partners {
        product = product.matmul(catalog.observable(j).matrix());
    }
    let quantum = rho.matrix().trace_product(&product).re;
    let mut reps: Vec<&RandomVariable> = alloc::vec![&g];
    if let Some((f, _)) = &canonical {
        reps.push(f);
    }
    for r in reps {
        let mut vars: Vec<&RandomVariable> = alloc::vec![r];
        vars.extend(partner_vars.iter());
        let avg = qhv_average(nu, |v| v.iter().product(), &vars)?;
        let dev = (avg - quantum).abs();
        report.record(dev, || format!("product average with {}: {avg} vs trace {quantum}", r.label()));
    }
    Ok(report)
}

/// `𝕄(g⁻¹(B))` for a set of values `B`.
pub fn operator_measure_of_rv(measure: &OperatorValuedMeasure, g: &RandomVariable, values: &[f64]) -> Result<CMatrix> {
    if !same_catalog(measure.catalog(), &g.catalog) {
        return Err(Error::CatalogMismatch);
    }
    measure.of_atoms(&rv_cylinder(&[g], &[values.to_vec()])?)
}

/// Checks `𝕄(g⁻¹(B)) = P_X(B)` for every `B ⊆ sp X`, where `g` is the
/// representative of `rep` and `X` its target.
pub fn verify_representative_reconstruction(measure: &OperatorValuedMeasure, rep: &FunctionalRepresentation) -> Result<CheckReport> {
    let catalog = Arc::clone(measure.catalog());
    let rep = FunctionalRepresentation::new(&catalog, rep.base, rep.phi.clone(), rep.target.clone())?;
    let g = rep.variable(&catalog)?;
    let target = &rep.target;
    let mut report = CheckReport::new("representative-reconstruction", catalog.tolerances().check);
    for b in subsets::all_subsets(target.spectrum().len())? {
        let values: Vec<f64> = b.iter().map(|&k| target.eigenvalue(k)).collect();
        let reconstructed = operator_measure_of_rv(measure, &g, &values)?;
        let dev = reconstructed.distance(&target.projector_of(&b)?);
        report.record(dev, || format!("B = {values:?}: deviation {dev:e}"));
    }
    Ok(report)
}
