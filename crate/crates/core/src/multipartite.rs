//! N-partite scenarios: tensor-lifted local observables on one global lattice,
//! local qHV (LqHV) checks, CHSH evaluation and Werner-family scans.
//!
//! All lifted local observables of a scenario share a single catalog, hence a
//! single signed measure; response functions are indicators of one site's
//! coordinates. The singlet is `|ψ⁻⟩ = (|01⟩ − |10⟩)/√2`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::extension::{build_global_measure, induce_signed_measure, negativity_diagnostics, Catalog, OperatorValuedMeasure, SignedMeasure};
use crate::linalg::{CMatrix, C64};
use crate::models::{canonical_rv, qhv_average};
use crate::random;
use crate::report::{CheckReport, Sampling};
use crate::spectral::{tensor_embed, validate_state, DensityState, HermitianObservable, Tolerances};
use crate::subsets::{self, mixed_radix_digits};
use crate::symmetrized::EXHAUSTIVE_CAP;

/// Local observables per site and a state on the product space.
#[derive(Clone, Debug, PartialEq)]
pub struct PartiteScenario {
    dims: Vec<usize>,
    locals: Vec<Vec<HermitianObservable>>,
    state: DensityState,
}

impl PartiteScenario {
    pub fn new(dims: Vec<usize>, locals: Vec<Vec<HermitianObservable>>, state: DensityState) -> Result<Self> {
        if dims.is_empty() || dims.len() != locals.len() {
            return Err(Error::InvalidParameter {
                reason: format!("{} site dimensions but {} observable lists", dims.len(), locals.len()),
            });
        }
        for (site, (d, list)) in dims.iter().zip(&locals).enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidParameter { reason: format!("site {site} has no observables") });
            }
            if let Some(x) = list.iter().find(|x| x.dim() != *d) {
                return Err(Error::DimensionMismatch { expected: *d, found: x.dim() });
            }
        }
        let total: usize = dims.iter().product();
        if state.dim() != total {
            return Err(Error::DimensionMismatch { expected: total, found: state.dim() });
        }
        Ok(PartiteScenario { dims, locals, state })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn locals(&self) -> &[Vec<HermitianObservable>] {
        &self.locals
    }

    pub fn state(&self) -> &DensityState {
        &self.state
    }

    pub fn sites(&self) -> usize {
        self.dims.len()
    }
}

/// The lifted catalog of a scenario, ordered site-major.
#[derive(Clone, Debug)]
pub struct ScenarioCatalog {
    pub catalog: Arc<Catalog>,
    /// `layout[site][k]` is the catalog index of the `k`-th local observable at `site`.
    pub layout: Vec<Vec<usize>>,
}

impl ScenarioCatalog {
    pub fn site_of(&self, catalog_index: usize) -> Option<usize> {
        self.layout.iter().position(|l| l.contains(&catalog_index))
    }
}

pub fn build_scenario_catalog(scenario: &PartiteScenario, tol: &Tolerances) -> Result<ScenarioCatalog> {
    let mut observables = Vec::new();
    let mut layout = Vec::with_capacity(scenario.sites());
    for (site, list) in scenario.locals.iter().enumerate() {
        let mut indices = Vec::with_capacity(list.len());
        for x in list {
            indices.push(observables.len());
            observables.push(tensor_embed(x, site, &scenario.dims)?);
        }
        layout.push(indices);
    }
    Ok(ScenarioCatalog { catalog: Arc::new(Catalog::new(observables, *tol)?), layout })
}

/// The indicator `λ ↦ [π_X(λ) ∈ B]` of one lifted local observable.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalResponse {
    pub site: usize,
    pub catalog_index: usize,
    pub points: Vec<usize>,
    table: Vec<f64>,
}

impl LocalResponse {
    pub fn new(sc: &ScenarioCatalog, site: usize, local: usize, points: Vec<usize>) -> Result<Self> {
        let list = sc.layout.get(site).ok_or(Error::IndexOutOfRange { what: "site", index: site, len: sc.layout.len() })?;
        let &catalog_index = list.get(local).ok_or(Error::IndexOutOfRange { what: "local observable", index: local, len: list.len() })?;
        let radix = sc.catalog.radices()[catalog_index];
        if let Some(&p) = points.iter().find(|&&p| p >= radix) {
            return Err(Error::IndexOutOfRange { what: "spectral point", index: p, len: radix });
        }
        let table = (0..sc.catalog.atom_count())
            .map(|a| if points.contains(&sc.catalog.atom(a).0[catalog_index]) { 1.0 } else { 0.0 })
            .collect();
        Ok(LocalResponse { site, catalog_index, points, table })
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// True when the table only depends on the coordinates of this site's observables.
    pub fn is_local(&self, sc: &ScenarioCatalog) -> bool {
        let own = &sc.layout[self.site];
        let radices = sc.catalog.radices();
        (0..self.table.len()).all(|a| {
            let mut digits = mixed_radix_digits(a, radices);
            for (i, d) in digits.iter_mut().enumerate() {
                if !own.contains(&i) {
                    *d = 0;
                }
            }
            self.table[a] == self.table[subsets::mixed_radix_index(&digits, radices)]
        })
    }
}

fn local_choices(scenario: &PartiteScenario) -> Vec<Vec<(usize, Vec<usize>)>> {
    scenario
        .locals
        .iter()
        .map(|list| {
            let mut out = Vec::new();
            for (j, x) in list.iter().enumerate() {
                for b in subsets::all_subsets(x.spectrum().len()).unwrap_or_default() {
                    out.push((j, b));
                }
            }
            out
        })
        .collect()
}

/// Checks `tr[ρ (P_{X₁}(B₁) ⊗ ⋯ ⊗ P_{X_N}(B_N))] = Σ_λ ∏ χ_n(λ) ν_ρ({λ})`
/// with one signed measure for all settings, and that every response table
/// depends only on its own site.
///
/// Exhaustive mode enumerates every per-site choice of observable and value set.
pub fn verify_lqhv(scenario: &PartiteScenario, tol: &Tolerances, sampling: Sampling) -> Result<CheckReport> {
    let sc = build_scenario_catalog(scenario, tol)?;
    let measure = build_global_measure(Arc::clone(&sc.catalog))?;
    let nu = induce_signed_measure(&measure, &scenario.state)?;
    let choices = local_choices(scenario);
    let mut report = CheckReport::new("lqhv", tol.check);

    let check = |pick: &[&(usize, Vec<usize>)], report: &mut CheckReport| -> Result<()> {
        let mut operator = CMatrix::identity(1);
        let mut weights = alloc::vec![1.0; sc.catalog.atom_count()];
        for (site, (j, b)) in pick.iter().enumerate() {
            operator = operator.kron(&scenario.locals[site][*j].projector_of(b)?);
            let response = LocalResponse::new(&sc, site, *j, b.clone())?;
            let local = response.is_local(&sc);
            report.record(if local { 0.0 } else { 1.0 }, || format!("response at site {site} depends on other sites"));
            for (w, chi) in weights.iter_mut().zip(response.table()) {
                *w *= chi;
            }
        }
        let quantum = scenario.state.matrix().trace_product(&operator).re;
        let hidden: f64 = weights.iter().zip(nu.values()).map(|(w, v)| w * v).sum();
        let dev = (quantum - hidden).abs();
        let settings: Vec<(usize, Vec<usize>)> = pick.iter().map(|c| (*c).clone()).collect();
        report.record(dev, || format!("settings {settings:?}: trace {quantum}, LqHV {hidden}"));
        Ok(())
    };

    match sampling {
        Sampling::Exhaustive => {
            let counts: Vec<usize> = choices.iter().map(|c| c.len()).collect();
            let total = subsets::checked_product(&counts, EXHAUSTIVE_CAP, "exhaustive local settings")?;
            for c in 0..total {
                let digits = mixed_radix_digits(c, &counts);
                let pick: Vec<&(usize, Vec<usize>)> = digits.iter().zip(&choices).map(|(&d, opts)| &opts[d]).collect();
                check(&pick, &mut report)?;
            }
        }
        Sampling::Random { trials, seed } => {
            let mut rng = random::rng(seed);
            for _ in 0..trials {
                let pick: Vec<&(usize, Vec<usize>)> = choices
                    .iter()
                    .map(|opts| {
                        use rand::Rng;
                        &opts[rng.gen_range(0..opts.len())]
                    })
                    .collect();
                check(&pick, &mut report)?;
            }
        }
    }
    Ok(report)
}

/// `A₁, A₂` at site 0 and `B₁, B₂` at site 1, all dichotomic.
#[derive(Clone, Debug, PartialEq)]
pub struct ChshSettings {
    pub a: [HermitianObservable; 2],
    pub b: [HermitianObservable; 2],
}

impl ChshSettings {
    /// `A₁ = σ_z`, `A₂ = σ_x`, `B₁ = (σ_z + σ_x)/√2`, `B₂ = (σ_z − σ_x)/√2`.
    pub fn standard(tol: &Tolerances) -> Result<Self> {
        let z = CMatrix::from_diag(&[1.0, -1.0]);
        let x = CMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])?;
        let r = core::f64::consts::FRAC_1_SQRT_2;
        Ok(ChshSettings {
            a: [HermitianObservable::new("A1", z.clone(), tol)?, HermitianObservable::new("A2", x.clone(), tol)?],
            b: [
                HermitianObservable::new("B1", (&z + &x).scale(r), tol)?,
                HermitianObservable::new("B2", (&z - &x).scale(r), tol)?,
            ],
        })
    }

    pub fn scenario(&self, state: DensityState) -> Result<PartiteScenario> {
        let da = self.a[0].dim();
        let db = self.b[0].dim();
        PartiteScenario::new(alloc::vec![da, db], alloc::vec![self.a.to_vec(), self.b.to_vec()], state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshValue {
    /// `tr[ρ(A₁B₁ + A₁B₂ + A₂B₁ − A₂B₂)]`.
    pub quantum: f64,
    /// The same combination of product averages under the signed measure.
    pub via_measure: f64,
}

const CHSH_SIGNS: [(usize, usize, f64); 4] = [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)];

fn check_chsh_shape(scenario: &PartiteScenario, tol: &Tolerances) -> Result<()> {
    if scenario.sites() != 2 || scenario.locals.iter().any(|l| l.len() != 2) {
        return Err(Error::InvalidParameter { reason: "CHSH needs two sites with two observables each".into() });
    }
    for x in scenario.locals.iter().flatten() {
        if !x.is_dichotomic(tol) {
            return Err(Error::NotDichotomic { label: x.label().into() });
        }
    }
    Ok(())
}

fn chsh_via_measure(sc: &ScenarioCatalog, nu: &SignedMeasure) -> Result<f64> {
    let mut total = 0.0;
    for (i, j, sign) in CHSH_SIGNS {
        let fa = canonical_rv(&sc.catalog, sc.layout[0][i])?;
        let fb = canonical_rv(&sc.catalog, sc.layout[1][j])?;
        total += sign * qhv_average(nu, |v| v[0] * v[1], &[&fa, &fb])?;
    }
    Ok(total)
}

pub fn chsh_value(scenario: &PartiteScenario, tol: &Tolerances) -> Result<ChshValue> {
    check_chsh_shape(scenario, tol)?;
    let mut operator = CMatrix::zeros(scenario.state.dim());
    for (i, j, sign) in CHSH_SIGNS {
        operator.add_scaled(sign, &scenario.locals[0][i].matrix().kron(scenario.locals[1][j].matrix()));
    }
    let quantum = scenario.state.matrix().trace_product(&operator).re;

    let sc = build_scenario_catalog(scenario, tol)?;
    let measure = build_global_measure(Arc::clone(&sc.catalog))?;
    let nu = induce_signed_measure(&measure, &scenario.state)?;
    Ok(ChshValue { quantum, via_measure: chsh_via_measure(&sc, &nu)? })
}

/// `|ψ⁻⟩⟨ψ⁻|` with `|ψ⁻⟩ = (|01⟩ − |10⟩)/√2`.
pub fn singlet(tol: &Tolerances) -> Result<DensityState> {
    let r = core::f64::consts::FRAC_1_SQRT_2;
    let psi = [C64::new(0.0, 0.0), C64::new(r, 0.0), C64::new(-r, 0.0), C64::new(0.0, 0.0)];
    Ok(DensityState::pure(&psi, tol)?.with_label("singlet"))
}

/// `ρ_p = p |ψ⁻⟩⟨ψ⁻| + (1 − p) I₄/4`.
pub fn werner_state(p: f64, tol: &Tolerances) -> Result<DensityState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter { reason: format!("Werner parameter {p} outside [0, 1]") });
    }
    let mut m = singlet(tol)?.matrix().scale(p);
    m.add_scaled((1.0 - p) / 4.0, &CMatrix::identity(4));
    Ok(validate_state(&m, tol)?.with_label(format!("werner({p})")))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WernerRow {
    pub p: f64,
    pub chsh: f64,
    pub total_variation: f64,
    pub min_atom: f64,
}

/// CHSH value (through the signed measure) and negativity diagnostics along a
/// grid of Werner parameters, in grid order.
pub fn werner_scan(grid: &[f64], settings: &ChshSettings, tol: &Tolerances) -> Result<Vec<WernerRow>> {
    if let Some(&p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter { reason: format!("Werner parameter {p} outside [0, 1]") });
    }
    if settings.a.iter().chain(&settings.b).any(|x| x.dim() != 2) {
        return Err(Error::InvalidParameter { reason: "Werner scans use qubit settings".into() });
    }
    let scenario = settings.scenario(DensityState::maximally_mixed(4))?;
    check_chsh_shape(&scenario, tol)?;
    let sc = build_scenario_catalog(&scenario, tol)?;
    let measure: OperatorValuedMeasure = build_global_measure(Arc::clone(&sc.catalog))?;
    grid.iter()
        .map(|&p| {
            let nu = induce_signed_measure(&measure, &werner_state(p, tol)?)?;
            let diag = negativity_diagnostics(&nu);
            Ok(WernerRow { p, chsh: chsh_via_measure(&sc, &nu)?, total_variation: diag.total_variation, min_atom: diag.min_atom })
        })
        .collect()
}
