//! Executes the queries of a validated document.

use std::sync::Arc;

use qhv_core::random::derive_seed;
use qhv_core::{
    build_global_measure, build_scenario_catalog, chsh_value, expectation, induce_signed_measure, negativity_diagnostics,
    verify_context_invariance, verify_ks_average_relations, verify_lqhv, verify_marginal_consistency,
    verify_noncontextual_joint, verify_permutation_invariance, verify_pushforward, verify_representative_reconstruction,
    werner_scan, CheckReport, ChshSettings, FunctionalRepresentation, KsCase, PartiteScenario, Sampling,
};

use crate::document::{KsCaseSpec, QuerySpec, Resolved, ScenarioDocument};
use crate::error::ScenarioError;
use crate::report::{fmt_g, Cell, QueryResult, Report, Status, Table};

/// Trials per sampled verification query when the document gives none.
pub const DEFAULT_TRIALS: usize = 200;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides the document's atom cap.
    pub atom_cap: Option<usize>,
}

/// Why a single query could not be completed.
enum QueryFailure {
    Core(qhv_core::Error),
    Scenario(ScenarioError),
}

impl From<qhv_core::Error> for QueryFailure {
    fn from(e: qhv_core::Error) -> Self {
        QueryFailure::Core(e)
    }
}

impl From<ScenarioError> for QueryFailure {
    fn from(e: ScenarioError) -> Self {
        QueryFailure::Scenario(e)
    }
}

impl std::fmt::Display for QueryFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QueryFailure::Core(e) => e.fmt(f),
            QueryFailure::Scenario(e) => e.fmt(f),
        }
    }
}

type QueryOutcome = Result<QueryResult, QueryFailure>;

/// Runs every query in document order. Query `i` draws its randomness from
/// `derive_seed(seed, i)`, so results do not depend on the other queries.
pub fn run(doc: &ScenarioDocument, options: &RunOptions) -> Result<Report, ScenarioError> {
    let mut tol = doc.tolerances.resolve();
    if let Some(cap) = options.atom_cap {
        tol.atom_cap = cap;
    }
    let resolved = Resolved::new(doc, tol)?;
    let queries = doc
        .queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let name = q.label(i);
            let seed = derive_seed(options.seed, i as u64);
            run_query(&resolved, q, name.clone(), seed).unwrap_or_else(|e| QueryResult::error(name, q.kind(), e.to_string()))
        })
        .collect();
    Ok(Report { seed: options.seed, queries })
}

fn sampling(trials: Option<usize>, exhaustive: bool, seed: u64) -> Sampling {
    if exhaustive {
        Sampling::Exhaustive
    } else {
        Sampling::Random { trials: trials.unwrap_or(DEFAULT_TRIALS), seed }
    }
}

/// Folds verification reports into a query result, one table row per report.
fn checks_result(name: String, kind: &'static str, reports: Vec<CheckReport>) -> QueryResult {
    let mut out = QueryResult::new(name, kind);
    out.table = Table::new(&["check", "checks", "failed", "max_deviation", "tolerance"]);
    for r in reports {
        out.checks += r.checks;
        out.failed += r.failed;
        if r.max_deviation > out.max_deviation || r.max_deviation.is_nan() {
            out.max_deviation = r.max_deviation;
        }
        out.notes.extend(r.failures.iter().map(|f| format!("{}: {f}", r.name)));
        out.table.push(vec![r.name.clone().into(), r.checks.into(), r.failed.into(), r.max_deviation.into(), r.tolerance.into()]);
    }
    if out.failed > 0 {
        out.status = Status::Fail;
    }
    out
}

fn run_query(res: &Resolved, q: &QuerySpec, name: String, seed: u64) -> QueryOutcome {
    let kind = q.kind();
    let tol = res.tol;
    match q {
        QuerySpec::Expect { state, observable, .. } => {
            let value = expectation(res.state(state)?, &res.full_observable(observable)?)?;
            let mut out = QueryResult::new(name, kind);
            out.table = Table::new(&["state", "observable", "value"]);
            out.table.push(vec![state.as_str().into(), observable.as_str().into(), value.into()]);
            Ok(out)
        }
        QuerySpec::VerifyConsistency { catalog, trials, exhaustive, .. } => {
            let cat = res.build_catalog(catalog)?;
            let perm = verify_permutation_invariance(&cat, sampling(*trials, *exhaustive, derive_seed(seed, 0)))?;
            let marg = verify_marginal_consistency(&cat, sampling(*trials, *exhaustive, derive_seed(seed, 1)))?;
            Ok(checks_result(name, kind, vec![perm, marg]))
        }
        QuerySpec::VerifyPushforward { catalog, trials, exhaustive, .. } => {
            let measure = build_global_measure(res.build_catalog(catalog)?)?;
            Ok(checks_result(name, kind, vec![verify_pushforward(&measure, sampling(*trials, *exhaustive, seed))?]))
        }
        QuerySpec::VerifyJoint { catalog, state, subset, trials, exhaustive, .. } => {
            let rho = res.state(state)?;
            let nu = induce_signed_measure(&build_global_measure(res.build_catalog(catalog)?)?, rho)?;
            let indices = subset.iter().map(|m| res.catalog_index(catalog, m)).collect::<Result<Vec<_>, _>>()?;
            let report = verify_noncontextual_joint(&nu, rho, &indices, sampling(*trials, *exhaustive, seed))?;
            Ok(checks_result(name, kind, vec![report]))
        }
        QuerySpec::VerifyContextInvariance { catalog, state, base, function, target, partners, trials, exhaustive, .. } => {
            let rho = res.state(state)?;
            let cat = res.build_catalog(catalog)?;
            let b = res.catalog_index(catalog, base)?;
            let phi = res.function(cat.observable(b), function)?;
            let rep = match target {
                Some(t) => FunctionalRepresentation::new(&cat, b, phi, res.full_observable(t)?)?,
                None => FunctionalRepresentation::from_function(&cat, b, phi)?,
            };
            let partner_idx = partners.iter().map(|p| res.catalog_index(catalog, p)).collect::<Result<Vec<_>, _>>()?;
            let measure = build_global_measure(Arc::clone(&cat))?;
            let nu = induce_signed_measure(&measure, rho)?;
            let invariance = verify_context_invariance(&nu, rho, &rep, &partner_idx, sampling(*trials, *exhaustive, seed))?;
            let reconstruction = verify_representative_reconstruction(&measure, &rep)?;
            Ok(checks_result(name, kind, vec![invariance, reconstruction]))
        }
        QuerySpec::KsAverages { catalog, state, cases, .. } => {
            let rho = res.state(state)?;
            let cat = res.build_catalog(catalog)?;
            let nu = induce_signed_measure(&build_global_measure(Arc::clone(&cat))?, rho)?;
            let idx = |names: &[String]| names.iter().map(|n| res.catalog_index(catalog, n)).collect::<Result<Vec<_>, _>>();
            let cases = cases
                .iter()
                .map(|c| -> Result<KsCase, QueryFailure> {
                    Ok(match c {
                        KsCaseSpec::Sum(names) => KsCase::Sum { observables: idx(names)? },
                        KsCaseSpec::Product(names) => KsCase::Product { observables: idx(names)? },
                        KsCaseSpec::Function { observable, table } => {
                            let i = res.catalog_index(catalog, observable)?;
                            KsCase::Function { observable: i, phi: res.function(cat.observable(i), table)? }
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(checks_result(name, kind, vec![verify_ks_average_relations(&nu, rho, &cases)?]))
        }
        QuerySpec::Lqhv { state, sites, trials, exhaustive, .. } => {
            let locals = sites
                .iter()
                .enumerate()
                .map(|(s, names)| names.iter().map(|n| res.local_observable(n, s)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            let scenario = PartiteScenario::new(res.dims.clone(), locals, res.state(state)?.clone())?;
            Ok(checks_result(name, kind, vec![verify_lqhv(&scenario, &tol, sampling(*trials, *exhaustive, seed))?]))
        }
        QuerySpec::Chsh { state, a, b, .. } => {
            let settings = chsh_settings(res, Some(a), Some(b))?;
            let rho = res.state(state)?;
            let scenario = settings.scenario(rho.clone())?;
            let value = chsh_value(&scenario, &tol)?;
            let sc = build_scenario_catalog(&scenario, &tol)?;
            let nu = induce_signed_measure(&build_global_measure(Arc::clone(&sc.catalog))?, rho)?;
            let diag = negativity_diagnostics(&nu);
            let dev = (value.quantum - value.via_measure).abs();
            let mut out = QueryResult::new(name, kind);
            out.checks = 1;
            out.max_deviation = dev;
            if dev.is_nan() || dev > tol.check {
                out.failed = 1;
                out.status = Status::Fail;
                out.notes.push(format!("measure value {} differs from trace value {}", fmt_g(value.via_measure), fmt_g(value.quantum)));
            }
            out.table = Table::new(&["quantum", "via_measure", "deviation", "total_variation", "min_atom"]);
            out.table.push(vec![
                value.quantum.into(),
                value.via_measure.into(),
                dev.into(),
                diag.total_variation.into(),
                diag.min_atom.into(),
            ]);
            Ok(out)
        }
        QuerySpec::WernerScan { grid, a, b, .. } => {
            let settings = chsh_settings(res, a.as_ref(), b.as_ref())?;
            let rows = werner_scan(grid, &settings, &tol)?;
            let mut out = QueryResult::new(name, kind);
            out.table = Table::new(&["p", "chsh", "total_variation", "min_atom"]);
            for r in &rows {
                out.table.push(vec![r.p.into(), r.chsh.into(), r.total_variation.into(), r.min_atom.into()]);
                // A Bell violation cannot come from a probability measure.
                if r.chsh.abs() > 2.0 + tol.check {
                    out.checks += 1;
                    if r.total_variation.is_nan() || r.total_variation <= 1.0 + tol.check {
                        out.failed += 1;
                        out.notes.push(format!("p = {}: |chsh| > 2 with total variation {}", fmt_g(r.p), fmt_g(r.total_variation)));
                    }
                }
            }
            if out.failed > 0 {
                out.status = Status::Fail;
            }
            let violating = rows.iter().filter(|r| r.chsh.abs() > 2.0 + tol.check).count();
            out.metrics.push(("violating_points".into(), violating.into()));
            Ok(out)
        }
        QuerySpec::SignedMeasure { catalog, state, .. } => {
            let cat = res.build_catalog(catalog)?;
            let nu = induce_signed_measure(&build_global_measure(Arc::clone(&cat))?, res.state(state)?)?;
            let diag = negativity_diagnostics(&nu);
            let mut out = QueryResult::new(name, kind);
            let dev = (nu.total() - 1.0).abs();
            out.checks = 1;
            out.max_deviation = dev;
            if dev.is_nan() || dev > tol.check {
                out.failed = 1;
                out.status = Status::Fail;
                out.notes.push(format!("atoms sum to {}", fmt_g(nu.total())));
            }
            out.metrics = vec![
                ("total_variation".into(), diag.total_variation.into()),
                ("min_atom".into(), diag.min_atom.into()),
                ("negative_atoms".into(), Cell::from(diag.negative_atom_count)),
            ];
            let mut header: Vec<&str> = res.catalog_members(catalog)?.iter().map(String::as_str).collect();
            header.push("value");
            out.table = Table::new(&header);
            for (a, &v) in nu.values().iter().enumerate() {
                let mut row: Vec<Cell> = cat.atom_values(a).into_iter().map(Cell::from).collect();
                row.push(v.into());
                out.table.push(row);
            }
            Ok(out)
        }
    }
}

fn chsh_settings(res: &Resolved, a: Option<&[String; 2]>, b: Option<&[String; 2]>) -> Result<ChshSettings, QueryFailure> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(ChshSettings {
            a: [res.local_observable(&a[0], 0)?, res.local_observable(&a[1], 0)?],
            b: [res.local_observable(&b[0], 1)?, res.local_observable(&b[1], 1)?],
        }),
        _ => Ok(ChshSettings::standard(&res.tol)?),
    }
}
