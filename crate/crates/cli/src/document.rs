//! The JSON scenario format and its validation.

use std::collections::BTreeMap;
use std::sync::Arc;

use qhv_core::{
    tensor_embed, validate_state, werner_state, CMatrix, Catalog, DensityState, HermitianObservable, SpectrumFunction,
    Tolerances, C64,
};
use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;

/// A complex matrix written row by row with `[re, im]` entries.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

/// Either one Hilbert space dimension or the local dimensions of a multipartite system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dimension {
    Single(usize),
    Sites(Vec<usize>),
}

impl Dimension {
    pub fn sites(&self) -> Vec<usize> {
        match self {
            Dimension::Single(d) => vec![*d],
            Dimension::Sites(dims) => dims.clone(),
        }
    }

    pub fn total(&self) -> usize {
        self.sites().iter().product()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub matrix: MatrixSpec,
    /// Site of a local observable; absent for observables on the full space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Matrix(MatrixSpec),
    /// State vector, normalized on load.
    Pure(Vec<[f64; 2]>),
    MaximallyMixed,
    /// Two-qubit Werner state with the given singlet weight.
    Werner(f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub herm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dim: Option<usize>,
}

impl ToleranceSpec {
    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            eig: self.eig.unwrap_or(d.eig),
            check: self.check.unwrap_or(d.check),
            herm: self.herm.unwrap_or(d.herm),
            atom_cap: self.atom_cap.unwrap_or(d.atom_cap),
            n_max: self.n_max.unwrap_or(d.n_max),
            max_dim: self.max_dim.unwrap_or(d.max_dim),
        }
    }

    fn is_default(&self) -> bool {
        *self == ToleranceSpec::default()
    }
}

/// One average relation of a `ks-averages` query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum KsCaseSpec {
    Sum(Vec<String>),
    Product(Vec<String>),
    Function { observable: String, table: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuerySpec {
    Expect {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        state: String,
        observable: String,
    },
    #[serde(rename = "verify-lemma1")]
    VerifyConsistency {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        catalog: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trials: Option<usize>,
        #[serde(default, skip_serializing_if = "is_false")]
        exhaustive: bool,
    },
    VerifyPushforward {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        catalog: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trials: Option<usize>,
        #[serde(default, skip_serializing_if = "is_false")]
        exhaustive: bool,
    },
    #[serde(rename = "verify-theorem2")]
    VerifyJoint {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        catalog: String,
        state: String,
        subset: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trials: Option<usize>,
        #[serde(default, skip_serializing_if = "is_false")]
        exhaustive: bool,
    },
    VerifyContextInvariance {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        catalog: String,
        state: String,
        base: String,
        /// `φ` as `[y, φ(y)]` pairs over the spectrum of `base`.
        function: Vec<[f64; 2]>,
        /// Declared observable claimed to equal `φ(base)`; computed when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        partners: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trials: Option<usize>,
        #[serde(default, skip_serializing_if = "is_false")]
        exhaustive: bool,
    },
    KsAverages {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        catalog: String,
        state: String,
        cases: Vec<KsCaseSpec>,
    },
    Lqhv {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        state: String,
        /// Local observable names per site.
        sites: Vec<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trials: Option<usize>,
        #[serde(default, skip_serializing_if = "is_false")]
        exhaustive: bool,
    },
    Chsh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        state: String,
        a: [String; 2],
        b: [String; 2],
    },
    WernerScan {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        grid: Vec<f64>,
        /// Local settings; the standard CHSH settings when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<[String; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<[String; 2]>,
    },
    SignedMeasure {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        catalog: String,
        state: String,
    },
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl QuerySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            QuerySpec::Expect { .. } => "expect",
            QuerySpec::VerifyConsistency { .. } => "verify-lemma1",
            QuerySpec::VerifyPushforward { .. } => "verify-pushforward",
            QuerySpec::VerifyJoint { .. } => "verify-theorem2",
            QuerySpec::VerifyContextInvariance { .. } => "verify-context-invariance",
            QuerySpec::KsAverages { .. } => "ks-averages",
            QuerySpec::Lqhv { .. } => "lqhv",
            QuerySpec::Chsh { .. } => "chsh",
            QuerySpec::WernerScan { .. } => "werner-scan",
            QuerySpec::SignedMeasure { .. } => "signed-measure",
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            QuerySpec::Expect { name, .. }
            | QuerySpec::VerifyConsistency { name, .. }
            | QuerySpec::VerifyPushforward { name, .. }
            | QuerySpec::VerifyJoint { name, .. }
            | QuerySpec::VerifyContextInvariance { name, .. }
            | QuerySpec::KsAverages { name, .. }
            | QuerySpec::Lqhv { name, .. }
            | QuerySpec::Chsh { name, .. }
            | QuerySpec::WernerScan { name, .. }
            | QuerySpec::SignedMeasure { name, .. } => name.as_deref(),
        }
    }

    /// The report label: the declared name, or `<kind>-<position>`.
    pub fn label(&self, position: usize) -> String {
        self.name().map_or_else(|| format!("{}-{}", self.kind(), position + 1), str::to_owned)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub dimension: Dimension,
    #[serde(default)]
    pub observables: BTreeMap<String, ObservableSpec>,
    #[serde(default)]
    pub states: BTreeMap<String, StateSpec>,
    #[serde(default)]
    pub catalogs: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub queries: Vec<QuerySpec>,
    #[serde(default, skip_serializing_if = "ToleranceSpec::is_default")]
    pub tolerances: ToleranceSpec,
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioDocument, ScenarioError> {
    let doc: ScenarioDocument = serde_json::from_str(text)
        .map_err(|e| ScenarioError::Syntax { line: e.line(), column: e.column(), message: strip_position(&e.to_string()) })?;
    Resolved::new(&doc, doc.tolerances.resolve())?;
    Ok(doc)
}

/// Canonical JSON form: sorted maps, defaults omitted, two-space indentation.
pub fn to_canonical_json(doc: &ScenarioDocument) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("scenario documents always serialize");
    out.push('\n');
    out
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_owned(),
        None => message.to_owned(),
    }
}

fn semantic(entity: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Semantic { entity: entity.into(), message: message.into() }
}

fn complex(entry: &[f64; 2]) -> C64 {
    C64::new(entry[0], entry[1])
}

fn matrix_from_spec(entity: &str, spec: &MatrixSpec, dim: usize) -> Result<CMatrix, ScenarioError> {
    if spec.len() != dim {
        return Err(semantic(entity, format!("dimension mismatch: expected {dim} rows, found {}", spec.len())));
    }
    if let Some((i, row)) = spec.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(semantic(entity, format!("dimension mismatch: row {i} has {} entries, expected {dim}", row.len())));
    }
    let rows: Vec<Vec<C64>> = spec.iter().map(|r| r.iter().map(complex).collect()).collect();
    CMatrix::from_rows(&rows).map_err(|e| semantic(entity, e.to_string()))
}

/// A declared observable after decomposition, with its site when local.
#[derive(Clone, Debug)]
pub struct ResolvedObservable {
    pub observable: HermitianObservable,
    pub site: Option<usize>,
}

/// All named entities of a document, decomposed and cross-checked.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub dims: Vec<usize>,
    pub tol: Tolerances,
    pub observables: BTreeMap<String, ResolvedObservable>,
    pub states: BTreeMap<String, DensityState>,
    pub catalogs: BTreeMap<String, Vec<String>>,
}

impl Resolved {
    pub fn new(doc: &ScenarioDocument, tol: Tolerances) -> Result<Self, ScenarioError> {
        let dims = doc.dimension.sites();
        if dims.is_empty() || dims.contains(&0) {
            return Err(semantic("dimension", "dimensions must be positive"));
        }
        let total = doc.dimension.total();
        if total > tol.max_dim {
            return Err(semantic("dimension", format!("dimension {total} exceeds max_dim {}", tol.max_dim)));
        }

        let mut observables = BTreeMap::new();
        for (name, spec) in &doc.observables {
            let dim = match spec.site {
                None => total,
                Some(s) => *dims.get(s).ok_or_else(|| semantic(name, format!("site {s} does not exist")))?,
            };
            let matrix = matrix_from_spec(name, &spec.matrix, dim)?;
            let observable = HermitianObservable::new(name.clone(), matrix, &tol).map_err(|e| semantic(name, e.to_string()))?;
            observables.insert(name.clone(), ResolvedObservable { observable, site: spec.site });
        }

        let mut states = BTreeMap::new();
        for (name, spec) in &doc.states {
            let state = match spec {
                StateSpec::Matrix(m) => validate_state(&matrix_from_spec(name, m, total)?, &tol),
                StateSpec::Pure(psi) => {
                    if psi.len() != total {
                        return Err(semantic(name, format!("dimension mismatch: expected {total} amplitudes, found {}", psi.len())));
                    }
                    DensityState::pure(&psi.iter().map(complex).collect::<Vec<_>>(), &tol)
                }
                StateSpec::MaximallyMixed => Ok(DensityState::maximally_mixed(total)),
                StateSpec::Werner(p) => {
                    if dims != [2, 2] {
                        return Err(semantic(name, "Werner states need dimension [2, 2]"));
                    }
                    werner_state(*p, &tol)
                }
            }
            .map_err(|e| semantic(name, e.to_string()))?;
            states.insert(name.clone(), state.with_label(name.clone()));
        }

        // Resource caps are enforced per query at run time, not here.
        let relaxed = Tolerances { atom_cap: usize::MAX, ..tol };
        let mut resolved = Resolved { dims, tol: relaxed, observables, states, catalogs: doc.catalogs.clone() };
        for name in doc.catalogs.keys() {
            resolved.build_catalog(name).map_err(|e| match e {
                ScenarioError::Semantic { entity, message } if entity != *name => semantic(name, format!("{entity}: {message}")),
                other => other,
            })?;
        }
        for (i, q) in doc.queries.iter().enumerate() {
            resolved.check_query(q).map_err(|e| match e {
                ScenarioError::Semantic { entity, message } => semantic(format!("query {}", q.label(i)), format!("{entity}: {message}")),
                other => other,
            })?;
        }
        resolved.tol = tol;
        Ok(resolved)
    }

    /// Full-space version of a declared observable; local ones are lifted.
    pub fn full_observable(&self, name: &str) -> Result<HermitianObservable, ScenarioError> {
        let r = self.observables.get(name).ok_or_else(|| semantic(name, "undeclared observable"))?;
        match r.site {
            None => Ok(r.observable.clone()),
            Some(site) => Ok(tensor_embed(&r.observable, site, &self.dims)
                .map_err(|e| semantic(name, e.to_string()))?
                .with_label(name)),
        }
    }

    /// A local observable declared at `site`.
    pub fn local_observable(&self, name: &str, site: usize) -> Result<HermitianObservable, ScenarioError> {
        let r = self.observables.get(name).ok_or_else(|| semantic(name, "undeclared observable"))?;
        match r.site {
            Some(s) if s == site => Ok(r.observable.clone()),
            Some(s) => Err(semantic(name, format!("declared at site {s}, used at site {site}"))),
            None if self.dims.len() == 1 && site == 0 => Ok(r.observable.clone()),
            None => Err(semantic(name, format!("not a local observable; declare it with \"site\": {site}"))),
        }
    }

    pub fn state(&self, name: &str) -> Result<&DensityState, ScenarioError> {
        self.states.get(name).ok_or_else(|| semantic(name, "undeclared state"))
    }

    pub fn catalog_members(&self, name: &str) -> Result<&[String], ScenarioError> {
        self.catalogs.get(name).map(Vec::as_slice).ok_or_else(|| semantic(name, "undeclared catalog"))
    }

    pub fn build_catalog(&self, name: &str) -> Result<Arc<Catalog>, ScenarioError> {
        let members = self.catalog_members(name)?;
        let observables = members.iter().map(|m| self.full_observable(m)).collect::<Result<Vec<_>, _>>()?;
        Catalog::new(observables, self.tol).map(Arc::new).map_err(|e| semantic(name, e.to_string()))
    }

    /// Position of `member` inside catalog `catalog`.
    pub fn catalog_index(&self, catalog: &str, member: &str) -> Result<usize, ScenarioError> {
        self.catalog_members(catalog)?
            .iter()
            .position(|m| m == member)
            .ok_or_else(|| semantic(member, format!("not a member of catalog {catalog}")))
    }

    /// Builds a function table keyed by the spectrum of `source`.
    pub fn function(&self, source: &HermitianObservable, table: &[[f64; 2]]) -> Result<SpectrumFunction, ScenarioError> {
        let raw = SpectrumFunction::from_pairs(table.iter().map(|p| (p[0], p[1])))
            .map_err(|e| semantic(source.label(), e.to_string()))?;
        raw.snapped_to(source, &self.tol).map_err(|e| semantic(source.label(), format!("function table: {e}")))
    }

    fn check_query(&self, q: &QuerySpec) -> Result<(), ScenarioError> {
        match q {
            QuerySpec::Expect { state, observable, .. } => {
                self.state(state)?;
                self.full_observable(observable)?;
            }
            QuerySpec::VerifyConsistency { catalog, .. } => {
                if self.catalog_members(catalog)?.len() < 2 {
                    return Err(semantic(catalog, "consistency checks need at least two observables"));
                }
            }
            QuerySpec::VerifyPushforward { catalog, .. } => {
                self.catalog_members(catalog)?;
            }
            QuerySpec::VerifyJoint { catalog, state, subset, .. } => {
                self.state(state)?;
                for m in subset {
                    self.catalog_index(catalog, m)?;
                }
            }
            QuerySpec::VerifyContextInvariance { catalog, state, base, function, target, partners, .. } => {
                self.state(state)?;
                let b = self.catalog_index(catalog, base)?;
                let cat = self.build_catalog(catalog)?;
                self.function(cat.observable(b), function)?;
                if let Some(t) = target {
                    self.full_observable(t)?;
                }
                for p in partners {
                    self.catalog_index(catalog, p)?;
                }
            }
            QuerySpec::KsAverages { catalog, state, cases, .. } => {
                self.state(state)?;
                let cat = self.build_catalog(catalog)?;
                for case in cases {
                    match case {
                        KsCaseSpec::Sum(names) | KsCaseSpec::Product(names) => {
                            for n in names {
                                self.catalog_index(catalog, n)?;
                            }
                        }
                        KsCaseSpec::Function { observable, table } => {
                            let i = self.catalog_index(catalog, observable)?;
                            self.function(cat.observable(i), table)?;
                        }
                    }
                }
            }
            QuerySpec::Lqhv { state, sites, .. } => {
                self.state(state)?;
                if sites.len() != self.dims.len() {
                    return Err(semantic("sites", format!("{} site lists for {} sites", sites.len(), self.dims.len())));
                }
                for (s, names) in sites.iter().enumerate() {
                    for n in names {
                        self.local_observable(n, s)?;
                    }
                }
            }
            QuerySpec::Chsh { state, a, b, .. } => {
                self.state(state)?;
                self.check_chsh_sites(Some(a), Some(b))?;
            }
            QuerySpec::WernerScan { grid, a, b, .. } => {
                if self.dims != [2, 2] {
                    return Err(semantic("dimension", "Werner scans need dimension [2, 2]"));
                }
                if let Some(p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(semantic("grid", format!("Werner parameter {p} outside [0, 1]")));
                }
                if a.is_some() != b.is_some() {
                    return Err(semantic("settings", "give both a and b or neither"));
                }
                self.check_chsh_sites(a.as_ref(), b.as_ref())?;
            }
            QuerySpec::SignedMeasure { catalog, state, .. } => {
                self.state(state)?;
                self.catalog_members(catalog)?;
            }
        }
        Ok(())
    }

    fn check_chsh_sites(&self, a: Option<&[String; 2]>, b: Option<&[String; 2]>) -> Result<(), ScenarioError> {
        if self.dims.len() != 2 {
            return Err(semantic("dimension", "CHSH needs two sites"));
        }
        for (site, names) in [a, b].into_iter().enumerate() {
            for n in names.into_iter().flatten() {
                self.local_observable(n, site)?;
            }
        }
        Ok(())
    }
}
