//! Spectral decompositions of finite-dimensional observables, density states,
//! commutation tests and the finite-spectrum functional calculus.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, C64};

/// Numerical tolerances and resource caps shared by every computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative gap below which eigenvalues are merged into one cluster.
    pub eig: f64,
    /// Absolute tolerance for verification checks (Frobenius norms and scalars).
    pub check: f64,
    /// Absolute tolerance on `‖A − A†‖_F` for inputs claimed to be Hermitian.
    pub herm: f64,
    /// Largest admissible number of atoms in an outcome lattice.
    pub atom_cap: usize,
    /// Largest number of factors in a symmetrized product.
    pub n_max: usize,
    /// Soft cap on the Hilbert space dimension.
    pub max_dim: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eig: 1e-8, check: 1e-10, herm: 1e-12, atom_cap: 250_000, n_max: 8, max_dim: 16 }
    }
}

/// One eigenvalue cluster and the projector onto its eigenspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPoint {
    pub value: f64,
    pub projector: CMatrix,
}

/// A Hermitian matrix together with its clustered spectral decomposition.
///
/// Spectral points are strictly increasing; their projectors are mutually
/// orthogonal and sum to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianObservable {
    label: String,
    matrix: CMatrix,
    spectrum: Vec<SpectralPoint>,
}

impl HermitianObservable {
    pub fn new(label: impl Into<String>, matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        let label = label.into();
        let defect = matrix.hermiticity_defect();
        if !matrix.is_finite() {
            return Err(Error::NonFinite { what: label });
        }
        if defect > tol.herm {
            return Err(Error::NotHermitian { what: label, norm: defect });
        }
        Ok(eigendecompose(&matrix, tol)?.with_label(label))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn spectrum(&self) -> &[SpectralPoint] {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum.iter().map(|p| p.value).collect()
    }

    pub fn eigenvalue(&self, index: usize) -> f64 {
        self.spectrum[index].value
    }

    pub fn projector(&self, index: usize) -> &CMatrix {
        &self.spectrum[index].projector
    }

    /// `P_X(B)` for `B` given as spectral-point indices.
    pub fn projector_of(&self, points: &[usize]) -> Result<CMatrix> {
        let mut acc = CMatrix::zeros(self.dim());
        for &k in points {
            let p = self.spectrum.get(k).ok_or(Error::IndexOutOfRange {
                what: "spectral point",
                index: k,
                len: self.spectrum.len(),
            })?;
            acc += &p.projector;
        }
        Ok(acc)
    }

    /// Index of the spectral point equal to `value`, allowing the clustering slack.
    pub fn spectral_index(&self, value: f64, tol: &Tolerances) -> Result<usize> {
        if let Some(k) = self.spectrum.iter().position(|p| p.value == value) {
            return Ok(k);
        }
        let slack = tol.eig * value.abs().max(1.0);
        self.spectrum
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.value - value).abs() <= slack)
            .min_by(|a, b| (a.1.value - value).abs().total_cmp(&(b.1.value - value).abs()))
            .map(|(k, _)| k)
            .ok_or_else(|| Error::NotASpectralPoint { value, observable: self.label.clone() })
    }

    /// Exact lookup of a canonical eigenvalue.
    pub fn exact_index(&self, value: f64) -> Option<usize> {
        self.spectrum.iter().position(|p| p.value == value)
    }

    /// True when the spectrum is exactly `{−1, +1}` up to the clustering slack.
    pub fn is_dichotomic(&self, tol: &Tolerances) -> bool {
        self.spectrum.len() == 2
            && (self.spectrum[0].value + 1.0).abs() <= tol.eig
            && (self.spectrum[1].value - 1.0).abs() <= tol.eig
    }

    /// Largest violation among idempotency, orthogonality, completeness and reconstruction.
    pub fn decomposition_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        let mut sum = CMatrix::zeros(d);
        let mut recon = CMatrix::zeros(d);
        for (i, p) in self.spectrum.iter().enumerate() {
            worst = worst.max(p.projector.matmul(&p.projector).distance(&p.projector));
            for q in &self.spectrum[i + 1..] {
                worst = worst.max(p.projector.matmul(&q.projector).frobenius_norm());
            }
            sum += &p.projector;
            recon.add_scaled(p.value, &p.projector);
        }
        worst = worst.max(sum.distance(&CMatrix::identity(d)));
        worst.max(recon.distance(&self.matrix))
    }
}

/// Spectral decomposition with eigenvalue clustering.
///
/// Eigenvalues whose consecutive gap is at most `tol.eig · max(1, ‖matrix‖_F)`
/// form one cluster; its representative is the cluster mean and its projector
/// is the sum of the constituent rank-one projectors.
pub fn eigendecompose(matrix: &CMatrix, tol: &Tolerances) -> Result<HermitianObservable> {
    let d = matrix.dim();
    if d == 0 {
        return Err(Error::InvalidParameter { reason: "matrix dimension must be at least 1".into() });
    }
    if d > tol.max_dim {
        return Err(Error::ResourceLimit { what: "Hilbert space dimension", required: d, limit: tol.max_dim });
    }
    if !matrix.is_finite() {
        return Err(Error::NonFinite { what: "matrix".into() });
    }
    let defect = matrix.hermiticity_defect();
    if defect > tol.herm {
        return Err(Error::NotHermitian { what: "matrix".into(), norm: defect });
    }
    let (values, vectors) = hermitian_eigen(matrix)?;
    let gap = tol.eig * matrix.frobenius_norm().max(1.0);

    let mut spectrum: Vec<SpectralPoint> = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && values[end] - values[end - 1] <= gap {
            end += 1;
        }
        let members = &values[start..end];
        let value = if members.iter().all(|&v| v == members[0]) {
            members[0]
        } else {
            members.iter().sum::<f64>() / members.len() as f64
        };
        let mut projector = CMatrix::zeros(d);
        for k in start..end {
            projector += &CMatrix::outer(&vectors.column(k));
        }
        spectrum.push(SpectralPoint { value, projector });
        start = end;
    }
    Ok(HermitianObservable { label: String::new(), matrix: matrix.clone(), spectrum })
}

/// A positive semidefinite, trace-one matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    label: String,
    matrix: CMatrix,
}

impl DensityState {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Pure state `|ψ⟩⟨ψ|` after normalizing `psi`.
    pub fn pure(psi: &[C64], tol: &Tolerances) -> Result<Self> {
        let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr == 0.0 || !norm_sqr.is_finite() {
            return Err(Error::InvalidParameter { reason: "state vector has zero or non-finite norm".into() });
        }
        validate_state(&CMatrix::outer(psi).scale(1.0 / norm_sqr), tol)
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityState { label: String::new(), matrix: CMatrix::identity(dim).scale(1.0 / dim as f64) }
    }
}

/// Validates a density matrix.
///
/// Eigenvalues in `[−tol.check, 0)` are clamped to zero and the trace is
/// renormalized; anything more negative is rejected.
pub fn validate_state(matrix: &CMatrix, tol: &Tolerances) -> Result<DensityState> {
    if !matrix.is_finite() {
        return Err(Error::NonFinite { what: "state".into() });
    }
    let defect = matrix.hermiticity_defect();
    if defect > tol.herm {
        return Err(Error::NotHermitian { what: "state".into(), norm: defect });
    }
    let trace = matrix.trace().re;
    if (trace - 1.0).abs() > tol.check {
        return Err(Error::TraceNotOne { trace, tolerance: tol.check });
    }
    let (values, vectors) = hermitian_eigen(matrix)?;
    if let Some(&lowest) = values.first() {
        if lowest < -tol.check {
            return Err(Error::NegativeEigenvalue { value: lowest, tolerance: tol.check });
        }
    }
    if values.iter().any(|&v| v < 0.0) {
        let clamped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let mut rebuilt = CMatrix::zeros(matrix.dim());
        for (k, &v) in clamped.iter().enumerate() {
            if v > 0.0 {
                rebuilt.add_scaled(v / total, &CMatrix::outer(&vectors.column(k)));
            }
        }
        return Ok(DensityState { label: String::new(), matrix: rebuilt });
    }
    Ok(DensityState { label: String::new(), matrix: matrix.clone() })
}

/// `true` iff every pair of spectral projectors of `x` and `y` commutes within `tol.check`.
pub fn commute_check(x: &HermitianObservable, y: &HermitianObservable, tol: &Tolerances) -> Result<bool> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    for p in x.spectrum() {
        for q in y.spectrum() {
            if p.projector.commutator(&q.projector).frobenius_norm() > tol.check {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A real function tabulated on the spectral points of one observable.
///
/// Keys are canonical eigenvalues and are looked up exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumFunction {
    table: Vec<(f64, f64)>,
}

impl SpectrumFunction {
    /// Table with exact keys. Later duplicates of a key are rejected.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut table: Vec<(f64, f64)> = Vec::new();
        for (x, y) in pairs {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidParameter { reason: "function table entries must be finite".into() });
            }
            if table.iter().any(|&(k, _)| k == x) {
                return Err(Error::InvalidParameter { reason: format!("duplicate function key {x}") });
            }
            table.push((x, y));
        }
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(SpectrumFunction { table })
    }

    /// Tabulates `f` on the spectrum of `source`.
    pub fn tabulate(source: &HermitianObservable, f: impl Fn(f64) -> f64) -> Self {
        SpectrumFunction { table: source.spectrum().iter().map(|p| (p.value, f(p.value))).collect() }
    }

    /// Re-keys a user-supplied table onto the canonical eigenvalues of `source`.
    ///
    /// Every key must match a spectral point within the clustering slack, and
    /// every spectral point must be covered.
    pub fn snapped_to(&self, source: &HermitianObservable, tol: &Tolerances) -> Result<Self> {
        let mut table = Vec::with_capacity(self.table.len());
        for &(x, y) in &self.table {
            let k = source.spectral_index(x, tol)?;
            let key = source.eigenvalue(k);
            if table.iter().any(|&(k2, _)| k2 == key) {
                return Err(Error::InvalidParameter {
                    reason: format!("two function keys map onto spectral point {key} of {}", source.label()),
                });
            }
            table.push((key, y));
        }
        let out = SpectrumFunction::from_pairs(table)?;
        out.check_domain(source)?;
        Ok(out)
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        self.table.iter().find(|&&(k, _)| k == x).map(|&(_, y)| y)
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.table
    }

    /// Fails with the first spectral point of `source` where the table is undefined.
    pub fn check_domain(&self, source: &HermitianObservable) -> Result<()> {
        for p in source.spectrum() {
            if self.eval(p.value).is_none() {
                return Err(Error::FunctionUndefined { point: p.value });
            }
        }
        Ok(())
    }

    /// `outer ∘ self`, tabulated on the domain of `self`.
    pub fn then(&self, outer: &SpectrumFunction) -> Result<SpectrumFunction> {
        let mut table = Vec::with_capacity(self.table.len());
        for &(x, y) in &self.table {
            let z = outer.eval(y).ok_or(Error::FunctionUndefined { point: y })?;
            table.push((x, z));
        }
        Ok(SpectrumFunction { table })
    }
}

/// Functional calculus `φ(X) = Σ φ(x) P_X({x})`.
///
/// Spectral points with equal `φ` values are merged, so the result satisfies
/// `P_{φ(X)}(B) = P_X(φ⁻¹(B))` at the projector level.
pub fn apply_function(phi: &SpectrumFunction, x: &HermitianObservable) -> Result<HermitianObservable> {
    phi.check_domain(x)?;
    let d = x.dim();
    let mut groups: Vec<SpectralPoint> = Vec::new();
    for p in x.spectrum() {
        let value = phi.eval(p.value).ok_or(Error::FunctionUndefined { point: p.value })?;
        match groups.iter_mut().find(|g| g.value == value) {
            Some(g) => g.projector += &p.projector,
            None => groups.push(SpectralPoint { value, projector: p.projector.clone() }),
        }
    }
    groups.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut matrix = CMatrix::zeros(d);
    for g in &groups {
        matrix.add_scaled(g.value, &g.projector);
    }
    Ok(HermitianObservable { label: format!("phi({})", x.label()), matrix, spectrum: groups })
}

/// Lifts a local observable to `I ⊗ ⋯ ⊗ X ⊗ ⋯ ⊗ I` at position `site` of `dims`.
pub fn tensor_embed(x: &HermitianObservable, site: usize, dims: &[usize]) -> Result<HermitianObservable> {
    let local = *dims.get(site).ok_or(Error::IndexOutOfRange { what: "site", index: site, len: dims.len() })?;
    if local != x.dim() {
        return Err(Error::DimensionMismatch { expected: local, found: x.dim() });
    }
    let before: usize = dims[..site].iter().product();
    let after: usize = dims[site + 1..].iter().product();
    let lift = |m: &CMatrix| CMatrix::identity(before).kron(m).kron(&CMatrix::identity(after));
    Ok(HermitianObservable {
        label: format!("{}@{}", x.label(), site),
        matrix: lift(x.matrix()),
        spectrum: x
            .spectrum()
            .iter()
            .map(|p| SpectralPoint { value: p.value, projector: lift(&p.projector) })
            .collect(),
    })
}

/// `tr[ρX]`, real part.
pub fn expectation(rho: &DensityState, x: &HermitianObservable) -> Result<f64> {
    if rho.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: x.dim() });
    }
    Ok(rho.matrix().trace_product(x.matrix()).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn sx() -> CMatrix {
        CMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn diagonal_decomposition() {
        let obs = eigendecompose(&CMatrix::from_diag(&[1.0, -1.0]), &tol()).unwrap();
        assert_eq!(obs.eigenvalues(), vec![-1.0, 1.0]);
        assert_eq!(obs.projector(0), &CMatrix::from_diag(&[0.0, 1.0]));
        assert_eq!(obs.projector(1), &CMatrix::from_diag(&[1.0, 0.0]));
    }

    #[test]
    fn identity_is_one_cluster() {
        let obs = eigendecompose(&CMatrix::identity(2), &tol()).unwrap();
        assert_eq!(obs.spectrum().len(), 1);
        assert_eq!(obs.eigenvalue(0), 1.0);
        assert_eq!(obs.projector(0), &CMatrix::identity(2));
    }

    #[test]
    fn pauli_x_projectors() {
        let obs = eigendecompose(&sx(), &tol()).unwrap();
        let minus = CMatrix::from_real(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
        let plus = CMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!((obs.eigenvalue(0) + 1.0).abs() < 1e-14);
        assert!(obs.projector(0).distance(&minus) < 1e-14);
        assert!(obs.projector(1).distance(&plus) < 1e-14);
        assert!(obs.decomposition_defect() < 1e-14);
    }

    #[test]
    fn near_degenerate_eigenvalues_merge() {
        let obs = eigendecompose(&CMatrix::from_diag(&[1.0, 1.0 + 1e-12, -2.0]), &tol()).unwrap();
        assert_eq!(obs.spectrum().len(), 2);
        assert!((obs.eigenvalue(1) - (1.0 + 0.5e-12)).abs() < 1e-15);
        assert_eq!(obs.projector(1), &CMatrix::from_diag(&[1.0, 1.0, 0.0]));
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let m = CMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(eigendecompose(&m, &tol()), Err(Error::NotHermitian { .. })));
        assert!(matches!(HermitianObservable::new("A", m, &tol()), Err(Error::NotHermitian { what, .. }) if what == "A"));
    }

    #[test]
    fn state_validation() {
        assert!(validate_state(&CMatrix::identity(2).scale(0.5), &tol()).is_ok());
        assert!(validate_state(&CMatrix::from_diag(&[1.0, 0.0]), &tol()).is_ok());
        assert!(matches!(
            validate_state(&CMatrix::from_diag(&[1.2, -0.2]), &tol()),
            Err(Error::NegativeEigenvalue { .. })
        ));
        assert!(matches!(validate_state(&CMatrix::from_diag(&[0.7, 0.2]), &tol()), Err(Error::TraceNotOne { .. })));
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clamped() {
        let rho = validate_state(&CMatrix::from_diag(&[1.0 + 1e-12, -1e-12]), &tol()).unwrap();
        assert!(rho.matrix()[(1, 1)].re >= 0.0);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn commutation() {
        let z = eigendecompose(&CMatrix::from_diag(&[1.0, -1.0]), &tol()).unwrap();
        let i = eigendecompose(&CMatrix::identity(2), &tol()).unwrap();
        let x = eigendecompose(&sx(), &tol()).unwrap();
        assert!(commute_check(&z, &i, &tol()).unwrap());
        assert!(!commute_check(&z, &x, &tol()).unwrap());
        let i3 = eigendecompose(&CMatrix::identity(3), &tol()).unwrap();
        assert!(commute_check(&z, &i3, &tol()).is_err());
    }

    #[test]
    fn squaring_merges_plus_minus_one() {
        let y = eigendecompose(&CMatrix::from_diag(&[1.0, 0.0, -1.0]), &tol()).unwrap();
        let sq = apply_function(&SpectrumFunction::tabulate(&y, |v| v * v), &y).unwrap();
        assert_eq!(sq.eigenvalues(), vec![0.0, 1.0]);
        assert_eq!(sq.matrix(), &CMatrix::from_diag(&[1.0, 0.0, 1.0]));
        assert_eq!(sq.projector(1), &(y.projector(0) + y.projector(2)));
    }

    #[test]
    fn positive_part() {
        let x = eigendecompose(&CMatrix::from_diag(&[2.0, -3.0]), &tol()).unwrap();
        let out = apply_function(&SpectrumFunction::tabulate(&x, |v| v.max(0.0)), &x).unwrap();
        assert_eq!(out.matrix(), &CMatrix::from_diag(&[2.0, 0.0]));
    }

    #[test]
    fn undefined_function_is_an_error() {
        let x = eigendecompose(&CMatrix::from_diag(&[2.0, -3.0]), &tol()).unwrap();
        let phi = SpectrumFunction::from_pairs([(2.0, 1.0)]).unwrap();
        assert_eq!(apply_function(&phi, &x), Err(Error::FunctionUndefined { point: -3.0 }));
    }

    #[test]
    fn snapping_user_keys() {
        let x = eigendecompose(&(&sx() + &CMatrix::from_diag(&[1.0, -1.0])), &tol()).unwrap();
        let s2 = core::f64::consts::SQRT_2;
        let phi = SpectrumFunction::from_pairs([(-s2, 0.0), (s2, 1.0)]).unwrap().snapped_to(&x, &tol()).unwrap();
        assert_eq!(phi.eval(x.eigenvalue(1)), Some(1.0));
        let bad = SpectrumFunction::from_pairs([(0.3, 0.0)]).unwrap();
        assert!(matches!(bad.snapped_to(&x, &tol()), Err(Error::NotASpectralPoint { .. })));
    }

    #[test]
    fn embedding() {
        let z = eigendecompose(&CMatrix::from_diag(&[1.0, -1.0]), &tol()).unwrap();
        let lifted = tensor_embed(&z, 1, &[2, 2]).unwrap();
        assert_eq!(lifted.matrix(), &CMatrix::identity(2).kron(z.matrix()));
        assert_eq!(lifted.eigenvalues(), vec![-1.0, 1.0]);
        assert_eq!(lifted.projector(0).trace().re, 2.0);
        assert!(tensor_embed(&z, 2, &[2, 2]).is_err());
        assert!(tensor_embed(&z, 0, &[3, 2]).is_err());
    }

    #[test]
    fn expectations() {
        let z = eigendecompose(&CMatrix::from_diag(&[1.0, -1.0]), &tol()).unwrap();
        let x = eigendecompose(&sx(), &tol()).unwrap();
        let up = validate_state(&CMatrix::from_diag(&[1.0, 0.0]), &tol()).unwrap();
        assert_eq!(expectation(&up, &z).unwrap(), 1.0);
        assert_eq!(expectation(&up, &x).unwrap(), 0.0);
        assert_eq!(expectation(&DensityState::maximally_mixed(2), &z).unwrap(), 0.0);
    }
}
