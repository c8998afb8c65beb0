//! Dense-matrix oracles independent of the measure machinery.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use qhv_core::{CMatrix, HermitianObservable, Tolerances, C64};

pub type NMat = DMatrix<Complex<f64>>;

pub fn tol() -> Tolerances {
    Tolerances::default()
}

pub fn to_nalgebra(m: &CMatrix) -> NMat {
    let d = m.dim();
    NMat::from_fn(d, d, |i, j| m[(i, j)])
}

pub fn from_nalgebra(m: &NMat) -> CMatrix {
    let d = m.nrows();
    let mut out = CMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

/// Ascending eigenvalues from nalgebra's Hermitian eigensolver.
pub fn oracle_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = to_nalgebra(m).symmetric_eigen();
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Explicit sum over all n! orderings.
pub fn oracle_sym_product(ops: &[CMatrix]) -> CMatrix {
    let n = ops.len();
    let d = ops[0].dim();
    let mats: Vec<NMat> = ops.iter().map(to_nalgebra).collect();
    let mut total = NMat::zeros(d, d);
    let mut count = 0.0;
    permute(&mut (0..n).collect::<Vec<_>>(), 0, &mut |p| {
        let mut prod = NMat::identity(d, d);
        for &i in p {
            prod *= &mats[i];
        }
        total += prod;
        count += 1.0;
    });
    from_nalgebra(&(total / Complex::new(count, 0.0)))
}

fn permute(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}

pub fn oracle_trace(a: &CMatrix, b: &CMatrix) -> f64 {
    (to_nalgebra(a) * to_nalgebra(b)).trace().re
}

pub fn oracle_kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    from_nalgebra(&to_nalgebra(a).kronecker(&to_nalgebra(b)))
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]]).unwrap()
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_diag(&[1.0, -1.0])
}

/// `cos θ σx + sin θ σy`, a ±1 observable along an equatorial Bloch axis.
pub fn equatorial(deg: f64) -> CMatrix {
    let t = deg.to_radians();
    let mut m = sigma_x().scale(t.cos());
    m.add_scaled(t.sin(), &sigma_y());
    m
}

pub fn observable(label: &str, m: CMatrix) -> HermitianObservable {
    HermitianObservable::new(label, m, &tol()).unwrap()
}

pub fn singlet_matrix() -> CMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::outer(&[c(0.0, 0.0), c(r, 0.0), c(-r, 0.0), c(0.0, 0.0)])
}
