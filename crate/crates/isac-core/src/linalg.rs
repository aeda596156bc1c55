//! Small dense complex-matrix helpers shared by the detection, SDP, and
//! beamforming modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Hermitian part `(M + M^H) / 2`.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Relative deviation from Hermitian symmetry, `||M - M^H||_F / max(1, ||M||_F)`.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let diff = m - m.adjoint();
    diff.norm() / m.norm().max(1.0)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig_hermitian(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Eigen-pairs of a Hermitian matrix sorted by descending eigenvalue.
pub fn hermitian_eigen_desc(m: &DMatrix<Complex64>) -> Vec<(f64, DVector<Complex64>)> {
    let eig = m.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<Complex64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    pairs
}

/// Real quadratic form `a^T M a^*` of a Hermitian `M`; real by symmetry.
pub fn steering_quadform(a: &DVector<Complex64>, m: &DMatrix<Complex64>) -> f64 {
    // a^T M a^* = v^H M v with v = a^*
    let v = a.map(|z| z.conj());
    let mv = m * &v;
    v.dotc(&mv).re
}

/// `a^T w` for complex vectors (unconjugated product).
pub fn dot_unconj(a: &DVector<Complex64>, w: &DVector<Complex64>) -> Complex64 {
    a.iter().zip(w.iter()).map(|(x, y)| x * y).sum()
}

/// Ratio of the second to the largest singular value; zero for rank <= 1.
pub fn rank_one_defect(m: &DMatrix<Complex64>) -> f64 {
    let svals = m.clone().singular_values();
    if svals.len() < 2 || svals[0] <= 0.0 {
        return 0.0;
    }
    let mut v: Vec<f64> = svals.iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v[1] / v[0]
}

/// Draw a standard circularly symmetric complex Gaussian vector,
/// entries CN(0, 1).
pub fn complex_gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Factor `F` with `F F^H = M` for Hermitian PSD `M` (eigen square root,
/// tolerant of slightly negative rounding on the spectrum).
pub fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let pairs = hermitian_eigen_desc(m);
    let mut f = DMatrix::<Complex64>::zeros(n, n);
    for (j, (val, vec)) in pairs.iter().enumerate() {
        let s = val.max(0.0).sqrt();
        for i in 0..n {
            f[(i, j)] = vec[i] * Complex64::new(s, 0.0);
        }
    }
    f
}
