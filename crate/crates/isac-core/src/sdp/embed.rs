//! Real embedding of complex Hermitian matrices.
//!
//! A Hermitian `H` maps to the real symmetric `[[Re H, -Im H], [Im H, Re H]]`,
//! which is PSD iff `H` is and carries each eigenvalue of `H` twice. Traces
//! double under the embedding, so constraint coefficients are halved where
//! the correspondence `<A, X>_real = Re tr(A X)` is needed.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::SdpError;
use crate::linalg::hermitian_defect;

/// Embed a Hermitian complex matrix into a real symmetric one of twice the
/// dimension. Rejects inputs whose Hermitian defect exceeds 1e-10.
pub fn complex_embed(h: &DMatrix<Complex64>) -> Result<DMatrix<f64>, SdpError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(SdpError::Shape("embedding needs a square matrix".into()));
    }
    let defect = hermitian_defect(h);
    if defect > 1e-10 {
        return Err(SdpError::NotHermitian(defect));
    }
    let mut out = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (h[(i, j)] + h[(j, i)].conj()); // exact symmetrization
            out[(i, j)] = z.re;
            out[(n + i, n + j)] = z.re;
            out[(i, n + j)] = -z.im;
            out[(n + i, j)] = z.im;
        }
    }
    Ok(out)
}

/// Recover the complex Hermitian matrix from a (possibly unstructured) real
/// matrix of even dimension by averaging the two structure-equivalent
/// copies; exact inverse of [`complex_embed`] on structured inputs.
pub fn complex_extract(r: &DMatrix<f64>) -> Result<DMatrix<Complex64>, SdpError> {
    let n2 = r.nrows();
    if r.ncols() != n2 || !n2.is_multiple_of(2) {
        return Err(SdpError::Shape(
            "extraction needs an even square matrix".into(),
        ));
    }
    let n = n2 / 2;
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (r[(i, j)] + r[(n + i, n + j)]);
            let im = 0.5 * (r[(n + i, j)] - r[(i, n + j)]);
            out[(i, j)] = Complex64::new(re, im);
        }
    }
    // hermitianize against rounding
    Ok((&out + out.adjoint()) * Complex64::new(0.5, 0.0))
}
