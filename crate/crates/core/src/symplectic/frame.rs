use nalgebra::{DMatrix, DVector};

use super::{Result, SymplecticError};

/// `J = (0 I; -I 0)` of size `2n x 2n`.
pub fn standard_form_matrix(dim: usize) -> DMatrix<f64> {
    let n = dim / 2;
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// Change of basis `T` with `T^T M T = J`, by symplectic Gram–Schmidt.
///
/// Each round pairs the two remaining vectors with the largest `|w(u, v)|`
/// (ties go to the lowest index pair) and scales both by `1/sqrt|w(u, v)|`.
/// Columns come out as `[e_1..e_n, f_1..f_n]`.
pub fn symplectic_frame(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = m.nrows();
    if dim != m.ncols() || !dim.is_multiple_of(2) || dim == 0 {
        return Err(SymplecticError::Unsupported(format!("frame of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let scale = m.abs().max().max(1.0);
    let defect = (m + m.transpose()).abs().max();
    if defect > 1e-12 * scale {
        return Err(SymplecticError::NotAntisymmetric { defect });
    }
    let det = m.determinant();
    if det.abs() < 1e-12 {
        return Err(SymplecticError::Singular { det });
    }
    let omega = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * m * b)[(0, 0)];
    let mut remaining: Vec<DVector<f64>> = (0..dim).map(|i| DVector::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 })).collect();
    let n = dim / 2;
    let mut es = Vec::with_capacity(n);
    let mut fs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = (0usize, 1usize, 0.0f64);
        for i in 0..remaining.len() {
            for j in i + 1..remaining.len() {
                let s = omega(&remaining[i], &remaining[j]);
                if s.abs() > best.2.abs() {
                    best = (i, j, s);
                }
            }
        }
        let (i, j, s) = best;
        if s.abs() < 1e-300 {
            return Err(SymplecticError::Singular { det });
        }
        let norm = s.abs().sqrt();
        let e = &remaining[i] / norm;
        let f = &remaining[j] * (s.signum() / norm);
        remaining.remove(j);
        remaining.remove(i);
        for w in remaining.iter_mut() {
            let (wf, we) = (omega(w, &f), omega(w, &e));
            *w -= &e * wf;
            *w += &f * we;
        }
        es.push(e);
        fs.push(f);
    }
    let cols: Vec<DVector<f64>> = es.into_iter().chain(fs).collect();
    Ok(DMatrix::from_columns(&cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_form_gives_identity() {
        for dim in [2, 4] {
            let t = symplectic_frame(&standard_form_matrix(dim)).unwrap();
            assert!((t - DMatrix::identity(dim, dim)).abs().max() < 1e-15);
        }
    }

    #[test]
    fn scaled_area_form() {
        let c = 4.0;
        let m = DMatrix::from_row_slice(2, 2, &[0.0, c, -c, 0.0]);
        let t = symplectic_frame(&m).unwrap();
        assert!((t - DMatrix::identity(2, 2) * 0.5).abs().max() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let sym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(symplectic_frame(&sym), Err(SymplecticError::NotAntisymmetric { .. })));
        let zero = DMatrix::zeros(2, 2);
        assert!(matches!(symplectic_frame(&zero), Err(SymplecticError::Singular { .. })));
    }

    proptest! {
        #[test]
        fn random_4x4_is_normalised(v in proptest::collection::vec(-2.0f64..2.0, 6)) {
            let mut m = DMatrix::zeros(4, 4);
            let mut k = 0;
            for i in 0..4 {
                for j in i + 1..4 {
                    m[(i, j)] = v[k];
                    m[(j, i)] = -v[k];
                    k += 1;
                }
            }
            prop_assume!(m.determinant() >= 0.1);
            let t = symplectic_frame(&m).unwrap();
            // direct multiplication oracle
            let lhs = t.transpose() * &m * &t;
            prop_assert!((lhs - standard_form_matrix(4)).abs().max() < 1e-10);
        }
    }
}
