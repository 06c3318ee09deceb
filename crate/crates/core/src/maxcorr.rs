//! Hirschfeld–Gebelein–Rényi maximal correlation through the singular value
//! decomposition of the Witsenhausen matrix `p(x,y) / sqrt(p(x) p(y))`.
//!
//! The top singular triple of that matrix is always `(1, sqrt(p_x), sqrt(p_y))`.
//! [`witsenhausen_svd`] installs it exactly and decomposes only the
//! compression of the matrix onto the orthogonal complements, so the
//! remaining singular vectors are orthogonal to the marginals even when the
//! spectrum is degenerate (e.g. `lambda_2 = 1` for a deterministic relation).

use nalgebra::{DMatrix, DVector};

use crate::dist::{strip_zero_support, CorrelationReport, Diagnostics, JointPmf, ScoredPair};
use crate::error::{Error, Result};
use crate::order::Poset;

/// Accuracy promised by [`decompose`] for reconstruction and orthonormality.
pub const SVD_CONTRACT_TOL: f64 = 1e-8;

/// Largest accepted matrix side.
pub const MAX_SVD_DIM: usize = 4096;

/// Singular values in descending order with their left and right vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdBundle {
    pub singular_values: Vec<f64>,
    pub left_vectors: Vec<Vec<f64>>,
    pub right_vectors: Vec<Vec<f64>>,
}

impl SvdBundle {
    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    /// `sum_i lambda_i u_i w_i^T`.
    pub fn reconstruct(&self, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rows, cols);
        for ((s, u), w) in self.singular_values.iter().zip(&self.left_vectors).zip(&self.right_vectors) {
            for r in 0..rows {
                for c in 0..cols {
                    out[(r, c)] += s * u[r] * w[c];
                }
            }
        }
        out
    }

    /// Largest deviation of the Gram matrices of both vector families from
    /// the identity.
    pub fn orthonormality_error(&self) -> f64 {
        [&self.left_vectors, &self.right_vectors]
            .iter()
            .map(|family| {
                let mut worst: f64 = 0.0;
                for (i, a) in family.iter().enumerate() {
                    for (j, b) in family.iter().enumerate() {
                        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((dot - target).abs());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    /// Enforces the reconstruction and orthonormality contract against `m`.
    pub fn check_contract(&self, m: &DMatrix<f64>) -> Result<()> {
        let scale = m.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let recon = (self.reconstruct(m.nrows(), m.ncols()) - m).amax();
        if !(recon <= SVD_CONTRACT_TOL * scale) {
            return Err(Error::NumericalFailure(format!("svd reconstruction error {recon:e}")));
        }
        let ortho = self.orthonormality_error();
        if !(ortho <= SVD_CONTRACT_TOL) {
            return Err(Error::NumericalFailure(format!("svd orthonormality error {ortho:e}")));
        }
        Ok(())
    }
}

/// `p(x,y) / sqrt(p(x) p(y))`.
pub fn witsenhausen_matrix(pmf: &JointPmf) -> Result<DMatrix<f64>> {
    let px = pmf.marginal_x();
    let py = pmf.marginal_y();
    if let Some(x) = px.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroMarginal(x));
    }
    if let Some(y) = py.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroMarginal(y));
    }
    Ok(DMatrix::from_fn(pmf.rows(), pmf.cols(), |x, y| {
        pmf.at(x, y) / (px[x] * py[y]).sqrt()
    }))
}

/// Thin SVD with descending singular values; each left vector has its first
/// non-negligible coordinate positive.
pub fn decompose(m: &DMatrix<f64>) -> Result<SvdBundle> {
    let (rows, cols) = m.shape();
    if rows.max(cols) > MAX_SVD_DIM {
        return Err(Error::SizeTooLarge {
            size: rows.max(cols),
            limit: MAX_SVD_DIM,
        });
    }
    if rows == 0 || cols == 0 {
        return Ok(SvdBundle {
            singular_values: vec![],
            left_vectors: vec![],
            right_vectors: vec![],
        });
    }
    if let Some(bad) = m.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(format!("non-finite matrix entry {bad}")));
    }
    let a = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = a
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("svd did not converge: {e:?}")))?;
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    let k = rows.min(cols);
    let mut bundle = SvdBundle {
        singular_values: Vec::with_capacity(k),
        left_vectors: Vec::with_capacity(k),
        right_vectors: Vec::with_capacity(k),
    };
    // already in non-increasing order
    for c in 0..k {
        let mut left: Vec<f64> = (0..rows).map(|i| u[(i, c)]).collect();
        let mut right: Vec<f64> = (0..cols).map(|j| v[(j, c)]).collect();
        orient(&mut left, &mut right);
        bundle.singular_values.push(s[c].max(0.0));
        bundle.left_vectors.push(left);
        bundle.right_vectors.push(right);
    }
    bundle.check_contract(m)?;
    Ok(bundle)
}

/// Flips both vectors so the first coordinate of `left` above round-off is positive.
fn orient(left: &mut [f64], right: &mut [f64]) {
    let scale = left.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if let Some(first) = left.iter().find(|v| v.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            left.iter_mut().for_each(|v| *v = -*v);
            right.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Orthonormal basis of the complement of the unit vector `v` (whose first
/// coordinate is positive), as columns. Uses the Householder reflection
/// sending `v` to `-e_1`.
fn complement_basis(v: &[f64]) -> DMatrix<f64> {
    let d = v.len();
    let mut w = DVector::from_column_slice(v);
    w[0] += 1.0;
    let norm2 = w.norm_squared();
    let h = DMatrix::<f64>::identity(d, d) - (&w * w.transpose()) * (2.0 / norm2);
    h.columns(1, d - 1).into_owned()
}

/// Full singular system of the Witsenhausen matrix of a pmf with positive
/// marginals; the first triple is exactly `(1, sqrt(p_x), sqrt(p_y))`.
pub fn witsenhausen_svd(pmf: &JointPmf) -> Result<SvdBundle> {
    let p = witsenhausen_matrix(pmf)?;
    let sx: Vec<f64> = pmf.marginal_x().iter().map(|v| v.sqrt()).collect();
    let sy: Vec<f64> = pmf.marginal_y().iter().map(|v| v.sqrt()).collect();
    let mut bundle = SvdBundle {
        singular_values: vec![1.0],
        left_vectors: vec![sx.clone()],
        right_vectors: vec![sy.clone()],
    };
    let (m, n) = p.shape();
    if m < 2 || n < 2 {
        return Ok(bundle);
    }
    let qx = complement_basis(&sx);
    let qy = complement_basis(&sy);
    let inner = qx.transpose() * &p * &qy;
    let rest = decompose(&inner)?;
    for ((s, a), b) in rest.singular_values.iter().zip(&rest.left_vectors).zip(&rest.right_vectors) {
        let mut u: Vec<f64> = (&qx * DVector::from_column_slice(a)).iter().copied().collect();
        let mut w: Vec<f64> = (&qy * DVector::from_column_slice(b)).iter().copied().collect();
        orient(&mut u, &mut w);
        bundle.singular_values.push(*s);
        bundle.left_vectors.push(u);
        bundle.right_vectors.push(w);
    }
    bundle.check_contract(&p)?;
    Ok(bundle)
}

/// Checks a raw singular value against `[0, 1]` and clips it.
pub(crate) fn clip_unit(value: f64) -> Result<f64> {
    if !(-SVD_CONTRACT_TOL..=1.0 + SVD_CONTRACT_TOL).contains(&value) {
        return Err(Error::NumericalFailure(format!(
            "singular value {value} outside [0, 1] beyond tolerance"
        )));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Maximal correlation `lambda_2` with its witness functions
/// `u_2 / sqrt(p_x)`, `w_2 / sqrt(p_y)`.
pub fn maximal_correlation(pmf: &JointPmf) -> Result<CorrelationReport> {
    let anti_x = Poset::antichain(pmf.x_labels().to_vec())?;
    let anti_y = Poset::antichain(pmf.y_labels().to_vec())?;
    let stripped = strip_zero_support(pmf, &anti_x, &anti_y)?;
    let bundle = witsenhausen_svd(&stripped.pmf)?;
    let mut f = vec![0.0; pmf.rows()];
    let mut g = vec![0.0; pmf.cols()];
    let value = if bundle.len() < 2 {
        0.0
    } else {
        let px = stripped.pmf.marginal_x();
        let py = stripped.pmf.marginal_y();
        for (k, &x) in stripped.x_index.iter().enumerate() {
            f[x] = bundle.left_vectors[1][k] / px[k].sqrt();
        }
        for (k, &y) in stripped.y_index.iter().enumerate() {
            g[y] = bundle.right_vectors[1][k] / py[k].sqrt();
        }
        clip_unit(bundle.singular_values[1])?
    };
    Ok(CorrelationReport {
        measure: "maxcorr".into(),
        value,
        witness: Some(ScoredPair::new(f, g)),
        diagnostics: Diagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::pair_stats;

    fn dsbs() -> JointPmf {
        JointPmf::from_rows(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap()
    }

    fn assert_matrix_close(a: &DMatrix<f64>, b: &[&[f64]], tol: f64) {
        for (r, row) in b.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert!((a[(r, c)] - v).abs() < tol, "entry ({r},{c}): {} vs {v}", a[(r, c)]);
            }
        }
    }

    #[test]
    fn witsenhausen_examples() {
        let diag = JointPmf::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_matrix_close(&witsenhausen_matrix(&diag).unwrap(), &[&[1.0, 0.0], &[0.0, 1.0]], 1e-15);
        assert_matrix_close(&witsenhausen_matrix(&dsbs()).unwrap(), &[&[0.8, 0.2], &[0.2, 0.8]], 1e-15);
        let ind = JointPmf::from_rows(vec![vec![0.12, 0.18], vec![0.28, 0.42]]).unwrap();
        let w = witsenhausen_matrix(&ind).unwrap();
        let (px, py) = ([0.3f64, 0.7f64], [0.4f64, 0.6f64]);
        for r in 0..2 {
            for c in 0..2 {
                assert!((w[(r, c)] - (px[r] * py[c]).sqrt()).abs() < 1e-15);
            }
        }
        let zero = JointPmf::from_rows(vec![vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
        assert_eq!(witsenhausen_matrix(&zero), Err(Error::ZeroMarginal(1)));
    }

    #[test]
    fn decompose_examples() {
        let id = decompose(&DMatrix::identity(2, 2)).unwrap();
        assert!((id.singular_values[0] - 1.0).abs() < 1e-14);
        assert!((id.singular_values[1] - 1.0).abs() < 1e-14);
        let sym = decompose(&DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.2, 0.8])).unwrap();
        assert!((sym.singular_values[0] - 1.0).abs() < 1e-14);
        assert!((sym.singular_values[1] - 0.6).abs() < 1e-14);
        let ind = JointPmf::from_rows(vec![vec![0.12, 0.18], vec![0.28, 0.42]]).unwrap();
        let b = decompose(&witsenhausen_matrix(&ind).unwrap()).unwrap();
        assert!(b.singular_values[1] <= 1e-10);
    }

    #[test]
    fn decompose_rectangular_and_sign_convention() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, -1.0]);
        let b = decompose(&m).unwrap();
        assert_eq!(b.len(), 2);
        assert!(b.singular_values[0] >= b.singular_values[1]);
        for u in &b.left_vectors {
            let first = u.iter().find(|v| v.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn decompose_rejects_non_finite() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(decompose(&m), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn decompose_rank_one_block() {
        let m = DMatrix::from_row_slice(2, 2, &[-0.202_457_739_142_679_6, 0.231_868_490_649_331_6, -0.625_782_825_649_297_7, 0.716_689_418_107_743_8]);
        let b = decompose(&m).unwrap();
        assert!((b.singular_values[0] - 1.0).abs() < 1e-12);
        assert!(b.singular_values[1].abs() < 1e-12);
    }

    #[test]
    fn sparse_block_pmfs_keep_the_contract() {
        for rows in [
            vec![
                vec![0.0, 0.0, 0.0, 0.018068133832371425, 0.0],
                vec![0.0, 0.0, 0.015919658675173552, 0.0, 0.38108293866790394],
                vec![0.19213425704603865, 0.049425348685240796, 0.0, 0.0, 0.04118700705109062],
                vec![0.0, 0.0, 0.0, 0.302182656042181, 0.0],
            ],
            vec![
                vec![0.0, 0.034806590915116765, 0.0, 0.27808009836221154],
                vec![0.0, 0.0, 0.07319168002572249, 0.0],
                vec![0.041596699880252386, 0.0, 0.00819944127217052, 0.0],
                vec![0.5641254895445263, 0.0, 0.0, 0.0],
            ],
        ] {
            let j = JointPmf::from_rows(rows).unwrap();
            assert!(witsenhausen_svd(&j).is_ok());
            assert!(decompose(&witsenhausen_matrix(&j).unwrap()).is_ok());
        }
    }

    #[test]
    fn witsenhausen_svd_handles_degenerate_top() {
        let diag = JointPmf::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let b = witsenhausen_svd(&diag).unwrap();
        assert_eq!(b.singular_values[0], 1.0);
        assert!((b.singular_values[1] - 1.0).abs() < 1e-14);
        let dot: f64 = b.left_vectors[0].iter().zip(&b.left_vectors[1]).map(|(a, c)| a * c).sum();
        assert!(dot.abs() < 1e-14);
    }

    #[test]
    fn maximal_correlation_examples() {
        let r = maximal_correlation(&dsbs()).unwrap();
        assert!((r.value - 0.6).abs() < 1e-12);
        let w = r.witness.unwrap();
        for v in w.f.iter().chain(&w.g) {
            assert!((v.abs() - 1.0).abs() < 1e-12);
        }
        assert!((w.f[0] - w.g[0]).abs() < 1e-12);
        let s = pair_stats(&dsbs(), &w).unwrap();
        assert!((s.cov - 0.6).abs() < 1e-12);

        let ind = dsbs().independent_part();
        assert!(maximal_correlation(&ind).unwrap().value < 1e-12);
        let diag = JointPmf::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((maximal_correlation(&diag).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximal_correlation_skips_zero_mass_symbols() {
        let j = JointPmf::from_rows(vec![vec![0.4, 0.0, 0.1], vec![0.0, 0.0, 0.0], vec![0.1, 0.0, 0.4]]).unwrap();
        let r = maximal_correlation(&j).unwrap();
        assert!((r.value - 0.6).abs() < 1e-12);
        let w = r.witness.unwrap();
        assert_eq!(w.f[1], 0.0);
        assert_eq!(w.g[1], 0.0);
        let single = JointPmf::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        assert_eq!(maximal_correlation(&single), Err(Error::DegenerateMarginal("x")));
    }
}
