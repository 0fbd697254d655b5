//! Sample moments and the trace functionals the score statistics reduce to.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CovTestError, Result};
use crate::score_test::NullSpec;

/// Relative tolerance used when checking symmetry of covariance inputs.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A p×n matrix of real observations, one observation per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 1 {
            return Err(CovTestError::InvalidInput(
                "data matrix needs at least one dimension (p >= 1)".into(),
            ));
        }
        if values.ncols() < 2 {
            return Err(CovTestError::InvalidInput(format!(
                "data matrix needs at least two observations (n >= 2), got {}",
                values.ncols()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(CovTestError::InvalidInput(format!(
                "data matrix contains a non-finite entry ({bad})"
            )));
        }
        Ok(Self { values })
    }

    /// Builds the matrix from row-major observations: `rows[i]` is observation `i`.
    pub fn from_observations(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(CovTestError::InvalidInput(format!(
                "observation {i} has {} components, expected {p}",
                row.len()
            )));
        }
        Self::new(DMatrix::from_fn(p, n, |k, i| rows[i][k]))
    }

    /// Builds the matrix from p rows of length n (dimension-major layout).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(CovTestError::InvalidInput("ragged data rows".into()));
        }
        Self::new(DMatrix::from_fn(p, n, |k, i| rows[k][i]))
    }

    /// Dimension p.
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Sample size n.
    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }
}

/// A symmetric p×p matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() || values.nrows() == 0 {
            return Err(CovTestError::InvalidInput(format!(
                "covariance matrix must be square and non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CovTestError::InvalidInput(
                "covariance matrix contains a non-finite entry".into(),
            ));
        }
        let scale = values.amax().max(f64::MIN_POSITIVE);
        let p = values.nrows();
        for i in 0..p {
            for j in (i + 1)..p {
                if (values[(i, j)] - values[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(CovTestError::InvalidInput(format!(
                        "covariance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self(values))
    }

    pub fn identity(p: usize) -> Self {
        Self(DMatrix::identity(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn is_positive_definite(&self) -> bool {
        self.0.clone().cholesky().is_some()
    }
}

/// Divisor of the centered outer-product sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divisor {
    /// Maximum-likelihood (biased) estimator, divides by n.
    N,
    /// Unbiased estimator, divides by n − 1.
    NMinusOne,
}

impl Divisor {
    pub fn value(self, n: usize) -> f64 {
        match self {
            Divisor::N => n as f64,
            Divisor::NMinusOne => (n - 1) as f64,
        }
    }
}

pub fn sample_mean(x: &DataMatrix) -> DVector<f64> {
    let n = x.values.ncols() as f64;
    x.values.column_sum() / n
}

/// Data with the sample mean subtracted from every column.
pub fn centered(x: &DataMatrix) -> DMatrix<f64> {
    let mean = sample_mean(x);
    let mut c = x.values.clone();
    for mut col in c.column_iter_mut() {
        col -= &mean;
    }
    c
}

/// Two-pass sample covariance: mean first, then centered outer products.
pub fn sample_cov(x: &DataMatrix, divisor: Divisor) -> CovMatrix {
    let c = centered(x);
    let mut s = &c * c.transpose();
    s /= divisor.value(x.n_samples());
    // The product is symmetric up to rounding; mirror the upper triangle.
    let p = s.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            s[(j, i)] = s[(i, j)];
        }
    }
    CovMatrix(s)
}

/// `tr[(S − I)²]` as `tr(S²) − 2 tr(S) + p`, from a single product.
pub fn trace_sq_dev(s: &DMatrix<f64>) -> f64 {
    assert!(s.is_square(), "trace_sq_dev needs a square matrix");
    let p = s.nrows();
    let mut tr_sq = 0.0;
    for i in 0..p {
        for j in 0..p {
            tr_sq += s[(i, j)] * s[(j, i)];
        }
    }
    tr_sq - 2.0 * s.trace() + p as f64
}

/// `(tr S, tr S²)` for `S = Y Yᵀ / d` where `Y` is p×n, computed through
/// whichever of `Y Yᵀ` (p×p) or `Yᵀ Y` (n×n) is smaller.
pub(crate) fn gram_traces(y: &DMatrix<f64>, d: f64) -> (f64, f64) {
    let tr = y.norm_squared() / d;
    let gram = if y.nrows() <= y.ncols() {
        y * y.transpose()
    } else {
        y.transpose() * y
    };
    (tr, gram.norm_squared() / (d * d))
}

/// Symmetric inverse square root of a positive-definite matrix.
pub(crate) fn inverse_sqrt(sigma0: &CovMatrix) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(sigma0.values().clone());
    let max = eig.eigenvalues.amax();
    if eig
        .eigenvalues
        .iter()
        .any(|&l| l.is_nan() || l <= max * f64::EPSILON * sigma0.dim() as f64)
    {
        return Err(CovTestError::Domain(
            "null covariance is not positive definite".into(),
        ));
    }
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose())
}

/// Fourth-moment parameter β from residuals standardized by the null covariance:
/// `(1/(np)) Σ ŷ⁴ − 3`.
///
/// Under a sphericity null the residuals are scaled by `γ̂ = tr(Σ̂ᵤ)/p`
/// (unbiased covariance).
pub fn estimate_beta(x: &DataMatrix, null: &NullSpec) -> Result<f64> {
    let c = centered(x);
    let (p, n) = (x.dim(), x.n_samples());
    let y = match null {
        NullSpec::Identity => c,
        NullSpec::Sphericity => {
            let gamma = c.norm_squared() / ((n - 1) as f64 * p as f64);
            if gamma.is_nan() || gamma <= 0.0 {
                return Err(CovTestError::Domain(
                    "sphericity scale estimate is zero (constant data)".into(),
                ));
            }
            c / gamma.sqrt()
        }
        NullSpec::General(sigma0) => {
            check_dim(sigma0, p)?;
            inverse_sqrt(sigma0)? * c
        }
    };
    let m4 = y.iter().map(|v| v.powi(4)).sum::<f64>() / (n * p) as f64;
    Ok(m4 - 3.0)
}

pub(crate) fn check_dim(sigma0: &CovMatrix, p: usize) -> Result<()> {
    if sigma0.dim() != p {
        return Err(CovTestError::InvalidInput(format!(
            "null covariance is {}x{} but the data has dimension {p}",
            sigma0.dim(),
            sigma0.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn data(rows: &[&[f64]]) -> DataMatrix {
        DataMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(sample_mean(&data(&[&[0.0, 2.0]]))[0], 1.0);
        let m = sample_mean(&data(&[&[0.0, 4.0], &[1.0, 3.0]]));
        assert_eq!(m.as_slice(), &[2.0, 2.0]);
        let v = [1.5, -2.0, 7.25];
        let constant = DataMatrix::new(DMatrix::from_fn(3, 5, |k, _| v[k])).unwrap();
        assert_eq!(sample_mean(&constant).as_slice(), &v);
    }

    #[test]
    fn cov_examples() {
        let x = data(&[&[0.0, 4.0]]);
        assert_eq!(sample_cov(&x, Divisor::N).values()[(0, 0)], 4.0);
        assert_eq!(sample_cov(&x, Divisor::NMinusOne).values()[(0, 0)], 8.0);
        let same = DataMatrix::new(DMatrix::from_element(4, 6, 3.0)).unwrap();
        assert_eq!(sample_cov(&same, Divisor::N).values().amax(), 0.0);
    }

    #[test]
    fn trace_sq_dev_examples() {
        assert_eq!(trace_sq_dev(&DMatrix::identity(4, 4)), 0.0);
        assert_eq!(trace_sq_dev(&(DMatrix::identity(3, 3) * 2.0)), 3.0);
        assert_eq!(trace_sq_dev(&dmatrix![4.0]), 9.0);
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(DataMatrix::new(DMatrix::zeros(3, 1)).is_err());
        assert!(DataMatrix::new(DMatrix::zeros(0, 4)).is_err());
        assert!(DataMatrix::new(dmatrix![1.0, f64::NAN]).is_err());
        assert!(CovMatrix::new(dmatrix![1.0, 0.5; 0.4, 1.0]).is_err());
        assert!(CovMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn gram_traces_agree_for_wide_and_tall() {
        let y = DMatrix::from_fn(5, 3, |i, j| (i as f64 + 1.0) * 0.3 - j as f64 * 0.7);
        let s = &y * y.transpose() / 2.0;
        let (tr, tr2) = gram_traces(&y, 2.0);
        assert!((tr - s.trace()).abs() < 1e-12);
        assert!((tr2 - (&s * &s).trace()).abs() < 1e-11);
        let (tr_t, tr2_t) = gram_traces(&y.transpose(), 2.0);
        let st = y.transpose() * &y / 2.0;
        assert!((tr_t - st.trace()).abs() < 1e-12);
        assert!((tr2_t - (&st * &st).trace()).abs() < 1e-11);
    }

    #[test]
    fn beta_two_point_sample() {
        // Balanced ±1 entries: mean is exactly zero and E ŷ⁴ = 1.
        let x = DataMatrix::new(DMatrix::from_fn(3, 8, |k, i| {
            if (i + k) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }))
        .unwrap();
        assert_eq!(estimate_beta(&x, &NullSpec::Identity).unwrap(), -2.0);
    }

    #[test]
    fn beta_rejects_indefinite_null() {
        let x = data(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 3.0]]);
        let bad = CovMatrix::new(dmatrix![1.0, 2.0; 2.0, 1.0]).unwrap();
        assert!(matches!(
            estimate_beta(&x, &NullSpec::General(bad)),
            Err(CovTestError::Domain(_))
        ));
    }

    #[test]
    fn inverse_sqrt_squares_to_inverse() {
        let s = CovMatrix::new(dmatrix![2.0, 0.3, 0.1; 0.3, 1.5, -0.2; 0.1, -0.2, 1.0]).unwrap();
        let r = inverse_sqrt(&s).unwrap();
        let prod = &r * &r * s.values();
        assert!((prod - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    }
}
