use nalgebra::DMatrix;

use super::{EconError, LeastSquaresFit};

const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Lower-triangular instantaneous-effect matrix `B` with `Σ = B·Bᵀ` and unit
/// structural-shock variances.
///
/// Factors from [`cholesky_lower`] have a strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularFactor {
    b: DMatrix<f64>,
}

impl TriangularFactor {
    /// Wraps an explicit lower-triangular matrix. A zero diagonal is accepted
    /// so that degenerate (deterministic) models can be expressed.
    pub fn from_lower(b: DMatrix<f64>) -> Result<Self, EconError> {
        if !b.is_square() {
            return Err(EconError::DimensionMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        let k = b.nrows();
        for i in 0..k {
            if b[(i, i)] < 0.0 || !b[(i, i)].is_finite() {
                return Err(EconError::NotPositiveDefinite { pivot: i });
            }
            for j in (i + 1)..k {
                if b[(i, j)] != 0.0 {
                    return Err(EconError::DimensionMismatch {
                        expected: "lower-triangular matrix".into(),
                        found: format!("nonzero entry at ({i}, {j})"),
                    });
                }
            }
        }
        Ok(Self { b })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// `B·Bᵀ`
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.b * self.b.transpose()
    }

    /// Solves `B·u = ε` by forward substitution.
    pub fn solve(&self, eps: &[f64], out: &mut [f64]) -> Result<(), EconError> {
        let k = self.dim();
        for i in 0..k {
            let d = self.b[(i, i)];
            if d == 0.0 {
                return Err(EconError::SingularFactor { index: i });
            }
            let acc = eps[i] - out[..i].iter().enumerate().map(|(j, x)| self.b[(i, j)] * x).sum::<f64>();
            out[i] = acc / d;
        }
        Ok(())
    }
}

/// Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky_lower(sigma: &DMatrix<f64>) -> Result<TriangularFactor, EconError> {
    if !sigma.is_square() {
        return Err(EconError::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", sigma.nrows(), sigma.ncols()),
        });
    }
    let k = sigma.nrows();
    let scale = sigma.amax().max(1.0);
    for i in 0..k {
        for j in (i + 1)..k {
            if (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(EconError::NotSymmetric);
            }
        }
    }

    let mut b = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let mut d = sigma[(j, j)];
        for p in 0..j {
            d -= b[(j, p)] * b[(j, p)];
        }
        // NaN pivots fail too
        if d.is_nan() || d <= 0.0 {
            return Err(EconError::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        b[(j, j)] = djj;
        for i in (j + 1)..k {
            let mut s = sigma[(i, j)];
            for p in 0..j {
                s -= b[(i, p)] * b[(j, p)];
            }
            b[(i, j)] = s / djj;
        }
    }
    Ok(TriangularFactor { b })
}

/// Structural shocks `û = B⁻¹ε̂`, row by row (T × K).
pub fn structural_shocks(fit: &LeastSquaresFit, factor: &TriangularFactor) -> Result<DMatrix<f64>, EconError> {
    let k = factor.dim();
    if fit.residuals.ncols() != k {
        return Err(EconError::DimensionMismatch {
            expected: format!("{k} residual columns"),
            found: format!("{}", fit.residuals.ncols()),
        });
    }
    let t = fit.residuals.nrows();
    let mut out = DMatrix::zeros(t, k);
    let mut eps = vec![0.0; k];
    let mut u = vec![0.0; k];
    for r in 0..t {
        for (c, e) in eps.iter_mut().enumerate() {
            *e = fit.residuals[(r, c)];
        }
        factor.solve(&eps, &mut u)?;
        for (c, x) in u.iter().enumerate() {
            out[(r, c)] = *x;
        }
    }
    Ok(out)
}
