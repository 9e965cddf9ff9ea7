use nalgebra::DMatrix;

use super::EconError;

/// Relative singular-value threshold below which a design matrix is treated
/// as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Equation-by-equation least squares fit of `y = x · Cᵀ + ε`.
#[derive(Debug, Clone)]
pub struct LeastSquaresFit {
    /// K × M, one row per endogenous equation.
    pub coefficients: DMatrix<f64>,
    /// T × K.
    pub residuals: DMatrix<f64>,
    /// K × K residual covariance.
    pub sigma: DMatrix<f64>,
    pub n_obs: usize,
    pub n_regressors: usize,
    /// Diagonal of (xᵀx)⁻¹, kept for coefficient standard errors.
    xtx_inv_diag: Vec<f64>,
}

impl LeastSquaresFit {
    /// Conventional OLS standard errors, K × M, using the T − M residual
    /// variance regardless of how `sigma` was scaled.
    pub fn standard_errors(&self) -> DMatrix<f64> {
        let (t, m, k) = (self.n_obs, self.n_regressors, self.coefficients.nrows());
        let dof = (t - m) as f64;
        DMatrix::from_fn(k, m, |eq, j| {
            let s2 = self.residuals.column(eq).norm_squared() / dof;
            (s2 * self.xtx_inv_diag[j]).sqrt()
        })
    }
}

/// Multivariate least squares via Householder QR of the design matrix.
///
/// `sigma` is `εᵀε / (T − M)` when `dof_adjust` is set, `εᵀε / T` otherwise.
pub fn ols_multivariate(y: &DMatrix<f64>, x: &DMatrix<f64>, dof_adjust: bool) -> Result<LeastSquaresFit, EconError> {
    let (t, m) = x.shape();
    if y.nrows() != t {
        return Err(EconError::DimensionMismatch {
            expected: format!("{t} rows in y"),
            found: format!("{} rows", y.nrows()),
        });
    }
    if t <= m {
        return Err(EconError::TooFewObservations { n_obs: t, n_regressors: m });
    }

    let qr = x.clone().qr();
    let r = qr.r();
    check_rank(&r)?;

    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let qty_top = qty.rows(0, m).into_owned();
    let beta = r.solve_upper_triangular(&qty_top).ok_or(EconError::RankDeficient { column: m - 1 })?;

    let residuals = y - x * &beta;
    let denom = if dof_adjust { (t - m) as f64 } else { t as f64 };
    let mut sigma = residuals.transpose() * &residuals / denom;
    // exact symmetry for the factorization downstream
    sigma = (&sigma + sigma.transpose()) * 0.5;

    // (xᵀx)⁻¹ = R⁻¹ R⁻ᵀ, so its diagonal is the squared row norms of R⁻¹
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(m, m)).ok_or(EconError::RankDeficient { column: m - 1 })?;
    let xtx_inv_diag = (0..m).map(|j| r_inv.row(j).norm_squared()).collect();

    Ok(LeastSquaresFit { coefficients: beta.transpose(), residuals, sigma, n_obs: t, n_regressors: m, xtx_inv_diag })
}

/// Singular values of R equal those of x. On failure the offending column is
/// the first whose R diagonal collapses, or the weakest diagonal otherwise.
fn check_rank(r: &DMatrix<f64>) -> Result<(), EconError> {
    let sv = r.singular_values();
    let max = sv.max();
    let min = sv.min();
    if max > 0.0 && min > RANK_TOLERANCE * max {
        return Ok(());
    }
    let diag: Vec<f64> = (0..r.ncols()).map(|j| r[(j, j)].abs()).collect();
    let diag_max = diag.iter().cloned().fold(0.0, f64::max);
    let column = diag
        .iter()
        .position(|&d| d <= RANK_TOLERANCE * diag_max)
        .unwrap_or_else(|| diag.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(j, _)| j).unwrap_or(0));
    Err(EconError::RankDeficient { column })
}
