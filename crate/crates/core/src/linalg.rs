use nalgebra::{DMatrix, DVector};

/// Least-squares solution from a Householder QR factorization.
pub(crate) struct LeastSquares {
    pub coef: DVector<f64>,
    pub fitted: DVector<f64>,
    pub rss: f64,
    r: DMatrix<f64>,
}

impl LeastSquares {
    /// `(X'X)^{-1}` computed as `R^{-1} R^{-T}`.
    pub fn xtx_inverse(&self) -> DMatrix<f64> {
        let p = self.r.ncols();
        let r_inv = self
            .r
            .solve_upper_triangular(&DMatrix::identity(p, p))
            .expect("R is nonsingular after the rank check");
        &r_inv * r_inv.transpose()
    }
}

/// Index of the first column that is numerically a combination of the
/// columns before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RankDeficiency {
    pub column: usize,
}

const RANK_TOL: f64 = 1e-9;

pub(crate) fn least_squares(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<LeastSquares, RankDeficiency> {
    let (n, p) = x.shape();
    if p == 0 {
        return Ok(LeastSquares {
            coef: DVector::zeros(0),
            fitted: DVector::zeros(n),
            rss: y.norm_squared(),
            r: DMatrix::zeros(0, 0),
        });
    }
    if n < p {
        return Err(RankDeficiency { column: n });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let scale = x.column(j).norm().max(f64::MIN_POSITIVE);
        if r[(j, j)].abs() <= RANK_TOL * scale {
            return Err(RankDeficiency { column: j });
        }
    }
    let q = qr.q();
    let qty = q.transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .expect("R is nonsingular after the rank check");
    let fitted = x * &coef;
    let rss = (y - &fitted).norm_squared();
    Ok(LeastSquares {
        coef,
        fitted,
        rss,
        r,
    })
}

/// Design matrix with a leading column of ones.
pub(crate) fn with_intercept(rows: &[Vec<f64>], columns: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), columns.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            rows[i][columns[j - 1]]
        }
    })
}
