//! Small dense linear algebra: Moore-Penrose inverses, information matrices,
//! the c-optimality criterion and column-space membership tests.
//!
//! Every routine here works on `nalgebra` dynamic matrices. Problem sizes are
//! tiny (k rarely exceeds 20) so everything is dense and SVD-based. The SVD
//! itself comes from `faer`: nalgebra's Golub-Kahan iteration can return a
//! wrong decomposition for some exactly rank-one inputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::DesignMeasure;
use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical cutoffs shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Singular values below `rank_tol * sigma_max` are treated as zero.
    pub rank_tol: f64,
    /// Relative residual allowed in span / column-space membership tests.
    pub span_tol: f64,
    /// Support points closer than this (in the design variable) are merged.
    pub merge_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            span_tol: 1e-8,
            merge_tol: 1e-4,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.rank_tol) && ok(self.span_tol) && ok(self.merge_tol)) {
            return Err(Error::InvalidInput(
                "tolerances must be finite and strictly positive".into(),
            ));
        }
        if self.rank_tol >= 1.0 {
            return Err(Error::InvalidInput("rank_tol must be < 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn ensure_finite_matrix(a: &Matrix, what: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

pub(crate) fn ensure_finite_vector(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

/// Singular value decomposition `A = U diag(s) V'`, singular values in
/// decreasing order. Thin unless `full` is set, in which case `v` is square.
pub(crate) struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

fn to_faer(a: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn svd(a: &Matrix, full: bool) -> Result<Svd> {
    let m = to_faer(a);
    let not_converged = |_| Error::InvalidInput("singular value decomposition did not converge".into());
    let (u, s, v) = if full {
        let d = m.svd().map_err(not_converged)?;
        (from_faer(d.U()), d.S().column_vector().iter().copied().collect(), from_faer(d.V()))
    } else {
        let d = m.thin_svd().map_err(not_converged)?;
        (from_faer(d.U()), d.S().column_vector().iter().copied().collect(), from_faer(d.V()))
    };
    Ok(Svd { u, s, v })
}

pub(crate) fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    to_faer(a)
        .singular_values()
        .map_err(|_| Error::InvalidInput("singular value decomposition did not converge".into()))
}

/// Moore-Penrose pseudoinverse with a relative singular-value cutoff.
pub fn pinv(a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    Ok(pinv_with_rank(a, tol)?.0)
}

/// [`pinv`] together with the numerical rank it used.
pub fn pinv_with_rank(a: &Matrix, tol: &Tolerances) -> Result<(Matrix, usize)> {
    ensure_finite_matrix(a, "matrix")?;
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok((Matrix::zeros(n, m), 0));
    }
    let d = svd(a, false)?;
    let sigma_max = d.s.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(n, m);
    if sigma_max == 0.0 {
        return Ok((out, 0));
    }
    let cutoff = tol.rank_tol * sigma_max;
    let mut rank = 0;
    for (i, &s) in d.s.iter().enumerate() {
        if s > cutoff {
            rank += 1;
            out.ger(1.0 / s, &d.v.column(i), &d.u.column(i), 1.0);
        }
    }
    Ok((out, rank))
}

/// Numerical rank under the relative cutoff `tol.rank_tol`.
pub fn rank(a: &Matrix, tol: &Tolerances) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let Ok(sv) = singular_values(a) else {
        return 0;
    };
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol.rank_tol * sigma_max).count()
}

/// A (generally non-Moore-Penrose) generalized inverse
/// `A+ + (I - A+ A) V + W (I - A A+)`.
///
/// Every such `G` satisfies `A G A = A`; it exists so callers can check that
/// quantities built from "a generalized inverse" really do not depend on which
/// one is used.
pub fn alt_ginverse(a: &Matrix, v: &Matrix, w: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if a.ncols() != n || v.shape() != (n, n) || w.shape() != (n, n) {
        return Err(Error::InvalidInput(format!(
            "alt_ginverse expects square matrices of equal size, got A {:?}, V {:?}, W {:?}",
            a.shape(),
            v.shape(),
            w.shape()
        )));
    }
    ensure_finite_matrix(v, "V")?;
    ensure_finite_matrix(w, "W")?;
    let ap = pinv(a, &Tolerances::default())?;
    let id = Matrix::identity(n, n);
    Ok(&ap + (&id - &ap * a) * v + w * (&id - a * &ap))
}

/// `sum_i w_i x_i x_i'` without any constraint on the weights.
pub fn weighted_gram(points: &[Vector], weights: &[f64]) -> Result<Matrix> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput("empty point list".into()))?;
    let k = first.len();
    if weights.len() != points.len() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let mut m = Matrix::zeros(k, k);
    for (x, &w) in points.iter().zip(weights) {
        if x.len() != k {
            return Err(Error::InvalidInput("points have mixed dimensions".into()));
        }
        m.ger(w, x, x, 1.0);
    }
    Ok(m)
}

/// Information matrix `M(xi) = sum_i p_i x_i x_i'`.
pub fn info_matrix(design: &DesignMeasure) -> Matrix {
    let k = design.dimension();
    let mut m = Matrix::zeros(k, k);
    for sp in design.support() {
        m.ger(sp.weight, &sp.x, &sp.x, 1.0);
    }
    m
}

/// Information matrix of raw points and probability weights, checking that
/// the weights form a probability vector.
pub fn info_matrix_checked(points: &[Vector], weights: &[f64]) -> Result<Matrix> {
    crate::design::check_probability_weights(weights)?;
    weighted_gram(points, weights)
}

/// Relative residual `||(I - M M+) c|| / ||c||` of projecting `c` onto the
/// column space of `m`.
pub fn colspace_residual(c: &Vector, m: &Matrix, tol: &Tolerances) -> f64 {
    let c_norm = c.norm();
    if c_norm == 0.0 {
        return 0.0;
    }
    let Ok(mp) = pinv(m, tol) else {
        return f64::INFINITY;
    };
    let proj = m * (mp * c);
    (c - proj).norm() / c_norm
}

/// `true` iff `c` lies in the column space of `m` up to `tol.span_tol`.
pub fn in_colspace(c: &Vector, m: &Matrix, tol: &Tolerances) -> bool {
    c.len() == m.nrows() && colspace_residual(c, m, tol) <= tol.span_tol
}

/// The c-optimality criterion `c' M(xi)^- c`.
///
/// Evaluated as `|(Y')^+ c|^2` with `Y` the matrix of rows `sqrt(p_i) x_i`, so
/// `M = Y'Y` is never formed and the conditioning is that of `Y`.
pub fn psi(design: &DesignMeasure, c: &Vector, tol: &Tolerances) -> Result<f64> {
    if c.len() != design.dimension() {
        return Err(Error::InvalidInput(format!(
            "c has length {} but design points have dimension {}",
            c.len(),
            design.dimension()
        )));
    }
    ensure_finite_vector(c, "c")?;
    let cols: Vec<Vector> = design
        .support()
        .iter()
        .map(|sp| sp.weight.sqrt() * &sp.x)
        .collect();
    let yt = Matrix::from_columns(&cols);
    let w = pinv(&yt, tol)? * c;
    let residual = (&yt * &w - c).norm() / c.norm().max(f64::MIN_POSITIVE);
    if residual > tol.span_tol {
        return Err(Error::NotEstimable { residual });
    }
    Ok(w.norm_squared())
}

/// `c' M^+ c` after an estimability check.
pub fn psi_with_matrix(m: &Matrix, c: &Vector, tol: &Tolerances) -> Result<f64> {
    let residual = colspace_residual(c, m, tol);
    if residual > tol.span_tol {
        return Err(Error::NotEstimable { residual });
    }
    let mp = pinv(m, tol)?;
    Ok(c.dot(&(mp * c)))
}

/// Relative residual of the least-squares fit of `c` by the columns `x_i`.
pub fn span_residual(points: &[Vector], c: &Vector, tol: &Tolerances) -> f64 {
    let c_norm = c.norm();
    if c_norm == 0.0 {
        return 0.0;
    }
    if points.is_empty() {
        return 1.0;
    }
    let xt = Matrix::from_columns(points);
    let Ok(xp) = pinv(&xt, tol) else {
        return f64::INFINITY;
    };
    (c - &xt * (xp * c)).norm() / c_norm
}
