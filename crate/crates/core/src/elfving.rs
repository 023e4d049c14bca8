//! Closed-form optimal signs and weights for a given support.
//!
//! For points `x_1..x_l` with `c` in their span, let `M = sum_i a_i x_i x_i'`
//! (uniform `a_i = 1/l` by default) and `s_i = x_i' M^- c`. Then
//!
//! * `eps_i = sign(s_i)`,
//! * `p_i = a_i |s_i| / sum_j a_j |s_j|`,
//! * `z = sum_i eps_i p_i x_i = gamma c` with `gamma = 1 / sum_j a_j |s_j|`,
//!
//! and when the points are linearly independent, `{(x_i, p_i)}` minimizes
//! `c' M(xi)^- c` over all designs supported on them, with value
//! `|c|^2 / |z|^2 = gamma^-2`.
//!
//! The scores `s_i` are computed from the `k x l` matrix with columns
//! `sqrt(a_i) x_i` rather than from `M` itself, which squares the condition
//! number. [`signs_and_weights_with_ginverse`] evaluates the same formulas from
//! an explicit generalized inverse of `M`.

use crate::design::{DesignMeasure, SupportPoint};
use crate::error::{Error, Result};
use crate::linalg::{self, ensure_finite_vector, Matrix, Tolerances, Vector};

/// Weights at or below this are dropped from returned designs.
pub const ZERO_WEIGHT: f64 = 1e-12;

/// Smallest ratio of QR diagonal magnitudes for which the fast full-rank
/// path is taken.
const WELL_CONDITIONED: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSignSolution {
    /// `+1` or `-1`; `+1` where the score is exactly zero.
    pub signs: Vec<i8>,
    pub weights: Vec<f64>,
    /// `sum_i eps_i p_i x_i`, which lies on the ray through `c`.
    pub elfving_point: Vector,
    /// `elfving_point = gamma * c`.
    pub gamma: f64,
    /// `|c|^2 / |elfving_point|^2`.
    pub psi: f64,
    /// `x_i' M^- c` for the matrix used to derive the signs and weights.
    pub scores: Vec<f64>,
}

impl WeightSignSolution {
    /// `|elfving_point|^2`.
    pub fn phi(&self) -> f64 {
        self.elfving_point.norm_squared()
    }
}

fn check_inputs(points: &[Vector], c: &Vector, a: Option<&[f64]>) -> Result<()> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput("support is empty".into()))?;
    let k = first.len();
    if c.len() != k {
        return Err(Error::InvalidInput(format!(
            "c has length {} but support points have dimension {k}",
            c.len()
        )));
    }
    for x in points {
        if x.len() != k {
            return Err(Error::InvalidInput("support points have mixed dimensions".into()));
        }
        ensure_finite_vector(x, "support point")?;
    }
    ensure_finite_vector(c, "c")?;
    if c.norm() == 0.0 {
        return Err(Error::InvalidInput("c must be nonzero".into()));
    }
    if let Some(a) = a {
        if a.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for {} points",
                a.len(),
                points.len()
            )));
        }
        if a.iter().any(|&ai| !(ai.is_finite() && ai > 0.0)) {
            return Err(Error::InvalidInput("coefficients must be strictly positive".into()));
        }
    }
    Ok(())
}

fn coefficients(n: usize, a: Option<&[f64]>) -> Vec<f64> {
    match a {
        Some(a) => a.to_vec(),
        None => vec![1.0 / n as f64; n],
    }
}

/// Assembles signs, weights, Elfving point and criterion from scores
/// `s_i = x_i' M^- c`.
fn from_scores(points: &[Vector], c: &Vector, a: &[f64], scores: Vec<f64>) -> Result<WeightSignSolution> {
    let mass: Vec<f64> = a.iter().zip(&scores).map(|(ai, s)| ai * s.abs()).collect();
    let total: f64 = mass.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NotEstimable { residual: 1.0 });
    }
    let weights: Vec<f64> = mass.iter().map(|m| m / total).collect();
    let signs: Vec<i8> = scores.iter().map(|&s| if s < 0.0 { -1 } else { 1 }).collect();
    let mut z = Vector::zeros(c.len());
    for ((x, &e), &p) in points.iter().zip(&signs).zip(&weights) {
        z.axpy(f64::from(e) * p, x, 1.0);
    }
    let psi = c.norm_squared() / z.norm_squared();
    Ok(WeightSignSolution {
        signs,
        weights,
        elfving_point: z,
        gamma: 1.0 / total,
        psi,
        scores,
    })
}

/// Scores via the least-squares solution of `Y' w = c`, `Y' = [sqrt(a_i) x_i]`.
///
/// Returns the scores, the relative residual of that fit and the rank of `Y`.
/// Least-squares solution of `yt w = c` by Householder QR when `yt` has
/// comfortably full column rank; `None` sends the caller to the SVD.
fn full_rank_solve(yt: &Matrix, c: &Vector) -> Option<Vector> {
    let (k, l) = yt.shape();
    if l > k {
        return None;
    }
    let qr = yt.clone().qr();
    let r = qr.r();
    let diag = r.diagonal().abs();
    if !(diag.min() > WELL_CONDITIONED * diag.max()) {
        return None;
    }
    r.solve_upper_triangular(&(qr.q().transpose() * c))
}

fn stable_scores(points: &[Vector], c: &Vector, a: &[f64], tol: &Tolerances) -> Result<(Vec<f64>, f64, usize)> {
    let k = c.len();
    let mut yt = Matrix::zeros(k, points.len());
    for (j, (x, ai)) in points.iter().zip(a).enumerate() {
        yt.set_column(j, &(ai.sqrt() * x));
    }
    let (w, rank) = match full_rank_solve(&yt, c) {
        Some(w) => (w, points.len()),
        None => {
            let (yt_pinv, rank) = linalg::pinv_with_rank(&yt, tol)?;
            (yt_pinv * c, rank)
        }
    };
    let residual = (&yt * &w - c).norm() / c.norm();
    let scores = w.iter().zip(a).map(|(wi, ai)| wi / ai.sqrt()).collect();
    Ok((scores, residual, rank))
}

/// Optimal signs and weights for the support `points`.
///
/// `a` replaces the uniform coefficients `1/l` in `M`; the result does not
/// depend on it for linearly independent points. Linearly dependent supports
/// are first reduced with [`prune_dependent_support`]; dropped points are
/// reported with zero weight.
pub fn signs_and_weights(
    points: &[Vector],
    c: &Vector,
    a: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<WeightSignSolution> {
    check_inputs(points, c, a)?;
    let a = coefficients(points.len(), a);
    let (scores, residual, rank) = stable_scores(points, c, &a, tol)?;
    if residual > tol.span_tol {
        return Err(Error::NotEstimable { residual });
    }
    if rank == points.len() {
        return from_scores(points, c, &a, scores);
    }

    // Linearly dependent: the formula still yields a design with c estimable,
    // just not necessarily the best one on this support. Prune to an
    // independent subset and solve there.
    let start = from_scores(points, c, &a, scores)?;
    let tagged: Vec<SupportPoint> = points
        .iter()
        .zip(&start.weights)
        .enumerate()
        .map(|(i, (x, &w))| SupportPoint::with_u(x.clone(), i as f64, w))
        .collect();
    let pruned = prune_dependent_support(&DesignMeasure::normalized(tagged)?, c, tol)?;
    let keep: Vec<usize> = pruned
        .support()
        .iter()
        .map(|sp| sp.u.expect("index tag") as usize)
        .collect();
    let sub: Vec<Vector> = keep.iter().map(|&i| points[i].clone()).collect();
    let sub_sol = signs_and_weights(&sub, c, None, tol)?;

    // Scores of every original point against the reduced support's M^+.
    let m_sub = linalg::weighted_gram(&sub, &vec![1.0 / sub.len() as f64; sub.len()])?;
    let d = linalg::pinv(&m_sub, tol)? * c;
    let mut signs = vec![1i8; points.len()];
    let mut weights = vec![0.0; points.len()];
    let mut scores: Vec<f64> = points.iter().map(|x| x.dot(&d)).collect();
    for (j, &i) in keep.iter().enumerate() {
        signs[i] = sub_sol.signs[j];
        weights[i] = sub_sol.weights[j];
        scores[i] = sub_sol.scores[j];
    }
    for i in 0..points.len() {
        if !keep.contains(&i) && scores[i] < 0.0 {
            signs[i] = -1;
        }
    }
    Ok(WeightSignSolution {
        signs,
        weights,
        elfving_point: sub_sol.elfving_point,
        gamma: sub_sol.gamma,
        psi: sub_sol.psi,
        scores,
    })
}

/// The same formulas, with `M^-` supplied by the caller.
///
/// `ginv` must be a generalized inverse of `sum_i a_i x_i x_i'` (uniform
/// `a_i = 1/l` when `a` is `None`). No reduction of dependent supports is done.
pub fn signs_and_weights_with_ginverse(
    points: &[Vector],
    c: &Vector,
    a: Option<&[f64]>,
    ginv: &Matrix,
) -> Result<WeightSignSolution> {
    check_inputs(points, c, a)?;
    let k = c.len();
    if ginv.shape() != (k, k) {
        return Err(Error::InvalidInput(format!(
            "generalized inverse must be {k}x{k}, got {:?}",
            ginv.shape()
        )));
    }
    let a = coefficients(points.len(), a);
    let d = ginv * c;
    let scores = points.iter().map(|x| x.dot(&d)).collect();
    from_scores(points, c, &a, scores)
}

/// The Elfving point `z* = sum_i eps_i p_i x_i`.
pub fn elfving_point(points: &[Vector], c: &Vector, tol: &Tolerances) -> Result<Vector> {
    Ok(signs_and_weights(points, c, None, tol)?.elfving_point)
}

/// `|z*|^2`, the objective maximized over k-tuples of design points.
pub fn phi(points: &[Vector], c: &Vector, tol: &Tolerances) -> Result<f64> {
    Ok(signs_and_weights(points, c, None, tol)?.phi())
}

/// The design `{(x_i, p_i)}` from a solution, dropping zero weights. `us`
/// attaches design-variable tags to the points.
pub fn design_from_solution(
    points: &[Vector],
    us: Option<&[f64]>,
    solution: &WeightSignSolution,
) -> Result<DesignMeasure> {
    let support = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| solution.weights[i] > ZERO_WEIGHT)
        .map(|(i, x)| SupportPoint {
            x: x.clone(),
            u: us.map(|us| us[i]),
            weight: solution.weights[i],
        })
        .collect();
    DesignMeasure::normalized(support)
}

/// Optimal design on a prescribed (possibly suboptimal) support.
pub fn design_from_support(points: &[Vector], c: &Vector, tol: &Tolerances) -> Result<DesignMeasure> {
    let sol = signs_and_weights(points, c, None, tol)?;
    design_from_solution(points, None, &sol)
}

/// Null vector of the columns of `e` (assumed rank deficient).
fn null_vector(e: &Matrix) -> Result<Vector> {
    // right singular vectors come sorted by decreasing singular value, and
    // the full V covers the l > k case
    let d = linalg::svd(e, true)?;
    Ok(d.v.column(e.ncols() - 1).into_owned())
}

/// Reduces a design with linearly dependent support to one on an independent
/// subset without increasing the criterion.
///
/// The design is first reweighted to the signed representation
/// `sum eps_i q_i x_i = gamma c` (`q_i` proportional to `p_i |x_i' M(xi)^+ c|`),
/// which never increases the criterion. Then, while the signed points
/// `eps_i x_i` are dependent, a null vector `alpha` with `sum alpha >= 0` is
/// used to shift mass `q <- q - delta * alpha` until some `q_i` hits zero.
/// The leftover mass `delta * sum alpha` belongs to the origin; dropping it
/// and renormalizing only pushes the Elfving point further along the ray.
pub fn prune_dependent_support(design: &DesignMeasure, c: &Vector, tol: &Tolerances) -> Result<DesignMeasure> {
    if c.len() != design.dimension() {
        return Err(Error::InvalidInput("c and design dimension differ".into()));
    }
    let m = linalg::info_matrix(design);
    let residual = linalg::colspace_residual(c, &m, tol);
    if residual > tol.span_tol {
        return Err(Error::NotEstimable { residual });
    }
    let points = design.points();
    if linalg::rank(&Matrix::from_columns(&points), tol) == points.len() {
        return Ok(design.clone());
    }

    let d = linalg::pinv(&m, tol)? * c;
    let mut support: Vec<(SupportPoint, f64)> = Vec::new();
    for sp in design.support() {
        let s = sp.x.dot(&d);
        let mass = sp.weight * s.abs();
        if sp.weight > 0.0 && mass > 0.0 {
            let sign = if s < 0.0 { -1.0 } else { 1.0 };
            support.push((SupportPoint { weight: mass, ..sp.clone() }, sign));
        }
    }
    normalize(&mut support);

    loop {
        let cols: Vec<Vector> = support.iter().map(|(sp, e)| *e * &sp.x).collect();
        let e = Matrix::from_columns(&cols);
        if linalg::rank(&e, tol) == cols.len() {
            break;
        }
        let mut alpha = null_vector(&e)?;
        if alpha.sum() < 0.0 {
            alpha = -alpha;
        }
        let amax = alpha.amax();
        let (pivot, delta) = support
            .iter()
            .zip(alpha.iter())
            .enumerate()
            .filter(|(_, (_, &al))| al > 1e-12 * amax)
            .map(|(i, ((sp, _), &al))| (i, sp.weight / al))
            .fold((usize::MAX, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        debug_assert!(pivot != usize::MAX);
        for ((sp, _), &al) in support.iter_mut().zip(alpha.iter()) {
            sp.weight = (sp.weight - delta * al).max(0.0);
        }
        support[pivot].0.weight = 0.0;
        support.retain(|(sp, _)| sp.weight > ZERO_WEIGHT);
        normalize(&mut support);
    }
    DesignMeasure::normalized(support.into_iter().map(|(sp, _)| sp).collect())
}

fn normalize(support: &mut [(SupportPoint, f64)]) {
    let total: f64 = support.iter().map(|(sp, _)| sp.weight).sum();
    for (sp, _) in support.iter_mut() {
        sp.weight /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CurveModel;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn poly_points(k: usize, us: &[f64]) -> Vec<Vector> {
        let m = CurveModel::polynomial(k).unwrap();
        us.iter().map(|&u| m.features(u).unwrap()).collect()
    }

    fn basis(k: usize, j: usize) -> Vector {
        let mut c = Vector::zeros(k);
        c[j - 1] = 1.0;
        c
    }

    #[test]
    fn line_model() {
        let pts = vec![v(&[1.0, -1.0]), v(&[1.0, 1.0])];
        let sol = signs_and_weights(&pts, &v(&[0.0, 1.0]), None, &tol()).unwrap();
        assert_eq!(sol.signs, vec![-1, 1]);
        assert!((sol.weights[0] - 0.5).abs() < 1e-15 && (sol.weights[1] - 0.5).abs() < 1e-15);
        assert!((&sol.elfving_point - v(&[0.0, 1.0])).norm() < 1e-15);
        assert!((sol.psi - 1.0).abs() < 1e-14);
        assert!((sol.gamma - 1.0).abs() < 1e-14);
    }

    #[test]
    fn table_row_k6_e3() {
        let us = [-1.0, -FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 1.0];
        let sol = signs_and_weights(&poly_points(6, &us), &basis(6, 3), None, &tol()).unwrap();
        let expect = [1.0 / 16.0, 0.25, 3.0 / 8.0, 0.25, 1.0 / 16.0];
        for (w, e) in sol.weights.iter().zip(expect) {
            assert!((w - e).abs() < 1e-9, "{w} vs {e}");
        }
        assert!((sol.psi - 64.0).abs() < 1e-8);
    }

    #[test]
    fn table_row_k6_e5_three_decimals() {
        // support as printed, rounded to three decimals
        let us = [-1.0, -0.707, 0.0, 0.707, 1.0];
        let d = design_from_support(&poly_points(6, &us), &basis(6, 5), &tol()).unwrap();
        let expect = [1.0 / 8.0, 0.25, 0.25, 0.25, 1.0 / 8.0];
        for (w, e) in d.weights().iter().zip(expect) {
            assert!((w - e).abs() < 2e-3, "{w} vs {e}");
        }
        let psi = linalg::psi(&d, &basis(6, 5), &tol()).unwrap();
        assert!((psi - 64.0).abs() / 64.0 < 1e-2);
    }

    #[test]
    fn zero_score_point_gets_zero_weight() {
        let c = v(&[1.0, 0.0]);
        let with = signs_and_weights(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])], &c, None, &tol()).unwrap();
        assert_eq!(with.scores[1], 0.0);
        assert_eq!(with.weights[1], 0.0);
        assert_eq!(with.signs[1], 1);
        let without = signs_and_weights(&[v(&[1.0, 0.0])], &c, None, &tol()).unwrap();
        assert!((&with.elfving_point - &without.elfving_point).norm() < 1e-15);
        assert!((with.psi - without.psi).abs() < 1e-15);
    }

    #[test]
    fn permutation_and_scaling_invariance() {
        let pts = poly_points(4, &[-0.9, -0.2, 0.4, 1.0]);
        let c = v(&[0.3, -1.0, 0.5, 2.0]);
        let base = signs_and_weights(&pts, &c, None, &tol()).unwrap();
        let perm = vec![pts[2].clone(), pts[0].clone(), pts[3].clone(), pts[1].clone()];
        let p = phi(&perm, &c, &tol()).unwrap();
        assert!((p - base.phi()).abs() < 1e-12 * p);

        let scaled = signs_and_weights(&pts, &(3.5 * &c), None, &tol()).unwrap();
        assert_eq!(scaled.signs, base.signs);
        for (a, b) in scaled.weights.iter().zip(&base.weights) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((&scaled.elfving_point - &base.elfving_point).norm() < 1e-12);
        assert!((scaled.psi - 3.5 * 3.5 * base.psi).abs() < 1e-9 * scaled.psi);
    }

    #[test]
    fn single_collinear_point() {
        let x = v(&[1.0, 2.0, -1.0]);
        let d = design_from_support(&[x.clone()], &(-0.5 * &x), &tol()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.weights(), vec![1.0]);
    }

    #[test]
    fn errors() {
        let c = v(&[0.0, 1.0]);
        assert!(matches!(
            signs_and_weights(&[v(&[1.0, 0.0])], &c, None, &tol()),
            Err(Error::NotEstimable { .. })
        ));
        assert!(matches!(
            signs_and_weights(&[], &c, None, &tol()),
            Err(Error::InvalidInput(_))
        ));
        assert!(signs_and_weights(&[v(&[1.0, 0.0])], &v(&[1.0, 0.0]), Some(&[-1.0]), &tol()).is_err());
    }

    #[test]
    fn explicit_ginverse_matches_stable_route() {
        let pts = poly_points(5, &[-1.0, -0.5, 0.1, 0.6, 0.95]);
        let c = v(&[0.0, 1.0, 0.0, -2.0, 1.0]);
        let m = linalg::weighted_gram(&pts, &[0.2; 5]).unwrap();
        let g = linalg::pinv(&m, &tol()).unwrap();
        let a = signs_and_weights(&pts, &c, None, &tol()).unwrap();
        let b = signs_and_weights_with_ginverse(&pts, &c, None, &g).unwrap();
        assert_eq!(a.signs, b.signs);
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!((a.gamma - b.gamma).abs() < 1e-8 * a.gamma);
    }

    /// Brute-force minimum of the criterion over all designs on at most two
    /// of the points, on a weight grid of step 1/2000.
    fn best_two_point_psi(points: &[Vector], c: &Vector) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                for n in 0..=2000 {
                    let p = n as f64 / 2000.0;
                    let d = DesignMeasure::new(vec![
                        SupportPoint::new(points[i].clone(), p),
                        SupportPoint::new(points[j].clone(), 1.0 - p),
                    ])
                    .unwrap();
                    if let Ok(val) = linalg::psi(&d, c, &tol()) {
                        best = best.min(val);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn prune_three_points_in_plane() {
        let pts = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 1.0])];
        let c = v(&[1.0, 1.0]);
        let d = DesignMeasure::new(pts.iter().map(|x| SupportPoint::new(x.clone(), 1.0 / 3.0)).collect()).unwrap();
        let before = linalg::psi(&d, &c, &tol()).unwrap();
        let pruned = prune_dependent_support(&d, &c, &tol()).unwrap();
        assert!(pruned.len() < 3);
        let after = linalg::psi(&pruned, &c, &tol()).unwrap();
        assert!(after <= before + 1e-10);
        // best design on at most two of the points
        let oracle = best_two_point_psi(&pts, &c);
        assert!(after >= oracle - 1e-6);
    }

    #[test]
    fn prune_independent_is_identity() {
        let d = DesignMeasure::new(vec![
            SupportPoint::new(v(&[1.0, 0.0]), 0.3),
            SupportPoint::new(v(&[0.0, 1.0]), 0.7),
        ])
        .unwrap();
        assert_eq!(prune_dependent_support(&d, &v(&[1.0, 1.0]), &tol()).unwrap(), d);
    }

    #[test]
    fn prune_merges_duplicates() {
        let x = v(&[1.0, 0.5]);
        let y = v(&[-0.3, 1.0]);
        let c = v(&[0.2, 1.0]);
        let split = DesignMeasure::new(vec![
            SupportPoint::new(x.clone(), 0.2),
            SupportPoint::new(y.clone(), 0.5),
            SupportPoint::new(x.clone(), 0.3),
        ])
        .unwrap();
        let before = linalg::psi(&split, &c, &tol()).unwrap();
        let pruned = prune_dependent_support(&split, &c, &tol()).unwrap();
        assert_eq!(pruned.len(), 2);
        let after = linalg::psi(&pruned, &c, &tol()).unwrap();
        assert!(after <= before + 1e-10);
    }

    #[test]
    fn prune_rejects_non_estimable() {
        let d = DesignMeasure::new(vec![
            SupportPoint::new(v(&[1.0, 0.0]), 0.5),
            SupportPoint::new(v(&[2.0, 0.0]), 0.5),
        ])
        .unwrap();
        assert!(matches!(
            prune_dependent_support(&d, &v(&[0.0, 1.0]), &tol()),
            Err(Error::NotEstimable { .. })
        ));
    }

    #[test]
    fn dependent_support_routed_through_pruning() {
        let pts = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 1.0]), v(&[1.0, -1.0])];
        let c = v(&[1.0, 0.2]);
        let sol = signs_and_weights(&pts, &c, None, &tol()).unwrap();
        assert_eq!(sol.weights.len(), 4);
        assert!(sol.weights.iter().filter(|&&w| w > 0.0).count() <= 2);
        assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let oracle = best_two_point_psi(&pts, &c);
        assert!(sol.psi <= oracle + 1e-6);
    }
}
