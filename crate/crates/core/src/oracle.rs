//! Brute-force verifiers for the closed-form solver.
//!
//! None of these use the closed-form signs or weights to compute their own
//! answer; they only compare against them.
//!
//! * [`lp_elfving`] discretizes the design space and finds the furthest point
//!   of the Elfving set `conv(X u -X)` on the ray through `c` by linear
//!   programming.
//! * [`sign_enumeration`] tries every sign pattern on a fixed support.
//! * [`weight_grid`] scans the weight simplex of a fixed support.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::Cholesky;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{DesignMeasure, SupportPoint};
use crate::elfving::signs_and_weights;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerances, Vector};
use crate::model::DesignSpace;
use crate::model::ProblemSpec;

/// Largest model dimension accepted by [`lp_elfving`]; monomial coordinates
/// make the grid LP badly scaled beyond this.
pub const MAX_LP_DIMENSION: usize = 6;
/// Relative agreement required between the LP optimum and the solver.
pub const LP_TOLERANCE: f64 = 1e-3;
/// Relative agreement required between sign enumeration and the solver.
pub const SIGN_ENUM_TOLERANCE: f64 = 1e-8;
/// Slack for "no lattice weighting beats the solver".
pub const WEIGHT_GRID_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Lp,
    SignEnum,
    WeightGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Grid density for curve models, in points per unit of the design
    /// variable (endpoints included, so 1000 on [-1, 1] gives 2001 points).
    pub points_per_unit: usize,
    /// Weight lattice step is `1 / simplex_resolution`.
    pub simplex_resolution: usize,
    /// Largest support size for sign enumeration.
    pub sign_cap: usize,
    /// Largest number of lattice points [`weight_grid`] will visit.
    pub max_lattice: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_unit: 1000,
            simplex_resolution: 200,
            sign_cap: 12,
            max_lattice: 5_000_000,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_unit < 10 || self.simplex_resolution < 10 {
            return Err(Error::InvalidInput("grid resolutions must be at least 10".into()));
        }
        if self.sign_cap == 0 {
            return Err(Error::InvalidInput("sign enumeration cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of an oracle check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub method: OracleMethod,
    pub oracle_psi: f64,
    pub solver_psi: f64,
    /// `(solver_psi - oracle_psi) / oracle_psi`.
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Grid points (LP), sign patterns (enumeration) or lattice points
    /// (weight grid) examined.
    pub resolution: u64,
    /// Enumeration only: whether the claimed signs match the best pattern on
    /// every positive-weight point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signs_match: Option<bool>,
    /// Support found by the oracle: (index or design variable, weight, sign).
    pub oracle_support: Vec<(f64, f64, i8)>,
}

fn relative_gap(solver: f64, oracle: f64) -> f64 {
    (solver - oracle) / oracle
}

/// Candidate points of the discretized design space, tagged with their
/// design variable (curves) or index (finite sets).
fn discretize(spec: &ProblemSpec, grid: &GridSpec) -> Result<Vec<(f64, Vector)>> {
    match &spec.space {
        DesignSpace::Curve(model) => {
            let (lo, hi) = model.domain;
            let n = ((hi - lo) * grid.points_per_unit as f64).round() as usize + 1;
            Ok((0..n)
                .map(|i| {
                    let u = if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
                    (u, model.features_in_domain(u))
                })
                .collect())
        }
        DesignSpace::Points(points) => Ok(points.iter().enumerate().map(|(i, x)| (i as f64, x.clone())).collect()),
    }
}

/// Largest `gamma` with `gamma * c_hat` a signed convex combination of `points`.
/// Returns `gamma` and the nonzero `(index, weight, sign)` triples.
fn elfving_lp(points: &[Vector], c_hat: &Vector) -> Result<(f64, Vec<(usize, f64, i8)>)> {
    let k = c_hat.len();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let gamma = problem.add_var(1.0, (0.0, f64::INFINITY));
    let plus: Vec<_> = points.iter().map(|_| problem.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let minus: Vec<_> = points.iter().map(|_| problem.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for r in 0..k {
        let mut row = Vec::with_capacity(2 * points.len() + 1);
        for (j, x) in points.iter().enumerate() {
            if x[r] != 0.0 {
                row.push((plus[j], x[r]));
                row.push((minus[j], -x[r]));
            }
        }
        if c_hat[r] != 0.0 {
            row.push((gamma, -c_hat[r]));
        }
        problem.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
    }
    let mass: Vec<_> = plus.iter().chain(&minus).map(|&v| (v, 1.0)).collect();
    problem.add_constraint(mass.as_slice(), ComparisonOp::Eq, 1.0);
    let sol = problem
        .solve()
        .map_err(|e| Error::OracleInfeasible(format!("linear program failed: {e}")))?;
    let mut support = Vec::new();
    for j in 0..points.len() {
        let net = sol[plus[j]] - sol[minus[j]];
        if net.abs() > 1e-9 {
            support.push((j, net.abs(), if net < 0.0 { -1 } else { 1 }));
        }
    }
    Ok((sol[gamma], support))
}

/// Criterion of the best design on the grid, by linear programming over
/// signed convex combinations, compared against `solver_psi`.
pub fn lp_elfving(spec: &ProblemSpec, grid: &GridSpec, solver_psi: f64) -> Result<Certificate> {
    grid.validate()?;
    let k = spec.dimension();
    if k > MAX_LP_DIMENSION {
        return Err(Error::OracleInfeasible(format!(
            "grid LP is limited to dimension {MAX_LP_DIMENSION}, problem has {k}"
        )));
    }
    let cands = discretize(spec, grid)?;
    let points: Vec<Vector> = cands.iter().map(|(_, x)| x.clone()).collect();
    let c_norm = spec.c.norm();
    let (gamma, support) = elfving_lp(&points, &(&spec.c / c_norm))?;
    if gamma <= 1e-12 {
        return Err(Error::NotEstimable {
            residual: linalg::span_residual(&points, &spec.c, &spec.tol),
        });
    }
    // |z| = gamma for the unit target, so Psi = |c|^2 / gamma^2
    let oracle_psi = c_norm * c_norm / (gamma * gamma);
    let gap = relative_gap(solver_psi, oracle_psi);
    Ok(Certificate {
        method: OracleMethod::Lp,
        oracle_psi,
        solver_psi,
        gap,
        tolerance: LP_TOLERANCE,
        pass: gap.abs() <= LP_TOLERANCE,
        resolution: points.len() as u64,
        signs_match: None,
        oracle_support: support.into_iter().map(|(j, w, s)| (cands[j].0, w, s)).collect(),
    })
}

/// Best sign pattern on a fixed support: for every `eps` solve
/// `sum_i p_i eps_i x_i = gamma c`, `sum_i p_i = 1` and keep the feasible
/// (`p >= 0`) solution with the largest `gamma`.
fn enumerate_signs(points: &[Vector], c: &Vector, tol: &Tolerances) -> Option<(f64, Vec<i8>, Vec<f64>)> {
    let l = points.len();
    let k = c.len();
    let patterns: Vec<u64> = (0..1u64 << l).collect();
    let solve_pattern = |mask: u64| -> Option<(f64, Vec<i8>, Vec<f64>)> {
        let signs: Vec<i8> = (0..l).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
        let mut a = Matrix::zeros(k + 1, l + 1);
        for (i, x) in points.iter().enumerate() {
            a.view_mut((0, i), (k, 1)).copy_from(&(f64::from(signs[i]) * x));
            a[(k, i)] = 1.0;
        }
        a.view_mut((0, l), (k, 1)).copy_from(&(-c));
        let mut rhs = Vector::zeros(k + 1);
        rhs[k] = 1.0;
        let sol = linalg::pinv(&a, tol).ok()? * &rhs;
        let scale = a.norm().max(1.0);
        if (&a * &sol - &rhs).norm() > 1e-9 * scale {
            return None;
        }
        let gamma = sol[l];
        let p: Vec<f64> = sol.rows(0, l).iter().copied().collect();
        if gamma <= 0.0 || p.iter().any(|&pi| pi < -1e-10) {
            return None;
        }
        Some((gamma, signs, p.into_iter().map(|pi| pi.max(0.0)).collect()))
    };
    let results: Vec<Option<(f64, Vec<i8>, Vec<f64>)>> = patterns.par_iter().map(|&m| solve_pattern(m)).collect();
    // first pattern (in mask order) attaining the maximum
    results.into_iter().flatten().fold(None, |best, cur| match &best {
        Some(b) if cur.0 <= b.0 * (1.0 + 1e-12) => best,
        _ => Some(cur),
    })
}

/// Checks claimed signs and criterion on a fixed support against exhaustive
/// sign enumeration.
pub fn sign_enumeration_for(
    points: &[Vector],
    c: &Vector,
    claimed_signs: &[i8],
    claimed_weights: &[f64],
    claimed_psi: f64,
    grid: &GridSpec,
    tol: &Tolerances,
) -> Result<Certificate> {
    let l = points.len();
    if l == 0 || claimed_signs.len() != l || claimed_weights.len() != l {
        return Err(Error::InvalidInput("signs, weights and points must have equal nonzero length".into()));
    }
    if l > grid.sign_cap {
        return Err(Error::OracleInfeasible(format!(
            "sign enumeration is capped at {} points, support has {l}",
            grid.sign_cap
        )));
    }
    let residual = linalg::span_residual(points, c, tol);
    if residual > tol.span_tol {
        return Err(Error::NotEstimable { residual });
    }
    let (gamma, signs, weights) = enumerate_signs(points, c, tol)
        .ok_or_else(|| Error::OracleInfeasible("no sign pattern represents a point on the ray".into()))?;
    // z = gamma c, so Psi = 1 / gamma^2
    let oracle_psi = 1.0 / (gamma * gamma);
    let signs_match = (0..l).all(|i| claimed_weights[i] <= 1e-9 || weights[i] <= 1e-9 || claimed_signs[i] == signs[i]);
    let gap = relative_gap(claimed_psi, oracle_psi);
    Ok(Certificate {
        method: OracleMethod::SignEnum,
        oracle_psi,
        solver_psi: claimed_psi,
        gap,
        tolerance: SIGN_ENUM_TOLERANCE,
        pass: gap.abs() <= SIGN_ENUM_TOLERANCE && signs_match,
        resolution: 1u64 << l,
        signs_match: Some(signs_match),
        oracle_support: (0..l).map(|i| (i as f64, weights[i], signs[i])).collect(),
    })
}

/// Sign enumeration against the closed-form signs of the same support.
pub fn sign_enumeration(points: &[Vector], c: &Vector, grid: &GridSpec, tol: &Tolerances) -> Result<Certificate> {
    if points.len() > grid.sign_cap {
        return Err(Error::OracleInfeasible(format!(
            "sign enumeration is capped at {} points, support has {}",
            grid.sign_cap,
            points.len()
        )));
    }
    let sol = signs_and_weights(points, c, None, tol)?;
    sign_enumeration_for(points, c, &sol.signs, &sol.weights, sol.psi, grid, tol)
}

fn lattice_size(resolution: usize, parts: usize) -> u64 {
    // C(resolution + parts - 1, parts - 1)
    let n = (resolution + parts - 1) as u64;
    let r = (parts - 1) as u64;
    let r = r.min(n - r);
    (0..r).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Calls `f` on every composition of `total` into `parts` nonnegative parts
/// whose first entry is `first`.
fn for_each_composition(first: usize, total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    let mut buf = vec![0usize; parts];
    buf[0] = first;
    fn rec(buf: &mut [usize], pos: usize, left: usize, f: &mut impl FnMut(&[usize])) {
        if pos == buf.len() - 1 {
            buf[pos] = left;
            f(buf);
            return;
        }
        for v in 0..=left {
            buf[pos] = v;
            rec(buf, pos + 1, left - v, f);
        }
    }
    if parts == 1 {
        f(&buf);
    } else {
        rec(&mut buf, 1, total - first, f);
    }
}

/// Rounds `weights` to multiples of `1/n` preserving the sum (largest
/// remainder).
fn round_to_lattice(weights: &[f64], n: usize) -> Vec<usize> {
    let scaled: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor().max(0.0) as usize).collect();
    let mut left = n.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())));
    for &i in order.iter().cycle().take(left.min(10 * weights.len())) {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Minimum of the criterion over the weight lattice `{p : p_i in (1/N) Z}` on
/// a fixed support, compared against a claimed optimal weighting.
///
/// The certificate passes when no lattice point beats `claimed_psi` (up to
/// [`WEIGHT_GRID_SLACK`]) and the lattice minimum exceeds `claimed_psi` by no
/// more than the criterion's increase at the lattice rounding of the claimed
/// weights, `psi * (sum_i p_i^2 / p_hat_i - 1)`.
pub fn weight_grid_for(
    points: &[Vector],
    c: &Vector,
    claimed_weights: &[f64],
    claimed_psi: f64,
    grid: &GridSpec,
    tol: &Tolerances,
) -> Result<Certificate> {
    grid.validate()?;
    let l = points.len();
    if l == 0 || claimed_weights.len() != l {
        return Err(Error::InvalidInput("weights and points must have equal nonzero length".into()));
    }
    let n = grid.simplex_resolution;
    let count = lattice_size(n, l);
    if count > grid.max_lattice {
        return Err(Error::OracleInfeasible(format!(
            "weight lattice has {count} points (limit {}); lower the resolution",
            grid.max_lattice
        )));
    }
    let residual = linalg::span_residual(points, c, tol);
    if residual > tol.span_tol {
        return Err(Error::NotEstimable { residual });
    }

    // Orthonormal basis of span(points): interior lattice points then only
    // need an r x r Cholesky solve.
    let xt = Matrix::from_columns(points);
    let svd = linalg::svd(&xt, false)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let basis: Vec<usize> = (0..svd.s.len()).filter(|&i| svd.s[i] > tol.rank_tol * smax).collect();
    let q = Matrix::from_columns(&basis.iter().map(|&i| svd.u.column(i).into_owned()).collect::<Vec<_>>());
    let reduced: Vec<Vector> = points.iter().map(|x| q.transpose() * x).collect();
    let c_r = q.transpose() * c;
    let r = basis.len();

    let eval = |counts: &[usize]| -> f64 {
        if counts.iter().all(|&m| m > 0) {
            let mut m = Matrix::zeros(r, r);
            for (x, &ci) in reduced.iter().zip(counts) {
                m.ger(ci as f64 / n as f64, x, x, 1.0);
            }
            if let Some(ch) = Cholesky::new(m) {
                return c_r.dot(&ch.solve(&c_r));
            }
        }
        let support: Vec<SupportPoint> = points
            .iter()
            .zip(counts)
            .filter(|(_, &m)| m > 0)
            .map(|(x, &m)| SupportPoint::new(x.clone(), m as f64 / n as f64))
            .collect();
        DesignMeasure::new(support)
            .and_then(|d| linalg::psi(&d, c, tol))
            .unwrap_or(f64::INFINITY)
    };

    let (grid_min, argmin) = (0..=n)
        .into_par_iter()
        .map(|first| {
            let mut best = (f64::INFINITY, Vec::new());
            for_each_composition(first, n, l, &mut |counts| {
                let v = eval(counts);
                if v < best.0 {
                    best = (v, counts.to_vec());
                }
            });
            best
        })
        .reduce(
            || (f64::INFINITY, Vec::new()),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    if !grid_min.is_finite() {
        return Err(Error::NotEstimable { residual: 1.0 });
    }

    let rounded = round_to_lattice(claimed_weights, n);
    let bound = if rounded.iter().zip(claimed_weights).any(|(&m, &p)| m == 0 && p > 0.0) {
        f64::INFINITY
    } else {
        let s: f64 = rounded
            .iter()
            .zip(claimed_weights)
            .filter(|(&m, _)| m > 0)
            .map(|(&m, &p)| p * p / (m as f64 / n as f64))
            .sum();
        claimed_psi * (s - 1.0).max(0.0)
    };
    let gap = relative_gap(claimed_psi, grid_min);
    let not_beaten = gap <= WEIGHT_GRID_SLACK;
    let close_enough = grid_min - claimed_psi <= bound + WEIGHT_GRID_SLACK * grid_min;
    Ok(Certificate {
        method: OracleMethod::WeightGrid,
        oracle_psi: grid_min,
        solver_psi: claimed_psi,
        gap,
        tolerance: WEIGHT_GRID_SLACK,
        pass: not_beaten && close_enough,
        resolution: count,
        signs_match: None,
        oracle_support: argmin
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(i, &m)| (i as f64, m as f64 / n as f64, 1))
            .collect(),
    })
}

/// Weight lattice check of the closed-form weights on `points`.
pub fn weight_grid(points: &[Vector], c: &Vector, grid: &GridSpec, tol: &Tolerances) -> Result<Certificate> {
    let sol = signs_and_weights(points, c, None, tol)?;
    weight_grid_for(points, c, &sol.weights, sol.psi, grid, tol)
}
