//! Multi-start search for the k-tuple of design points maximizing `|z*|^2`.
//!
//! Curve models are searched over `u in [lo, hi]^k` through the smooth
//! reparametrization `u = mid + half * sin(t)`, which keeps Nelder-Mead
//! unconstrained while letting it sit exactly on the domain boundary.
//! Finite candidate sets are searched by enumeration or pairwise exchange.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::design::{DesignMeasure, SupportPoint};
use crate::elfving::{design_from_solution, signs_and_weights, WeightSignSolution};
use crate::error::{Error, Result};
use crate::linalg::{self, Tolerances, Vector};
use crate::model::{CurveModel, DesignSpace, ProblemSpec};
use crate::nelder_mead::{self, NelderMeadOptions};
use crate::oracle::Certificate;

/// Weights below this are dropped by [`canonicalize`].
pub const CANONICAL_MIN_WEIGHT: f64 = 1e-6;
/// Mirror-image points whose weights differ by less than this are averaged.
pub const SYMMETRY_TOL: f64 = 2e-3;
/// Largest number of k-subsets of a finite candidate set that is enumerated
/// exhaustively.
pub const MAX_ENUMERATED_SUBSETS: u64 = 50_000;
/// Curve points this close to `u = 0`, relative to the domain half-width,
/// are moved onto it when that does not lower the objective.
pub const ZERO_SNAP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub starts: usize,
    /// Objective evaluations allowed per Nelder-Mead run.
    pub max_iters: usize,
    pub seed: u64,
    /// Nelder-Mead stopping tolerances for the final polish of the winner.
    pub f_tol: f64,
    pub x_tol: f64,
    /// Looser tolerances used for every start during the exploration phase.
    pub explore_f_tol: f64,
    pub explore_x_tol: f64,
    /// Penalty multiplier for candidates where `c` is not estimable; `None`
    /// uses `1e6 |c|^2`.
    pub penalty_scale: Option<f64>,
    pub parallel: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            starts: 40,
            max_iters: 20_000,
            seed: 1,
            f_tol: 1e-15,
            x_tol: 1e-11,
            explore_f_tol: 1e-10,
            explore_x_tol: 1e-6,
            penalty_scale: None,
            parallel: true,
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidInput("starts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if ![self.f_tol, self.x_tol, self.explore_f_tol, self.explore_x_tol].into_iter().all(pos) {
            return Err(Error::InvalidInput("solver tolerances must be positive".into()));
        }
        if let Some(p) = self.penalty_scale {
            if !pos(p) {
                return Err(Error::InvalidInput("penalty_scale must be positive".into()));
            }
        }
        Ok(())
    }

    fn nm_options(&self, initial_step: f64, polish: bool) -> NelderMeadOptions {
        let (f_tol, x_tol) = if polish {
            (self.f_tol, self.x_tol)
        } else {
            (self.explore_f_tol, self.explore_x_tol)
        };
        NelderMeadOptions {
            max_evals: self.max_iters,
            f_tol,
            x_tol,
            initial_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Canonicalized optimal design.
    pub design: DesignMeasure,
    /// Signs and weights from the closed form on the design's support.
    pub solution: WeightSignSolution,
    pub psi: f64,
    pub objective_evals: usize,
    pub best_start: usize,
    pub certificate: Option<Certificate>,
}

pub fn default_penalty_scale(c: &Vector) -> f64 {
    1e6 * c.norm_squared()
}

/// Sorts `us` and collapses chains of values closer than `merge_tol` to their
/// mean.
fn merge_params(us: &[f64], merge_tol: f64) -> Vec<f64> {
    let mut sorted = us.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(sorted.len());
    let mut group: Vec<f64> = vec![sorted[0]];
    for pair in sorted.windows(2) {
        if pair[1] - pair[0] <= merge_tol {
            group.push(pair[1]);
        } else {
            out.push(group.iter().sum::<f64>() / group.len() as f64);
            group.clear();
            group.push(pair[1]);
        }
    }
    out.push(group.iter().sum::<f64>() / group.len() as f64);
    out
}

fn curve_solution(model: &CurveModel, us: &[f64], c: &Vector, tol: &Tolerances) -> Result<(Vec<f64>, Vec<Vector>, WeightSignSolution)> {
    let clamped: Vec<f64> = us.iter().map(|&u| u.clamp(model.domain.0, model.domain.1)).collect();
    let distinct = merge_params(&clamped, tol.merge_tol);
    let points: Vec<Vector> = distinct.iter().map(|&u| model.features_in_domain(u)).collect();
    let sol = signs_and_weights(&points, c, None, tol)?;
    Ok((distinct, points, sol))
}

/// `|z*|^2` at the design points `x(u_1), .., x(u_k)`, or a negative penalty
/// `-(1 + residual) * penalty_scale` when `c` is not estimable there.
///
/// Parameters are clamped to the domain and near-coincident ones merged
/// before evaluation.
pub fn objective(us: &[f64], spec: &ProblemSpec, penalty_scale: f64) -> f64 {
    let Some(model) = spec.curve_model() else {
        return -2.0 * penalty_scale;
    };
    if us.is_empty() || us.iter().any(|u| !u.is_finite()) {
        return -2.0 * penalty_scale;
    }
    match curve_solution(model, us, &spec.c, &spec.tol) {
        Ok((_, _, sol)) => sol.phi(),
        Err(Error::NotEstimable { residual }) => -(1.0 + residual.min(1.0)) * penalty_scale,
        Err(_) => -2.0 * penalty_scale,
    }
}

struct Reparam {
    mid: f64,
    half: f64,
}

impl Reparam {
    fn new(model: &CurveModel) -> Self {
        let (lo, hi) = model.domain;
        Self {
            mid: 0.5 * (lo + hi),
            half: 0.5 * (hi - lo),
        }
    }

    fn to_u(&self, t: &[f64]) -> Vec<f64> {
        t.iter().map(|t| self.mid + self.half * t.sin()).collect()
    }

    fn to_t(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .map(|u| ((u - self.mid) / self.half).clamp(-1.0, 1.0).asin())
            .collect()
    }
}

struct LocalOptimum {
    us: Vec<f64>,
    phi: f64,
    evals: usize,
}

/// Nelder-Mead from `us0`, restarted from its own optimum with a fresh simplex
/// until a restart no longer improves the objective. Exploration runs use the
/// loose tolerances and at most one restart.
fn local_search(spec: &ProblemSpec, settings: &SolveSettings, penalty: f64, us0: &[f64], polish: bool) -> LocalOptimum {
    let model = spec.curve_model().expect("curve model");
    let rp = Reparam::new(model);
    let f = |t: &[f64]| -objective(&rp.to_u(t), spec, penalty);
    let mut t = rp.to_t(us0);
    let mut best = f(&t);
    let mut evals = 1;
    let mut step = 0.3;
    let rounds = if polish { 8 } else { 2 };
    for _ in 0..rounds {
        let m = nelder_mead::minimize(f, &t, &settings.nm_options(step, polish));
        evals += m.evals;
        let improved = m.f < best - 1e-13 * best.abs();
        if m.f <= best {
            best = m.f;
            t = m.x;
        }
        if !improved {
            break;
        }
        step = (step * 0.5).max(1e-3);
    }
    LocalOptimum {
        us: rp.to_u(&t),
        phi: -best,
        evals,
    }
}

/// Starting tuples: Chebyshev extrema, then seeded uniform draws.
fn initial_params(model: &CurveModel, k: usize, start: usize, seed: u64) -> Vec<f64> {
    let (lo, hi) = model.domain;
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    if start == 0 {
        if k == 1 {
            return vec![mid];
        }
        return (0..k)
            .map(|j| mid + half * (j as f64 * std::f64::consts::PI / (k - 1) as f64).cos())
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    let mut us: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..=hi)).collect();
    us.sort_by(f64::total_cmp);
    us
}

fn map_starts<T: Send>(settings: &SolveSettings, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if settings.parallel {
        (0..settings.starts).into_par_iter().map(f).collect()
    } else {
        (0..settings.starts).map(f).collect()
    }
}

/// Index of the largest value, lowest index on ties.
fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values.enumerate().fold(None, |acc, (i, v)| match acc {
        Some((_, best)) if v <= best => acc,
        _ if v.is_nan() => acc,
        _ => Some((i, v)),
    })
}

/// Computes a c-optimal design.
///
/// Every start runs an independent local search; the winner is the largest
/// objective with ties going to the lowest start index, so results do not
/// depend on whether starts ran in parallel.
pub fn solve(spec: &ProblemSpec, settings: &SolveSettings) -> Result<SolveResult> {
    settings.validate()?;
    spec.tol.validate()?;
    match &spec.space {
        DesignSpace::Curve(model) => solve_curve(spec, model, settings),
        DesignSpace::Points(points) => solve_points(spec, points, settings),
    }
}

fn solve_curve(spec: &ProblemSpec, model: &CurveModel, settings: &SolveSettings) -> Result<SolveResult> {
    let k = model.dimension();
    let penalty = settings.penalty_scale.unwrap_or_else(|| default_penalty_scale(&spec.c));
    let runs = map_starts(settings, |s| {
        local_search(spec, settings, penalty, &initial_params(model, k, s, settings.seed), false)
    });
    let mut evals: usize = runs.iter().map(|r| r.evals).sum();
    let (best_start, best_phi) = argmax(runs.iter().map(|r| r.phi)).expect("at least one start");
    if best_phi <= 0.0 {
        return Err(Error::OptimizationFailed {
            best_residual: -best_phi / penalty - 1.0,
        });
    }

    let polished = local_search(spec, settings, penalty, &runs[best_start].us, true);
    evals += polished.evals;
    let (mut us, _, mut sol) = curve_solution(model, &polished.us, &spec.c, &spec.tol)?;
    let mut phi = sol.phi();

    // Optima are often not unique; prefer the smallest support. Drop the
    // lightest point and re-optimize the rest for as long as the objective
    // does not get worse.
    loop {
        let Some((drop, w)) = sol
            .weights
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            break;
        };
        if us.len() <= 1 || !w.is_finite() {
            break;
        }
        let mut fewer = us.clone();
        fewer.remove(drop);
        let refined = local_search(spec, settings, penalty, &fewer, true);
        evals += refined.evals;
        if refined.phi < phi * (1.0 - 1e-9) {
            break;
        }
        let Ok((rus, _, rsol)) = curve_solution(model, &refined.us, &spec.c, &spec.tol) else {
            break;
        };
        us = rus;
        phi = rsol.phi();
        sol = rsol;
    }

    let (us, sol) = snap_to_zero(model, us, sol, spec);
    let points: Vec<Vector> = us.iter().map(|&u| model.features_in_domain(u)).collect();
    let design = design_from_solution(&points, Some(&us), &sol)?;
    finish(spec, design, evals, best_start)
}

fn snap_to_zero(
    model: &CurveModel,
    us: Vec<f64>,
    sol: WeightSignSolution,
    spec: &ProblemSpec,
) -> (Vec<f64>, WeightSignSolution) {
    let (lo, hi) = model.domain;
    let cutoff = ZERO_SNAP * 0.5 * (hi - lo);
    if !(lo < 0.0 && hi > 0.0) || !us.iter().any(|&u| u != 0.0 && u.abs() <= cutoff) {
        return (us, sol);
    }
    let snapped: Vec<f64> = us.iter().map(|&u| if u.abs() <= cutoff { 0.0 } else { u }).collect();
    match curve_solution(model, &snapped, &spec.c, &spec.tol) {
        Ok((s_us, _, s_sol)) if s_us.len() == us.len() && s_sol.phi() >= sol.phi() * (1.0 - 1e-12) => (s_us, s_sol),
        _ => (us, sol),
    }
}

/// Canonicalizes and recomputes the closed-form solution on the final support.
fn finish(spec: &ProblemSpec, design: DesignMeasure, evals: usize, best_start: usize) -> Result<SolveResult> {
    let design = canonicalize(&design, &spec.tol);
    let solution = signs_and_weights(&design.points(), &spec.c, None, &spec.tol)?;
    let psi = linalg::psi(&design, &spec.c, &spec.tol)?;
    Ok(SolveResult {
        design,
        solution,
        psi,
        objective_evals: evals,
        best_start,
        certificate: None,
    })
}

fn subset_phi(points: &[Vector], idx: &[usize], spec: &ProblemSpec) -> f64 {
    let sub: Vec<Vector> = idx.iter().map(|&i| points[i].clone()).collect();
    signs_and_weights(&sub, &spec.c, None, &spec.tol).map_or(f64::NEG_INFINITY, |s| s.phi())
}

fn n_choose_k(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64) / (i as u64 + 1))
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Greedy pairwise exchange from a random k-subset.
fn exchange_search(points: &[Vector], spec: &ProblemSpec, k: usize, seed: u64, start: usize) -> (Vec<usize>, f64, usize) {
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    let mut idx: Vec<usize> = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    let mut best = subset_phi(points, &idx, spec);
    let mut evals = 1;
    loop {
        let mut improved: Option<(usize, usize, f64)> = None;
        for pos in 0..k {
            for cand in 0..n {
                if idx.contains(&cand) {
                    continue;
                }
                let mut trial = idx.clone();
                trial[pos] = cand;
                let v = subset_phi(points, &trial, spec);
                evals += 1;
                if v > improved.map_or(best, |b| b.2) * (1.0 + 1e-12) + 1e-300 {
                    improved = Some((pos, cand, v));
                }
            }
        }
        match improved {
            Some((pos, cand, v)) => {
                idx[pos] = cand;
                idx.sort_unstable();
                best = v;
            }
            None => break,
        }
    }
    (idx, best, evals)
}

fn solve_points(spec: &ProblemSpec, points: &[Vector], settings: &SolveSettings) -> Result<SolveResult> {
    let n = points.len();
    let k = spec.dimension().min(n);
    let (best_idx, best_phi, evals, best_start) = if n_choose_k(n, k) <= MAX_ENUMERATED_SUBSETS {
        let mut idx: Vec<usize> = (0..k).collect();
        let mut best = (idx.clone(), subset_phi(points, &idx, spec));
        let mut evals = 1;
        while next_combination(&mut idx, n) {
            let v = subset_phi(points, &idx, spec);
            evals += 1;
            if v > best.1 {
                best = (idx.clone(), v);
            }
        }
        (best.0, best.1, evals, 0)
    } else {
        let runs = map_starts(settings, |s| exchange_search(points, spec, k, settings.seed, s));
        let evals = runs.iter().map(|r| r.2).sum();
        let (i, _) = argmax(runs.iter().map(|r| r.1)).expect("at least one start");
        (runs[i].0.clone(), runs[i].1, evals, i)
    };
    if !best_phi.is_finite() || best_phi <= 0.0 {
        let all = linalg::span_residual(points, &spec.c, &spec.tol);
        return Err(if all > spec.tol.span_tol {
            Error::NotEstimable { residual: all }
        } else {
            Error::OptimizationFailed { best_residual: all }
        });
    }
    let sub: Vec<Vector> = best_idx.iter().map(|&i| points[i].clone()).collect();
    let sol = signs_and_weights(&sub, &spec.c, None, &spec.tol)?;
    let design = design_from_solution(&sub, None, &sol)?;
    finish(spec, design, evals, best_start)
}

/// Presentation pass: merges near-duplicate points, drops negligible weights,
/// sorts the support, and averages the weights of mirror-image pairs
/// `(u, p), (-u, p')` when every point has such a partner with
/// `|p - p'| < 2e-3`.
pub fn canonicalize(design: &DesignMeasure, tol: &Tolerances) -> DesignMeasure {
    let tagged = design.u_values().is_some();
    let mut pts: Vec<SupportPoint> = design.support().to_vec();
    if tagged {
        pts.sort_by(|a, b| a.u.unwrap().total_cmp(&b.u.unwrap()));
    } else {
        pts.sort_by(|a, b| {
            a.x.iter()
                .zip(b.x.iter())
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    // merge: the heavier point keeps its location
    let mut merged: Vec<SupportPoint> = Vec::with_capacity(pts.len());
    for sp in pts {
        let close = merged.iter().position(|m| {
            if tagged {
                (m.u.unwrap() - sp.u.unwrap()).abs() <= tol.merge_tol
            } else {
                (&m.x - &sp.x).norm() <= tol.merge_tol
            }
        });
        match close {
            Some(i) => {
                let total = merged[i].weight + sp.weight;
                if sp.weight > merged[i].weight {
                    merged[i] = sp;
                }
                merged[i].weight = total;
            }
            None => merged.push(sp),
        }
    }

    merged.retain(|sp| sp.weight >= CANONICAL_MIN_WEIGHT);
    if merged.is_empty() {
        return design.clone();
    }
    let total: f64 = merged.iter().map(|s| s.weight).sum();
    merged.iter_mut().for_each(|s| s.weight /= total);

    if tagged {
        symmetrize(&mut merged, tol);
    }
    DesignMeasure::normalized(merged).unwrap_or_else(|_| design.clone())
}

fn symmetrize(support: &mut [SupportPoint], tol: &Tolerances) {
    let n = support.len();
    let us: Vec<f64> = support.iter().map(|s| s.u.unwrap()).collect();
    let scale = us.iter().fold(0.0f64, |m, u| m.max(u.abs())).max(1.0);
    let mut partner = vec![usize::MAX; n];
    for i in 0..n {
        let found = (0..n)
            .filter(|&j| (us[i] + us[j]).abs() <= tol.merge_tol.max(1e-9) * scale)
            .min_by(|&a, &b| (us[i] + us[a]).abs().total_cmp(&(us[i] + us[b]).abs()));
        match found {
            Some(j) if (support[i].weight - support[j].weight).abs() < SYMMETRY_TOL => partner[i] = j,
            _ => return,
        }
    }
    for i in 0..n {
        let j = partner[i];
        if j > i {
            let mean = 0.5 * (support[i].weight + support[j].weight);
            support[i].weight = mean;
            support[j].weight = mean;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_spec(k: usize, j: usize) -> ProblemSpec {
        let mut c = Vector::zeros(k);
        c[j - 1] = 1.0;
        ProblemSpec::curve(CurveModel::polynomial(k).unwrap(), c).unwrap()
    }

    fn quick() -> SolveSettings {
        SolveSettings {
            starts: 8,
            ..SolveSettings::default()
        }
    }

    #[test]
    fn objective_table_support_k6_e2() {
        let spec = poly_spec(6, 2);
        let us: Vec<f64> = (0..6).map(|j| (j as f64 * std::f64::consts::PI / 5.0).cos()).collect();
        let v = objective(&us, &spec, 1e6);
        assert!((v - 0.04).abs() < 1e-10, "{v}");
        let mut perm = us.clone();
        perm.reverse();
        perm.swap(0, 3);
        assert!((objective(&perm, &spec, 1e6) - v).abs() < 1e-14);
    }

    #[test]
    fn objective_penalizes_degenerate_tuple() {
        let spec = poly_spec(6, 2);
        assert!(objective(&[0.3; 6], &spec, 1e6) <= -1e6);
    }

    #[test]
    fn merge_params_chains() {
        assert_eq!(merge_params(&[0.3, 0.1, 0.30001, 0.5], 1e-3).len(), 3);
        assert_eq!(merge_params(&[0.0], 1e-3), vec![0.0]);
    }

    #[test]
    fn solve_k3_e2() {
        let r = solve(&poly_spec(3, 2), &quick()).unwrap();
        assert!((r.psi - 1.0).abs() < 1e-9, "{}", r.psi);
        let us = r.design.u_values().unwrap();
        assert_eq!(us.len(), 2);
        assert!((us[0] + 1.0).abs() < 1e-6 && (us[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn solve_e1_is_point_mass_at_zero() {
        for k in [2, 4, 7] {
            let r = solve(&poly_spec(k, 1), &quick()).unwrap();
            assert_eq!(r.design.len(), 1, "k = {k}: {:?}", r.design);
            assert!(r.design.u_values().unwrap()[0].abs() < 1e-6);
            assert!((r.psi - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn solve_is_deterministic_across_threading() {
        let spec = poly_spec(5, 4);
        let par = solve(&spec, &quick()).unwrap();
        let ser = solve(&spec, &SolveSettings { parallel: false, ..quick() }).unwrap();
        assert_eq!(par.design, ser.design);
        assert_eq!(par.psi.to_bits(), ser.psi.to_bits());
    }

    #[test]
    fn solve_points_finite_set() {
        let pts = vec![
            Vector::from_vec(vec![1.0, 0.0]),
            Vector::from_vec(vec![0.0, 1.0]),
            Vector::from_vec(vec![1.0, 1.0]),
            Vector::from_vec(vec![0.5, -0.5]),
        ];
        let spec = ProblemSpec::new(DesignSpace::Points(pts), Vector::from_vec(vec![1.0, 1.0]), Tolerances::default()).unwrap();
        let r = solve(&spec, &quick()).unwrap();
        // (1,1) alone spans c with Psi = 1
        assert!((r.psi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solve_points_not_estimable() {
        let pts = vec![Vector::from_vec(vec![1.0, 0.0]), Vector::from_vec(vec![2.0, 0.0])];
        let spec = ProblemSpec::new(DesignSpace::Points(pts), Vector::from_vec(vec![0.0, 1.0]), Tolerances::default()).unwrap();
        assert!(matches!(solve(&spec, &quick()), Err(Error::NotEstimable { .. })));
    }

    #[test]
    fn canonicalize_merges_close_points() {
        let m = CurveModel::polynomial(3).unwrap();
        let d = DesignMeasure::new(vec![
            SupportPoint::with_u(m.features(0.3091).unwrap(), 0.3091, 0.25),
            SupportPoint::with_u(m.features(0.3090).unwrap(), 0.3090, 0.35),
            SupportPoint::with_u(m.features(-0.8).unwrap(), -0.8, 0.4),
        ])
        .unwrap();
        let tol = Tolerances { merge_tol: 1e-3, ..Tolerances::default() };
        let c = canonicalize(&d, &tol);
        assert_eq!(c.len(), 2);
        assert_eq!(c.u_values().unwrap(), vec![-0.8, 0.3090]);
        assert!((c.weights()[1] - 0.6).abs() < 1e-15);
        assert_eq!(canonicalize(&c, &tol), c);
    }

    #[test]
    fn canonicalize_symmetrizes_near_symmetric() {
        let m = CurveModel::polynomial(3).unwrap();
        let pts = [(-1.0, 0.2505), (0.0, 0.5), (1.0, 0.2495)];
        let d = DesignMeasure::new(
            pts.iter().map(|&(u, w)| SupportPoint::with_u(m.features(u).unwrap(), u, w)).collect(),
        )
        .unwrap();
        let c = canonicalize(&d, &Tolerances::default());
        assert_eq!(c.weights(), vec![0.25, 0.5, 0.25]);
        // an asymmetric support is left alone
        let pts = [(-1.0, 0.3), (0.2, 0.7)];
        let d = DesignMeasure::new(
            pts.iter().map(|&(u, w)| SupportPoint::with_u(m.features(u).unwrap(), u, w)).collect(),
        )
        .unwrap();
        assert_eq!(canonicalize(&d, &Tolerances::default()), d);
    }

    #[test]
    fn canonicalize_drops_tiny_weights() {
        let m = CurveModel::polynomial(2).unwrap();
        let d = DesignMeasure::new(vec![
            SupportPoint::with_u(m.features(-1.0).unwrap(), -1.0, 0.5 - 1e-8),
            SupportPoint::with_u(m.features(0.1).unwrap(), 0.1, 1e-8),
            SupportPoint::with_u(m.features(1.0).unwrap(), 1.0, 0.5),
        ])
        .unwrap();
        let c = canonicalize(&d, &Tolerances::default());
        assert_eq!(c.len(), 2);
        assert_eq!(c.weights(), vec![0.5, 0.5]);
    }
}
