//! Design spaces: scalar curves `u -> x(u)` and finite point sets, plus the
//! canonical transformation that turns a locally optimal logistic-regression
//! design problem into a linear one.

use crate::design::{DesignMeasure, SupportPoint};
use crate::error::{Error, Result};
use crate::linalg::{ensure_finite_vector, Matrix, Tolerances, Vector};

/// How far outside the domain a design variable may stray before it is an
/// error rather than rounding noise.
pub const DOMAIN_CLAMP_TOL: f64 = 1e-12;

/// Logistic information weight `w(z) = e^{z/2} / (1 + e^z)`, evaluated as
/// `1 / (2 cosh(z/2))` to avoid overflow.
pub fn logistic_weight(zeta: f64) -> f64 {
    0.5 / (0.5 * zeta).cosh()
}

/// Orthonormal change of basis used for locally optimal designs in the binary
/// logistic model.
///
/// `u_mat` is orthonormal with last row `theta_hat' / |theta_hat|`, and
/// `b = |theta_hat| * u_mat`, so the last coordinate of `B x` is the linear
/// predictor `theta_hat' x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmTransform {
    theta_hat: Vector,
    norm: f64,
    u_mat: Matrix,
    b: Matrix,
}

impl GlmTransform {
    /// Builds `U` from the Householder reflection swapping `e_k` and
    /// `theta_hat / |theta_hat|`. The reflection is symmetric, so its last row
    /// is the unit parameter direction.
    pub fn new(theta_hat: &Vector) -> Result<Self> {
        let (_, dir) = Self::direction(theta_hat)?;
        let k = theta_hat.len();
        let mut v = -dir;
        v[k - 1] += 1.0;
        let vv = v.norm_squared();
        let mut u_mat = Matrix::identity(k, k);
        // v == 0 means theta_hat already points along e_k
        if vv > 1e-28 {
            u_mat.ger(-2.0 / vv, &v, &v, 1.0);
        }
        Self::with_orthonormal(theta_hat, u_mat)
    }

    /// Uses a caller-supplied orthonormal completion. The last row must be
    /// `theta_hat / |theta_hat|`.
    pub fn with_orthonormal(theta_hat: &Vector, u_mat: Matrix) -> Result<Self> {
        let (norm, dir) = Self::direction(theta_hat)?;
        let k = theta_hat.len();
        if u_mat.shape() != (k, k) {
            return Err(Error::InvalidInput(format!(
                "orthonormal matrix must be {k}x{k}, got {:?}",
                u_mat.shape()
            )));
        }
        let gram_err = (&u_mat * u_mat.transpose() - Matrix::identity(k, k)).amax();
        if gram_err > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "matrix is not orthonormal (max |UU' - I| = {gram_err:.2e})"
            )));
        }
        let last_err = (u_mat.row(k - 1).transpose() - &dir).amax();
        if last_err > 1e-10 {
            return Err(Error::InvalidInput(
                "last row of U must equal theta_hat / |theta_hat|".into(),
            ));
        }
        let mut b = norm * &u_mat;
        // the linear predictor row is theta_hat itself, without rounding
        b.set_row(k - 1, &theta_hat.transpose());
        Ok(Self {
            theta_hat: theta_hat.clone(),
            norm,
            u_mat,
            b,
        })
    }

    fn direction(theta_hat: &Vector) -> Result<(f64, Vector)> {
        ensure_finite_vector(theta_hat, "theta_hat")?;
        let norm = theta_hat.norm();
        if theta_hat.is_empty() || norm == 0.0 {
            return Err(Error::InvalidInput("theta_hat must be nonzero".into()));
        }
        Ok((norm, theta_hat / norm))
    }

    pub fn theta_hat(&self) -> &Vector {
        &self.theta_hat
    }

    pub fn theta_norm(&self) -> f64 {
        self.norm
    }

    pub fn orthonormal(&self) -> &Matrix {
        &self.u_mat
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn dimension(&self) -> usize {
        self.theta_hat.len()
    }

    /// `w(z_k) z` with `z = B x`.
    pub fn transform_point(&self, x: &Vector) -> Vector {
        let z = &self.b * x;
        let zk = z[z.len() - 1];
        logistic_weight(zk) * z
    }

    /// Target vector of the transformed problem, `B c`.
    pub fn transform_target(&self, c: &Vector) -> Vector {
        &self.b * c
    }
}

/// Feature map of a scalar design variable.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    /// `x(u) = (1, u, ..., u^{k-1})'`.
    Polynomial { k: usize },
    /// `w(z_k) z` with `z = B x_base(u)`.
    Glm {
        base: Box<FeatureMap>,
        transform: GlmTransform,
    },
}

impl FeatureMap {
    pub fn dimension(&self) -> usize {
        match self {
            FeatureMap::Polynomial { k } => *k,
            FeatureMap::Glm { transform, .. } => transform.dimension(),
        }
    }

    fn eval(&self, u: f64) -> Vector {
        match self {
            FeatureMap::Polynomial { k } => {
                let mut x = Vector::zeros(*k);
                let mut p = 1.0;
                for i in 0..*k {
                    x[i] = p;
                    p *= u;
                }
                x
            }
            FeatureMap::Glm { base, transform } => transform.transform_point(&base.eval(u)),
        }
    }
}

/// A curve `{x(u) : u in [lo, hi]}` in R^k.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveModel {
    pub map: FeatureMap,
    pub domain: (f64, f64),
}

impl CurveModel {
    pub fn new(map: FeatureMap, domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!(
                "domain [{lo}, {hi}] is not a proper interval"
            )));
        }
        if map.dimension() == 0 {
            return Err(Error::InvalidInput("model dimension must be positive".into()));
        }
        Ok(Self { map, domain })
    }

    /// Polynomial regression of degree `k - 1` on [-1, 1].
    pub fn polynomial(k: usize) -> Result<Self> {
        Self::new(FeatureMap::Polynomial { k }, (-1.0, 1.0))
    }

    /// Linear predictor curve `(1, u, u^2)'` of the quadratic logistic model.
    pub fn quadratic_logistic() -> Self {
        Self::polynomial(3).expect("k = 3 is valid")
    }

    pub fn dimension(&self) -> usize {
        self.map.dimension()
    }

    pub fn clamp(&self, u: f64) -> Result<f64> {
        let (lo, hi) = self.domain;
        if !u.is_finite() || u < lo - DOMAIN_CLAMP_TOL || u > hi + DOMAIN_CLAMP_TOL {
            return Err(Error::Domain { u, lo, hi });
        }
        Ok(u.clamp(lo, hi))
    }

    /// Regression vector `x(u)`.
    pub fn features(&self, u: f64) -> Result<Vector> {
        Ok(self.map.eval(self.clamp(u)?))
    }

    /// `x(u)` for a `u` the caller already knows is inside the domain.
    pub(crate) fn features_in_domain(&self, u: f64) -> Vector {
        self.map.eval(u.clamp(self.domain.0, self.domain.1))
    }

    /// Wraps this curve in the logistic transformation.
    pub fn transformed(&self, transform: GlmTransform) -> Result<Self> {
        if transform.dimension() != self.dimension() {
            return Err(Error::InvalidInput(format!(
                "theta_hat has length {} but model dimension is {}",
                transform.dimension(),
                self.dimension()
            )));
        }
        Self::new(
            FeatureMap::Glm {
                base: Box::new(self.map.clone()),
                transform,
            },
            self.domain,
        )
    }
}

/// Where design points may be placed.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignSpace {
    Curve(CurveModel),
    /// A finite candidate set.
    Points(Vec<Vector>),
}

impl DesignSpace {
    pub fn dimension(&self) -> usize {
        match self {
            DesignSpace::Curve(m) => m.dimension(),
            DesignSpace::Points(p) => p.first().map_or(0, |x| x.len()),
        }
    }
}

/// A c-optimal design problem: design space, target `c` and tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub space: DesignSpace,
    pub c: Vector,
    pub tol: Tolerances,
}

impl ProblemSpec {
    pub fn new(space: DesignSpace, c: Vector, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        ensure_finite_vector(&c, "c")?;
        if c.norm() == 0.0 {
            return Err(Error::InvalidInput("c must be nonzero".into()));
        }
        let k = space.dimension();
        if k == 0 {
            return Err(Error::InvalidInput("design space is empty".into()));
        }
        if c.len() != k {
            return Err(Error::InvalidInput(format!(
                "c has length {} but the model dimension is {k}",
                c.len()
            )));
        }
        if let DesignSpace::Points(points) = &space {
            if points.iter().any(|p| p.len() != k) {
                return Err(Error::InvalidInput("candidate points have mixed dimensions".into()));
            }
            for p in points {
                ensure_finite_vector(p, "candidate point")?;
            }
        }
        Ok(Self { space, c, tol })
    }

    pub fn curve(model: CurveModel, c: Vector) -> Result<Self> {
        Self::new(DesignSpace::Curve(model), c, Tolerances::default())
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    pub fn curve_model(&self) -> Option<&CurveModel> {
        match &self.space {
            DesignSpace::Curve(m) => Some(m),
            DesignSpace::Points(_) => None,
        }
    }
}

/// The `(B c)`-optimal problem on the transformed curve `{w(z_k) z}`.
pub fn transformed_problem(g: &GlmTransform, base: &ProblemSpec) -> Result<ProblemSpec> {
    let model = base.curve_model().ok_or_else(|| {
        Error::InvalidInput("the logistic transformation needs a curve model".into())
    })?;
    if let FeatureMap::Glm { .. } = model.map {
        return Err(Error::InvalidInput("model is already transformed".into()));
    }
    let curve = model.transformed(g.clone())?;
    ProblemSpec::new(
        DesignSpace::Curve(curve),
        g.transform_target(&base.c),
        base.tol,
    )
}

/// `c = (0, -theta_3, theta_2)'`, the gradient direction of the turning point
/// `-theta_2 / (2 theta_3)` of a quadratic logistic curve.
pub fn turning_point_c(theta_hat: &Vector) -> Result<Vector> {
    if theta_hat.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "turning point needs a quadratic model (3 parameters), got {}",
            theta_hat.len()
        )));
    }
    ensure_finite_vector(theta_hat, "theta_hat")?;
    if theta_hat[2] == 0.0 {
        return Err(Error::TurningPointUndefined);
    }
    Ok(Vector::from_vec(vec![0.0, -theta_hat[2], theta_hat[1]]))
}

/// Maps a design found on a transformed curve back to the original curve,
/// keeping weights and using each point's `u` provenance.
///
/// `u_index` overrides the support points' own `u` tags when given.
pub fn back_transform(
    base: &CurveModel,
    design_on_g: &DesignMeasure,
    u_index: Option<&[f64]>,
) -> Result<DesignMeasure> {
    let us: Vec<f64> = match u_index {
        Some(us) => {
            if us.len() != design_on_g.len() {
                return Err(Error::InvalidInput(format!(
                    "{} u values for {} support points",
                    us.len(),
                    design_on_g.len()
                )));
            }
            us.to_vec()
        }
        None => design_on_g.u_values().ok_or_else(|| {
            Error::InvalidInput("support point without u provenance cannot be mapped back".into())
        })?,
    };
    let support = design_on_g
        .support()
        .iter()
        .zip(us)
        .map(|(sp, u)| Ok(SupportPoint::with_u(base.features(u)?, u, sp.weight)))
        .collect::<Result<Vec<_>>>()?;
    DesignMeasure::new(support)
}
