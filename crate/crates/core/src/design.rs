//! Finitely supported design measures.

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Slack allowed on `sum(weights) == 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    /// Regression vector `x` in R^k.
    pub x: Vector,
    /// Scalar design variable that produced `x`, when the point came from a
    /// curve model.
    pub u: Option<f64>,
    pub weight: f64,
}

impl SupportPoint {
    pub fn new(x: Vector, weight: f64) -> Self {
        Self { x, u: None, weight }
    }

    pub fn with_u(x: Vector, u: f64, weight: f64) -> Self {
        Self {
            x,
            u: Some(u),
            weight,
        }
    }
}

/// A probability measure on finitely many points of R^k.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMeasure {
    support: Vec<SupportPoint>,
}

pub(crate) fn check_probability_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidDesign(format!("weight {w} is negative or non-finite")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidDesign(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

impl DesignMeasure {
    pub fn new(support: Vec<SupportPoint>) -> Result<Self> {
        let first = support
            .first()
            .ok_or_else(|| Error::InvalidDesign("design has no support points".into()))?;
        let k = first.x.len();
        if k == 0 {
            return Err(Error::InvalidDesign("support points have dimension 0".into()));
        }
        for sp in &support {
            if sp.x.len() != k {
                return Err(Error::InvalidDesign("support points have mixed dimensions".into()));
            }
            if !sp.x.iter().all(|v| v.is_finite()) || !sp.u.map_or(true, f64::is_finite) {
                return Err(Error::InvalidDesign("support point has non-finite entries".into()));
            }
        }
        let weights: Vec<f64> = support.iter().map(|s| s.weight).collect();
        check_probability_weights(&weights)?;
        Ok(Self { support })
    }

    /// Builds a design from nonnegative masses, rescaling them to sum to one.
    pub fn normalized(mut support: Vec<SupportPoint>) -> Result<Self> {
        let total: f64 = support.iter().map(|s| s.weight).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDesign(format!("total mass {total} cannot be normalized")));
        }
        for sp in &mut support {
            sp.weight /= total;
        }
        Self::new(support)
    }

    pub fn support(&self) -> &[SupportPoint] {
        &self.support
    }

    pub fn into_support(self) -> Vec<SupportPoint> {
        self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.support[0].x.len()
    }

    pub fn points(&self) -> Vec<Vector> {
        self.support.iter().map(|s| s.x.clone()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.support.iter().map(|s| s.weight).collect()
    }

    /// The `u` tags, if every support point carries one.
    pub fn u_values(&self) -> Option<Vec<f64>> {
        self.support.iter().map(|s| s.u).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(a: f64, b: f64, w: f64) -> SupportPoint {
        SupportPoint::new(Vector::from_vec(vec![a, b]), w)
    }

    #[test]
    fn rejects_bad_weight_sum() {
        let err = DesignMeasure::new(vec![pt(1.0, 0.0, 0.5), pt(0.0, 1.0, 0.4)]).unwrap_err();
        assert!(matches!(err, Error::InvalidDesign(_)));
    }

    #[test]
    fn rejects_negative_weight() {
        assert!(DesignMeasure::new(vec![pt(1.0, 0.0, 1.5), pt(0.0, 1.0, -0.5)]).is_err());
    }

    #[test]
    fn rejects_empty_and_mixed_dimensions() {
        assert!(DesignMeasure::new(vec![]).is_err());
        let odd = SupportPoint::new(Vector::from_vec(vec![1.0]), 0.5);
        assert!(DesignMeasure::new(vec![pt(1.0, 0.0, 0.5), odd]).is_err());
    }

    #[test]
    fn normalized_rescales() {
        let d = DesignMeasure::normalized(vec![pt(1.0, 0.0, 2.0), pt(0.0, 1.0, 6.0)]).unwrap();
        assert_eq!(d.weights(), vec![0.25, 0.75]);
        assert!(d.u_values().is_none());
    }
}
