use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of fitting `A·(1 - V·cos 2(θ - θ₀))` to a polarizer scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFit {
    pub visibility: f64,
    /// Angle of the fringe minimum, degrees in [0, 180).
    pub theta0_deg: f64,
    pub amplitude: f64,
    pub residual_rms: f64,
}

/// Linear least squares in `a + b·cos 2θ + c·sin 2θ`, then
/// `V = √(b²+c²)/a`, `2θ₀ = atan2(-c, -b)`. `V` is clamped to [0, 1].
pub fn fit_visibility(theta_deg: &[f64], values: &[f64]) -> Result<VisibilityFit> {
    if theta_deg.len() != values.len() {
        return Err(Error::usage("angles and values differ in length"));
    }
    if theta_deg.iter().chain(values).any(|x| !x.is_finite()) {
        return Err(Error::Fit("non-finite scan data".into()));
    }
    let mut distinct: Vec<f64> = theta_deg.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::Fit("need at least 4 distinct angles".into()));
    }
    if distinct[distinct.len() - 1] - distinct[0] < 90.0 {
        return Err(Error::Fit("angles must span at least 90°".into()));
    }

    let row = |t: f64| {
        let x = 2.0 * t.to_radians();
        Vector3::new(1.0, x.cos(), x.sin())
    };
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (&t, &y) in theta_deg.iter().zip(values) {
        let r = row(t);
        normal += r * r.transpose();
        rhs += r * y;
    }
    let coef = normal
        .cholesky()
        .ok_or_else(|| Error::Fit("scan angles do not determine the fringe".into()))?
        .solve(&rhs);
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let swing = b.hypot(c);
    if !(a > 0.0) || swing <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Fit("scan shows no fringe".into()));
    }
    let ss: f64 = theta_deg.iter().zip(values).map(|(&t, &y)| (y - row(t).dot(&coef)).powi(2)).sum();
    let theta0 = (0.5 * (-c).atan2(-b).to_degrees()).rem_euclid(180.0);
    Ok(VisibilityFit {
        visibility: (swing / a).clamp(0.0, 1.0),
        theta0_deg: theta0,
        amplitude: a,
        residual_rms: (ss / values.len() as f64).sqrt(),
    })
}
