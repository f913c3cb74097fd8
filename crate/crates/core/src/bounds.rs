//! Entropy upper bounds from directional exponents.
//!
//! With `λ̂ = Λ_n / n` from a profile:
//!
//! * rectangle factor `λ_R = (λ̂(0) + λ̂(π) + 1)(λ̂(π/2) + λ̂(3π/2) + 1)`;
//! * integral factor `λ_T = ∫_0^{2π} λ̂²/2 + sqrt2 ∫_0^π λ̂ + π`;
//! * quadrant factor `∫_0^{π/2} λ̂²/2 + ∫_0^{π/2} λ̂ + π/2`, together with its
//!   variant carrying `sqrt2` on the middle term.
//!
//! Integrals use the composite trapezoid rule on the profile's own angles.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::entropy::{EntropyEstimate, EntropyMethod, ShiftEntropyEstimate, Units};
use crate::error::{Error, Result};
use crate::lyapunov::{DirectionProfile, ANGLE_TOLERANCE};

/// Smallest angle count accepted by [`bound_integral`].
pub const MIN_INTEGRAL_ANGLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    /// `|I - I_half| / 3`, with `I_half` on every other node.
    pub error: f64,
}

/// `(θ, λ̂)` nodes on `[a, b]`; both ends must be grid angles.
fn nodes(profile: &DirectionProfile, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    for end in [a, b] {
        if profile.entry_at(end).is_none() {
            return Err(Error::GridTooCoarse(format!("profile lacks angle {end}")));
        }
    }
    Ok(profile
        .entries()
        .iter()
        .filter(|e| e.theta >= a - ANGLE_TOLERANCE && e.theta <= b + ANGLE_TOLERANCE)
        .map(|e| (e.theta, e.lambda_hat))
        .collect())
}

fn trapezoid(pts: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (f(w[0].1) + f(w[1].1)) / 2.0).sum()
}

fn trapezoid_with_error(pts: &[(f64, f64)], f: impl Fn(f64) -> f64 + Copy) -> Quadrature {
    let value = trapezoid(pts, f);
    let mut half: Vec<(f64, f64)> = pts.iter().step_by(2).copied().collect();
    if pts.len().is_multiple_of(2) {
        half.push(*pts.last().unwrap());
    }
    Quadrature { value, error: (value - trapezoid(&half, f)).abs() / 3.0 }
}

pub fn bound_rectangle(profile: &DirectionProfile) -> Result<f64> {
    let [l0, l90, l180, l270] = profile.cardinals()?;
    Ok((l0 + l180 + 1.0) * (l90 + l270 + 1.0))
}

pub fn bound_integral(profile: &DirectionProfile) -> Result<Quadrature> {
    if profile.angle_count() < MIN_INTEGRAL_ANGLES {
        return Err(Error::GridTooCoarse(format!(
            "{} angles; need at least {MIN_INTEGRAL_ANGLES}",
            profile.angle_count()
        )));
    }
    let full = trapezoid_with_error(&nodes(profile, 0.0, TAU)?, |l| l * l / 2.0);
    let upper = trapezoid_with_error(&nodes(profile, 0.0, PI)?, |l| l);
    Ok(Quadrature { value: full.value + SQRT_2 * upper.value + PI, error: full.error + SQRT_2 * upper.error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantBound {
    /// `∫λ̂²/2 + ∫λ̂ + π/2` over `[0, π/2]`.
    pub value: f64,
    /// `∫λ̂²/2 + sqrt2 ∫λ̂ + π/2` over `[0, π/2]`.
    pub value_sqrt2: f64,
    pub error: f64,
}

pub fn bound_integral_quadrant(profile: &DirectionProfile) -> Result<QuadrantBound> {
    let pts = nodes(profile, 0.0, FRAC_PI_2)?;
    if pts.len() < 3 {
        return Err(Error::GridTooCoarse("fewer than 3 angles in [0, π/2]".into()));
    }
    let sq = trapezoid_with_error(&pts, |l| l * l / 2.0);
    let lin = trapezoid_with_error(&pts, |l| l);
    Ok(QuadrantBound {
        value: sq.value + lin.value + FRAC_PI_2,
        value_sqrt2: sq.value + SQRT_2 * lin.value + FRAC_PI_2,
        error: sq.error + lin.error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cardinals {
    pub zero: f64,
    pub half_pi: f64,
    pub pi: f64,
    pub three_half_pi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Products {
    pub rectangle: f64,
    pub integral: f64,
    pub quadrant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub afe_le_rectangle: bool,
    pub afe_le_integral: bool,
    pub afe_le_quadrant: bool,
    /// Numeric comparison of the two factors; not a theorem.
    pub quadrant_le_rectangle: bool,
}

impl Verdicts {
    /// The three entropy inequalities.
    pub fn all_pass(&self) -> bool {
        self.afe_le_rectangle && self.afe_le_integral && self.afe_le_quadrant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureErrors {
    pub integral: f64,
    pub quadrant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rule: String,
    pub n: usize,
    #[serde(rename = "M")]
    pub angles: usize,
    pub lambda_cardinals: Cardinals,
    #[serde(rename = "lambda_R")]
    pub lambda_r: f64,
    #[serde(rename = "lambda_T")]
    pub lambda_t: f64,
    #[serde(rename = "lambda_T_quadrant")]
    pub lambda_t_quadrant: f64,
    #[serde(rename = "lambda_T_quadrant_sqrt2")]
    pub lambda_t_quadrant_sqrt2: f64,
    pub h_shift: f64,
    pub afe: f64,
    pub afe_method: EntropyMethod,
    pub products: Products,
    pub verdicts: Verdicts,
    pub quadrature_error: QuadratureErrors,
    pub units: Units,
}

impl BoundReport {
    /// Human-readable statements of the failed entropy inequalities.
    pub fn failures(&self) -> Vec<String> {
        let v = &self.verdicts;
        let p = &self.products;
        [
            (v.afe_le_rectangle, "h_shift*lambda_R", p.rectangle),
            (v.afe_le_integral, "h_shift*lambda_T", p.integral),
            (v.afe_le_quadrant, "h_shift*lambda_T_quadrant", p.quadrant),
        ]
        .into_iter()
        .filter(|(ok, _, _)| !ok)
        .map(|(_, name, rhs)| format!("AFE {} <= {name} {rhs} fails", self.afe))
        .collect()
    }
}

pub fn assemble_report(
    afe: &EntropyEstimate,
    shift: &ShiftEntropyEstimate,
    profile: &DirectionProfile,
) -> Result<BoundReport> {
    if afe.units != shift.units {
        return Err(Error::UnitMismatch(format!("AFE in {:?}, shift entropy in {:?}", afe.units, shift.units)));
    }
    let [c0, c90, c180, c270] = profile.cardinals()?;
    let lambda_r = bound_rectangle(profile)?;
    let integral = bound_integral(profile)?;
    let quadrant = bound_integral_quadrant(profile)?;
    let h = shift.per_site;
    let products = Products { rectangle: h * lambda_r, integral: h * integral.value, quadrant: h * quadrant.value };
    let a = afe.afe_proxy;
    Ok(BoundReport {
        rule: profile.rule().to_string(),
        n: profile.horizon(),
        angles: profile.angle_count(),
        lambda_cardinals: Cardinals { zero: c0, half_pi: c90, pi: c180, three_half_pi: c270 },
        lambda_r,
        lambda_t: integral.value,
        lambda_t_quadrant: quadrant.value,
        lambda_t_quadrant_sqrt2: quadrant.value_sqrt2,
        h_shift: h,
        afe: a,
        afe_method: afe.method,
        verdicts: Verdicts {
            afe_le_rectangle: a <= products.rectangle,
            afe_le_integral: a <= products.integral,
            afe_le_quadrant: a <= products.quadrant,
            quadrant_le_rectangle: quadrant.value <= lambda_r,
        },
        products,
        quadrature_error: QuadratureErrors { integral: integral.error, quadrant: quadrant.error },
        units: Units::Nats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::anchor_point;
    use crate::lyapunov::{angle_grid, Method, ProfileEntry};

    fn synthetic(m: usize, n: usize, f: impl Fn(f64) -> f64) -> DirectionProfile {
        let entries = angle_grid(m)
            .unwrap()
            .into_iter()
            .map(|t| {
                let l = (f(t) * n as f64).round();
                ProfileEntry { theta: t, lambda_n: l, lambda_hat: l / n as f64, method: Method::Exact, anchor: anchor_point(t, l) }
            })
            .collect();
        DirectionProfile::from_entries("synthetic", 1, n, m, entries).unwrap()
    }

    #[test]
    fn zero_profile() {
        let p = synthetic(32, 10, |_| 0.0);
        assert_eq!(bound_rectangle(&p).unwrap(), 1.0);
        assert!((bound_integral(&p).unwrap().value - PI).abs() < 1e-15);
        assert!((bound_integral_quadrant(&p).unwrap().value - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn constant_profile() {
        let p = synthetic(32, 10, |_| 1.0);
        let q = bound_integral(&p).unwrap();
        assert!((q.value - (2.0 + SQRT_2) * PI).abs() < 1e-12);
        assert!(q.error < 1e-12);
        assert_eq!(bound_rectangle(&p).unwrap(), 9.0);
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = synthetic(8, 10, |_| 0.0);
        assert!(matches!(bound_integral(&p), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn smooth_quadrant_converges() {
        // λ = cos on [0, π/2]: ∫cos²/2 = π/8, ∫cos = 1.
        let p = synthetic(1024, 1 << 20, |t| t.cos().max(0.0));
        let q = bound_integral_quadrant(&p).unwrap();
        assert!((q.value - (PI / 8.0 + 1.0 + FRAC_PI_2)).abs() < 1e-4, "{}", q.value);
        assert!((q.value_sqrt2 - (PI / 8.0 + SQRT_2 + FRAC_PI_2)).abs() < 1e-4);
    }
}
