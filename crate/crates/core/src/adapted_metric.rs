//! Adapted conformal factors on the model ball and residuals certifying them.
//!
//! With `ρ = (1-r²)/2` the hyperbolic metric is `g_H = ρ^{-2} g₀`. For `d > 4` the
//! adapted metric is `ψ^{4/(d-4)} g₀` with `ψ = 1 + (d-4)ρ/2`; for `d = 4` it is
//! `e^{2τ} g_H = e^{2ρ} g₀` with `τ = log ρ + ρ`.
//!
//! Residuals are reported relative to the largest term they sum, so that grids
//! reaching toward the boundary (where `ρ^{-4}` is large) stay at rounding level.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AdaptedMetric {
    /// `g* = ψ^{4/(d-4)} g₀`, `d > 4` (real).
    PowerLaw { dimension: f64 },
    /// `g* = e^{1-|x|²} g₀`, `d = 4`.
    Exponential,
}

impl AdaptedMetric {
    pub fn for_dimension(d: f64) -> Result<Self> {
        if d == 4.0 {
            Ok(Self::Exponential)
        } else if d > 4.0 && d.is_finite() {
            Ok(Self::PowerLaw { dimension: d })
        } else {
            domain(format!("adapted metric needs d >= 4, got {d}"))
        }
    }

    /// Conformal factor `g*/g₀` at radius r.
    pub fn conformal_factor(&self, r: f64) -> Result<f64> {
        match *self {
            Self::PowerLaw { dimension } => Ok(psi(r, dimension)?.powf(4.0 / (dimension - 4.0))),
            Self::Exponential => compactified_tau_factor(r),
        }
    }
}

fn check_closed(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return domain(format!("radius {r} outside [0, 1]"));
    }
    Ok(())
}

fn check_open(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return domain(format!("radius {r} outside (0, 1)"));
    }
    Ok(())
}

fn check_dimension(d: f64) -> Result<()> {
    if !d.is_finite() || d <= 4.0 {
        return domain(format!("needs d > 4, got {d}"));
    }
    Ok(())
}

fn relative(sum: f64, scale: f64) -> f64 {
    sum.abs() / scale.max(1.0)
}

pub fn rho(r: f64) -> Result<f64> {
    check_closed(r)?;
    Ok((1.0 - r * r) / 2.0)
}

pub fn psi(r: f64, d: f64) -> Result<f64> {
    check_dimension(d)?;
    Ok(1.0 + (d - 4.0) / 2.0 * rho(r)?)
}

pub fn psi_derivative(r: f64, d: f64) -> Result<f64> {
    check_dimension(d)?;
    check_closed(r)?;
    Ok(-(d - 4.0) * r / 2.0)
}

pub fn tau(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return domain(format!("tau diverges at r = {r}"));
    }
    let p = rho(r)?;
    Ok(p.ln() + p)
}

/// `e^{2τ} ρ^{-2} = e^{2ρ}`, regular up to the boundary.
pub fn compactified_tau_factor(r: f64) -> Result<f64> {
    Ok((2.0 * rho(r)?).exp())
}

/// Residual of
/// `-ρ^{-2}ψ'' - ((d-5)/r)ρ^{-2}ψ' - (2/r)ρ^{-3}ψ' - (d-4)ρ^{-3}ψ`.
pub fn psi_ode_residual(r: f64, d: f64) -> Result<f64> {
    check_open(r)?;
    let p = rho(r)?;
    let v = psi(r, d)?;
    let dv = psi_derivative(r, d)?;
    let ddv = -(d - 4.0) / 2.0;
    let terms = [
        -ddv / (p * p),
        -(d - 5.0) / r * dv / (p * p),
        -2.0 / r * dv / (p * p * p),
        -(d - 4.0) * v / (p * p * p),
    ];
    let scale: f64 = terms.iter().map(|x| x.abs()).sum();
    Ok(relative(terms.iter().sum(), scale))
}

/// Gap between `-ρ^{-1}Δ₀(ρ^{-1}) + 2ρ^{-4}` and `-(d-4)/ρ³`, with `Δ₀(ρ^{-1})`
/// assembled from its radial derivatives.
pub fn error_term_gap(r: f64, d: f64) -> Result<f64> {
    check_open(r)?;
    check_dimension(d)?;
    let p = rho(r)?;
    let first = r / (p * p);
    let second = 1.0 / (p * p) + 2.0 * r * r / (p * p * p);
    let lap = second + (d - 1.0) / r * first;
    let assembled = -lap / p + 2.0 / p.powi(4);
    let closed = -(d - 4.0) / p.powi(3);
    let scale = (lap / p).abs() + 2.0 / p.powi(4) + closed.abs();
    Ok(relative(assembled - closed, scale))
}

/// `|-Δ_{g_H} τ - 3|` on B⁴ with `Δ_{g_H}u = ρ²(Δ₀u - 2ρ^{-1}⟨∇ρ, ∇u⟩)`.
/// Only τ' and τ'' enter, so `τ + const` has the same residual.
pub fn tau_pde_residual(r: f64) -> Result<f64> {
    check_open(r)?;
    let p = rho(r)?;
    let dt = -r / p - r;
    let ddt = -(1.0 + r * r) / (2.0 * p * p) - 1.0;
    let d = 4.0;
    let flat = ddt + (d - 1.0) / r * dt;
    let drift = -(d - 2.0) / p * (-r) * dt;
    let terms = [p * p * ddt, p * p * (d - 1.0) / r * dt, p * p * drift];
    let lap_h = p * p * (flat + drift);
    let scale: f64 = terms.iter().map(|x| x.abs()).sum::<f64>() + 3.0;
    Ok(relative(-lap_h - 3.0, scale))
}

/// `|ψ(r, 4+ε)^{4/ε} - e^{2ρ(r)}|`.
pub fn dimension_continuity_gap(r: f64, eps: f64) -> Result<f64> {
    check_closed(r)?;
    if !(eps > 0.0 && eps <= 0.1) {
        return domain(format!("eps must lie in (0, 0.1], got {eps}"));
    }
    let limit = compactified_tau_factor(r)?;
    Ok((psi(r, 4.0 + eps)?.powf(4.0 / eps) - limit).abs())
}

/// Interior grid `r_i = 0.05 + 0.9 i/(n-1)` used by the residual checks.
pub fn interior_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.05 + 0.9 * i as f64 / (n.max(2) - 1) as f64)
        .collect()
}
