//! The four-dimensional boundary functional `I₂ = b₂ + D/12` on the flat ball and
//! its value for the adapted metric, reached through the conformal invariance of
//! `(Q₄, T₃)`.
//!
//! On the flat model `Q₄ = 0`, `T₃ = 2`, and
//! `P₃ᵇ = -½ ∂ₙΔ₀ - Δ̃∂ₙ - Δ̃` with outward normals.

use serde::{Deserialize, Serialize};

use crate::ball_extension::{bilaplacian_pairing, boundary_jet, ExtensionField};
use crate::error::{Error, Result};
use crate::sphere_spectral::{ZonalBasis, ZonalProfile, ZonalSpectrum};

/// Neumann traces below this (relative to the Dirichlet scale) count as zero.
pub const NEUMANN_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Flat,
    Gstar,
}

/// Boundary class of an extension of `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintClass {
    /// Dirichlet `φ`, Neumann `0`.
    CPhi,
    /// Dirichlet `φ`, Neumann `-1`.
    CTildePhi,
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct I2Report {
    pub b2: f64,
    pub d_term: f64,
    pub i2: f64,
    pub metric: Metric,
    pub class: ConstraintClass,
    /// Additive constant applied to `φ` before extension, if any.
    pub normalization: f64,
}

impl I2Report {
    pub fn with_normalization(mut self, c: f64) -> Self {
        self.normalization = c;
        self
    }
}

fn require_d4(field: &ExtensionField) -> Result<()> {
    if field.dimension != 4.0 {
        return Err(Error::Domain(format!(
            "boundary functionals need d = 4, got {}",
            field.dimension
        )));
    }
    Ok(())
}

fn unit_mass() -> f64 {
    // ∮ Y₀ dσ = √|S³|
    (2.0 * std::f64::consts::PI.powi(2)).sqrt()
}

/// Spectrum of `P₃ᵇw` on S³.
pub fn p3b_boundary(field: &ExtensionField) -> Result<ZonalSpectrum> {
    require_d4(field)?;
    let jet = boundary_jet(field);
    let coeffs = (0..=field.degree_cap)
        .map(|k| {
            let lap = (k * (k + 2)) as f64;
            -0.5 * jet.normal_of_laplacian.coeffs[k]
                + lap * jet.normal.coeffs[k]
                + lap * jet.value.coeffs[k]
        })
        .collect();
    Ok(ZonalSpectrum {
        dimension: 4.0,
        coeffs,
    })
}

/// `b₂ = ¼∫wΔ²w + ½∮wP₃ᵇw + 2∮w`.
pub fn b2_flat(field: &ExtensionField) -> Result<f64> {
    let p3b = p3b_boundary(field)?;
    let value = &field.dirichlet_trace();
    let boundary: f64 = value
        .coeffs
        .iter()
        .zip(&p3b.coeffs)
        .map(|(a, b)| a * b)
        .sum();
    Ok(0.25 * bilaplacian_pairing(field) + 0.5 * boundary + 2.0 * value.coeffs[0] * unit_mass())
}

/// `D = 3∮(∂ₙw - ∂ₙₙw)`; only mode 0 survives the integral.
pub fn d_term_flat(field: &ExtensionField) -> Result<f64> {
    require_d4(field)?;
    let jet = boundary_jet(field);
    Ok(3.0 * (jet.normal.coeffs[0] - jet.normal2.coeffs[0]) * unit_mass())
}

/// Classifies the field by its Neumann trace.
pub fn constraint_class(field: &ExtensionField) -> ConstraintClass {
    let jet = boundary_jet(field);
    let scale = jet.value.coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let tol = NEUMANN_ZERO_TOL * scale;
    let rest_zero = jet.normal.coeffs[1..].iter().all(|c| c.abs() <= tol);
    let n0 = jet.normal.coeffs[0];
    if rest_zero && n0.abs() <= tol {
        ConstraintClass::CPhi
    } else if rest_zero && (n0 + unit_mass()).abs() <= tol {
        ConstraintClass::CTildePhi
    } else {
        ConstraintClass::Unconstrained
    }
}

pub fn i2(field: &ExtensionField, metric: Metric) -> Result<I2Report> {
    require_d4(field)?;
    let class = constraint_class(field);
    let b2 = b2_flat(field)?;
    let d_term = match metric {
        Metric::Flat => d_term_flat(field)?,
        Metric::Gstar => {
            if class != ConstraintClass::CPhi {
                return Err(Error::ClassViolation(
                    "the adapted-metric functional needs a vanishing Neumann trace".into(),
                ));
            }
            0.0
        }
    };
    Ok(I2Report {
        b2,
        d_term,
        i2: b2 + d_term / 12.0,
        metric,
        class,
        normalization: 0.0,
    })
}

/// Shifts `φ` by `c = -⅓ log(⨍ e^{3φ})` so that `∮ e^{3φ} dσ = |S³|`.
pub fn normalize_constraint(
    profile: &ZonalProfile,
    basis: &ZonalBasis,
) -> Result<(ZonalProfile, f64)> {
    if basis.dimension != 4.0 {
        return Err(Error::Domain(format!(
            "constraint normalization needs d = 4, got {}",
            basis.dimension
        )));
    }
    let integral = basis.boundary_integral(&profile.map(|y| (3.0 * y).exp(), 0.0))?;
    if !integral.is_finite() || integral <= 0.0 {
        return Err(Error::NotIntegrable("∮ e^{3φ} diverged".into()));
    }
    let c = -(integral / basis.volume()).ln() / 3.0;
    Ok((profile.shifted(c), c))
}

/// Adds `ρ = (1 - r²)/2`, which has Dirichlet trace 0 and Neumann trace -1.
pub fn add_rho(field: &ExtensionField) -> Result<ExtensionField> {
    require_d4(field)?;
    let norm = unit_mass();
    let mut out = field.clone();
    out.modes[0][0] += 0.5 * norm;
    out.modes[0][1] -= 0.5 * norm;
    out.neumann.coeffs[0] -= norm;
    out.order = out.order.max(1);
    Ok(out)
}

impl ExtensionField {
    /// Dirichlet trace read off the modes (equals `dirichlet` for unperturbed fields).
    pub fn dirichlet_trace(&self) -> ZonalSpectrum {
        boundary_jet(self).value
    }
}
