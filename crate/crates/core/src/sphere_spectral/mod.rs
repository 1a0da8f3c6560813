//! Zonal spectral analysis and synthesis on S^{d-1}.
//!
//! Functions are represented by coefficients in the orthonormal zonal basis
//! `Y_k(t) = p̂_k(t) / √|S^{d-2}|`, where `p̂_k` are the Gegenbauer polynomials
//! (`λ = (d-2)/2`) normalized against `(1-t²)^{λ-1/2}`. With this scaling
//! `∮ Y_k Y_j dσ = δ_kj` for the unnormalized round measure `dσ`.
//!
//! Every operator used downstream (Δ̃, B, 𝒫₃) is diagonal in k.

mod quadrature;

pub use quadrature::{
    gamma, gauss_angular_rule, gauss_radial_rule, sphere_measure, surface_area, QuadratureRule,
    RuleKind,
};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use quadrature::{gegenbauer_mass, gegenbauer_offdiag};

pub const DEFAULT_ANGULAR_NODES: usize = 200;
pub const DEFAULT_DEGREE_CAP: usize = 64;

/// Coefficients `c_0..c_K` of a zonal function in the orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonalSpectrum {
    pub dimension: f64,
    pub coeffs: Vec<f64>,
}

impl ZonalSpectrum {
    pub fn new(dimension: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !dimension.is_finite() || dimension < 3.0 {
            return Err(Error::Domain(format!(
                "spectrum needs d >= 3, got {dimension}"
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::Domain("spectrum needs at least c_0".into()));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("coefficient c_{k} is not finite")));
        }
        Ok(Self { dimension, coeffs })
    }

    pub fn zeros(dimension: f64, degree_cap: usize) -> Self {
        Self {
            dimension,
            coeffs: vec![0.0; degree_cap + 1],
        }
    }

    /// The single basis function `Y_k`.
    pub fn unit(dimension: f64, degree_cap: usize, k: usize) -> Self {
        let mut s = Self::zeros(dimension, degree_cap);
        s.coeffs[k] = 1.0;
        s
    }

    /// The constant function `value`, i.e. `c_0 = value·√|S^{d-1}|`.
    pub fn constant(dimension: f64, degree_cap: usize, value: f64) -> Self {
        let mut s = Self::zeros(dimension, degree_cap);
        s.coeffs[0] = value * sphere_measure(dimension - 1.0).sqrt();
        s
    }

    pub fn degree_cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dimension: self.dimension,
            coeffs: self.coeffs.iter().map(|c| factor * c).collect(),
        }
    }

    /// `∮ f dσ`; only the mode-0 coefficient survives.
    pub fn surface_integral(&self) -> f64 {
        self.coeffs[0] * sphere_measure(self.dimension - 1.0).sqrt()
    }

    /// Mean against the normalized measure `dξ`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0] / sphere_measure(self.dimension - 1.0).sqrt()
    }

    /// `Σ c_k²`, which equals `∮ f² dσ`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        if self.degree_cap() != other.degree_cap() {
            return Err(Error::DegreeMismatch {
                expected: self.degree_cap(),
                got: other.degree_cap(),
            });
        }
        Ok(())
    }
}

/// Regularity of a zonal profile at the pole `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Smoothness {
    Smooth,
    /// `f(ξ) ~ |ξ - e|^exponent` near the pole `e` (chordal distance).
    EndpointSingular {
        exponent: f64,
    },
}

/// A zonal function `f(ξ) = F(⟨e,ξ⟩)` given by its profile `F` on `[-1, 1]`.
#[derive(Clone)]
pub struct ZonalProfile {
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub smoothness: Smoothness,
}

impl fmt::Debug for ZonalProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZonalProfile")
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

impl ZonalProfile {
    pub fn smooth<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(f),
            smoothness: Smoothness::Smooth,
        }
    }

    pub fn singular<F>(f: F, exponent: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(f),
            smoothness: Smoothness::EndpointSingular { exponent },
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::smooth(move |_| value)
    }

    /// The band-limited function described by `spectrum`.
    pub fn from_spectrum(spectrum: ZonalSpectrum) -> Self {
        Self::smooth(move |t| synthesize(&spectrum, t))
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.evaluator)(t)
    }

    /// Pointwise image `g(f(t))`. A singular exponent is carried over scaled by
    /// `power`, which is correct for `g(y) = |y|^power`.
    pub fn map<G>(&self, g: G, power: f64) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let inner = self.evaluator.clone();
        Self {
            evaluator: Arc::new(move |t| g(inner(t))),
            smoothness: match self.smoothness {
                Smoothness::Smooth => Smoothness::Smooth,
                Smoothness::EndpointSingular { exponent } => Smoothness::EndpointSingular {
                    exponent: exponent * power,
                },
            },
        }
    }

    /// Adds a constant, preserving the smoothness tag.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.evaluator.clone();
        Self {
            evaluator: Arc::new(move |t| inner(t) + c),
            smoothness: self.smoothness,
        }
    }

    fn check_integrable(&self, d: f64, power: f64) -> Result<()> {
        if let Smoothness::EndpointSingular { exponent } = self.smoothness {
            // |ξ-e|^{power·exponent} against θ^{d-2} dθ
            if power * exponent <= -(d - 1.0) {
                return Err(Error::NotIntegrable(format!(
                    "|f|^{power} with endpoint exponent {exponent} diverges on S^{}",
                    d - 1.0
                )));
            }
        }
        Ok(())
    }
}

/// Values `Y_0(t)..Y_K(t)` of the orthonormal zonal harmonics.
pub fn zonal_harmonics(d: f64, degree_cap: usize, t: f64) -> Vec<f64> {
    let lambda = (d - 2.0) / 2.0;
    let b = gegenbauer_offdiag(lambda, degree_cap + 1);
    let y0 = 1.0 / (gegenbauer_mass(lambda) * sphere_measure(d - 2.0)).sqrt();
    let mut out = Vec::with_capacity(degree_cap + 1);
    let (mut prev, mut cur) = (0.0, y0);
    out.push(cur);
    for k in 0..degree_cap {
        let next = (t * cur - b[k] * prev) / b[k + 1];
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// `Y_k`, `Y_k'` and `Y_k''` at `t` for `k = 0..=K`.
pub fn zonal_harmonics_with_derivatives(
    d: f64,
    degree_cap: usize,
    t: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let lambda = (d - 2.0) / 2.0;
    let b = gegenbauer_offdiag(lambda, degree_cap + 1);
    let y0 = 1.0 / (gegenbauer_mass(lambda) * sphere_measure(d - 2.0)).sqrt();
    let n = degree_cap + 1;
    let (mut y, mut dy, mut ddy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    y[0] = y0;
    for k in 0..degree_cap {
        let (yp, dyp, ddyp) = if k == 0 {
            (0.0, 0.0, 0.0)
        } else {
            (y[k - 1], dy[k - 1], ddy[k - 1])
        };
        y[k + 1] = (t * y[k] - b[k] * yp) / b[k + 1];
        dy[k + 1] = (y[k] + t * dy[k] - b[k] * dyp) / b[k + 1];
        ddy[k + 1] = (2.0 * dy[k] + t * ddy[k] - b[k] * ddyp) / b[k + 1];
    }
    (y, dy, ddy)
}

/// `Σ c_k Y_k(t)` by Clenshaw's backward recurrence.
pub fn synthesize(spectrum: &ZonalSpectrum, t: f64) -> f64 {
    let d = spectrum.dimension;
    let lambda = (d - 2.0) / 2.0;
    let kmax = spectrum.degree_cap();
    let b = gegenbauer_offdiag(lambda, kmax + 1);
    let y0 = 1.0 / (gegenbauer_mass(lambda) * sphere_measure(d - 2.0)).sqrt();
    // Y_{k+1} = (t/b_{k+1}) Y_k - (b_k/b_{k+1}) Y_{k-1}
    let (mut acc1, mut acc2) = (0.0, 0.0);
    for k in (0..=kmax).rev() {
        let alpha = t / b[k + 1];
        let beta_next = if k + 2 <= kmax + 1 {
            b[k + 1] / b[k + 2]
        } else {
            0.0
        };
        let acc = spectrum.coeffs[k] + alpha * acc1 - beta_next * acc2;
        acc2 = acc1;
        acc1 = acc;
    }
    y0 * acc1
}

/// Quadrature rule plus a precomputed table of `Y_k` at its nodes.
#[derive(Debug, Clone)]
pub struct ZonalBasis {
    pub dimension: f64,
    pub degree_cap: usize,
    pub rule: QuadratureRule,
    /// `|S^{d-2}|`, the factor turning the 1-D rule into a surface rule.
    pub ring_measure: f64,
    table: Vec<Vec<f64>>,
}

impl ZonalBasis {
    pub fn new(dimension: f64, degree_cap: usize, nodes: usize) -> Result<Self> {
        let rule = gauss_angular_rule(nodes, dimension)?;
        let mut table = vec![Vec::with_capacity(nodes); degree_cap + 1];
        for &t in &rule.nodes {
            for (k, y) in zonal_harmonics(dimension, degree_cap, t)
                .into_iter()
                .enumerate()
            {
                table[k].push(y);
            }
        }
        Ok(Self {
            dimension,
            degree_cap,
            rule,
            ring_measure: sphere_measure(dimension - 2.0),
            table,
        })
    }

    pub fn with_defaults(dimension: f64) -> Result<Self> {
        Self::new(dimension, DEFAULT_DEGREE_CAP, DEFAULT_ANGULAR_NODES)
    }

    pub fn nodes(&self) -> usize {
        self.rule.len()
    }

    /// `|S^{d-1}|`.
    pub fn volume(&self) -> f64 {
        sphere_measure(self.dimension - 1.0)
    }

    /// `c_k = ∮ f Y_k dσ` by quadrature.
    pub fn analyze(&self, profile: &ZonalProfile) -> Result<ZonalSpectrum> {
        profile.check_integrable(self.dimension, 2.0)?;
        let weighted: Vec<f64> = self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(&t, &w)| self.ring_measure * w * profile.eval(t))
            .collect();
        let coeffs = self
            .table
            .iter()
            .map(|row| row.iter().zip(&weighted).map(|(y, fw)| y * fw).sum())
            .collect();
        ZonalSpectrum::new(self.dimension, coeffs)
    }

    /// `∮ F(⟨e,ξ⟩) dσ`.
    pub fn boundary_integral(&self, profile: &ZonalProfile) -> Result<f64> {
        profile.check_integrable(self.dimension, 1.0)?;
        Ok(self.ring_measure * self.rule.integrate(|t| profile.eval(t)))
    }
}

/// One-shot analysis with a freshly built rule of `DEFAULT_ANGULAR_NODES` nodes.
pub fn analyze(profile: &ZonalProfile, d: f64, degree_cap: usize) -> Result<ZonalSpectrum> {
    let nodes = DEFAULT_ANGULAR_NODES.max(degree_cap + 1);
    ZonalBasis::new(d, degree_cap, nodes)?.analyze(profile)
}

/// One-shot surface integral with a `DEFAULT_ANGULAR_NODES`-node rule.
pub fn boundary_integral(profile: &ZonalProfile, d: f64) -> Result<f64> {
    profile.check_integrable(d, 1.0)?;
    let rule = gauss_angular_rule(DEFAULT_ANGULAR_NODES, d)?;
    Ok(sphere_measure(d - 2.0) * rule.integrate(|t| profile.eval(t)))
}

/// Diagonal operators on zonal spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    /// Δ̃, eigenvalue `-k(k+d-2)`.
    LaplaceBeltrami,
    /// `B = √(-Δ̃ + ((d-2)/2)²)`, eigenvalue `k + (d-2)/2`.
    B,
    /// `𝒫₃ = (B-1)B(B+1)`.
    P3,
}

impl Multiplier {
    pub fn eigenvalue(self, d: f64, k: usize) -> f64 {
        let kf = k as f64;
        match self {
            Multiplier::LaplaceBeltrami => -kf * (kf + d - 2.0),
            Multiplier::B => kf + (d - 2.0) / 2.0,
            Multiplier::P3 => (kf + (d - 4.0) / 2.0) * (kf + (d - 2.0) / 2.0) * (kf + d / 2.0),
        }
    }
}

pub fn apply_multiplier(spectrum: &ZonalSpectrum, kind: Multiplier) -> ZonalSpectrum {
    let d = spectrum.dimension;
    ZonalSpectrum {
        dimension: d,
        coeffs: spectrum
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| kind.eigenvalue(d, k) * c)
            .collect(),
    }
}

/// Pairings `∮ f A f dσ` that appear in the inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticForm {
    P3,
    B,
    /// `∮ |∇̃f|² dσ = Σ k(k+d-2) c_k²`.
    Gradient,
}

pub fn quadratic_form(spectrum: &ZonalSpectrum, kind: QuadraticForm) -> f64 {
    let d = spectrum.dimension;
    let mult = match kind {
        QuadraticForm::P3 => Multiplier::P3,
        QuadraticForm::B => Multiplier::B,
        QuadraticForm::Gradient => Multiplier::LaplaceBeltrami,
    };
    let sign = if kind == QuadraticForm::Gradient {
        -1.0
    } else {
        1.0
    };
    spectrum
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| sign * mult.eigenvalue(d, k) * c * c)
        .sum()
}
