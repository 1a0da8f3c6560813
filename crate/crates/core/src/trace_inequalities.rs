//! Evaluators for the fourth-order trace inequalities, the Beckner and Escobar
//! inequalities, and the per-mode energy identity behind them.
//!
//! Left-hand sides (the nonlinear `L^q` or exponential terms) are computed by
//! direct quadrature of the profile. Right-hand sides are quadratic forms of
//! the analyzed spectrum and of its extension into the ball, all in closed form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball_extension::{bilaplacian_energy, extend_biharmonic, extend_harmonic};
use crate::error::{Error, Result};
use crate::sphere_spectral::{
    quadratic_form, QuadraticForm, Smoothness, ZonalBasis, ZonalProfile, ZonalSpectrum,
};

/// Largest `|z₀|` accepted for extremal families; beyond it the quadrature
/// tolerances are no longer met at the default resolution.
pub const MAX_EXTREMAL_T: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Which {
    #[serde(rename = "thmA")]
    ThmA,
    #[serde(rename = "thmB")]
    ThmB,
    #[serde(rename = "beckner_a")]
    BecknerA,
    #[serde(rename = "beckner_b")]
    BecknerB,
    #[serde(rename = "escobar")]
    Escobar,
}

impl Which {
    pub const ALL: [Which; 5] = [
        Which::ThmA,
        Which::ThmB,
        Which::BecknerA,
        Which::BecknerB,
        Which::Escobar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Which::ThmA => "thmA",
            Which::ThmB => "thmB",
            Which::BecknerA => "beckner_a",
            Which::BecknerB => "beckner_b",
            Which::Escobar => "escobar",
        }
    }

    pub fn applies_to(self, d: f64) -> bool {
        match self {
            Which::ThmB | Which::BecknerA => d == 4.0,
            Which::ThmA | Which::BecknerB => d > 4.0,
            Which::Escobar => d >= 3.0,
        }
    }
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Which {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Which::ALL
            .into_iter()
            .find(|w| w.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown inequality {s:?}")))
    }
}

/// Neumann datum used for the biharmonic extension on the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NeumannChoice {
    /// `-(d-4)/2 · f` for d > 4, and `0` for d = 4.
    Adopted,
    /// `-(d-4)/4 · f`, kept to document that it fails at the equality case.
    QuarterCoefficient,
    /// The harmonic extension's own normal derivative, `k c_k` per mode.
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub which: Which,
    pub d: f64,
    #[serde(rename = "K")]
    pub degree_cap: usize,
    pub angular_nodes: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub rel_gap: f64,
    pub neumann: Option<NeumannChoice>,
    pub params: BTreeMap<String, f64>,
}

impl InequalityReport {
    fn new(
        which: Which,
        basis: &ZonalBasis,
        lhs: f64,
        rhs: f64,
        neumann: Option<NeumannChoice>,
    ) -> Self {
        let (gap, rel_gap) = gaps(lhs, rhs);
        Self {
            which,
            d: basis.dimension,
            degree_cap: basis.degree_cap,
            angular_nodes: basis.nodes(),
            lhs,
            rhs,
            gap,
            rel_gap,
            neumann,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// `gap >= -tol · max(|lhs|, |rhs|)`.
    pub fn holds(&self, tol: f64) -> bool {
        self.gap >= -tol * self.lhs.abs().max(self.rhs.abs())
    }
}

fn gaps(lhs: f64, rhs: f64) -> (f64, f64) {
    let gap = rhs - lhs;
    (gap, gap / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ExtremalFamily {
    /// `-log(1 - t u) + c`, for d = 4.
    LogD4 { t: f64, c: f64 },
    /// `|1 - t u|^alpha`.
    Power { t: f64, alpha: f64 },
}

impl ExtremalFamily {
    pub fn t(&self) -> f64 {
        match *self {
            Self::LogD4 { t, .. } | Self::Power { t, .. } => t,
        }
    }

    pub fn check_dimension(&self, d: f64) -> Result<()> {
        if matches!(self, Self::LogD4 { .. }) && d != 4.0 {
            return Err(Error::Domain(format!("log family needs d = 4, got {d}")));
        }
        Ok(())
    }
}

pub fn extremal_profile(family: ExtremalFamily) -> Result<ZonalProfile> {
    let t = family.t();
    if !(0.0..=MAX_EXTREMAL_T).contains(&t) {
        return Err(Error::Domain(format!(
            "extremal parameter t = {t} outside [0, {MAX_EXTREMAL_T}]"
        )));
    }
    // 1 - t u >= 1 - t > 0, so both families are smooth on [-1, 1]
    Ok(match family {
        ExtremalFamily::LogD4 { t, c } => ZonalProfile::smooth(move |u| c - (1.0 - t * u).ln()),
        ExtremalFamily::Power { t, alpha } => {
            ZonalProfile::smooth(move |u| (1.0 - t * u).abs().powf(alpha))
        }
    })
}

/// Member of the equality family of `which` at parameter `t`.
///
/// thmB uses `-log(1 - t u)`, beckner_a three times that, thmA and beckner_b use
/// `|1 - t u|^{(4-d)/2}`, and escobar `|1 - t u|^{(2-d)/2}`.
pub fn equality_profile(which: Which, d: f64, t: f64) -> Result<ZonalProfile> {
    require(which, d)?;
    match which {
        Which::ThmB => extremal_profile(ExtremalFamily::LogD4 { t, c: 0.0 }),
        Which::BecknerA => {
            Ok(extremal_profile(ExtremalFamily::LogD4 { t, c: 0.0 })?.map(|y| 3.0 * y, 1.0))
        }
        Which::ThmA | Which::BecknerB => extremal_profile(ExtremalFamily::Power {
            t,
            alpha: (4.0 - d) / 2.0,
        }),
        Which::Escobar => extremal_profile(ExtremalFamily::Power {
            t,
            alpha: (2.0 - d) / 2.0,
        }),
    }
}

fn require(which: Which, d: f64) -> Result<()> {
    if !which.applies_to(d) {
        return Err(Error::Domain(format!("{which} is not defined for d = {d}")));
    }
    Ok(())
}

fn check_exponentiable(profile: &ZonalProfile) -> Result<()> {
    if let Smoothness::EndpointSingular { exponent } = profile.smoothness {
        if exponent < 0.0 {
            return Err(Error::NotIntegrable(
                "exponential of a profile that blows up at the pole".into(),
            ));
        }
    }
    Ok(())
}

/// `∮ |f|^p dσ` by quadrature.
fn lp_integral(basis: &ZonalBasis, profile: &ZonalProfile, p: f64) -> Result<f64> {
    basis.boundary_integral(&profile.map(move |y| y.abs().powf(p), p))
}

/// `log ⨍ e^{s(φ-φ̄)} dξ`.
fn log_mean_exp(basis: &ZonalBasis, profile: &ZonalProfile, s: f64) -> Result<f64> {
    check_exponentiable(profile)?;
    let vol = basis.volume();
    let mean = basis.boundary_integral(profile)? / vol;
    let integral = basis.boundary_integral(&profile.map(move |y| (s * (y - mean)).exp(), 0.0))?;
    if !integral.is_finite() {
        return Err(Error::NotIntegrable("exponential integral diverged".into()));
    }
    Ok((integral / vol).ln())
}

/// Neumann spectrum for the given choice; `None` selects the harmonic extension.
fn neumann_datum(spectrum: &ZonalSpectrum, choice: NeumannChoice) -> Option<ZonalSpectrum> {
    let d = spectrum.dimension;
    match choice {
        NeumannChoice::Adopted => Some(spectrum.scaled(-(d - 4.0) / 2.0)),
        NeumannChoice::QuarterCoefficient => Some(spectrum.scaled(-(d - 4.0) / 4.0)),
        NeumannChoice::Harmonic => None,
    }
}

fn extension_energy(spectrum: &ZonalSpectrum, choice: NeumannChoice) -> Result<f64> {
    Ok(match neumann_datum(spectrum, choice) {
        Some(neumann) => bilaplacian_energy(&extend_biharmonic(spectrum, &neumann)?),
        None => bilaplacian_energy(&extend_harmonic(spectrum)),
    })
}

/// Evaluates one inequality for `profile` with the adopted Neumann datum.
pub fn evaluate(
    which: Which,
    profile: &ZonalProfile,
    basis: &ZonalBasis,
) -> Result<InequalityReport> {
    evaluate_with(which, profile, basis, NeumannChoice::Adopted)
}

/// As [`evaluate`], with an explicit Neumann datum for thmA and thmB. The other
/// inequalities do not involve a biharmonic extension and ignore it.
pub fn evaluate_with(
    which: Which,
    profile: &ZonalProfile,
    basis: &ZonalBasis,
    neumann: NeumannChoice,
) -> Result<InequalityReport> {
    let d = basis.dimension;
    require(which, d)?;
    let vol = basis.volume();
    let spectrum = basis.analyze(profile)?;
    let report = match which {
        Which::ThmA => {
            let q = 2.0 * (d - 1.0) / (d - 4.0);
            let cd = d * (d - 2.0) * (d - 4.0) / 4.0;
            let bd = d * (d - 4.0) / 2.0;
            let lhs = cd
                * vol.powf(3.0 / (d - 1.0))
                * lp_integral(basis, profile, q)?.powf((d - 4.0) / (d - 1.0));
            let rhs = extension_energy(&spectrum, neumann)?
                + 2.0 * quadratic_form(&spectrum, QuadraticForm::Gradient)
                + bd * spectrum.l2_norm_sq();
            InequalityReport::new(which, basis, lhs, rhs, Some(neumann))
        }
        Which::ThmB => {
            let pi2 = std::f64::consts::PI.powi(2);
            let lhs = log_mean_exp(basis, profile, 3.0)?;
            let rhs = 3.0 / (16.0 * pi2) * extension_energy(&spectrum, neumann)?
                + 3.0 / (8.0 * pi2) * quadratic_form(&spectrum, QuadraticForm::Gradient);
            InequalityReport::new(which, basis, lhs, rhs, Some(neumann))
        }
        Which::BecknerA => {
            let lhs = log_mean_exp(basis, profile, 1.0)?;
            let rhs = quadratic_form(&spectrum, QuadraticForm::P3) / (12.0 * vol);
            InequalityReport::new(which, basis, lhs, rhs, None)
        }
        Which::BecknerB => {
            let q = 2.0 * (d - 1.0) / (d - 4.0);
            let ad = d * (d - 2.0) * (d - 4.0) / 8.0;
            let lhs = ad * (lp_integral(basis, profile, q)? / vol).powf(2.0 / q);
            let rhs = quadratic_form(&spectrum, QuadraticForm::P3) / vol;
            InequalityReport::new(which, basis, lhs, rhs, None)
        }
        Which::Escobar => {
            let q = 2.0 * (d - 1.0) / (d - 2.0);
            let half = (d - 2.0) / 2.0;
            let lhs = half
                * vol.powf(1.0 / (d - 1.0))
                * lp_integral(basis, profile, q)?.powf((d - 2.0) / (d - 1.0));
            // ∫|∇v|² = Σ k c_k² for the harmonic extension v
            let dirichlet: f64 = spectrum
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| k as f64 * c * c)
                .sum();
            let rhs = dirichlet + half * spectrum.l2_norm_sq();
            InequalityReport::new(which, basis, lhs, rhs, Some(NeumannChoice::Harmonic))
        }
    };
    Ok(report)
}

/// Relative residual of `2∮f𝒫₃f = ∫(Δv)² + 2∮|∇̃f|² + d(d-4)/2 ∮f²`, where `v` is
/// the biharmonic extension with Neumann datum `-(d-4)/2 · f`.
pub fn energy_identity_gap(spectrum: &ZonalSpectrum) -> Result<f64> {
    let d = spectrum.dimension;
    if d < 4.0 {
        return Err(Error::Domain(format!(
            "energy identity needs d >= 4, got {d}"
        )));
    }
    let lhs = 2.0 * quadratic_form(spectrum, QuadraticForm::P3);
    let rhs = extension_energy(spectrum, NeumannChoice::Adopted)?
        + 2.0 * quadratic_form(spectrum, QuadraticForm::Gradient)
        + d * (d - 4.0) / 2.0 * spectrum.l2_norm_sq();
    let scale = lhs.abs().max(rhs.abs());
    Ok(if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub rel_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentScan {
    pub d: f64,
    pub t: f64,
    pub rows: Vec<ScanRow>,
    pub minimizer: f64,
    /// Smallest runner-up `|rel_gap|` divided by the minimizer's.
    pub separation: f64,
    /// Whether `separation >= SEPARATION_THRESHOLD`.
    pub separated: bool,
}

pub const SEPARATION_THRESHOLD: f64 = 100.0;

/// `(4-d)/4`, `(4-d)/2` and `4-d`.
pub fn default_alphas(d: f64) -> Vec<f64> {
    vec![(4.0 - d) / 4.0, (4.0 - d) / 2.0, 4.0 - d]
}

/// Scans the beckner_b gap of `|1 - t u|^α` over `alphas`.
pub fn exponent_scan(t: f64, alphas: &[f64], basis: &ZonalBasis) -> Result<ExponentScan> {
    let d = basis.dimension;
    require(Which::BecknerB, d)?;
    if alphas.is_empty() {
        return Err(Error::Domain(
            "exponent scan needs at least one alpha".into(),
        ));
    }
    let rows = alphas
        .iter()
        .map(|&alpha| {
            let profile = extremal_profile(ExtremalFamily::Power { t, alpha })?;
            let r = evaluate(Which::BecknerB, &profile, basis)?;
            Ok(ScanRow {
                alpha,
                lhs: r.lhs,
                rhs: r.rhs,
                gap: r.gap,
                rel_gap: r.rel_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (0..rows.len())
        .min_by(|&i, &j| rows[i].rel_gap.abs().total_cmp(&rows[j].rel_gap.abs()))
        .expect("rows is non-empty");
    let best_gap = rows[best].rel_gap.abs();
    let runner_up = rows
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, r)| r.rel_gap.abs())
        .fold(f64::INFINITY, f64::min);
    let separation = if runner_up.is_infinite() {
        f64::INFINITY
    } else if best_gap == 0.0 {
        if runner_up == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        runner_up / best_gap
    };
    Ok(ExponentScan {
        d,
        t,
        minimizer: rows[best].alpha,
        separated: separation >= SEPARATION_THRESHOLD,
        separation,
        rows,
    })
}

/// Seed of trial `index` in a run seeded with `seed` (SplitMix64 finalizer).
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `c_k = e^{-decay·k} U_k` with `U_k` uniform on `[-1, 1)` from a ChaCha8 stream
/// seeded by `seed`.
pub fn random_spectrum(seed: u64, d: f64, degree_cap: usize, decay: f64) -> Result<ZonalSpectrum> {
    if decay.is_nan() || decay <= 0.0 {
        return Err(Error::Domain(format!(
            "decay must be positive, got {decay}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..=degree_cap)
        .map(|k| (-decay * k as f64).exp() * rng.gen_range(-1.0..1.0))
        .collect();
    ZonalSpectrum::new(d, coeffs)
}
