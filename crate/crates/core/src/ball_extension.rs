//! Radial-times-zonal extensions of boundary data into B^d.
//!
//! Mode k of a field is `w_k(r) = Σ_j u_{k,j} r^{k+2j}` for `j ≤ 2`. The flat
//! Laplacian acts on a single monomial as
//! `Δ₀(r^{k+2j} Y_k) = 2j(2k+2j+d-2) r^{k+2j-2} Y_k`, so every energy and boundary
//! jet below is an exact rational expression in the coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere_spectral::{
    gauss_angular_rule, gauss_radial_rule, sphere_measure, zonal_harmonics_with_derivatives,
    QuadratureRule, RuleKind, ZonalSpectrum,
};

pub const MAX_ORDER: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionField {
    pub dimension: f64,
    pub degree_cap: usize,
    /// Highest power index `j` in use: 0 harmonic, 1 biharmonic, 2 perturbed.
    pub order: usize,
    /// `modes[k][j] = u_{k,j}`.
    pub modes: Vec<[f64; MAX_ORDER + 1]>,
    pub dirichlet: ZonalSpectrum,
    pub neumann: ZonalSpectrum,
}

/// Boundary traces of a field on S^{d-1}, each as a zonal spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryJet {
    pub value: ZonalSpectrum,
    pub normal: ZonalSpectrum,
    pub normal2: ZonalSpectrum,
    pub tangential_laplacian: ZonalSpectrum,
    pub ambient_laplacian: ZonalSpectrum,
    pub normal_of_laplacian: ZonalSpectrum,
}

/// Coefficient of `r^{k+2j-2}` in `Δ₀(r^{k+2j})` restricted to mode k.
fn laplace_factor(d: f64, k: usize, j: usize) -> f64 {
    let (kf, jf) = (k as f64, j as f64);
    2.0 * jf * (2.0 * kf + 2.0 * jf + d - 2.0)
}

/// Biharmonic field with prescribed Dirichlet and Neumann spectra.
///
/// Per mode, `a + b = c` and `k a + (k+2) b = n`, whose determinant is 2.
pub fn extend_biharmonic(
    dirichlet: &ZonalSpectrum,
    neumann: &ZonalSpectrum,
) -> Result<ExtensionField> {
    dirichlet.check_compatible(neumann)?;
    let modes = dirichlet
        .coeffs
        .iter()
        .zip(&neumann.coeffs)
        .enumerate()
        .map(|(k, (&c, &n))| {
            let b = (n - k as f64 * c) / 2.0;
            [c - b, b, 0.0]
        })
        .collect();
    Ok(ExtensionField {
        dimension: dirichlet.dimension,
        degree_cap: dirichlet.degree_cap(),
        order: 1,
        modes,
        dirichlet: dirichlet.clone(),
        neumann: neumann.clone(),
    })
}

/// Harmonic extension `Σ c_k r^k Y_k`.
pub fn extend_harmonic(dirichlet: &ZonalSpectrum) -> ExtensionField {
    let neumann = ZonalSpectrum {
        dimension: dirichlet.dimension,
        coeffs: dirichlet
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| k as f64 * c)
            .collect(),
    };
    ExtensionField {
        dimension: dirichlet.dimension,
        degree_cap: dirichlet.degree_cap(),
        order: 0,
        modes: dirichlet.coeffs.iter().map(|&c| [c, 0.0, 0.0]).collect(),
        dirichlet: dirichlet.clone(),
        neumann,
    }
}

/// Adds `ε r^k (r²-1)² Y_k`, which has vanishing Dirichlet and Neumann traces.
pub fn add_perturbation(field: &ExtensionField, k: usize, eps: f64) -> Result<ExtensionField> {
    if k > field.degree_cap {
        return Err(Error::Domain(format!(
            "perturbation degree {k} exceeds K = {}",
            field.degree_cap
        )));
    }
    let mut out = field.clone();
    if eps == 0.0 {
        return Ok(out);
    }
    let m = &mut out.modes[k];
    m[0] += eps;
    m[1] -= 2.0 * eps;
    m[2] += eps;
    out.order = MAX_ORDER;
    Ok(out)
}

impl ExtensionField {
    /// Sum of two fields on the same ball; boundary records add as well.
    pub fn add(&self, other: &ExtensionField) -> Result<ExtensionField> {
        self.dirichlet.check_compatible(&other.dirichlet)?;
        let sum = |a: &ZonalSpectrum, b: &ZonalSpectrum| ZonalSpectrum {
            dimension: a.dimension,
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
        };
        Ok(ExtensionField {
            dimension: self.dimension,
            degree_cap: self.degree_cap,
            order: self.order.max(other.order),
            modes: self
                .modes
                .iter()
                .zip(&other.modes)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
                .collect(),
            dirichlet: sum(&self.dirichlet, &other.dirichlet),
            neumann: sum(&self.neumann, &other.neumann),
        })
    }

    pub fn zero(dimension: f64, degree_cap: usize) -> Self {
        extend_harmonic(&ZonalSpectrum::zeros(dimension, degree_cap))
    }

    /// Radial profile of mode k and its first two r-derivatives.
    pub fn radial_mode(&self, k: usize, r: f64) -> (f64, f64, f64) {
        let (mut v, mut dv, mut ddv) = (0.0, 0.0, 0.0);
        for (j, &u) in self.modes[k].iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            let p = (k + 2 * j) as i32;
            let pf = p as f64;
            v += u * r.powi(p);
            if p >= 1 {
                dv += u * pf * r.powi(p - 1);
            }
            if p >= 2 {
                ddv += u * pf * (pf - 1.0) * r.powi(p - 2);
            }
        }
        (v, dv, ddv)
    }

    /// Point value at radius r and polar cosine t.
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let y = crate::sphere_spectral::zonal_harmonics(self.dimension, self.degree_cap, t);
        (0..=self.degree_cap)
            .map(|k| self.radial_mode(k, r).0 * y[k])
            .sum()
    }

    /// `Σ_j u_{k,j}` must reproduce the recorded Dirichlet data.
    pub fn dirichlet_residual(&self) -> f64 {
        self.modes
            .iter()
            .zip(&self.dirichlet.coeffs)
            .map(|(m, c)| (m.iter().sum::<f64>() - c).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ_j (k+2j) u_{k,j}` must reproduce the recorded Neumann data.
    pub fn neumann_residual(&self) -> f64 {
        self.modes
            .iter()
            .zip(&self.neumann.coeffs)
            .enumerate()
            .map(|(k, (m, n))| {
                let got: f64 = m
                    .iter()
                    .enumerate()
                    .map(|(j, u)| (k + 2 * j) as f64 * u)
                    .sum();
                (got - n).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Per-mode polynomial coefficients of `Δ₀w`: `(exponent, coefficient)` pairs.
    fn laplacian_terms(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let d = self.dimension;
        (1..=MAX_ORDER).map(move |j| (k + 2 * j - 2, laplace_factor(d, k, j) * self.modes[k][j]))
    }
}

/// `∫_B (Δ₀w)² dx` in closed form.
pub fn bilaplacian_energy(field: &ExtensionField) -> f64 {
    let d = field.dimension;
    (0..=field.degree_cap)
        .map(|k| {
            let terms: Vec<(usize, f64)> = field.laplacian_terms(k).collect();
            let mut e = 0.0;
            for &(pi, ai) in &terms {
                for &(pj, aj) in &terms {
                    e += ai * aj / ((pi + pj) as f64 + d);
                }
            }
            e
        })
        .sum()
}

/// `∫_B w Δ₀²w dx` in closed form. Vanishes for biharmonic fields.
pub fn bilaplacian_pairing(field: &ExtensionField) -> f64 {
    let d = field.dimension;
    (0..=field.degree_cap)
        .map(|k| {
            let top = field.modes[k][2];
            if top == 0.0 {
                return 0.0;
            }
            // Δ₀²(r^{k+4}) = 8(2k+d+2)(2k+d) r^k
            let kf = k as f64;
            let bilap = 8.0 * (2.0 * kf + d + 2.0) * (2.0 * kf + d) * top;
            field.modes[k]
                .iter()
                .enumerate()
                .map(|(j, u)| u * bilap / (2.0 * kf + 2.0 * j as f64 + d))
                .sum::<f64>()
        })
        .sum()
}

/// `∫_B |∇w|² dx = Σ k c_k²` for harmonic fields.
pub fn dirichlet_energy(field: &ExtensionField) -> Result<f64> {
    if field.order != 0 {
        return Err(Error::Unsupported(format!(
            "dirichlet_energy needs a harmonic field, got order {}",
            field.order
        )));
    }
    Ok(field
        .modes
        .iter()
        .enumerate()
        .map(|(k, m)| k as f64 * m[0] * m[0])
        .sum())
}

fn tensor_laplacian_energy(
    field: &ExtensionField,
    radial: &QuadratureRule,
    angular: &QuadratureRule,
) -> f64 {
    let d = field.dimension;
    let kmax = field.degree_cap;
    // Y_k and Δ̃Y_k = (1-t²)Y_k'' - (d-1)t Y_k' at each angular node
    let angular_tables: Vec<(Vec<f64>, Vec<f64>)> = angular
        .nodes
        .iter()
        .map(|&t| {
            let (y, dy, ddy) = zonal_harmonics_with_derivatives(d, kmax, t);
            let lap = (0..=kmax)
                .map(|k| (1.0 - t * t) * ddy[k] - (d - 1.0) * t * dy[k])
                .collect();
            (y, lap)
        })
        .collect();

    let mut total = 0.0;
    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        let mut radial_part = Vec::with_capacity(kmax + 1);
        let mut angular_part = Vec::with_capacity(kmax + 1);
        for k in 0..=kmax {
            let (v, dv, ddv) = field.radial_mode(k, r);
            radial_part.push(ddv + (d - 1.0) / r * dv);
            angular_part.push(v / (r * r));
        }
        let shell: f64 = angular_tables
            .iter()
            .zip(&angular.weights)
            .map(|((y, lap), &wt)| {
                let mut value = 0.0;
                for k in 0..=kmax {
                    value += radial_part[k] * y[k] + angular_part[k] * lap[k];
                }
                wt * value * value
            })
            .sum();
        total += wr * r.powf(d - 1.0) * shell;
    }
    sphere_measure(d - 2.0) * total
}

/// `∫_B (Δ₀w)² dx` by tensor quadrature, evaluating `Δ₀` in `(r, t)` coordinates.
///
/// When the rules are too small to integrate the polynomial integrand exactly,
/// the estimate is compared against doubled rules and rejected if they disagree
/// beyond `1e-10` relative.
pub fn energy_quadrature(
    field: &ExtensionField,
    radial: &QuadratureRule,
    angular: &QuadratureRule,
) -> Result<f64> {
    if radial.kind != RuleKind::RadialLegendre || angular.kind != RuleKind::AngularJacobi {
        return Err(Error::Domain(
            "energy_quadrature needs a radial and an angular rule".into(),
        ));
    }
    if angular.dimension != Some(field.dimension) {
        return Err(Error::DimensionMismatch {
            expected: field.dimension,
            got: angular.dimension.unwrap_or(f64::NAN),
        });
    }
    let coarse = tensor_laplacian_energy(field, radial, angular);
    if resolves(field, radial.len(), angular.len()) {
        return Ok(coarse);
    }
    let radial2 = gauss_radial_rule(2 * radial.len())?;
    let angular2 = gauss_angular_rule(2 * angular.len(), field.dimension)?;
    let refined = tensor_laplacian_energy(field, &radial2, &angular2);
    if (coarse - refined).abs() <= 1e-10 * refined.abs().max(f64::MIN_POSITIVE) {
        Ok(coarse)
    } else {
        Err(Error::UnderResolved { coarse, refined })
    }
}

/// Whether `(n_r, n_a)`-point rules integrate `(Δ₀w)² r^{d-1}` exactly.
pub fn resolves(field: &ExtensionField, radial_nodes: usize, angular_nodes: usize) -> bool {
    let d = field.dimension;
    if d.fract() != 0.0 {
        return false;
    }
    let kmax = field.degree_cap;
    let angular_ok = 2 * angular_nodes > 2 * kmax;
    let radial_degree = if field.order == 0 {
        0
    } else {
        2 * (kmax + 2 * field.order - 2) + d as usize - 1
    };
    angular_ok && 2 * radial_nodes > radial_degree
}

/// Exact boundary traces from the radial monomials at `r = 1`.
pub fn boundary_jet(field: &ExtensionField) -> BoundaryJet {
    let d = field.dimension;
    let n = field.degree_cap + 1;
    let mut value = vec![0.0; n];
    let mut normal = vec![0.0; n];
    let mut normal2 = vec![0.0; n];
    let mut tangential = vec![0.0; n];
    let mut ambient = vec![0.0; n];
    let mut normal_lap = vec![0.0; n];
    for k in 0..n {
        let kf = k as f64;
        for (j, &u) in field.modes[k].iter().enumerate() {
            let p = (k + 2 * j) as f64;
            value[k] += u;
            normal[k] += p * u;
            normal2[k] += p * (p - 1.0) * u;
        }
        tangential[k] = -kf * (kf + d - 2.0) * value[k];
        for (p, a) in field.laplacian_terms(k) {
            ambient[k] += a;
            normal_lap[k] += p as f64 * a;
        }
    }
    let wrap = |coeffs| ZonalSpectrum {
        dimension: d,
        coeffs,
    };
    BoundaryJet {
        value: wrap(value),
        normal: wrap(normal),
        normal2: wrap(normal2),
        tangential_laplacian: wrap(tangential),
        ambient_laplacian: wrap(ambient),
        normal_of_laplacian: wrap(normal_lap),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_spectral::sphere_measure;
    use std::f64::consts::PI;

    #[test]
    fn biharmonic_solve_d4_unit_c1() {
        let f = ZonalSpectrum::unit(4.0, 3, 1);
        let w = extend_biharmonic(&f, &ZonalSpectrum::zeros(4.0, 3)).unwrap();
        assert_eq!(w.modes[1], [1.5, -0.5, 0.0]);
        assert_eq!(w.dirichlet_residual(), 0.0);
        assert_eq!(w.neumann_residual(), 0.0);
        assert_eq!(bilaplacian_energy(&w), 6.0);
    }

    #[test]
    fn thm_a_witness_profile_d6() {
        // f ≡ 1 with Neumann -f gives w = 1 + (1 - r²)/2
        let f = ZonalSpectrum::constant(6.0, 4, 1.0);
        let w = extend_biharmonic(&f, &f.scaled(-1.0)).unwrap();
        let scale = sphere_measure(5.0).sqrt();
        for r in [0.0, 0.3, 0.8, 1.0] {
            let expected = 1.0 + 0.5 * (1.0 - r * r);
            assert!((w.radial_mode(0, r).0 / scale - expected).abs() < 1e-14);
        }
        let e = bilaplacian_energy(&w);
        assert!((e - 6.0 * PI.powi(3)).abs() < 1e-11);
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let z = ZonalSpectrum::zeros(5.0, 6);
        let w = extend_biharmonic(&z, &z).unwrap();
        assert!(w.modes.iter().all(|m| m.iter().all(|&u| u == 0.0)));
    }

    #[test]
    fn harmonic_extension() {
        let w = extend_harmonic(&ZonalSpectrum::constant(4.0, 3, 1.0));
        assert_eq!(bilaplacian_energy(&w), 0.0);
        assert_eq!(dirichlet_energy(&w).unwrap(), 0.0);
        let c2 = extend_harmonic(&ZonalSpectrum::unit(5.0, 3, 2));
        assert_eq!(c2.modes[2], [1.0, 0.0, 0.0]);
        assert_eq!(
            dirichlet_energy(&extend_harmonic(&ZonalSpectrum::unit(7.0, 3, 1))).unwrap(),
            1.0
        );
        assert_eq!(dirichlet_energy(&c2).unwrap(), 2.0);
        assert_eq!(
            dirichlet_energy(&extend_harmonic(&ZonalSpectrum::unit(5.0, 3, 3))).unwrap(),
            3.0
        );
    }

    #[test]
    fn dirichlet_energy_rejects_biharmonic() {
        let f = ZonalSpectrum::unit(4.0, 3, 1);
        let w = extend_biharmonic(&f, &f).unwrap();
        assert!(matches!(dirichlet_energy(&w), Err(Error::Unsupported(_))));
    }

    #[test]
    fn perturbation_preserves_traces() {
        let f = ZonalSpectrum::unit(4.0, 3, 1);
        let w = extend_biharmonic(&f, &ZonalSpectrum::zeros(4.0, 3)).unwrap();
        assert_eq!(add_perturbation(&w, 2, 0.0).unwrap(), w);
        let p = add_perturbation(&w, 0, 1.0).unwrap();
        let (j0, j1) = (boundary_jet(&w), boundary_jet(&p));
        assert_eq!(j0.value, j1.value);
        assert_eq!(j0.normal, j1.normal);
        assert_eq!(j1.normal2.coeffs[0] - j0.normal2.coeffs[0], 8.0);
        assert_eq!(p.dirichlet_residual(), 0.0);
        assert_eq!(p.neumann_residual(), 0.0);
        assert!(add_perturbation(&w, 4, 1.0).is_err());
    }

    #[test]
    fn jet_of_constant() {
        let w = extend_harmonic(&ZonalSpectrum::constant(4.0, 2, 1.0));
        let j = boundary_jet(&w);
        let s = (2.0 * PI * PI).sqrt();
        assert!((j.value.coeffs[0] - s).abs() < 1e-15);
        for spec in [
            &j.normal,
            &j.normal2,
            &j.tangential_laplacian,
            &j.ambient_laplacian,
            &j.normal_of_laplacian,
        ] {
            assert!(spec.coeffs.iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn jet_normal_of_laplacian_d4() {
        let f = ZonalSpectrum::unit(4.0, 2, 1);
        let w = extend_biharmonic(&f, &ZonalSpectrum::zeros(4.0, 2)).unwrap();
        let j = boundary_jet(&w);
        assert_eq!(j.normal_of_laplacian.coeffs[1], -6.0);
        // restriction identity Δ₀w = w_nn + (d-1) w_n + Δ̃w
        for k in 0..3 {
            let rhs =
                j.normal2.coeffs[k] + 3.0 * j.normal.coeffs[k] + j.tangential_laplacian.coeffs[k];
            assert!((j.ambient_laplacian.coeffs[k] - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn bilaplacian_pairing_vanishes_on_biharmonic() {
        let f = ZonalSpectrum::new(5.0, vec![0.3, -1.0, 0.5, 0.25]).unwrap();
        let w = extend_biharmonic(&f, &f.scaled(0.7)).unwrap();
        assert_eq!(bilaplacian_pairing(&w), 0.0);
        let p = add_perturbation(&w, 2, 0.1).unwrap();
        assert!(bilaplacian_pairing(&p) != 0.0);
    }

    #[test]
    fn quadrature_flags_under_resolution() {
        let f = ZonalSpectrum::new(4.0, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let w = add_perturbation(&extend_biharmonic(&f, &f).unwrap(), 6, 1.0).unwrap();
        let radial = gauss_radial_rule(3).unwrap();
        let angular = gauss_angular_rule(3, 4.0).unwrap();
        assert!(matches!(
            energy_quadrature(&w, &radial, &angular),
            Err(Error::UnderResolved { .. })
        ));
        let radial = gauss_radial_rule(16).unwrap();
        let angular = gauss_angular_rule(8, 4.0).unwrap();
        let q = energy_quadrature(&w, &radial, &angular).unwrap();
        assert!((q - bilaplacian_energy(&w)).abs() < 1e-10 * q);
    }

    #[test]
    fn quadrature_unit_c1() {
        let f = ZonalSpectrum::unit(4.0, 2, 1);
        let w = extend_biharmonic(&f, &ZonalSpectrum::zeros(4.0, 2)).unwrap();
        let q = energy_quadrature(
            &w,
            &gauss_radial_rule(8).unwrap(),
            &gauss_angular_rule(4, 4.0).unwrap(),
        )
        .unwrap();
        assert!((q - 6.0).abs() < 1e-10);
        let zero = ExtensionField::zero(4.0, 2);
        let q0 = energy_quadrature(
            &zero,
            &gauss_radial_rule(8).unwrap(),
            &gauss_angular_rule(4, 4.0).unwrap(),
        )
        .unwrap();
        assert_eq!(q0, 0.0);
    }
}
