//! Gauss rules for zonal surface integrals and radial integrals.
//!
//! A zonal function on S^{d-1} integrates as
//! `∮ F(⟨e,ξ⟩) dσ = |S^{d-2}| ∫₋₁¹ F(t) (1-t²)^{(d-3)/2} dt`,
//! so the angular rule is Gauss-Gegenbauer with `λ = (d-2)/2`. The radial rule
//! is Gauss-Legendre mapped to `[0, 1]`.
//!
//! Nodes start from the Golub-Welsch eigenvalues of the Jacobi matrix, are
//! polished by Newton on the orthonormal recurrence, and weights come from the
//! Christoffel sum `1 / Σ_{k<n} p̂_k(x)²`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Γ(x) for x > 0. Integers and half-integers are computed by exact recursion so
/// that surface areas of integer-dimension spheres carry no Lanczos error.
pub fn gamma(x: f64) -> f64 {
    let twice = 2.0 * x;
    if x > 0.0 && x <= 150.0 && twice.fract() == 0.0 {
        let (mut acc, mut y) = if x.fract() == 0.0 {
            (1.0, 1.0)
        } else {
            (PI.sqrt(), 0.5)
        };
        while y < x {
            acc *= y;
            y += 1.0;
        }
        acc
    } else {
        statrs::function::gamma::gamma(x)
    }
}

/// |S^m| for real m > 0.
pub fn sphere_measure(m: f64) -> f64 {
    2.0 * PI.powf((m + 1.0) / 2.0) / gamma((m + 1.0) / 2.0)
}

/// Surface area of the unit m-sphere, `2π^{(m+1)/2} / Γ((m+1)/2)`.
pub fn surface_area(m: u32) -> Result<f64> {
    if m < 1 {
        return domain(format!("surface_area needs m >= 1, got {m}"));
    }
    Ok(sphere_measure(m as f64))
}

/// Off-diagonal entries `b_k = √β_k` of the Jacobi matrix for the weight
/// `(1-t²)^{λ-1/2}` on `[-1, 1]`, for `k = 1..n`.
pub(crate) fn gegenbauer_offdiag(lambda: f64, n: usize) -> Vec<f64> {
    // index 0 is unused so that b[k] matches the textbook subscript
    let mut b = vec![0.0; n + 1];
    for (k, bk) in b.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        let beta = kf * (kf + 2.0 * lambda - 1.0) / (4.0 * (kf + lambda) * (kf + lambda - 1.0));
        *bk = beta.sqrt();
    }
    b
}

/// `∫₋₁¹ (1-t²)^{λ-1/2} dt = √π Γ(λ+1/2) / Γ(λ+1)`.
pub(crate) fn gegenbauer_mass(lambda: f64) -> f64 {
    PI.sqrt() * gamma(lambda + 0.5) / gamma(lambda + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    AngularJacobi,
    RadialLegendre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    /// Sphere dimension the angular weight was built for (ambient d of S^{d-1}).
    pub dimension: Option<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly against the rule's weight.
    pub fn exact_degree(&self) -> usize {
        2 * self.len() - 1
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Evaluates the orthonormal p̂_n and its derivative at x.
fn orthonormal_with_derivative(x: f64, n: usize, b: &[f64], p0: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, p0);
    let (mut dp_prev, mut dp) = (0.0, 0.0);
    for k in 0..n {
        let p_next = (x * p - b[k] * p_prev) / b[k + 1];
        let dp_next = (p + x * dp - b[k] * dp_prev) / b[k + 1];
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp)
}

fn gauss_gegenbauer(n: usize, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let mass = gegenbauer_mass(lambda);
    if n == 1 {
        return (vec![0.0], vec![mass]);
    }
    let b = gegenbauer_offdiag(lambda, n);
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j {
            b[j]
        } else if j + 1 == i {
            b[i]
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, c| a.partial_cmp(c).unwrap());

    let p0 = 1.0 / mass.sqrt();
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = orthonormal_with_derivative(*x, n, &b, p0);
            let step = p / dp;
            *x -= step;
            if step.abs() <= 1e-17 {
                break;
            }
        }
    }
    // the weight is even, so the rule is symmetric about 0
    for i in 0..n / 2 {
        let half = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -half;
        nodes[n - 1 - i] = half;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (mut p_prev, mut p) = (0.0, p0);
            let mut sum = p * p;
            for k in 0..n - 1 {
                let p_next = (x * p - b[k] * p_prev) / b[k + 1];
                p_prev = p;
                p = p_next;
                sum += p * p;
            }
            1.0 / sum
        })
        .collect();
    for i in 0..n / 2 {
        let avg = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = avg;
        weights[n - 1 - i] = avg;
    }
    (nodes, weights)
}

/// Gauss rule on `[-1, 1]` against `(1-t²)^{(d-3)/2}`, exact through degree `2n-1`.
pub fn gauss_angular_rule(n: usize, d: f64) -> Result<QuadratureRule> {
    if n < 1 {
        return domain("angular rule needs at least one node");
    }
    if !d.is_finite() || d < 3.0 {
        return domain(format!("angular rule needs d >= 3, got {d}"));
    }
    let (nodes, weights) = gauss_gegenbauer(n, (d - 2.0) / 2.0);
    Ok(QuadratureRule {
        kind: RuleKind::AngularJacobi,
        dimension: Some(d),
        nodes,
        weights,
    })
}

/// Gauss-Legendre on `[0, 1]` with unit weight.
pub fn gauss_radial_rule(n: usize) -> Result<QuadratureRule> {
    if n < 1 {
        return domain("radial rule needs at least one node");
    }
    let (x, w) = gauss_gegenbauer(n, 0.5);
    Ok(QuadratureRule {
        kind: RuleKind::RadialLegendre,
        dimension: None,
        nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: w.iter().map(|v| 0.5 * v).collect(),
    })
}
