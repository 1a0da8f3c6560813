//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::Command;
use std::time::Instant;

use rayon::prelude::*;
use sobtrace::adapted_metric::{
    dimension_continuity_gap, error_term_gap, interior_grid, psi_ode_residual, tau_pde_residual,
};
use sobtrace::ball_extension::{
    add_perturbation, bilaplacian_energy, energy_quadrature, extend_biharmonic,
};
use sobtrace::determinant_i2::{add_rho, i2, normalize_constraint, p3b_boundary, Metric};
use sobtrace::sphere_spectral::{
    apply_multiplier, gauss_angular_rule, gauss_radial_rule, sphere_measure, Multiplier,
    ZonalBasis, ZonalProfile, ZonalSpectrum,
};
use sobtrace::trace_inequalities::{
    energy_identity_gap, evaluate, evaluate_with, extremal_profile, random_spectrum, trial_seed,
    ExtremalFamily, NeumannChoice, Which,
};

const SEED: u64 = 20_240_601;
const K: usize = 64;
const NODES: usize = 200;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn basis(d: f64) -> ZonalBasis {
    ZonalBasis::new(d, K, NODES).expect("basis")
}

/// Decay in [0.3, 1.0], cycling with the trial index.
fn decay_for(i: usize) -> f64 {
    0.3 + 0.1 * (i % 8) as f64
}

fn thm_a_witness() -> Verdict {
    let mut worst_adopted = 0.0f64;
    let mut weakest_quarter = f64::INFINITY;
    for d in [5.0, 6.0, 8.0] {
        let b = basis(d);
        let one = ZonalProfile::constant(1.0);
        let r = evaluate(Which::ThmA, &one, &b).unwrap();
        let expected = d * (d - 2.0) * (d - 4.0) / 4.0 * sphere_measure(d - 1.0);
        worst_adopted = worst_adopted
            .max(r.rel_gap.abs())
            .max((r.lhs - expected).abs() / expected)
            .max((r.rhs - expected).abs() / expected);
        let p = evaluate_with(Which::ThmA, &one, &b, NeumannChoice::QuarterCoefficient).unwrap();
        weakest_quarter = weakest_quarter.min(p.rel_gap.abs());
    }
    verdict(
        worst_adopted <= 1e-12 && weakest_quarter > 1e-3,
        format!(
            "adopted max rel_gap {worst_adopted:.2e}; quarter min |rel_gap| {weakest_quarter:.2e}"
        ),
    )
}

fn energy_identity() -> Verdict {
    let mut worst = 0.0f64;
    for d in [4.0, 5.0, 6.0, 8.0] {
        let m = (0..1000)
            .into_par_iter()
            .map(|i| {
                let s = random_spectrum(trial_seed(SEED, i as u64), d, K, decay_for(i)).unwrap();
                energy_identity_gap(&s).unwrap()
            })
            .reduce(|| 0.0, f64::max);
        worst = worst.max(m);
    }
    verdict(
        worst <= 1e-11,
        format!("max gap {worst:.2e} over 4000 spectra"),
    )
}

fn thm_b_equality() -> Verdict {
    let mut worst = 0.0f64;
    let mut monotone = true;
    let floor = 1e-12;
    for t in [0.25, 0.5, 0.75] {
        let p = extremal_profile(ExtremalFamily::LogD4 { t, c: 0.0 }).unwrap();
        let gaps: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&k| {
                let b = ZonalBasis::new(4.0, k, NODES).unwrap();
                evaluate(Which::ThmB, &p, &b).unwrap().rel_gap.abs()
            })
            .collect();
        worst = worst.max(gaps[2]);
        for w in gaps.windows(2) {
            if !(w[1] <= 1.1 * w[0] || (w[0] <= floor && w[1] <= floor)) {
                monotone = false;
            }
        }
    }
    verdict(
        worst <= 1e-6 && monotone,
        format!("max |rel_gap| at K=64 {worst:.2e}; monotone in K: {monotone}"),
    )
}

fn fuzzing() -> Verdict {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    let mut failures = 0;
    for d in [4.0, 5.0, 6.0, 8.0] {
        let b = basis(d);
        for which in Which::ALL.into_iter().filter(|w| w.applies_to(d)) {
            let rel: Vec<(f64, bool)> = (0..1000)
                .into_par_iter()
                .map(|i| {
                    let seed = trial_seed(SEED ^ which as u64, i as u64);
                    let s = random_spectrum(seed, d, K, decay_for(i)).unwrap();
                    let r = evaluate(which, &ZonalProfile::from_spectrum(s), &b).unwrap();
                    (r.rel_gap, r.holds(1e-8))
                })
                .collect();
            count += rel.len();
            failures += rel.iter().filter(|x| !x.1).count();
            worst = rel.iter().map(|x| x.0).fold(worst, f64::min);
        }
    }
    verdict(
        failures == 0,
        format!("{count} trials, {failures} below -1e-8; min rel_gap {worst:.2e}"),
    )
}

fn constant_consistency() -> Verdict {
    let mut worst = 0.0f64;
    for d in [5.0, 6.0, 8.0] {
        let b = basis(d);
        let two_vol = 2.0 * b.volume();
        for i in 0..100 {
            let s = random_spectrum(trial_seed(SEED + 5, i), d, K, 0.5).unwrap();
            let p = ZonalProfile::from_spectrum(s);
            let a = evaluate(Which::ThmA, &p, &b).unwrap();
            let bb = evaluate(Which::BecknerB, &p, &b).unwrap();
            worst = worst
                .max((two_vol * bb.lhs - a.lhs).abs() / a.lhs.abs())
                .max((two_vol * bb.rhs - a.rhs).abs() / a.rhs.abs());
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max relative mismatch {worst:.2e} over 300 inputs"),
    )
}

fn metric_residuals() -> Verdict {
    let grid = interior_grid(50);
    let mut psi_worst = 0.0f64;
    let mut tau_worst = 0.0f64;
    for d in [5.0, 6.0, 8.0, 5.5] {
        for &r in &grid {
            psi_worst = psi_worst
                .max(psi_ode_residual(r, d).unwrap())
                .max(error_term_gap(r, d).unwrap());
        }
    }
    for &r in &grid {
        tau_worst = tau_worst.max(tau_pde_residual(r).unwrap());
    }
    let mut ratio_worst = 0.0f64;
    for &r in &grid {
        for eps in [1e-2, 1e-3, 1e-4] {
            ratio_worst = ratio_worst.max(dimension_continuity_gap(r, eps).unwrap() / eps);
        }
    }
    verdict(
        psi_worst <= 1e-11 && tau_worst <= 1e-10 && ratio_worst <= 1.0,
        format!(
            "psi/error {psi_worst:.2e}; tau {tau_worst:.2e}; max continuity gap/eps {ratio_worst:.3}"
        ),
    )
}

fn beta_independence() -> Verdict {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let phi = random_spectrum(trial_seed(SEED + 7, i), 4.0, K, decay_for(i as usize)).unwrap();
        let minus_one = ZonalSpectrum::constant(4.0, K, -1.0);
        let outs: Vec<ZonalSpectrum> = [ZonalSpectrum::zeros(4.0, K), minus_one, phi.scaled(-1.0)]
            .iter()
            .map(|n| p3b_boundary(&extend_biharmonic(&phi, n).unwrap()).unwrap())
            .collect();
        let target = apply_multiplier(&phi, Multiplier::P3);
        let scale = target.coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        for a in outs.iter().chain(std::iter::once(&target)) {
            for b in &outs {
                let diff = a
                    .coeffs
                    .iter()
                    .zip(&b.coeffs)
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                worst = worst.max(diff / scale);
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("max pairwise difference {worst:.2e} (relative to max |P3 phi|)"),
    )
}

fn gstar_field(profile: &ZonalProfile, b: &ZonalBasis) -> sobtrace::ball_extension::ExtensionField {
    let (p, _) = normalize_constraint(profile, b).unwrap();
    let phi = b.analyze(&p).unwrap();
    extend_biharmonic(&phi, &ZonalSpectrum::zeros(4.0, phi.degree_cap())).unwrap()
}

fn i2_nonnegativity() -> Verdict {
    let b = basis(4.0);
    let random: Vec<(f64, f64)> = (0..500)
        .into_par_iter()
        .map(|i| {
            let s = random_spectrum(trial_seed(SEED + 8, i as u64), 4.0, K, decay_for(i)).unwrap();
            let w = gstar_field(&ZonalProfile::from_spectrum(s), &b);
            let g = i2(&w, Metric::Gstar).unwrap().i2;
            let f = i2(&add_rho(&w).unwrap(), Metric::Flat).unwrap().i2;
            (g, (g - f).abs())
        })
        .collect();
    let min_random = random.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let mut rho_gap = random.iter().map(|x| x.1).fold(0.0f64, f64::max);

    let mut extremal = 0.0f64;
    let mut min_increase = f64::INFINITY;
    for t in [0.0, 0.25, 0.5] {
        let w = gstar_field(
            &extremal_profile(ExtremalFamily::LogD4 { t, c: 0.0 }).unwrap(),
            &b,
        );
        let base = i2(&w, Metric::Gstar).unwrap().i2;
        extremal = extremal.max(base.abs());
        let f = i2(&add_rho(&w).unwrap(), Metric::Flat).unwrap().i2;
        rho_gap = rho_gap.max((base - f).abs());
        for k in 0..=8 {
            for eps in [1e-2, -1e-2, 1e-1, -1e-1] {
                let p = add_perturbation(&w, k, eps).unwrap();
                let inc = i2(&p, Metric::Gstar).unwrap().i2 - base;
                min_increase = min_increase.min(inc);
            }
        }
    }
    verdict(
        min_random >= -1e-8 && extremal <= 1e-6 && rho_gap <= 1e-10 && min_increase > 0.0,
        format!(
            "min i2 {min_random:.2e}; extremal |i2| {extremal:.2e}; rho_gap gap {rho_gap:.2e}; min increase {min_increase:.2e}"
        ),
    )
}

fn oracle_agreement() -> Verdict {
    let mut energy = 0.0f64;
    let mut roundtrip = 0.0f64;
    for d in [4.0, 5.0, 6.0, 8.0] {
        let radial = gauss_radial_rule(128).unwrap();
        let angular = gauss_angular_rule(NODES, d).unwrap();
        let b = basis(d);
        let worst: Vec<(f64, f64)> = (0..100)
            .into_par_iter()
            .map(|i| {
                let s = random_spectrum(trial_seed(SEED + 9, i as u64), d, K, 0.5).unwrap();
                let n = random_spectrum(trial_seed(SEED + 10, i as u64), d, K, 0.5).unwrap();
                let mut w = extend_biharmonic(&s, &n).unwrap();
                if i % 2 == 1 {
                    w = add_perturbation(&w, i % 9, 0.3).unwrap();
                }
                let closed = bilaplacian_energy(&w);
                let quad = energy_quadrature(&w, &radial, &angular).unwrap();
                let back = b.analyze(&ZonalProfile::from_spectrum(s.clone())).unwrap();
                let rt = s
                    .coeffs
                    .iter()
                    .zip(&back.coeffs)
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                ((closed - quad).abs() / closed.abs(), rt)
            })
            .collect();
        energy = worst.iter().map(|x| x.0).fold(energy, f64::max);
        roundtrip = worst.iter().map(|x| x.1).fold(roundtrip, f64::max);
    }
    verdict(
        energy <= 1e-10 && roundtrip <= 1e-11,
        format!("energy rel diff {energy:.2e}; round-trip {roundtrip:.2e}"),
    )
}

fn exponent_scan_cli() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [5, 6, 8] {
        let path = dir.path().join(format!("scan_{d}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_sobtrace"))
            .args([
                "scan-exponent",
                "--d",
                &d.to_string(),
                "--t",
                "0.5",
                "--out",
            ])
            .arg(&path)
            .output()
            .expect("run sobtrace");
        let summary = String::from_utf8_lossy(&out.stderr).trim().to_string();
        let csv = std::fs::read_to_string(&path).unwrap_or_default();
        let rows = csv.lines().count();
        let named = summary.starts_with("minimizer alpha = ");
        let decided = summary.ends_with("; separated") || summary.ends_with("not separated");
        ok &= out.status.success() && rows == 4 && named && decided;
        notes.push(format!("d={d}: {summary}"));
    }
    verdict(ok, notes.join(" | "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "thmA equality witness and quarter-coefficient regression",
            thm_a_witness,
        ),
        ("energy identity on random spectra", energy_identity),
        (
            "thmB equality at extremals, convergence in K",
            thm_b_equality,
        ),
        ("inequality fuzzing", fuzzing),
        (
            "constant consistency beckner_b vs thmA",
            constant_consistency,
        ),
        ("adapted-metric residuals", metric_residuals),
        ("P3b independence of the Neumann datum", beta_independence),
        ("i2 nonnegativity and the rho identity", i2_nonnegativity),
        ("closed-form vs quadrature oracles", oracle_agreement),
        ("exponent scan deliverable", exponent_scan_cli),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {:>2}: {name}: {} ({:.1}s)",
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
