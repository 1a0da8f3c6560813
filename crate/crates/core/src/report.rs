//! Command-line front end and report serialization.
//!
//! Every command prints one JSON document `{command, config, records, summary}`
//! (keys sorted, floats as `{:.16e}`), or CSV for scans and sweeps. Exit status
//! is 0 when every check passes, 1 on a violation and 2 on a usage error.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::adapted_metric::{
    dimension_continuity_gap, error_term_gap, interior_grid, psi_ode_residual, tau_pde_residual,
};
use crate::ball_extension::{bilaplacian_energy, energy_quadrature, extend_biharmonic};
use crate::determinant_i2::{add_rho, i2, normalize_constraint, Metric};
use crate::error::{Error, Result};
use crate::sphere_spectral::{
    gauss_angular_rule, gauss_radial_rule, ZonalBasis, ZonalProfile, ZonalSpectrum,
};
use crate::trace_inequalities::{
    default_alphas, energy_identity_gap, equality_profile, evaluate, evaluate_with, exponent_scan,
    extremal_profile, random_spectrum, trial_seed, ExtremalFamily, InequalityReport, NeumannChoice,
    Which,
};

pub const IDENTITY_TOL: f64 = 1e-11;
pub const ORACLE_TOL: f64 = 1e-10;
pub const FUZZ_TOL: f64 = 1e-8;
pub const TAU_TOL: f64 = 1e-10;
pub const RHO_TOL: f64 = 1e-10;
/// Bound on `dimension_continuity_gap(r, ε)/ε` over the grid.
pub const CONTINUITY_BOUND: f64 = 1.0;
pub const CONTINUITY_EPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Parser, Debug)]
#[command(
    name = "sobtrace",
    version,
    about = "Spectral checks of fourth-order trace inequalities on the unit ball"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Ambient dimension of the ball.
    #[arg(long, default_value_t = 4.0)]
    pub d: f64,
    /// Degree cap of the zonal spectra.
    #[arg(long = "K", default_value_t = 64)]
    #[serde(rename = "K")]
    pub degree_cap: usize,
    #[arg(long, default_value_t = 200)]
    pub angular: usize,
    #[arg(long, default_value_t = 128)]
    pub radial: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the command's default tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Constant,
    Extremal,
    Random,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Energy identity on random spectra, plus closed-form vs quadrature energies.
    Identities(IdentitiesArgs),
    /// One inequality on one profile.
    Inequality(InequalityArgs),
    /// beckner_b gap of |1 - t u|^alpha over a list of exponents.
    ScanExponent(ScanArgs),
    /// The d = 4 boundary functional on normalized data.
    I2(I2Args),
    /// Residuals of the adapted conformal factors on an interior grid.
    MetricResiduals(MetricArgs),
    /// Seeded random trials of every applicable inequality.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IdentitiesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Trials that also get the quadrature energy oracle.
    #[arg(long, default_value_t = 100)]
    pub oracle_trials: usize,
    #[arg(long, default_value_t = 0.5)]
    pub decay: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InequalityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_which)]
    pub which: Which,
    #[arg(long, value_enum, default_value = "constant")]
    pub family: Family,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Exponent of the power family; defaults to the equality exponent.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "adopted")]
    pub neumann: NeumannChoice,
    #[arg(long, default_value_t = 0.5)]
    pub decay: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Comma-separated exponents; defaults to (4-d)/4, (4-d)/2, 4-d.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct I2Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "extremal")]
    pub family: Family,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.3)]
    pub decay: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MetricArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Restricts the sweep to one inequality.
    #[arg(long, value_parser = parse_which)]
    pub which: Option<Which>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.5)]
    pub decay: f64,
    /// Appends a record known to violate its inequality.
    #[arg(long)]
    pub plant_violation: bool,
}

fn parse_which(s: &str) -> std::result::Result<Which, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Identities(_) => "identities",
            Command::Inequality(_) => "inequality",
            Command::ScanExponent(_) => "scan-exponent",
            Command::I2(_) => "i2",
            Command::MetricResiduals(_) => "metric-residuals",
            Command::Sweep(_) => "sweep",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Identities(a) => &a.common,
            Command::Inequality(a) => &a.common,
            Command::ScanExponent(a) => &a.common,
            Command::I2(a) => &a.common,
            Command::MetricResiduals(a) => &a.common,
            Command::Sweep(a) => &a.common,
        }
    }

    fn config(&self) -> Value {
        let v = match self {
            Command::Identities(a) => serde_json::to_value(a),
            Command::Inequality(a) => serde_json::to_value(a),
            Command::ScanExponent(a) => serde_json::to_value(a),
            Command::I2(a) => serde_json::to_value(a),
            Command::MetricResiduals(a) => serde_json::to_value(a),
            Command::Sweep(a) => serde_json::to_value(a),
        };
        v.expect("configs serialize")
    }
}

/// Outcome of one command before serialization.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub records: Vec<Value>,
    /// Quantities summarized as `max_abs_gap` and `min_gap`.
    pub gaps: Vec<f64>,
    pub pass: bool,
    /// Extra summary entries.
    pub extra: Map<String, Value>,
    /// Rows for CSV output, header first.
    pub csv: Option<Vec<Vec<String>>>,
    /// Line written to stderr after the report.
    pub note: Option<String>,
}

impl Outcome {
    fn summary(&self) -> Value {
        let max_abs = self.gaps.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let min = self.gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let mut s = self.extra.clone();
        s.insert("max_abs_gap".into(), json!(max_abs));
        s.insert(
            "min_gap".into(),
            if min.is_finite() {
                json!(min)
            } else {
                Value::Null
            },
        );
        s.insert("pass".into(), json!(self.pass));
        Value::Object(s)
    }
}

/// Formats every float with 17 significant digits.
struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value
        .serialize(&mut ser)
        .expect("writing to a Vec cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

fn to_csv(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row).expect("writing to a Vec cannot fail");
    }
    String::from_utf8(w.into_inner().expect("flush to a Vec")).expect("csv emits UTF-8")
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn report_value(r: &InequalityReport) -> Value {
    serde_json::to_value(r).expect("reports serialize")
}

fn insert(mut v: Value, key: &str, x: Value) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert(key.to_string(), x);
    }
    v
}

fn identities(a: &IdentitiesArgs) -> Result<Outcome> {
    let c = &a.common;
    let tol = c.tol.unwrap_or(IDENTITY_TOL);
    let radial = gauss_radial_rule(c.radial)?;
    let angular = gauss_angular_rule(c.angular, c.d)?;
    let rows = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(c.seed, i as u64);
            let s = random_spectrum(seed, c.d, c.degree_cap, a.decay)?;
            let gap = energy_identity_gap(&s)?;
            let mut rec = json!({"trial": i, "trial_seed": seed, "energy_identity_gap": gap});
            let mut oracle = None;
            if i < a.oracle_trials {
                let w = extend_biharmonic(&s, &s.scaled(-(c.d - 4.0) / 2.0))?;
                let closed = bilaplacian_energy(&w);
                let quad = energy_quadrature(&w, &radial, &angular)?;
                let rel = (closed - quad).abs() / closed.abs().max(f64::MIN_POSITIVE);
                rec = insert(rec, "energy_closed_form", json!(closed));
                rec = insert(rec, "energy_quadrature", json!(quad));
                rec = insert(rec, "oracle_rel_diff", json!(rel));
                oracle = Some(rel);
            }
            Ok((rec, gap, oracle))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_oracle = rows.iter().filter_map(|r| r.2).fold(0.0f64, f64::max);
    let mut out = Outcome::default();
    for (rec, gap, _) in rows {
        out.records.push(rec);
        out.gaps.push(gap);
    }
    out.pass = out.gaps.iter().all(|g| *g <= tol) && max_oracle <= ORACLE_TOL;
    out.extra
        .insert("max_oracle_rel_diff".into(), json!(max_oracle));
    Ok(out)
}

fn inequality_profile(a: &InequalityArgs) -> Result<ZonalProfile> {
    let c = &a.common;
    match a.family {
        Family::Constant => Ok(ZonalProfile::constant(1.0)),
        Family::Random => Ok(ZonalProfile::from_spectrum(random_spectrum(
            c.seed,
            c.d,
            c.degree_cap,
            a.decay,
        )?)),
        Family::Extremal => match a.alpha {
            Some(alpha) => extremal_profile(ExtremalFamily::Power { t: a.t, alpha }),
            None => equality_profile(a.which, c.d, a.t),
        },
    }
}

fn inequality(a: &InequalityArgs) -> Result<Outcome> {
    let c = &a.common;
    let tol = c.tol.unwrap_or(FUZZ_TOL);
    let basis = ZonalBasis::new(c.d, c.degree_cap, c.angular)?;
    let profile = inequality_profile(a)?;
    let mut r = evaluate_with(a.which, &profile, &basis, a.neumann)?;
    if a.family == Family::Extremal {
        r = r.with_param("t", a.t);
        if let Some(alpha) = a.alpha {
            r = r.with_param("alpha", alpha);
        }
    }
    Ok(Outcome {
        pass: r.holds(tol),
        gaps: vec![r.gap],
        records: vec![report_value(&r)],
        ..Outcome::default()
    })
}

fn scan(a: &ScanArgs) -> Result<Outcome> {
    let c = &a.common;
    let basis = ZonalBasis::new(c.d, c.degree_cap, c.angular)?;
    let alphas = a.alphas.clone().unwrap_or_else(|| default_alphas(c.d));
    let s = exponent_scan(a.t, &alphas, &basis)?;
    let mut out = Outcome::default();
    let mut rows = vec![vec![
        "alpha".into(),
        "lhs".into(),
        "rhs".into(),
        "gap".into(),
        "rel_gap".into(),
    ]];
    for r in &s.rows {
        out.records
            .push(serde_json::to_value(r).expect("rows serialize"));
        out.gaps.push(r.rel_gap);
        rows.push(vec![
            num(r.alpha),
            num(r.lhs),
            num(r.rhs),
            num(r.gap),
            num(r.rel_gap),
        ]);
    }
    // a scan is a measurement; non-separation is reported, not failed
    out.pass = true;
    out.extra.insert("minimizer".into(), json!(s.minimizer));
    out.extra.insert("separation".into(), json!(s.separation));
    out.extra.insert("separated".into(), json!(s.separated));
    out.csv = Some(rows);
    let best = s
        .rows
        .iter()
        .find(|r| r.alpha == s.minimizer)
        .map(|r| r.rel_gap)
        .unwrap_or(f64::NAN);
    out.note = Some(format!(
        "minimizer alpha = {} (rel_gap {:.3e}); separation {:.3e}; {}",
        s.minimizer,
        best,
        s.separation,
        if s.separated {
            "separated"
        } else {
            "not separated"
        }
    ));
    Ok(out)
}

fn i2_trial(profile: &ZonalProfile, basis: &ZonalBasis) -> Result<(Value, f64, f64)> {
    let (normalized, c) = normalize_constraint(profile, basis)?;
    let phi = basis.analyze(&normalized)?;
    let w = extend_biharmonic(&phi, &ZonalSpectrum::zeros(4.0, phi.degree_cap()))?;
    let g = i2(&w, Metric::Gstar)?.with_normalization(c);
    let f = i2(&add_rho(&w)?, Metric::Flat)?.with_normalization(c);
    let rho_gap = (g.i2 - f.i2).abs();
    let rec = json!({"gstar": g, "flat_plus_rho": f, "rho_gap": rho_gap});
    Ok((rec, g.i2, rho_gap))
}

fn i2_command(a: &I2Args) -> Result<Outcome> {
    let c = &a.common;
    if c.d != 4.0 {
        return Err(Error::Domain(format!("i2 needs d = 4, got {}", c.d)));
    }
    let tol = c.tol.unwrap_or(FUZZ_TOL);
    let basis = ZonalBasis::new(4.0, c.degree_cap, c.angular)?;
    let trials = if a.family == Family::Random {
        a.trials
    } else {
        1
    };
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| {
            let profile = match a.family {
                Family::Constant => ZonalProfile::constant(1.0),
                Family::Extremal => extremal_profile(ExtremalFamily::LogD4 { t: a.t, c: 0.0 })?,
                Family::Random => {
                    let seed = trial_seed(c.seed, i as u64);
                    ZonalProfile::from_spectrum(random_spectrum(seed, 4.0, c.degree_cap, a.decay)?)
                }
            };
            i2_trial(&profile, &basis).map(|(rec, v, l)| (insert(rec, "trial", json!(i)), v, l))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome {
        pass: true,
        ..Outcome::default()
    };
    for (rec, value, rho_gap) in rows {
        out.pass &= value >= -tol && rho_gap <= RHO_TOL;
        out.gaps.push(value);
        out.records.push(rec);
    }
    Ok(out)
}

fn metric_residuals(a: &MetricArgs) -> Result<Outcome> {
    let d = a.common.d;
    let mut out = Outcome {
        pass: true,
        ..Outcome::default()
    };
    let grid = interior_grid(a.points);
    if d > 4.0 {
        let tol = a.common.tol.unwrap_or(IDENTITY_TOL);
        for &r in &grid {
            let p = psi_ode_residual(r, d)?;
            let e = error_term_gap(r, d)?;
            out.pass &= p <= tol && e <= tol;
            out.gaps.extend([p, e]);
            out.records
                .push(json!({"r": r, "psi_ode_residual": p, "error_term_gap": e}));
        }
    } else if d == 4.0 {
        let tol = a.common.tol.unwrap_or(TAU_TOL);
        for &r in &grid {
            let t = tau_pde_residual(r)?;
            out.pass &= t <= tol;
            out.gaps.push(t);
            out.records.push(json!({"r": r, "tau_pde_residual": t}));
        }
    } else {
        return Err(Error::Domain(format!(
            "metric residuals need d >= 4, got {d}"
        )));
    }
    let mut worst = 0.0f64;
    for &r in &grid {
        for eps in CONTINUITY_EPS {
            let ratio = dimension_continuity_gap(r, eps)? / eps;
            worst = worst.max(ratio);
            out.records
                .push(json!({"r": r, "eps": eps, "continuity_ratio": ratio}));
        }
    }
    out.pass &= worst <= CONTINUITY_BOUND;
    out.extra
        .insert("max_continuity_ratio".into(), json!(worst));
    Ok(out)
}

/// The record that `--plant-violation` appends: the constant at d > 4 with the
/// quarter-size Neumann coefficient -(d-4)/4, or the d = 4 extremal with a harmonic extension.
pub fn planted_violation(basis: &ZonalBasis) -> Result<InequalityReport> {
    if basis.dimension > 4.0 {
        evaluate_with(
            Which::ThmA,
            &ZonalProfile::constant(1.0),
            basis,
            NeumannChoice::QuarterCoefficient,
        )
    } else {
        let p = extremal_profile(ExtremalFamily::LogD4 { t: 0.5, c: 0.0 })?;
        Ok(evaluate_with(Which::ThmB, &p, basis, NeumannChoice::Harmonic)?.with_param("t", 0.5))
    }
}

fn sweep(a: &SweepArgs) -> Result<Outcome> {
    let c = &a.common;
    let tol = c.tol.unwrap_or(FUZZ_TOL);
    let basis = ZonalBasis::new(c.d, c.degree_cap, c.angular)?;
    let whiches: Vec<Which> = match a.which {
        Some(w) => vec![w],
        None => Which::ALL
            .into_iter()
            .filter(|w| w.applies_to(c.d))
            .collect(),
    };
    let mut reports: Vec<(Option<usize>, Option<u64>, InequalityReport)> = Vec::new();
    for &which in &whiches {
        let batch = (0..a.trials)
            .into_par_iter()
            .map(|i| {
                let seed = trial_seed(c.seed, i as u64);
                let s = random_spectrum(seed, c.d, c.degree_cap, a.decay)?;
                let r = evaluate(which, &ZonalProfile::from_spectrum(s), &basis)?;
                Ok((Some(i), Some(seed), r))
            })
            .collect::<Result<Vec<_>>>()?;
        reports.extend(batch);
    }
    if a.plant_violation {
        let w = if c.d > 4.0 { Which::ThmA } else { Which::ThmB };
        if !w.applies_to(c.d) {
            return Err(Error::Domain(format!(
                "no planted violation for d = {}",
                c.d
            )));
        }
        reports.push((None, None, planted_violation(&basis)?));
    }
    let mut out = Outcome {
        pass: true,
        ..Outcome::default()
    };
    let mut rows = vec![[
        "trial",
        "trial_seed",
        "which",
        "d",
        "K",
        "lhs",
        "rhs",
        "gap",
        "rel_gap",
        "pass",
    ]
    .map(String::from)
    .to_vec()];
    for (trial, seed, r) in &reports {
        let ok = r.holds(tol);
        out.pass &= ok;
        out.gaps.push(r.rel_gap);
        let mut v = insert(report_value(r), "pass", json!(ok));
        v = insert(v, "trial", json!(trial));
        v = insert(v, "trial_seed", json!(seed));
        v = insert(v, "planted", json!(trial.is_none()));
        out.records.push(v);
        rows.push(vec![
            trial.map_or("planted".into(), |t| t.to_string()),
            seed.map_or(String::new(), |s| s.to_string()),
            r.which.to_string(),
            num(r.d),
            r.degree_cap.to_string(),
            num(r.lhs),
            num(r.rhs),
            num(r.gap),
            num(r.rel_gap),
            ok.to_string(),
        ]);
    }
    out.csv = Some(rows);
    Ok(out)
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Identities(a) => identities(a),
        Command::Inequality(a) => inequality(a),
        Command::ScanExponent(a) => scan(a),
        Command::I2(a) => i2_command(a),
        Command::MetricResiduals(a) => metric_residuals(a),
        Command::Sweep(a) => sweep(a),
    }
}

/// The full JSON report for a command.
pub fn render_json(command: &Command, outcome: &Outcome) -> String {
    to_json(&json!({
        "command": command.name(),
        "config": command.config(),
        "records": outcome.records,
        "summary": outcome.summary(),
    }))
}

fn write_output(path: &Option<PathBuf>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let command = &cli.command;
    let outcome = match execute(command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let default_csv = matches!(command, Command::ScanExponent(_));
    let format = command.common().format.unwrap_or(if default_csv {
        Format::Csv
    } else {
        Format::Json
    });
    let text = match (format, &outcome.csv) {
        (Format::Csv, Some(rows)) => to_csv(rows),
        (Format::Csv, None) => {
            eprintln!("error: {} has no CSV form", command.name());
            return 2;
        }
        (Format::Json, _) => render_json(command, &outcome),
    };
    if let Err(e) = write_output(&command.common().out, &text) {
        eprintln!("error: cannot write report: {e}");
        return 2;
    }
    if let Some(note) = &outcome.note {
        eprintln!("{note}");
    }
    if outcome.pass {
        0
    } else {
        1
    }
}
