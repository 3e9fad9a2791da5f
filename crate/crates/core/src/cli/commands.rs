//! Subcommand implementations. Each writes its tables and a manifest into the
//! output directory and reports failures through [`CliError`].

use std::cell::Cell;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::output::{write_csv, Field, RouteTiming, RunManifest, Tolerances, Verdict};
use super::scenario::{parse_scenario, Geometry, InitialState, RouteChoice, Scenario, System};
use super::sweep::parse_sweep;
use crate::analytic::psi1_series;
use crate::continuum::{
    basis_eval_halfline, evolve_halfline, expand, expand_line, line_survival_and_fptd, survival_and_fptd,
    ContinuumBasis, ContinuumState, InitialPacket, LineRoute,
};
use crate::effective::{build_effective, decay_rate, evolve};
use crate::error::Error;
use crate::numerics::{integrate_adaptive_breaks, linspace};
use crate::params::{LatticeKind, LatticeModel, Route, StroboscopicParams, SurvivalRecord, C64};
use crate::spectral::{eta_bound, eta_scatter, greens_propagator, greens_propagator_fullline, LatticeBasis};
use crate::stroboscopic::{run_protocol, ProtocolRun};
use crate::verify::{run_criterion, CriterionReport, Level};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if let Error::Config(msg) = e {
            CliError::Config(msg)
        } else if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub tol_scale: f64,
    pub route: Option<RouteChoice>,
}

impl RunOptions {
    fn check(&self) -> CliResult<()> {
        if !(self.tol_scale > 0.0) || !self.tol_scale.is_finite() {
            return Err(CliError::Config("--tol-scale must be finite and > 0".into()));
        }
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", self.out_dir.display())))
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn io(e: Error) -> CliError {
    CliError::Numerical(format!("writing output: {e}"))
}

/// Runs a scenario file; returns the manifest that was written.
pub fn cmd_simulate(path: &Path, opts: &RunOptions) -> CliResult<RunManifest> {
    opts.check()?;
    let scenario = parse_scenario(&read_text(path)?)?;
    simulate(&scenario, opts)
}

pub fn simulate(scenario: &Scenario, opts: &RunOptions) -> CliResult<RunManifest> {
    opts.check()?;
    let routes = scenario.routes(opts.route.unwrap_or(scenario.route))?;
    let times = scenario.time_points()?;
    let tolerances = Tolerances::new(opts.tol_scale);
    let scenario_json = serde_json::to_value(scenario).map_err(|e| CliError::Config(e.to_string()))?;
    let mut manifest = RunManifest::new("simulate", scenario_json, tolerances.clone());

    let (params, label) = match &scenario.system {
        System::Lattice { w, .. } => (w.iter().map(|v| v.value()).collect::<Vec<_>>(), "w"),
        System::Continuum { zeta, .. } => (zeta.iter().map(|v| v.value()).collect(), "zeta"),
    };
    let jobs: Vec<(C64, RouteChoice)> = params
        .iter()
        .flat_map(|&p| routes.iter().map(move |&r| (p, r)))
        .collect();
    let results: Vec<(std::result::Result<SurvivalRecord, Error>, f64)> = jobs
        .par_iter()
        .map(|&(p, route)| {
            let start = Instant::now();
            let rec = run_route(scenario, route, p, &times, &tolerances);
            (rec, start.elapsed().as_secs_f64())
        })
        .collect();

    let mut rows = Vec::new();
    let mut config_errors = 0;
    let mut numerical_errors = 0;
    let mut records: Vec<(C64, RouteChoice, SurvivalRecord)> = Vec::new();
    for (&(p, route), (outcome, seconds)) in jobs.iter().zip(results) {
        manifest.timings.push(RouteTiming {
            route: route_name(route).into(),
            parameter: [p.re, p.im],
            seconds,
        });
        match outcome {
            Ok(rec) => {
                for ((t, s), f) in rec.times.iter().zip(&rec.survival).zip(&rec.density) {
                    rows.push(vec![
                        Field::Text(route_name(route).into()),
                        Field::Num(p.re),
                        Field::Num(p.im),
                        Field::Num(*t),
                        Field::Num(*s),
                        Field::Num(*f),
                    ]);
                }
                for note in &rec.notes {
                    manifest.notes.push(format!("{} {label}={p}: {note}", route_name(route)));
                }
                records.push((p, route, rec));
            }
            Err(e) => {
                if e.is_config() {
                    config_errors += 1;
                } else {
                    numerical_errors += 1;
                }
                manifest.errors.push(format!("{} {label}={p}: {e}", route_name(route)));
            }
        }
    }
    manifest.partial = config_errors + numerical_errors > 0;
    add_verdicts(&mut manifest, scenario, &records, opts.tol_scale, label);

    let header_re = format!("{label}_re");
    let header_im = format!("{label}_im");
    let header = ["route", header_re.as_str(), header_im.as_str(), "t", "survival", "density"];
    let csv_path = opts.out_dir.join(format!("{}.csv", scenario.name));
    write_csv(&csv_path, &header, &rows).map_err(io)?;
    manifest.outputs.push(csv_path.display().to_string());

    if let (Some(_), System::Continuum { .. }) = (&scenario.profile, &scenario.system) {
        match profile_rows(scenario, &params, &tolerances) {
            Ok(rows) => {
                let path = opts.out_dir.join(format!("{}_profile.csv", scenario.name));
                write_csv(&path, &[&header_re, &header_im, "t", "x", "re", "im", "abs2"], &rows).map_err(io)?;
                manifest.outputs.push(path.display().to_string());
            }
            Err(e) => {
                manifest.partial = true;
                numerical_errors += usize::from(!e.is_config());
                config_errors += usize::from(e.is_config());
                manifest.errors.push(format!("profile: {e}"));
            }
        }
    }
    let manifest_path = opts.out_dir.join(format!("{}.manifest.json", scenario.name));
    manifest.write(&manifest_path).map_err(io)?;
    if config_errors > 0 {
        return Err(CliError::Config(manifest.errors.join("; ")));
    }
    if numerical_errors > 0 {
        return Err(CliError::Numerical(manifest.errors.join("; ")));
    }
    Ok(manifest)
}

fn route_name(route: RouteChoice) -> &'static str {
    match route {
        RouteChoice::Stroboscopic => Route::Stroboscopic.name(),
        RouteChoice::Effective => Route::Effective.name(),
        RouteChoice::Analytic => Route::Analytic.name(),
        RouteChoice::Spectral => Route::Spectral.name(),
        RouteChoice::Continuum => Route::Continuum.name(),
        RouteChoice::All => "all",
    }
}

fn run_route(
    scenario: &Scenario,
    route: RouteChoice,
    param: C64,
    times: &[f64],
    tol: &Tolerances,
) -> crate::Result<SurvivalRecord> {
    let t_max = times.last().copied().unwrap_or(0.0);
    match &scenario.system {
        System::Lattice {
            lattice,
            n_sites,
            initial,
            tau,
            gamma0,
            ..
        } => {
            let model = scenario.lattice_model(*lattice, *n_sites, initial, t_max)?;
            let state = initial.on(&model)?;
            match route {
                RouteChoice::Stroboscopic => {
                    let tau = tau.ok_or_else(|| Error::Config("stroboscopic route needs tau".into()))?;
                    stroboscopic_record(model, param, tau, *gamma0, &state, times)
                }
                RouteChoice::Effective => Ok(evolve(&build_effective(model, param)?, &state, times)?.record),
                RouteChoice::Analytic | RouteChoice::Spectral => {
                    boundary_record(route, *lattice, param, initial, times, tol)
                }
                _ => Err(Error::Config(format!("route {} does not apply", route_name(route)))),
            }
        }
        System::Continuum {
            geometry,
            packet,
            normalize,
            ..
        } => {
            let packet = packet.build(*normalize)?;
            match geometry {
                Geometry::HalfLine => {
                    let exp = expand(&packet, &ContinuumBasis::new(param)?)?;
                    survival_and_fptd(&exp, times, &tol.quadrature)
                }
                Geometry::Line => line_survival_and_fptd(&expand_line(&packet, param)?, times, &tol.quadrature),
            }
        }
    }
}

fn stroboscopic_record(
    lattice: LatticeModel,
    w: C64,
    tau: f64,
    gamma0: f64,
    state: &crate::params::WaveState,
    times: &[f64],
) -> crate::Result<SurvivalRecord> {
    let t_max = times.last().copied().unwrap_or(0.0);
    let n_steps = ((t_max / tau).round() as usize).max(1);
    let run = ProtocolRun {
        params: StroboscopicParams::new(gamma0, tau, w.re, w.im)?,
        lattice,
        psi0: state.clone(),
        n_steps,
        record_every: 1,
    };
    let out = run_protocol(&run)?;
    // rows at the nearest whole number of periods
    let mut rec = SurvivalRecord::new(Route::Stroboscopic);
    for &t in times {
        let k = ((t / tau).round() as usize).min(n_steps);
        rec.push(out.record.times[k], out.record.survival[k], out.record.density[k]);
    }
    rec.notes = out.record.notes;
    rec.notes.push(format!("times rounded to multiples of tau = {tau}"));
    Ok(rec)
}

/// Analytic and spectral routes through the boundary amplitude
/// `A(t) = psi_1` (half line) or `psi_1 + psi_-1` (full line):
/// `F = 2 Re(w) |A|^2` and `S = 1 - int F`.
fn boundary_record(
    route: RouteChoice,
    kind: LatticeKind,
    w: C64,
    initial: &InitialState,
    times: &[f64],
    tol: &Tolerances,
) -> crate::Result<SurvivalRecord> {
    let terms = initial.terms();
    let full = kind == LatticeKind::FullLine;
    let quad = tol.quadrature;
    let series = tol.series;
    let basis = if full { None } else { Some(LatticeBasis::halfline(w)?) };
    let amplitude = |t: f64| -> crate::Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for &(site, a) in &terms {
            let n0 = site.unsigned_abs();
            let v = match (route, full) {
                (RouteChoice::Analytic, false) => psi1_series(w, n0 as usize, t, &series)?,
                // the symmetric sector of the full line is the half line at 2w
                (RouteChoice::Analytic, true) => psi1_series(2.0 * w, n0 as usize, t, &series)?,
                (_, false) => greens_propagator(basis.as_ref().expect("half-line basis"), 1, n0, t, &quad)?,
                (_, true) => {
                    greens_propagator_fullline(w, 1, site, t, &quad)? + greens_propagator_fullline(w, -1, site, t, &quad)?
                }
            };
            acc += a * v;
        }
        Ok(acc)
    };
    let density = |t: f64| amplitude(t).map(|a| 2.0 * w.re * a.norm_sqr());
    let route_tag = if route == RouteChoice::Analytic { Route::Analytic } else { Route::Spectral };
    let mut rec = SurvivalRecord::new(route_tag);
    let mut survival = 1.0;
    let mut prev = 0.0;
    let failure: Cell<Option<Error>> = Cell::new(None);
    for &t in times {
        if t > prev && w.re > 0.0 {
            let pieces = ((t - prev).ceil() as usize).max(1);
            let breaks = linspace(prev, t, pieces + 1);
            let q = integrate_adaptive_breaks(
                |s: f64| match density(s) {
                    Ok(v) => C64::new(v, 0.0),
                    Err(e) => {
                        failure.set(Some(e));
                        C64::new(0.0, 0.0)
                    }
                },
                &breaks,
                &quad,
            )?;
            if let Some(e) = failure.take() {
                return Err(e);
            }
            survival -= q.value.re;
        }
        rec.push(t, survival, density(t)?);
        prev = t;
    }
    Ok(rec)
}

fn add_verdicts(
    manifest: &mut RunManifest,
    scenario: &Scenario,
    records: &[(C64, RouteChoice, SurvivalRecord)],
    tol_scale: f64,
    label: &str,
) {
    for (p, route, rec) in records {
        let name = route_name(*route);
        manifest.verdicts.push(Verdict::at_most(
            format!("{name} {label}={p}: largest increase of S"),
            rec.max_increase().max(0.0),
            1e-8 * tol_scale,
        ));
        let outside = rec
            .survival
            .iter()
            .map(|&s| (s - 1.0).max(-s).max(0.0))
            .fold(0.0, f64::max);
        manifest
            .verdicts
            .push(Verdict::at_most(format!("{name} {label}={p}: S outside [0, 1]"), outside, 1e-8 * tol_scale));
    }
    let tau = match &scenario.system {
        System::Lattice { tau, .. } => *tau,
        _ => None,
    };
    for (p, route, rec) in records {
        if *route == RouteChoice::Effective {
            continue;
        }
        let Some((_, _, reference)) = records.iter().find(|(q, r, _)| q == p && *r == RouteChoice::Effective) else {
            continue;
        };
        let gap = rec
            .survival
            .iter()
            .zip(&reference.survival)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let limit = match route {
            // first order in the period
            RouteChoice::Stroboscopic => 5.0 * tau.unwrap_or(0.0) * (1.0 + p.norm()),
            _ => 1e-6 * tol_scale,
        };
        manifest.verdicts.push(Verdict::at_most(
            format!("{} vs effective {label}={p}: max |dS|", route_name(*route)),
            gap,
            limit,
        ));
    }
}

fn profile_rows(scenario: &Scenario, params: &[C64], tol: &Tolerances) -> crate::Result<Vec<Vec<Field>>> {
    let (System::Continuum {
        geometry,
        packet,
        normalize,
        ..
    }, Some(profile)) = (&scenario.system, &scenario.profile)
    else {
        return Ok(Vec::new());
    };
    let packet: InitialPacket = packet.build(*normalize)?;
    let xs = profile.x.points("profile.x")?;
    if *geometry == Geometry::HalfLine && xs.iter().any(|&x| x < 0.0) {
        return Err(Error::Config("half_line profile positions must be >= 0".into()));
    }
    let mut rows = Vec::new();
    for &zeta in params {
        let values: Vec<crate::Result<Vec<Vec<Field>>>> = profile
            .times
            .par_iter()
            .map(|&t| {
                let mut out = Vec::with_capacity(xs.len());
                let eval: Box<dyn Fn(f64) -> crate::Result<C64>> = match geometry {
                    Geometry::HalfLine => {
                        let exp = expand(&packet, &ContinuumBasis::new(zeta)?)?;
                        Box::new(move |x| evolve_halfline(&exp, x, t, &tol.quadrature))
                    }
                    Geometry::Line => {
                        let le = expand_line(&packet, zeta)?;
                        Box::new(move |x| le.evolve(x, t, LineRoute::Decomposition, &tol.quadrature))
                    }
                };
                for &x in &xs {
                    let v = eval(x)?;
                    out.push(vec![
                        Field::Num(zeta.re),
                        Field::Num(zeta.im),
                        Field::Num(t),
                        Field::Num(x),
                        Field::Num(v.re),
                        Field::Num(v.im),
                        Field::Num(v.norm_sqr()),
                    ]);
                }
                Ok(out)
            })
            .collect();
        for block in values {
            rows.extend(block?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub level: Level,
    pub tol_scale: f64,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

/// Runs the verification suite and writes `verify_report.json`.
pub fn cmd_verify(level: Level, opts: &RunOptions) -> CliResult<VerifyReport> {
    opts.check()?;
    let criteria: Vec<CriterionReport> = level
        .criteria()
        .into_iter()
        .map(|id| {
            let report = run_criterion(id, opts.tol_scale);
            log::info!("{}", report.summary());
            report
        })
        .collect();
    let report = VerifyReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        level,
        tol_scale: opts.tol_scale,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    std::fs::write(opts.out_dir.join("verify_report.json"), &text)
        .map_err(|e| CliError::Numerical(format!("writing report: {e}")))?;
    if !report.passed {
        let failed: Vec<String> = report
            .criteria
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.id.to_string())
            .collect();
        return Err(CliError::Verification(format!("criteria {}", failed.join(", "))));
    }
    Ok(report)
}

/// Runs a sweep file; one CSV row per grid point.
pub fn cmd_sweep(path: &Path, opts: &RunOptions) -> CliResult<RunManifest> {
    opts.check()?;
    let spec = parse_sweep(&read_text(path)?)?;
    let tolerances = Tolerances::new(opts.tol_scale);
    let json = serde_json::to_value(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    let mut manifest = RunManifest::new("sweep", json, tolerances.clone());
    let start = Instant::now();
    let rows = spec.run(&tolerances.quadrature)?;
    manifest.timings.push(RouteTiming {
        route: "analytic".into(),
        parameter: [f64::NAN, f64::NAN],
        seconds: start.elapsed().as_secs_f64(),
    });
    let failed = rows
        .iter()
        .filter(|r| matches!(r.last(), Some(Field::Text(s)) if s != "ok"))
        .count();
    if failed > 0 {
        manifest.notes.push(format!("{failed} of {} points failed", rows.len()));
    }
    let csv_path = opts.out_dir.join(format!("{}.csv", spec.name));
    write_csv(&csv_path, &spec.header(), &rows).map_err(io)?;
    manifest.outputs.push(csv_path.display().to_string());
    manifest.write(&opts.out_dir.join(format!("{}.manifest.json", spec.name))).map_err(io)?;
    Ok(manifest)
}

/// Eigenvalues (finite lattices), bound-state data and sampled
/// eigenfunctions of every parameter of a scenario.
pub fn cmd_spectrum(path: &Path, opts: &RunOptions) -> CliResult<RunManifest> {
    opts.check()?;
    let scenario = parse_scenario(&read_text(path)?)?;
    let tolerances = Tolerances::new(opts.tol_scale);
    let json = serde_json::to_value(&scenario).map_err(|e| CliError::Config(e.to_string()))?;
    let mut manifest = RunManifest::new("spectrum", json, tolerances);
    let start = Instant::now();
    let rows = spectrum_rows(&scenario)?;
    manifest.timings.push(RouteTiming {
        route: "spectral".into(),
        parameter: [f64::NAN, f64::NAN],
        seconds: start.elapsed().as_secs_f64(),
    });
    let csv_path = opts.out_dir.join(format!("{}_spectrum.csv", scenario.name));
    write_csv(
        &csv_path,
        &["param_re", "param_im", "kind", "k", "position", "re", "im"],
        &rows,
    )
    .map_err(io)?;
    manifest.outputs.push(csv_path.display().to_string());
    manifest
        .write(&opts.out_dir.join(format!("{}_spectrum.manifest.json", scenario.name)))
        .map_err(io)?;
    Ok(manifest)
}

fn spectrum_row(p: C64, kind: &str, k: f64, position: f64, v: C64) -> Vec<Field> {
    vec![
        Field::Num(p.re),
        Field::Num(p.im),
        Field::Text(kind.into()),
        Field::Num(k),
        Field::Num(position),
        Field::Num(v.re),
        Field::Num(v.im),
    ]
}

fn spectrum_rows(scenario: &Scenario) -> crate::Result<Vec<Vec<Field>>> {
    let mut rows = Vec::new();
    let ks = linspace(0.1, std::f64::consts::PI - 0.1, 8);
    match &scenario.system {
        System::Lattice {
            lattice,
            n_sites,
            w,
            initial,
            ..
        } => {
            let t_max = scenario.time_points()?.last().copied().unwrap_or(0.0);
            for p in w.iter().map(|v| v.value()) {
                match lattice {
                    LatticeKind::Finite => {
                        let model = scenario.lattice_model(*lattice, *n_sites, initial, t_max)?;
                        let mut eig = decay_rate(&build_effective(model, p)?)?.eigenvalues;
                        eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
                        for (j, l) in eig.iter().enumerate() {
                            rows.push(spectrum_row(p, "eigenvalue", f64::NAN, j as f64, *l));
                        }
                    }
                    _ => {
                        let basis = if *lattice == LatticeKind::HalfLine {
                            LatticeBasis::halfline(p)?
                        } else {
                            LatticeBasis::fullline(p)?
                        };
                        if basis.has_bound() {
                            rows.push(spectrum_row(p, "bound_energy", f64::NAN, f64::NAN, basis.bound_energy()?));
                            for n in 1..=10u64 {
                                rows.push(spectrum_row(p, "bound", f64::NAN, n as f64, eta_bound(&basis, n)?));
                            }
                        }
                        for &k in &ks {
                            for n in 1..=10u64 {
                                rows.push(spectrum_row(p, "scatter", k, n as f64, eta_scatter(&basis, k, n)?));
                            }
                        }
                    }
                }
            }
        }
        System::Continuum {
            zeta, packet, normalize, ..
        } => {
            let packet = packet.build(*normalize)?;
            let xs = linspace(0.0, 5.0, 11);
            for p in zeta.iter().map(|v| v.value()) {
                let basis = ContinuumBasis::new(p)?;
                if basis.has_bound() {
                    rows.push(spectrum_row(p, "bound_energy", f64::NAN, f64::NAN, basis.bound_energy()?));
                    for &x in &xs {
                        rows.push(spectrum_row(p, "bound", f64::NAN, x, basis_eval_halfline(p, ContinuumState::Bound, x)?));
                    }
                }
                for &k in &ks {
                    for &x in &xs {
                        rows.push(spectrum_row(
                            p,
                            "scatter",
                            k,
                            x,
                            basis_eval_halfline(p, ContinuumState::Scatter(k), x)?,
                        ));
                    }
                }
                if packet.on_half_line() {
                    let exp = expand(&packet, &basis)?;
                    for &k in &ks {
                        rows.push(spectrum_row(p, "coefficient", k, f64::NAN, exp.c(k)));
                    }
                    if let Some(cb) = exp.c_bound() {
                        rows.push(spectrum_row(p, "bound_coefficient", f64::NAN, f64::NAN, cb));
                    }
                }
            }
        }
    }
    Ok(rows)
}
