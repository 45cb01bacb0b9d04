//! Subcommand orchestration and output files.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use super::config::{FieldInit, RunConfig, HARD_CHECKS};
use super::write_json;
use crate::advect::{simulate, SimConfig, SimOutput, TrajectoryKind};
use crate::conformal::ConformalMap;
use crate::error::{Error, Result};
use crate::field::{random_blobs, VortexField};
use crate::numerics::{fmt_sci, logspace};
use crate::verify::{self, EstimateReport, XiSamples};

pub const TRAJECTORY_FORMAT: &str = "#format=singular-euler/trajectories/1";
pub const CONSERVATION_FORMAT: &str = "#format=singular-euler/conservation/1";
pub const MAP_DIAG_FORMAT: &str = "#format=singular-euler/map-diag/1";
/// Agreement required between the product formula and `|S'|^2`.
pub const MAP_DIAG_TOL: f64 = 1e-8;
/// Blob count of the field used by verify checks when none is configured.
pub const DEFAULT_VERIFY_BLOBS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    MapDiag,
    Simulate,
    Verify,
    Identities,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Opens a CSV writer whose first line is a format tag.
fn versioned_csv(path: &Path, tag: &str) -> Result<csv::Writer<std::io::BufWriter<std::fs::File>>> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "{tag}")?;
    Ok(csv::Writer::from_writer(file))
}

/// Runs `command` and writes its outputs under `config.output_dir`.
/// Returns whether every hard check passed.
pub fn run(config: &RunConfig, command: Command) -> Result<bool> {
    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;
    match command {
        Command::Identities => {
            let n = config.verify.samples.unwrap_or(default_samples("identities"));
            let r = verify::check_identities(n, config.seed);
            let summary = write_reports(out, config.seed, "none", vec![("identities", Ok(r))])?;
            Ok(summary.hard_pass)
        }
        Command::MapDiag => map_diag(config, out),
        Command::Simulate => run_simulate(config, out),
        Command::Verify => run_verify(config, out),
    }
}

/// One row of the map diagnostic: a disc point and both `det DS` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDiagRow {
    pub z: Complex64,
    pub product: f64,
    pub direct: f64,
    pub rel_err: f64,
}

/// `det DS` from the product formula against `|S'|^2` on a polar grid with
/// `1 - |z|` log-spaced in `[min_gap, 0.99]`, plus the origin.
pub fn map_diag_rows(map: &ConformalMap, n_radii: usize, n_angles: usize, min_gap: f64) -> Vec<MapDiagRow> {
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for g in logspace(min_gap, 0.99, n_radii) {
        for k in 0..n_angles {
            let th = std::f64::consts::TAU * (k as f64 + 0.5) / n_angles as f64;
            pts.push(Complex64::from_polar(1.0 - g, th));
        }
    }
    pts.into_iter()
        .map(|z| {
            let product = map.det_ds_raw(z);
            let direct = map.sprime_raw(z).norm_sqr();
            MapDiagRow {
                z,
                product,
                direct,
                rel_err: (product - direct).abs() / direct,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct MapDiagSummary {
    max_rel_err: f64,
    tolerance: f64,
    pass: bool,
    dini_sup: f64,
    delta: f64,
    alpha_star: f64,
    quad_order: usize,
    quad_error: f64,
    points: usize,
}

fn map_diag(config: &RunConfig, out: &Path) -> Result<bool> {
    let map = config.map()?;
    let rows = map_diag_rows(&map, 24, 32, 1e-6);
    let mut w = versioned_csv(&out.join("map_diag.csv"), MAP_DIAG_FORMAT)?;
    w.write_record(["z_re", "z_im", "detDS_product", "detDS_direct", "rel_err"])
        .map_err(csv_err)?;
    for r in &rows {
        w.write_record([r.z.re, r.z.im, r.product, r.direct, r.rel_err].map(fmt_sci))
            .map_err(csv_err)?;
    }
    w.flush()?;
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let pass = max_rel_err <= MAP_DIAG_TOL;
    let d = map.domain();
    write_json(
        &out.join("summary.json"),
        &MapDiagSummary {
            max_rel_err,
            tolerance: MAP_DIAG_TOL,
            pass,
            dini_sup: map.dini_integral_sup(512),
            delta: d.delta(),
            alpha_star: d.alpha_star(),
            quad_order: map.quad_order(),
            quad_error: map.quad_error(),
            points: rows.len(),
        },
    )?;
    Ok(pass)
}

fn write_trajectories(path: &Path, sim: &SimOutput) -> Result<()> {
    let mut w = versioned_csv(path, TRAJECTORY_FORMAT)?;
    w.write_record([
        "t",
        "id",
        "z_re",
        "z_im",
        "x1",
        "x2",
        "psi",
        "one_minus_abs_z",
        "dist_estimate",
        "kind",
        "q",
    ])
    .map_err(csv_err)?;
    for tr in &sim.trajectories {
        let kind = match tr.kind {
            TrajectoryKind::Particle => "particle",
            TrajectoryKind::Tracer => "tracer",
        };
        for s in &tr.samples {
            w.write_record([
                fmt_sci(s.t),
                tr.id.to_string(),
                fmt_sci(s.z.re),
                fmt_sci(s.z.im),
                fmt_sci(s.x.re),
                fmt_sci(s.x.im),
                fmt_sci(s.psi),
                fmt_sci(s.one_minus_abs_z),
                fmt_sci(s.dist_estimate),
                kind.to_string(),
                s.q.map(fmt_sci).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_conservation(path: &Path, sim: &SimOutput) -> Result<()> {
    let mut w = versioned_csv(path, CONSERVATION_FORMAT)?;
    w.write_record(["t", "sum_w", "ring_area", "min_dist", "dt"]).map_err(csv_err)?;
    for e in &sim.log.entries {
        w.write_record([
            fmt_sci(e.t),
            fmt_sci(e.sum_w),
            e.ring_area.map(fmt_sci).unwrap_or_default(),
            fmt_sci(e.min_dist),
            fmt_sci(e.dt),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    exited_count: usize,
    /// Smallest `1 - |z|` logged over the run.
    min_dist: f64,
    /// Double-exponential slope; null when the fit is not applicable.
    #[serde(rename = "fitted_Comega")]
    fitted_comega: Option<f64>,
    fitted_comega_note: String,
    particles: usize,
    tracers: usize,
    steps: usize,
    rejected_steps: usize,
    /// `(t, trajectory id)` of every step collapse.
    collapses: Vec<(f64, usize)>,
    seed: u64,
}

fn run_simulate(config: &RunConfig, out: &Path) -> Result<bool> {
    let map = config.map()?;
    let field = config.build_field(&map)?;
    let sim = simulate(&map, &field, &config.sim)?;
    write_trajectories(&out.join("trajectories.csv"), &sim)?;
    write_conservation(&out.join("conservation.csv"), &sim)?;
    sim.field.save_csv(&out.join("final_field.csv"))?;
    let (fitted, note) = if !field.is_nonnegative() || field.is_empty() {
        (None, "field is empty or not nonnegative".to_string())
    } else {
        match verify::check_double_exponential(&sim.trajectories, config.seed) {
            Ok(r) => (r.fitted.get("C_omega").copied(), "slope of ln(-ln d) for t >= 1".into()),
            Err(e) => (None, e.to_string()),
        }
    };
    write_json(
        &out.join("run_summary.json"),
        &RunSummary {
            exited_count: sim.exited_count(),
            min_dist: sim.min_dist(),
            fitted_comega: fitted,
            fitted_comega_note: note,
            particles: field.len(),
            tracers: field.tracers().len(),
            steps: sim.log.steps,
            rejected_steps: sim.log.rejected_steps,
            collapses: sim.log.collapses.clone(),
            seed: config.seed,
        },
    )?;
    Ok(true)
}

/// Default sample count per check: sweep points, instances or pairs.
pub fn default_samples(check: &str) -> usize {
    match check {
        "identities" => 100_000,
        "rearrangement" => 200,
        "kernel_bounds" => 500,
        "lemma35" => 40,
        _ => 500,
    }
}

#[derive(Serialize)]
struct CheckSummary {
    name: String,
    hard: bool,
    pass: bool,
    max_ratio: Option<f64>,
    slope: Option<f64>,
    violations: Option<usize>,
    error: Option<String>,
    message: Option<String>,
}

#[derive(Serialize)]
struct VerifySummary {
    seed: u64,
    field_source: String,
    hard_pass: bool,
    all_pass: bool,
    checks: Vec<CheckSummary>,
}

fn write_reports(
    out: &Path,
    seed: u64,
    field_source: &str,
    results: Vec<(&str, Result<EstimateReport>)>,
) -> Result<VerifySummary> {
    let dir = out.join("reports");
    std::fs::create_dir_all(&dir)?;
    let mut checks = Vec::new();
    for (name, res) in results {
        let hard = HARD_CHECKS.contains(&name);
        checks.push(match res {
            Ok(r) => {
                write_json(&dir.join(format!("{name}.json")), &r)?;
                CheckSummary {
                    name: name.into(),
                    hard,
                    pass: r.pass,
                    max_ratio: Some(r.max_ratio),
                    slope: r.slope,
                    violations: Some(r.violations),
                    error: None,
                    message: None,
                }
            }
            Err(e) => CheckSummary {
                name: name.into(),
                hard,
                pass: false,
                max_ratio: None,
                slope: None,
                violations: None,
                error: Some(e.code().into()),
                message: Some(e.to_string()),
            },
        });
    }
    let summary = VerifySummary {
        seed,
        field_source: field_source.into(),
        hard_pass: checks.iter().filter(|c| c.hard).all(|c| c.pass),
        all_pass: checks.iter().all(|c| c.pass),
        checks,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Runs shared by the trajectory checks: the configured run and one with
/// halved `dt0` and `output_dt`.
struct DynamicsRuns {
    base: SimOutput,
    halved: SimOutput,
}

fn dynamics_runs(map: &ConformalMap, field: &VortexField, sim: &SimConfig) -> Result<DynamicsRuns> {
    let mut cfg = sim.clone();
    cfg.log_q = true;
    cfg.log_psi = true;
    let base = simulate(map, field, &cfg)?;
    cfg.dt0 *= 0.5;
    cfg.dt_min = cfg.dt_min.min(0.5 * cfg.dt0);
    let halved = simulate(map, field, &cfg)?;
    Ok(DynamicsRuns { base, halved })
}

fn run_verify(config: &RunConfig, out: &Path) -> Result<bool> {
    let checks = config.verify.resolved_checks()?;
    let map = config.map()?;
    let (field, source) = match config.field_init {
        FieldInit::None => (
            random_blobs(&map, DEFAULT_VERIFY_BLOBS, config.seed)?,
            format!("{DEFAULT_VERIFY_BLOBS} random nonnegative blobs from the run seed"),
        ),
        _ => (config.build_field(&map)?, "configured field_init".to_string()),
    };
    let seed = config.seed;
    let v = &config.verify;
    let n_for = |c: &str| v.samples.unwrap_or(default_samples(c));
    let angles: Vec<f64> = if v.corner_angles {
        map.domain().corners().iter().map(|c| c.theta).collect()
    } else {
        Vec::new()
    };
    let xi_for = |c: &str| XiSamples::log_gaps(n_for(c), v.gap_lo, v.gap_hi, &angles, seed);

    let mut lemma33: Option<EstimateReport> = None;
    let mut dynamics: Option<Result<DynamicsRuns>> = None;
    let mut results: Vec<(&str, Result<EstimateReport>)> = Vec::new();
    for &name in &checks {
        let res = match name {
            "identities" => Ok(verify::check_identities(n_for(name), seed)),
            "rearrangement" => verify::check_rearrangement(n_for(name), seed),
            "kernel_bounds" => verify::check_kernel_bounds(n_for(name), seed),
            "lemma33" => {
                let r = verify::check_lemma33(&map, &field, &xi_for(name));
                lemma33 = Some(r.clone());
                Ok(r)
            }
            "lemma34" => verify::check_lemma34(&field, &xi_for(name)),
            "lemma35" => verify::check_lemma35(&field, &xi_for(name)),
            "r_bound" => Ok(verify::check_r_bound(&map, &field, &xi_for(name))),
            "gronwall" | "double_exponential" => {
                let runs = dynamics.get_or_insert_with(|| dynamics_runs(&map, &field, &config.sim));
                match runs {
                    Err(e) => Err(e.clone()),
                    Ok(runs) if name == "gronwall" => {
                        let c_omega = lemma33
                            .get_or_insert_with(|| {
                                verify::check_lemma33(&map, &field, &xi_for("lemma33"))
                            })
                            .fitted["C_Omega"];
                        verify::check_gronwall(&[&runs.base, &runs.halved], c_omega, seed)
                    }
                    Ok(runs) => {
                        if field.is_nonnegative() {
                            verify::check_double_exponential(&runs.base.trajectories, seed)
                        } else {
                            Err(Error::SignFlagMissing(
                                "double-exponential check requires a nonnegative field".into(),
                            ))
                        }
                    }
                }
            }
            other => unreachable!("check list validated: {other}"),
        };
        results.push((name, res));
    }
    let first_err = results
        .iter()
        .find_map(|(_, r)| r.as_ref().err().cloned());
    let summary = write_reports(out, seed, &source, results)?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(summary.hard_pass),
    }
}
