//! Estimates along simulated trajectories.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::EstimateReport;
use crate::advect::{SimOutput, Trajectory, TrajectoryKind};
use crate::error::{Error, Result};
use crate::numerics::{fit_line, fit_quadratic};

/// Relative spread allowed between fitted constants of refined runs.
pub const GRONWALL_STABILITY: f64 = 0.3;
/// Absolute floor below which fitted Gronwall constants count as zero.
const GRONWALL_FLOOR: f64 = 1e-8;
/// Relative agreement required between `dPsi/dt` and `Q / (-2 pi)`.
pub const Q_CROSS_TOL: f64 = 1e-2;
/// Initial time window discarded by the double-exponential fit.
pub const TRANSIENT: f64 = 1.0;
const MIN_SAMPLES: usize = 10;
const NEAR_BOUNDARY: f64 = 0.75;

/// Three-point derivative on a possibly nonuniform grid, at interior index `k`.
fn centered_derivative(t: &[f64], y: &[f64], k: usize) -> f64 {
    let h1 = t[k] - t[k - 1];
    let h2 = t[k + 1] - t[k];
    (h1 * h1 * y[k + 1] - h2 * h2 * y[k - 1] + (h2 * h2 - h1 * h1) * y[k]) / (h1 * h2 * (h1 + h2))
}

struct GronwallFit {
    constant: f64,
    near_samples: usize,
    q_rel_err: Option<f64>,
    c_a: f64,
}

fn fit_gronwall(run: &SimOutput, c_omega: f64) -> GronwallFit {
    let w = run.field.omega_inf();
    let mut constant: f64 = 0.0;
    let mut near = 0;
    let mut q_err: Option<f64> = None;
    for tr in &run.trajectories {
        let s = &tr.samples;
        if s.len() < 3 {
            continue;
        }
        let t: Vec<f64> = s.iter().map(|x| x.t).collect();
        let psi: Vec<f64> = s.iter().map(|x| x.psi).collect();
        let mut fd_all = Vec::new();
        let mut qd_all = Vec::new();
        for k in 1..s.len() - 1 {
            let d = centered_derivative(&t, &psi, k);
            if tr.kind == TrajectoryKind::Tracer {
                if let Some(q) = s[k].q {
                    fd_all.push(d);
                    qd_all.push(q / -TAU);
                }
            }
            if s[k].z.norm() < NEAR_BOUNDARY || !(psi[k] > 0.0) {
                continue;
            }
            near += 1;
            let denom = w * psi[k] * (psi[k] / (c_omega * w)).ln().abs();
            let ratio = if d == 0.0 { 0.0 } else { d.abs() / denom };
            constant = constant.max(ratio);
        }
        if !qd_all.is_empty() {
            let scale = qd_all.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max);
            let err = fd_all
                .iter()
                .zip(&qd_all)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let rel = if scale > 0.0 { err / scale } else { err };
            q_err = Some(q_err.map_or(rel, |e: f64| e.max(rel)));
        }
    }
    GronwallFit {
        constant,
        near_samples: near,
        q_rel_err: q_err,
        c_a: empirical_c_a(run),
    }
}

/// Smallest `sum_k w_k (1 - |z_k|) / max(|z_k - xi|, 1 - |xi|)^2 / ||omega||_inf`
/// over recorded near-boundary trajectory positions `xi`, with particle
/// positions taken at the same output index.
fn empirical_c_a(run: &SimOutput) -> f64 {
    let particles: Vec<&Trajectory> = run
        .trajectories
        .iter()
        .filter(|t| t.kind == TrajectoryKind::Particle)
        .collect();
    let weights: Vec<f64> = run.field.particles().iter().map(|p| p.w).collect();
    let w_inf = run.field.omega_inf();
    if particles.is_empty() || w_inf == 0.0 {
        return f64::NAN;
    }
    let n_out = particles.iter().map(|t| t.samples.len()).min().unwrap_or(0);
    let mut best = f64::INFINITY;
    for k in 0..n_out {
        let pos: Vec<Complex64> = particles.iter().map(|t| t.samples[k].z).collect();
        for tr in &run.trajectories {
            let Some(s) = tr.samples.get(k) else { continue };
            if s.z.norm() < NEAR_BOUNDARY {
                continue;
            }
            let gap = 1.0 - s.z.norm();
            let sum: f64 = pos
                .iter()
                .zip(&weights)
                .map(|(z, w)| {
                    let m = (z - s.z).norm().max(gap);
                    w.abs() * (1.0 - z.norm()) / (m * m)
                })
                .sum();
            best = best.min(sum / w_inf);
        }
    }
    if best.is_finite() {
        best
    } else {
        f64::NAN
    }
}

/// Fits the smallest `C_{a,Omega}` with
/// `|dPsi/dt| <= C ||omega||_inf Psi |ln(Psi / (C_Omega ||omega||_inf))|`
/// at all logged samples with `|z| >= 3/4`. `runs[0]` is the reference run;
/// further runs (typically with halved steps) must reproduce the constant
/// within 30%. Tracer samples carrying `Q` are also compared with the
/// finite-difference derivative of the logged stream values.
pub fn check_gronwall(runs: &[&SimOutput], c_omega: f64, seed: u64) -> Result<EstimateReport> {
    let base = runs
        .first()
        .ok_or_else(|| Error::InvalidConfig("gronwall check needs at least one run".into()))?;
    let mut r = EstimateReport::new(
        "gronwall",
        seed,
        format!(
            "logged trajectory samples with |z| >= 3/4 over {} run(s), centred differences in time",
            runs.len()
        ),
    );
    r.tolerance = GRONWALL_STABILITY;
    r.detail("C_Omega_input", c_omega);
    let w = base.field.omega_inf();
    let l1 = base.field.omega_l1();
    if base.field.is_empty() || w == 0.0 {
        r.notes.push("zero field: the estimate holds vacuously".into());
        r.fit("C_a_Omega", 0.0);
        return Ok(r);
    }
    let fits: Vec<GronwallFit> = runs.iter().map(|run| fit_gronwall(run, c_omega)).collect();
    let f0 = &fits[0];
    if f0.near_samples < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            found: f0.near_samples,
            needed: MIN_SAMPLES,
            context: "gronwall check: trajectory samples with |z| >= 3/4".into(),
        });
    }
    r.samples = f0.near_samples;
    r.max_ratio = f0.constant;
    r.fit("C_a_Omega", f0.constant);
    r.fit("a", 0.5 * l1 / w);
    r.fit("c_a", f0.c_a);
    let mut stable = f0.constant.is_finite();
    for (k, f) in fits.iter().enumerate().skip(1) {
        r.detail(&format!("C_a_Omega_run{k}"), f.constant);
        let spread = (f.constant - f0.constant).abs();
        if !(spread <= GRONWALL_STABILITY * f0.constant + GRONWALL_FLOOR) {
            stable = false;
        }
    }
    let mut q_ok = true;
    if let Some(e) = f0.q_rel_err {
        r.detail("q_cross_check_rel_err", e);
        q_ok = e <= Q_CROSS_TOL;
    }
    if !stable {
        r.violations += 1;
    }
    if !q_ok {
        r.violations += 1;
    }
    r.pass = stable && q_ok;
    Ok(r)
}

/// Least-squares slope of `ln(-ln d(t))` for `t >= TRANSIENT`, with a
/// superlinearity flag judged on the upper envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleExpFit {
    pub slope: f64,
    /// Quadratic coefficient of the envelope fit.
    pub curvature: f64,
    pub superlinear: bool,
    pub samples: usize,
}

/// Smallest quadratic bend of the envelope, in units of `ln(-ln d)`, that
/// counts as superlinear growth.
const SUPERLINEAR_BEND: f64 = 0.25;
/// Width of the time blocks whose maxima form the envelope.
const ENVELOPE_BLOCK: f64 = 2.0;

fn fit_double_exp(t: &[f64], d: &[f64]) -> Option<DoubleExpFit> {
    let (ts, ys): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(d)
        .filter(|(t, d)| **t >= TRANSIENT && **d > 0.0 && **d < 1.0)
        .map(|(t, d)| (*t, (-d.ln()).ln()))
        .unzip();
    let line = fit_line(&ts, &ys)?;
    let t0 = *ts.first()?;
    let span = ts.last()? - t0;
    // block maxima of y: the bound constrains how fast the envelope rises,
    // and orbiting trajectories make y itself oscillate
    let mut env: Vec<(f64, f64)> = Vec::new();
    for (&t, &y) in ts.iter().zip(&ys) {
        let b = ((t - t0) / ENVELOPE_BLOCK).floor();
        match env.last_mut() {
            Some((bt, by)) if *bt == b => *by = by.max(y),
            _ => env.push((b, y)),
        }
    }
    let (curvature, superlinear) = if env.len() >= 4 {
        let bx: Vec<f64> = env.iter().map(|e| t0 + (e.0 + 0.5) * ENVELOPE_BLOCK).collect();
        let by: Vec<f64> = env.iter().map(|e| e.1).collect();
        let q = fit_quadratic(&bx, &by)?;
        // accelerating growth must bend the envelope by more than a fixed
        // amount in y, i.e. a factor of about 1.3 in -ln d
        (q[2], q[2] * span * span > SUPERLINEAR_BEND)
    } else {
        (0.0, false)
    };
    Some(DoubleExpFit {
        slope: line.slope,
        curvature,
        superlinear,
        samples: ts.len(),
    })
}

/// Double-exponential boundary approach: `d(t)` is the smallest distance
/// over all live trajectories at each output time, measured both as
/// `1 - |z|` and as the physical-distance estimate. `ln(-ln d(t))` is fitted
/// against `t`; the larger slope (floored at zero) is the reported `C_omega`.
pub fn check_double_exponential(trajectories: &[Trajectory], seed: u64) -> Result<EstimateReport> {
    let n_out = trajectories.iter().map(|t| t.samples.len()).max().unwrap_or(0);
    let mut t = Vec::with_capacity(n_out);
    let mut gap = Vec::with_capacity(n_out);
    let mut phys = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let live: Vec<_> = trajectories.iter().filter_map(|tr| tr.samples.get(k)).collect();
        t.push(live[0].t);
        gap.push(live.iter().map(|s| s.one_minus_abs_z).fold(f64::INFINITY, f64::min));
        phys.push(live.iter().map(|s| s.dist_estimate).fold(f64::INFINITY, f64::min));
    }
    let fit_gap = fit_double_exp(&t, &gap);
    let fit_phys = fit_double_exp(&t, &phys);
    let Some(g) = fit_gap.filter(|f| f.samples >= MIN_SAMPLES) else {
        return Err(Error::InsufficientSamples {
            found: fit_gap.map_or(0, |f| f.samples),
            needed: MIN_SAMPLES,
            context: format!("double-exponential check: output times with t >= {TRANSIENT}"),
        });
    };
    let closest = trajectories
        .iter()
        .min_by(|a, b| a.min_one_minus_abs_z().total_cmp(&b.min_one_minus_abs_z()))
        .expect("nonempty");
    let mut r = EstimateReport::new(
        "double_exponential",
        seed,
        format!(
            "minimum over {} trajectories at each of {} output times with t >= {TRANSIENT}",
            trajectories.len(),
            g.samples
        ),
    );
    r.samples = g.samples;
    r.slope = Some(g.slope);
    r.detail("slope_one_minus_abs_z", g.slope);
    r.detail("curvature_one_minus_abs_z", g.curvature);
    r.detail("closest_trajectory_id", closest.id as f64);
    r.detail("min_one_minus_abs_z", closest.min_one_minus_abs_z());
    let mut c = g.slope.max(0.0);
    let mut superlinear = g.superlinear;
    if let Some(p) = fit_phys {
        r.detail("slope_dist_estimate", p.slope);
        r.detail("curvature_dist_estimate", p.curvature);
        c = c.max(p.slope.max(0.0));
        superlinear |= p.superlinear;
    } else {
        r.notes.push("physical distance estimate not in (0, 1); only 1-|z| was fitted".into());
    }
    r.fit("C_omega", c);
    r.max_ratio = c;
    let exited = trajectories
        .iter()
        .filter(|t| !matches!(t.status, crate::advect::Status::Alive))
        .count();
    r.detail("exited", exited as f64);
    r.violations = usize::from(superlinear) + usize::from(!c.is_finite()) + exited;
    r.pass = r.violations == 0;
    r.notes.push("distances are 1-|z| and the estimate (1-|z|)|S'(z)|".into());
    for k in 0..t.len() {
        r.series.push([t[k], gap[k], phys[k], f64::NAN]);
    }
    Ok(r)
}
