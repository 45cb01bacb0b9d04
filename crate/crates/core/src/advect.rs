//! Particle and tracer transport by coupled RK4 in disc coordinates.
//!
//! Positions are advanced with `dz/dt = R(z) / (2pi det DS(z))`, the disc
//! image of the physical velocity, so no inverse-map solves are needed
//! inside a step. The step size is clamped by the distance to the circle.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{ConformalMap, DiskPoint};
use crate::error::{Error, Result};
use crate::field::VortexField;
use crate::numerics::KahanSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub dt0: f64,
    pub cfl: f64,
    pub exit_tol: f64,
    /// Steps below this size mark the offending trajectory as exited.
    pub dt_min: f64,
    /// Spacing of recorded samples.
    pub output_dt: f64,
    pub log_psi: bool,
    /// Record `Q` at each sample (costs one velocity evaluation per sample).
    pub log_q: bool,
    /// Record the physical position `S(z)` of each sample.
    pub log_physical: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            t_start: 0.0,
            t_end: 10.0,
            dt0: 1e-2,
            cfl: 0.2,
            exit_tol: 1e-10,
            dt_min: 1e-14,
            output_dt: 0.1,
            log_psi: true,
            log_q: false,
            log_physical: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt0", self.dt0),
            ("cfl", self.cfl),
            ("exit_tol", self.exit_tol),
            ("dt_min", self.dt_min),
            ("output_dt", self.output_dt),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::InvalidConfig("t_end must exceed t_start".into()));
        }
        if self.exit_tol >= 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "exit_tol must be below 1e-6, got {}",
                self.exit_tol
            )));
        }
        if self.dt_min >= self.dt0 {
            return Err(Error::InvalidConfig("dt_min must be below dt0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Particle,
    Tracer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitCause {
    /// `|z|` reached `1 - exit_tol`.
    ExitTolerance,
    /// The step size collapsed while this trajectory kept leaving the disc.
    StepCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Alive,
    Exited { t: f64, cause: ExitCause },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub z: Complex64,
    /// `S(z)`, NaN when physical logging is off.
    pub x: Complex64,
    /// NaN when stream logging is off.
    pub psi: f64,
    pub one_minus_abs_z: f64,
    /// `(1 - |z|) |S'(z)|`, an estimate of the physical boundary distance.
    pub dist_estimate: f64,
    pub q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: usize,
    pub kind: TrajectoryKind,
    /// Start time and physical start point.
    pub start: (f64, Complex64),
    pub samples: Vec<TrajectorySample>,
    pub status: Status,
}

impl Trajectory {
    pub fn min_one_minus_abs_z(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.one_minus_abs_z)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories hold the start sample")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationEntry {
    pub t: f64,
    pub sum_w: f64,
    /// Physical area enclosed by the marked tracer ring.
    pub ring_area: Option<f64>,
    /// Smallest `1 - |z|` over live particles and tracers.
    pub min_dist: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConservationLog {
    pub entries: Vec<ConservationEntry>,
    /// `(t, trajectory id)` of every step collapse.
    pub collapses: Vec<(f64, usize)>,
    pub steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub field: VortexField,
    pub trajectories: Vec<Trajectory>,
    pub log: ConservationLog,
}

impl SimOutput {
    pub fn exited_count(&self) -> usize {
        self.trajectories
            .iter()
            .filter(|t| matches!(t.status, Status::Exited { .. }))
            .count()
    }

    pub fn min_dist(&self) -> f64 {
        self.log
            .entries
            .iter()
            .map(|e| e.min_dist)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Coupled RK4 state: particle and tracer positions, with a frozen mask.
struct Stepper<'a> {
    map: &'a ConformalMap,
    base: &'a VortexField,
    sign: f64,
    exit_r: f64,
    frozen: &'a [bool],
}

impl Stepper<'_> {
    fn n_particles(&self) -> usize {
        self.base.len()
    }

    fn velocities(&self, pos: &[Complex64]) -> Vec<Complex64> {
        let np = self.n_particles();
        let f = self.base.moved(&pos[..np], &pos[np..]);
        let (pv, tv) = f.disc_velocities(self.map);
        pv.into_iter()
            .chain(tv)
            .zip(self.frozen)
            .map(|(v, &fr)| if fr { Complex64::new(0.0, 0.0) } else { v * self.sign })
            .collect()
    }

    fn check(&self, pos: &[Complex64]) -> Result<()> {
        for (index, (z, &fr)) in pos.iter().zip(self.frozen).enumerate() {
            let a = z.norm();
            if !fr && !(a < self.exit_r) {
                return Err(Error::ParticleExited { index, abs_z: a });
            }
        }
        Ok(())
    }

    fn rk4(&self, pos: &[Complex64], k1: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
        let axpy = |h: f64, k: &[Complex64]| -> Vec<Complex64> {
            pos.iter().zip(k).map(|(z, v)| z + v * h).collect()
        };
        let p2 = axpy(0.5 * dt, k1);
        self.check(&p2)?;
        let k2 = self.velocities(&p2);
        let p3 = axpy(0.5 * dt, &k2);
        self.check(&p3)?;
        let k3 = self.velocities(&p3);
        let p4 = axpy(dt, &k3);
        self.check(&p4)?;
        let k4 = self.velocities(&p4);
        let out: Vec<Complex64> = (0..pos.len())
            .map(|i| pos[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0))
            .collect();
        self.check(&out)?;
        Ok(out)
    }
}

fn positions(field: &VortexField) -> Vec<Complex64> {
    field
        .particles()
        .iter()
        .map(|p| p.z)
        .chain(field.tracers().iter().copied())
        .collect()
}

/// One classical RK4 step of every particle and tracer.
pub fn step(map: &ConformalMap, field: &VortexField, dt: f64) -> Result<VortexField> {
    step_signed(map, field, dt, 1.0, SimConfig::default().exit_tol)
}

fn step_signed(
    map: &ConformalMap,
    field: &VortexField,
    dt: f64,
    sign: f64,
    exit_tol: f64,
) -> Result<VortexField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let pos = positions(field);
    let frozen = vec![false; pos.len()];
    let st = Stepper {
        map,
        base: field,
        sign,
        exit_r: 1.0 - exit_tol,
        frozen: &frozen,
    };
    let k1 = st.velocities(&pos);
    let out = st.rk4(&pos, &k1, dt)?;
    let np = field.len();
    Ok(field.moved(&out[..np], &out[np..]))
}

/// Shoelace area of a closed polygon.
pub fn polygon_area(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    let mut s = KahanSum::new();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        s.add(a.re * b.im - b.re * a.im);
    }
    0.5 * s.value()
}

struct Recorder<'a> {
    map: &'a ConformalMap,
    config: &'a SimConfig,
}

impl Recorder<'_> {
    fn sample(&self, field: &VortexField, pos: &[Complex64], t: f64, pv: Option<&[Complex64]>) -> Result<Vec<TrajectorySample>> {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        pos.par_iter()
            .map(|&z| {
                let x = if self.config.log_physical {
                    self.map.eval_s(DiskPoint::new(z)?)?
                } else {
                    nan
                };
                Ok(TrajectorySample {
                    t,
                    z,
                    x,
                    psi: if self.config.log_psi {
                        field.stream_disc(z)
                    } else {
                        f64::NAN
                    },
                    one_minus_abs_z: 1.0 - z.norm(),
                    dist_estimate: self.map.boundary_distance_estimate(z),
                    q: pv.map(|v| field.q_disc(z, v)),
                })
            })
            .collect()
    }

    fn ring_area(&self, field: &VortexField) -> Result<Option<f64>> {
        match field.ring() {
            None => Ok(None),
            Some(ring) => {
                let xs: Result<Vec<Complex64>> = ring
                    .par_iter()
                    .map(|&z| self.map.eval_s(DiskPoint::new(z)?))
                    .collect();
                Ok(Some(polygon_area(&xs?)))
            }
        }
    }
}

/// Adaptive forward integration from `config.t_start` to `config.t_end`.
pub fn simulate(map: &ConformalMap, field0: &VortexField, config: &SimConfig) -> Result<SimOutput> {
    run(map, field0, config, 1.0)
}

/// Same as [`simulate`] with the velocity reversed.
pub fn backward_simulate(
    map: &ConformalMap,
    field0: &VortexField,
    config: &SimConfig,
) -> Result<SimOutput> {
    run(map, field0, config, -1.0)
}

fn run(map: &ConformalMap, field0: &VortexField, config: &SimConfig, sign: f64) -> Result<SimOutput> {
    config.validate()?;
    let np = field0.len();
    let mut pos = positions(field0);
    let n = pos.len();
    let mut frozen = vec![false; n];
    let rec = Recorder { map, config };
    let exit_r = 1.0 - config.exit_tol;

    let velocities_now = |pos: &[Complex64], frozen: &[bool]| {
        let st = Stepper {
            map,
            base: field0,
            sign,
            exit_r,
            frozen,
        };
        st.velocities(pos)
    };

    let mut t = config.t_start;
    let mut field = field0.clone();
    let mut k1 = velocities_now(&pos, &frozen);
    let pv_of = |k: &[Complex64]| -> Vec<Complex64> { k[..np].iter().map(|v| v * sign).collect() };
    let first = rec.sample(&field, &pos, t, config.log_q.then(|| pv_of(&k1)).as_deref())?;
    let mut trajectories: Vec<Trajectory> = first
        .into_iter()
        .enumerate()
        .map(|(i, s)| Trajectory {
            id: i,
            kind: if i < np {
                TrajectoryKind::Particle
            } else {
                TrajectoryKind::Tracer
            },
            start: (t, s.x),
            samples: vec![s],
            status: Status::Alive,
        })
        .collect();
    let mut log = ConservationLog::default();
    log.entries.push(ConservationEntry {
        t,
        sum_w: field.omega_l1(),
        ring_area: rec.ring_area(&field)?,
        min_dist: min_gap(&pos, &frozen),
        dt: 0.0,
    });

    let span = config.t_end - config.t_start;
    let mut next_out = config.t_start + config.output_dt;
    let eps_t = 1e-12 * span.max(1.0);
    while t < config.t_end - eps_t {
        let gap = min_gap(&pos, &frozen);
        let umax = k1
            .iter()
            .zip(&frozen)
            .filter(|(_, &f)| !f)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max);
        let clamp = if umax > 0.0 {
            config.cfl * gap / umax
        } else {
            f64::INFINITY
        };
        let target = next_out.min(config.t_end);
        let mut dt = config.dt0.min(clamp).min(target - t);
        let new_pos = loop {
            let st = Stepper {
                map,
                base: field0,
                sign,
                exit_r,
                frozen: &frozen,
            };
            match st.rk4(&pos, &k1, dt) {
                Ok(p) => break Some(p),
                Err(Error::ParticleExited { index, abs_z }) => {
                    log.rejected_steps += 1;
                    dt *= 0.5;
                    if dt < config.dt_min {
                        frozen[index] = true;
                        let cause = if abs_z >= exit_r && pos[index].norm() >= exit_r {
                            ExitCause::ExitTolerance
                        } else {
                            ExitCause::StepCollapse
                        };
                        trajectories[index].status = Status::Exited { t, cause };
                        log.collapses.push((t, index));
                        break None;
                    }
                }
                Err(e) => return Err(e),
            }
        };
        let Some(new_pos) = new_pos else {
            k1 = velocities_now(&pos, &frozen);
            continue;
        };
        pos = new_pos;
        t += dt;
        log.steps += 1;
        field = field0.moved(&pos[..np], &pos[np..]);
        k1 = velocities_now(&pos, &frozen);
        if t >= next_out - eps_t || t >= config.t_end - eps_t {
            let samples = rec.sample(&field, &pos, t, config.log_q.then(|| pv_of(&k1)).as_deref())?;
            for (tr, (s, &fr)) in trajectories.iter_mut().zip(samples.into_iter().zip(&frozen)) {
                if !fr {
                    tr.samples.push(s);
                }
            }
            log.entries.push(ConservationEntry {
                t,
                sum_w: field.omega_l1(),
                ring_area: rec.ring_area(&field)?,
                min_dist: min_gap(&pos, &frozen),
                dt,
            });
            next_out += config.output_dt;
        }
    }
    Ok(SimOutput {
        field,
        trajectories,
        log,
    })
}

fn min_gap(pos: &[Complex64], frozen: &[bool]) -> f64 {
    pos.iter()
        .zip(frozen)
        .filter(|(_, &f)| !f)
        .map(|(z, _)| 1.0 - z.norm())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{init_rings, ring_tracers, Particle};
    use crate::geometry::{validate_domain, DomainSpec};
    use std::f64::consts::{PI, TAU};

    fn disc_map() -> ConformalMap {
        ConformalMap::new(validate_domain(DomainSpec::disc()).unwrap()).unwrap()
    }

    fn point_vortex_with_tracer() -> VortexField {
        VortexField::new(
            vec![Particle {
                z: Complex64::new(0.0, 0.0),
                w: TAU,
                eps: 0.0,
            }],
            Vec::new(),
            1.0,
            true,
        )
        .unwrap()
        .with_tracers(vec![Complex64::new(0.5, 0.0)], false)
        .unwrap()
    }

    #[test]
    fn point_vortex_orbit_period() {
        let map = disc_map();
        let mut f = point_vortex_with_tracer();
        let n = (PI / 2.0 / 1e-3).round() as usize;
        let dt = PI / 2.0 / n as f64;
        for _ in 0..n {
            f = step(&map, &f, dt).unwrap();
        }
        assert!((f.tracers()[0] - Complex64::new(0.5, 0.0)).norm() < 1e-6);
        assert_eq!(f.particles()[0].z, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn empty_field_does_not_move() {
        let map = disc_map();
        let f = VortexField::empty()
            .with_tracers(vec![Complex64::new(0.3, 0.3)], false)
            .unwrap();
        let g = step(&map, &f, 0.1).unwrap();
        assert_eq!(f, g);
        let cfg = SimConfig {
            t_end: 1.0,
            ..SimConfig::default()
        };
        let out = backward_simulate(&map, &f, &cfg).unwrap();
        assert_eq!(out.field, f);
    }

    #[test]
    fn rings_keep_their_radii() {
        let map = disc_map();
        let f = init_rings(&map, Complex64::new(0.0, 0.0), 0.6, 4, 64, &|_| 1.0).unwrap();
        let cfg = SimConfig {
            t_end: 1.0,
            log_physical: false,
            ..SimConfig::default()
        };
        let out = simulate(&map, &f, &cfg).unwrap();
        for (a, b) in f.particles().iter().zip(out.field.particles()) {
            assert!((a.z.norm() - b.z.norm()).abs() < 1e-8, "{} {}", a.z.norm(), b.z.norm());
        }
        assert_eq!(out.exited_count(), 0);
    }

    #[test]
    fn backward_orbit_reverses_orientation() {
        let map = disc_map();
        let f = point_vortex_with_tracer();
        let cfg = SimConfig {
            t_end: 0.2,
            dt0: 1e-3,
            ..SimConfig::default()
        };
        let fwd = simulate(&map, &f, &cfg).unwrap();
        let bwd = backward_simulate(&map, &f, &cfg).unwrap();
        let a = fwd.field.tracers()[0];
        let b = bwd.field.tracers()[0];
        assert!((a.norm() - 0.5).abs() < 1e-8 && (b.norm() - 0.5).abs() < 1e-8);
        assert!((a - b.conj()).norm() < 1e-8);
        assert!(a.im > 0.0 && b.im < 0.0);
    }

    #[test]
    fn ring_area_and_mass_are_conserved() {
        let map = disc_map();
        let f = init_rings(&map, Complex64::new(0.1, 0.0), 0.3, 3, 32, &|_| 1.0)
            .unwrap()
            .with_tracers(ring_tracers(Complex64::new(0.1, 0.0), 0.5, 64), true)
            .unwrap();
        let cfg = SimConfig {
            t_end: 1.0,
            ..SimConfig::default()
        };
        let out = simulate(&map, &f, &cfg).unwrap();
        let a0 = out.log.entries[0].ring_area.unwrap();
        let a1 = out.log.entries.last().unwrap().ring_area.unwrap();
        assert!(((a1 - a0) / a0).abs() < 1e-3);
        assert!(out.log.entries.iter().all(|e| e.sum_w == f.omega_l1()));
    }

    #[test]
    fn config_validation() {
        let bad = SimConfig {
            exit_tol: 1e-3,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(SimConfig::default().validate().is_ok());
    }

    #[test]
    fn polygon_area_of_unit_square() {
        let sq = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
        ];
        assert_eq!(polygon_area(&sq), 1.0);
    }
}
