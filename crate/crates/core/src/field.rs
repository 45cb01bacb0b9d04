//! Vorticity as Lagrangian vortex blobs in the disc.
//!
//! A particle carries its disc position `z`, a circulation weight
//! `w = omega_0 * det DS * cell area` (so `w` is the disc-side measure of
//! `omega dy`) and a blob radius `eps`. All kernels are the disc Green's
//! function and its derivatives; the image terms are never regularized.

use std::f64::consts::{PI, TAU};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{ConformalMap, DiskPoint, PhysicalPoint, DISC_CUTOFF};
use crate::error::{Error, Result};
use crate::numerics::{fmt_sci, KahanComplex, KahanSum};

pub const SNAPSHOT_FORMAT: &str = "singular-euler-field/1";

/// Closest a particle may be placed to the circle at initialization.
pub const INIT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub z: Complex64,
    pub w: f64,
    pub eps: f64,
}

/// Field values at one point. Vectors are stored as complex numbers
/// `(x, y) = x + iy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub psi: f64,
    pub u: Complex64,
    pub r_vec: Complex64,
    pub q: f64,
}

/// Immutable snapshot of particles and zero-weight tracers.
#[derive(Debug, Clone, PartialEq)]
pub struct VortexField {
    particles: Vec<Particle>,
    tracers: Vec<Complex64>,
    ring: Option<(usize, usize)>,
    omega_inf: f64,
    omega_l1: f64,
    nonnegative: bool,
}

fn check_inside(z: Complex64) -> Result<()> {
    DiskPoint::new(z).map(|_| ())
}

/// Disc Green's function `-(1/2pi) ln(|xi - z|_eps / |1 - xi conj(z)|)`,
/// clamped at zero from below.
pub fn green(xi: Complex64, z: Complex64, eps: f64) -> f64 {
    let d = (xi - z).norm();
    let den = (Complex64::new(1.0, 0.0) - xi * z.conj()).norm();
    if d >= eps {
        let (a, b) = (xi.norm(), z.norm());
        let t = (1.0 - a) * (1.0 + a) * (1.0 - b) * (1.0 + b) / (den * den);
        -(-t.min(1.0)).ln_1p() / (4.0 * PI)
    } else {
        -(eps / den).min(1.0).ln() / TAU
    }
}

/// Disc-side Biot–Savart kernel before rotation:
/// `(xi - z)/(|xi - z|^2 + eps^2) - z/(z conj(xi) - 1)`. The image term
/// vanishes for `z = 0`, which is the limiting convention at the origin.
fn r_kernel(xi: Complex64, z: Complex64, eps: f64, self_term: bool) -> Complex64 {
    let image = z / (z * xi.conj() - 1.0);
    if self_term {
        -image
    } else {
        let d = xi - z;
        d / (d.norm_sqr() + eps * eps) - image
    }
}

/// Gradient in `z` of `ln|z - xi| - ln|1 - xi conj(z)|`:
/// `(z - xi)/(|z - xi|^2 + eps^2) - xi/(xi conj(z) - 1)`.
fn q_kernel(xi: Complex64, z: Complex64, eps: f64) -> Complex64 {
    let d = z - xi;
    d / (d.norm_sqr() + eps * eps) - xi / (xi * z.conj() - 1.0)
}

fn dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

impl VortexField {
    /// Build a snapshot. `declared_nonnegative` is honoured only when every
    /// weight really is nonnegative.
    pub fn new(
        particles: Vec<Particle>,
        tracers: Vec<Complex64>,
        omega_inf: f64,
        declared_nonnegative: bool,
    ) -> Result<Self> {
        for p in &particles {
            check_inside(p.z)?;
            if !(p.w.is_finite() && p.eps.is_finite() && p.eps >= 0.0) {
                return Err(Error::InvalidConfig(
                    "particle weight and blob radius must be finite, eps >= 0".into(),
                ));
            }
        }
        for &t in &tracers {
            check_inside(t)?;
        }
        if !(omega_inf.is_finite() && omega_inf >= 0.0) {
            return Err(Error::InvalidConfig("omega_inf must be finite and >= 0".into()));
        }
        let mut s = KahanSum::new();
        for p in &particles {
            s.add(p.w);
        }
        let nonnegative = declared_nonnegative && particles.iter().all(|p| p.w >= 0.0);
        Ok(VortexField {
            particles,
            tracers,
            ring: None,
            omega_inf,
            omega_l1: s.value(),
            nonnegative,
        })
    }

    pub fn empty() -> Self {
        VortexField {
            particles: Vec::new(),
            tracers: Vec::new(),
            ring: None,
            omega_inf: 0.0,
            omega_l1: 0.0,
            nonnegative: true,
        }
    }

    /// Append tracers; when `ring` is set they are also marked as the
    /// closed polygon whose area is monitored.
    pub fn with_tracers(mut self, tracers: Vec<Complex64>, ring: bool) -> Result<Self> {
        for &t in &tracers {
            check_inside(t)?;
        }
        if ring {
            self.ring = Some((self.tracers.len(), tracers.len()));
        }
        self.tracers.extend(tracers);
        Ok(self)
    }

    /// Same weights and radii at new positions; positions are not checked.
    pub fn moved(&self, particle_z: &[Complex64], tracer_z: &[Complex64]) -> Self {
        let mut f = self.clone();
        for (p, &z) in f.particles.iter_mut().zip(particle_z) {
            p.z = z;
        }
        f.tracers.copy_from_slice(tracer_z);
        f
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn tracers(&self) -> &[Complex64] {
        &self.tracers
    }

    pub fn ring(&self) -> Option<&[Complex64]> {
        self.ring.map(|(s, n)| &self.tracers[s..s + n])
    }

    pub fn ring_range(&self) -> Option<(usize, usize)> {
        self.ring
    }

    pub fn omega_inf(&self) -> f64 {
        self.omega_inf
    }

    pub fn omega_l1(&self) -> f64 {
        self.omega_l1
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Stream function at a disc point.
    pub fn stream_disc(&self, xi: Complex64) -> f64 {
        let mut s = KahanSum::new();
        for p in &self.particles {
            s.add(p.w * green(xi, p.z, p.eps));
        }
        s.value()
    }

    /// Stream function at a physical point.
    pub fn stream(&self, map: &ConformalMap, x: PhysicalPoint) -> Result<f64> {
        Ok(self.stream_disc(map.eval_t(x)?.z()))
    }

    fn r_sum(&self, xi: Complex64, skip: Option<usize>) -> Complex64 {
        let mut s = KahanComplex::new();
        for (k, p) in self.particles.iter().enumerate() {
            s.add(p.w * r_kernel(xi, p.z, p.eps, skip == Some(k)));
        }
        I * s.value()
    }

    /// `R(xi)`: rotated disc-side Biot–Savart sum.
    pub fn r_field(&self, xi: Complex64) -> Complex64 {
        self.r_sum(xi, None)
    }

    /// Physical velocity at the image of a disc point, `R / (2pi conj(S'))`.
    pub fn velocity_disc(&self, map: &ConformalMap, xi: Complex64) -> Complex64 {
        self.r_field(xi) / (TAU * map.sprime_raw(xi).conj())
    }

    /// Physical velocity `(1/2pi) DT^T R(T(x))`.
    pub fn velocity(&self, map: &ConformalMap, x: PhysicalPoint) -> Result<Complex64> {
        let xi = map.eval_t(x)?;
        Ok(self.velocity_disc(map, xi.z()))
    }

    /// Disc-side velocities `dz/dt = R / (2pi det DS)` of every particle
    /// (own direct term excluded, own image kept) and every tracer.
    pub fn disc_velocities(&self, map: &ConformalMap) -> (Vec<Complex64>, Vec<Complex64>) {
        let pv = (0..self.particles.len())
            .into_par_iter()
            .map(|k| {
                let z = self.particles[k].z;
                self.r_sum(z, Some(k)) / (TAU * map.det_ds_raw(z))
            })
            .collect();
        let tv = self
            .tracers
            .par_iter()
            .map(|&z| self.r_sum(z, None) / (TAU * map.det_ds_raw(z)))
            .collect();
        (pv, tv)
    }

    /// `Q = -2pi dPsi/dt` at a disc point, given the particle disc velocities.
    pub fn q_disc(&self, xi: Complex64, particle_velocities: &[Complex64]) -> f64 {
        let mut s = KahanSum::new();
        for (p, &v) in self.particles.iter().zip(particle_velocities) {
            s.add(p.w * dot(q_kernel(xi, p.z, p.eps), v));
        }
        s.value()
    }

    /// `Q = -2pi dPsi/dt` at a physical point.
    pub fn q_field(&self, map: &ConformalMap, x: PhysicalPoint) -> Result<f64> {
        let xi = map.eval_t(x)?;
        let (pv, _) = self.disc_velocities(map);
        Ok(self.q_disc(xi.z(), &pv))
    }

    /// All field values at a disc point.
    pub fn sample_disc(&self, map: &ConformalMap, xi: Complex64) -> FieldSample {
        let (pv, _) = self.disc_velocities(map);
        let r_vec = self.r_field(xi);
        FieldSample {
            psi: self.stream_disc(xi),
            u: r_vec / (TAU * map.sprime_raw(xi).conj()),
            r_vec,
            q: self.q_disc(xi, &pv),
        }
    }

    /// Particle form of `int (1 - |z|) det DS / max(|z - xi|, 1 - |xi|)^2 omega dz`.
    pub fn boundary_weight_sum(&self, xi: Complex64) -> f64 {
        let gap = 1.0 - xi.norm();
        let mut s = KahanSum::new();
        for p in &self.particles {
            let m = (p.z - xi).norm().max(gap);
            s.add(p.w * (1.0 - p.z.norm()) / (m * m));
        }
        s.value()
    }

    /// Same as [`boundary_weight_sum`](Self::boundary_weight_sum) with `|w|`.
    pub fn boundary_weight_sum_abs(&self, xi: Complex64) -> f64 {
        let gap = 1.0 - xi.norm();
        let mut s = KahanSum::new();
        for p in &self.particles {
            let m = (p.z - xi).norm().max(gap);
            s.add(p.w.abs() * (1.0 - p.z.norm()) / (m * m));
        }
        s.value()
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header = SnapshotHeader {
            format: SNAPSHOT_FORMAT.to_string(),
            omega_inf: self.omega_inf,
            omega_l1: self.omega_l1,
            nonnegative: self.nonnegative,
            tracers: self.tracers.iter().map(|t| [t.re, t.im]).collect(),
            ring: self.ring.map(|(s, n)| [s, n]),
        };
        writeln!(file, "{}", crate::io::to_json_compact(&header)?)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["z_re", "z_im", "w", "eps"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for p in &self.particles {
            w.write_record([fmt_sci(p.z.re), fmt_sci(p.z.im), fmt_sci(p.w), fmt_sci(p.eps)])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = BufReader::new(std::fs::File::open(path)?);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let header: SnapshotHeader =
            serde_json::from_str(first.trim()).map_err(|e| Error::Parse(e.to_string()))?;
        if header.format != SNAPSHOT_FORMAT {
            return Err(Error::Schema(format!(
                "unsupported snapshot format '{}'",
                header.format
            )));
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut particles = Vec::new();
        for rec in rdr.deserialize::<(f64, f64, f64, f64)>() {
            let (re, im, w, eps) = rec.map_err(|e| Error::Parse(e.to_string()))?;
            particles.push(Particle {
                z: Complex64::new(re, im),
                w,
                eps,
            });
        }
        let mut f = VortexField::new(particles, Vec::new(), header.omega_inf, header.nonnegative)?;
        let tracers = header
            .tracers
            .iter()
            .map(|t| Complex64::new(t[0], t[1]))
            .collect();
        match header.ring {
            Some([s, n]) if s == 0 && n == header.tracers.len() => {
                f = f.with_tracers(tracers, true)?;
            }
            Some([s, n]) => {
                f = f.with_tracers(tracers, false)?;
                if s + n > f.tracers.len() {
                    return Err(Error::Schema("ring range exceeds tracer list".into()));
                }
                f.ring = Some((s, n));
            }
            None => f = f.with_tracers(tracers, false)?,
        }
        Ok(f)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotHeader {
    format: String,
    omega_inf: f64,
    omega_l1: f64,
    nonnegative: bool,
    tracers: Vec<[f64; 2]>,
    ring: Option<[usize; 2]>,
}

/// Midpoint-rule particles on a uniform `resolution x resolution` grid over
/// `[-1, 1]^2`, restricted to `region` (a disc-side indicator) and to
/// `|z| <= 1 - 1e-6`. `omega0` is evaluated at the physical point `S(z)`.
pub fn init_patch(
    map: &ConformalMap,
    region: &(dyn Fn(Complex64) -> bool + Sync),
    omega0: &(dyn Fn(PhysicalPoint) -> f64 + Sync),
    resolution: usize,
) -> Result<VortexField> {
    let h = 2.0 / resolution as f64;
    let cells: Vec<Complex64> = (0..resolution * resolution)
        .map(|k| {
            let (i, j) = (k % resolution, k / resolution);
            Complex64::new(-1.0 + h * (i as f64 + 0.5), -1.0 + h * (j as f64 + 0.5))
        })
        .filter(|z| z.norm() <= 1.0 - INIT_MARGIN && region(*z))
        .collect();
    let built: Vec<Result<(Particle, f64)>> = cells
        .par_iter()
        .map(|&z| {
            let x = map.eval_s(DiskPoint::new(z)?)?;
            let om = omega0(x);
            Ok((
                Particle {
                    z,
                    w: om * map.det_ds_raw(z) * h * h,
                    eps: h,
                },
                om,
            ))
        })
        .collect();
    let mut particles = Vec::with_capacity(built.len());
    let mut omega_inf: f64 = 0.0;
    let mut nonneg = true;
    for b in built {
        let (p, om) = b?;
        if om == 0.0 {
            continue;
        }
        omega_inf = omega_inf.max(om.abs());
        nonneg &= om >= 0.0;
        particles.push(p);
    }
    if particles.len() < 4 {
        return Err(Error::ResolutionTooCoarse {
            particles: particles.len(),
        });
    }
    VortexField::new(particles, Vec::new(), omega_inf, nonneg)
}

/// Particles on `rings` concentric circles of radius `(k + 1/2) r_max / rings`
/// about `center`, `per_ring` aligned particles each; weights use the exact
/// annulus area. Blob radius is the larger of ring spacing and arc spacing.
pub fn init_rings(
    map: &ConformalMap,
    center: Complex64,
    r_max: f64,
    rings: usize,
    per_ring: usize,
    omega0: &(dyn Fn(PhysicalPoint) -> f64 + Sync),
) -> Result<VortexField> {
    if rings * per_ring < 4 {
        return Err(Error::ResolutionTooCoarse {
            particles: rings * per_ring,
        });
    }
    let dr = r_max / rings as f64;
    let mut particles = Vec::with_capacity(rings * per_ring);
    let mut omega_inf: f64 = 0.0;
    let mut nonneg = true;
    for k in 0..rings {
        let r = (k as f64 + 0.5) * dr;
        let area = PI * ((r + 0.5 * dr).powi(2) - (r - 0.5 * dr).powi(2)) / per_ring as f64;
        let eps = dr.max(TAU * r / per_ring as f64);
        for j in 0..per_ring {
            let z = center + Complex64::from_polar(r, TAU * j as f64 / per_ring as f64);
            if z.norm() > DISC_CUTOFF - INIT_MARGIN {
                return Err(Error::InvalidConfig("ring leaves the disc".into()));
            }
            let x = map.eval_s(DiskPoint::new(z)?)?;
            let om = omega0(x);
            omega_inf = omega_inf.max(om.abs());
            nonneg &= om >= 0.0;
            particles.push(Particle {
                z,
                w: om * map.det_ds_raw(z) * area,
                eps,
            });
        }
    }
    VortexField::new(particles, Vec::new(), omega_inf, nonneg)
}

/// `n` tracers on the circle `|z - center| = r`.
pub fn ring_tracers(center: Complex64, r: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| center + Complex64::from_polar(r, TAU * k as f64 / n as f64))
        .collect()
}

/// `n` nonnegative blobs with random centres, radii in `[0.01, 0.05]` and
/// vorticity values in `(0, 1]`. Every blob keeps at least two radii between
/// its centre and the circle; weights carry `det DS` and the blob area.
pub fn random_blobs(map: &ConformalMap, n: usize, seed: u64) -> Result<VortexField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut particles = Vec::with_capacity(n);
    let mut omega_inf: f64 = 0.0;
    while particles.len() < n {
        let eps = 0.01 + 0.04 * rng.random::<f64>();
        let r_max = 1.0 - 2.0 * eps;
        let z = Complex64::from_polar(r_max * rng.random::<f64>().sqrt(), TAU * rng.random::<f64>());
        let om = 1.0 - rng.random::<f64>();
        omega_inf = omega_inf.max(om);
        particles.push(Particle {
            z,
            w: om * map.det_ds_raw(z) * PI * eps * eps,
            eps,
        });
    }
    VortexField::new(particles, Vec::new(), omega_inf, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate_domain, DomainSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn disc_map() -> ConformalMap {
        ConformalMap::new(validate_domain(DomainSpec::disc()).unwrap()).unwrap()
    }

    fn point_vortex() -> VortexField {
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
    }

    fn uniform_disc(n: usize) -> VortexField {
        init_patch(&disc_map(), &|_| true, &|_| 1.0, n).unwrap()
    }

    #[test]
    fn point_vortex_at_origin() {
        let map = disc_map();
        let f = point_vortex();
        assert_relative_eq!(f.stream_disc(Complex64::new(0.5, 0.0)), 2f64.ln(), max_relative = 1e-15);
        let r = f.r_field(Complex64::new(0.5, 0.0));
        assert!((r / TAU - Complex64::new(0.0, 2.0)).norm() < 1e-14);
        let u = f.velocity(&map, Complex64::new(0.5, 0.0)).unwrap();
        assert!((u - Complex64::new(0.0, 2.0)).norm() < 1e-10);
    }

    #[test]
    fn empty_field_is_inert() {
        let map = disc_map();
        let f = VortexField::empty();
        assert_eq!(f.r_field(Complex64::new(0.3, 0.1)), Complex64::new(0.0, 0.0));
        assert_eq!(f.q_field(&map, Complex64::new(0.3, 0.1)).unwrap(), 0.0);
        assert_eq!(f.stream_disc(Complex64::new(0.3, 0.1)), 0.0);
    }

    #[test]
    fn patch_mass_matches_area() {
        let full = uniform_disc(64);
        assert!((full.omega_l1() - PI).abs() < 0.01 * PI);
        let half = init_patch(&disc_map(), &|z| z.norm() < 0.5, &|_| 1.0, 64).unwrap();
        assert!((half.omega_l1() - PI / 4.0).abs() < 0.01 * PI / 4.0);
        assert!(matches!(
            init_patch(&disc_map(), &|_| false, &|_| 1.0, 64),
            Err(Error::ResolutionTooCoarse { particles: 0 })
        ));
    }

    #[test]
    fn uniform_patch_reproduces_poisson_solution() {
        let map = disc_map();
        let f = uniform_disc(128);
        assert!((f.stream_disc(Complex64::new(0.0, 0.0)) - 0.25).abs() < 1e-3);
        let u = f.velocity(&map, Complex64::new(0.5, 0.0)).unwrap();
        assert!((u - Complex64::new(0.0, 0.25)).norm() < 1e-3, "{u}");
    }

    #[test]
    fn velocity_is_minus_perp_gradient_and_orthogonal() {
        let map = ConformalMap::new(validate_domain(DomainSpec::square()).unwrap()).unwrap();
        // small blobs: the regularized kernel differs from the exact one by
        // O(eps^2 / d^2) away from the particles
        let particles = (0..12)
            .map(|k| Particle {
                z: Complex64::new(0.2, 0.1) + Complex64::from_polar(0.05 * (k % 4) as f64, k as f64),
                w: 0.1 + 0.01 * k as f64,
                eps: 1e-3,
            })
            .collect();
        let f = VortexField::new(particles, Vec::new(), 1.0, true).unwrap();
        let h = 1e-5;
        for xi in [Complex64::new(-0.5, 0.2), Complex64::new(0.6, -0.5), Complex64::new(0.0, 0.8)] {
            let x = map.eval_s(DiskPoint::new(xi).unwrap()).unwrap();
            let psi = |y: Complex64| f.stream(&map, y).unwrap();
            let dx = (psi(x + h) - psi(x - h)) / (2.0 * h);
            let dy = (psi(x + I * h) - psi(x - I * h)) / (2.0 * h);
            let u = f.velocity(&map, x).unwrap();
            let expect = Complex64::new(dy, -dx);
            assert!((u - expect).norm() < 1e-4 * u.norm().max(1.0), "{u} vs {expect}");
            assert!(dot(u, Complex64::new(dx, dy)).abs() < 1e-5);
        }
    }

    #[test]
    fn stream_vanishes_at_the_circle() {
        let f = uniform_disc(32);
        for k in 0..16 {
            let xi = Complex64::from_polar(1.0 - 1e-12, k as f64);
            let v = f.stream_disc(xi);
            assert!((0.0..=1e-6 * f.omega_l1()).contains(&v), "{v}");
        }
    }

    #[test]
    fn bounded_r_toward_the_circle() {
        let f = VortexField::new(
            vec![Particle {
                z: Complex64::new(0.3, 0.2),
                w: 0.5,
                eps: 0.05,
            }],
            Vec::new(),
            1.0,
            true,
        )
        .unwrap();
        let mags: Vec<f64> = [0.9, 0.99, 0.999, 1.0 - 1e-6, 1.0 - 1e-10]
            .iter()
            .map(|&r| f.r_field(Complex64::from_polar(r, 2.0)).norm())
            .collect();
        let last = *mags.last().unwrap();
        assert!(mags.iter().all(|&m| m < 2.0 * last + 1.0));
        assert!(last.is_finite());
    }

    #[test]
    fn radially_symmetric_field_is_steady() {
        let map = disc_map();
        let f = init_rings(&map, Complex64::new(0.0, 0.0), 0.6, 12, 128, &|_| 1.0).unwrap();
        let q = f.q_field(&map, Complex64::new(0.7, 0.1)).unwrap();
        assert!(q.abs() < 1e-4, "{q}");
    }

    #[test]
    fn green_identity_example() {
        // |xi - z|^2 / (|xi - z*|^2 |z|^2) at xi = 0.5, z = 0.5i is 8/17
        let (xi, z) = (Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5));
        let direct = (xi - z).norm_sqr() / ((xi - z / z.norm_sqr()).norm_sqr() * z.norm_sqr());
        assert_relative_eq!(direct, 8.0 / 17.0, max_relative = 1e-14);
        assert_relative_eq!(green(xi, z, 0.0), -(8.0f64 / 17.0).ln() / (4.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn sign_flag_is_honest() {
        let f = VortexField::new(
            vec![
                Particle { z: Complex64::new(0.1, 0.0), w: 1.0, eps: 0.01 },
                Particle { z: Complex64::new(-0.1, 0.0), w: -1.0, eps: 0.01 },
            ],
            Vec::new(),
            1.0,
            true,
        )
        .unwrap();
        assert!(!f.is_nonnegative());
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        let f = init_patch(&disc_map(), &|z| z.norm() < 0.4, &|x| 1.0 + x.re, 16)
            .unwrap()
            .with_tracers(ring_tracers(Complex64::new(0.0, 0.0), 0.5, 8), true)
            .unwrap();
        f.save_csv(&path).unwrap();
        let g = VortexField::load_csv(&path).unwrap();
        assert_eq!(f, g);
    }

    proptest! {
        #[test]
        fn stream_is_nonnegative_for_nonnegative_fields(
            zs in prop::collection::vec((0.0f64..0.999, 0.0f64..TAU, 0.0f64..2.0, 0.0f64..0.1), 1..20),
            xr in 0.0f64..1.0, xt in 0.0f64..TAU,
        ) {
            let particles = zs.iter().map(|&(r, t, w, eps)| Particle {
                z: Complex64::from_polar(r, t), w, eps,
            }).collect();
            let f = VortexField::new(particles, Vec::new(), 2.0, true).unwrap();
            let xi = Complex64::from_polar(xr.min(DISC_CUTOFF), xt);
            prop_assert!(f.stream_disc(xi) >= 0.0);
        }
    }
}
