//! The Riemann map `S: D -> Omega` built from boundary angle data.
//!
//! Corner factors `(1 - z e^{-i theta_j})^{-alpha_j}` are evaluated in closed
//! form. The continuous part of the tangent angle enters through the
//! Herglotz transform of `beta_c - kappa theta`, whose Taylor coefficients
//! are computed by FFT on `quad_order` equispaced nodes. `det_ds` takes an
//! independent route through the closed-form Fourier data of the twist.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::quadrature::integrate_complex;

/// Largest admissible modulus of a disc point.
pub const DISC_CUTOFF: f64 = 1.0 - 1e-14;

/// Tolerance on the node-doubling estimate of the boundary quadrature.
pub const QUAD_TOL: f64 = 1e-8;

pub const DEFAULT_QUAD_ORDER: usize = 1024;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_REL_TOL: f64 = 1e-12;

/// Physical-plane point, stored as a complex number.
pub type PhysicalPoint = Complex64;

/// A point strictly inside the unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if z.re.is_finite() && z.im.is_finite() && z.norm() <= DISC_CUTOFF {
            Ok(DiskPoint(z))
        } else {
            Err(Error::OutsideDisc { re: z.re, im: z.im })
        }
    }

    pub fn from_polar(r: f64, theta: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(r, theta))
    }

    pub fn origin() -> Self {
        DiskPoint(Complex64::new(0.0, 0.0))
    }

    pub fn z(self) -> Complex64 {
        self.0
    }

    pub fn abs(self) -> f64 {
        self.0.norm()
    }
}

/// Reflection across the unit circle, `z / |z|^2`. `None` at the origin,
/// where each caller applies its own limiting convention.
pub fn image(z: Complex64) -> Option<Complex64> {
    let n = z.norm_sqr();
    if n == 0.0 {
        None
    } else {
        Some(z / n)
    }
}

/// Real 2x2 matrix of multiplication by the complex number `d`, i.e. the
/// Jacobian of a holomorphic map with complex derivative `d`.
pub fn derivative_matrix(d: Complex64) -> [[f64; 2]; 2] {
    [[d.re, -d.im], [d.im, d.re]]
}

#[derive(Debug, Clone)]
struct CornerFactor {
    /// `e^{-i theta_j}`
    rot: Complex64,
    /// `e^{i theta_j}`
    point: Complex64,
    alpha: f64,
}

/// Evaluator for `S`, `S'`, `T = S^{-1}` and `det DS`.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    domain: Domain,
    quad_order: usize,
    twist_nodes: Vec<f64>,
    herglotz: Vec<Complex64>,
    quad_error: f64,
    closed_form: Vec<Complex64>,
    corners: Vec<CornerFactor>,
    anchor: Complex64,
    seeds: Vec<(Complex64, Complex64)>,
    diam: f64,
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    // sum_{n >= 1} coeffs[n-1] z^n
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc * z
}

/// Fourier coefficients `c_n = (1/N) sum_m f(theta_m) e^{-i n theta_m}`.
fn dft_coefficients(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|c| c / n as f64).collect()
}

fn sample_twist(domain: &Domain, n: usize) -> Vec<f64> {
    let twist = &domain.spec().beta_c;
    (0..n)
        .map(|m| twist.periodic_part(TAU * m as f64 / n as f64))
        .collect()
}

impl ConformalMap {
    pub fn new(domain: Domain) -> Result<Self> {
        Self::with_order(domain, DEFAULT_QUAD_ORDER)
    }

    pub fn with_order(domain: Domain, quad_order: usize) -> Result<Self> {
        if quad_order < 8 || !quad_order.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "quad_order must be a power of two >= 8, got {quad_order}"
            )));
        }
        let twist_nodes = sample_twist(&domain, quad_order);
        let coarse = dft_coefficients(&twist_nodes);
        let fine = dft_coefficients(&sample_twist(&domain, 2 * quad_order));
        let half = quad_order / 2;
        let mut quad_error = 0.0;
        for k in 1..half {
            quad_error += 2.0 * (coarse[k] - fine[k]).norm();
        }
        for c in &fine[half..quad_order] {
            quad_error += 2.0 * c.norm();
        }
        if quad_error > QUAD_TOL {
            return Err(Error::QuadratureUnderresolved {
                estimate: quad_error,
                tolerance: QUAD_TOL,
                context: format!("boundary twist with {quad_order} nodes"),
            });
        }
        let scale = twist_nodes.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut herglotz: Vec<Complex64> = coarse[1..half].iter().map(|c| 2.0 * c).collect();
        while herglotz
            .last()
            .is_some_and(|c| c.norm() <= 1e-15 * scale)
        {
            herglotz.pop();
        }
        let closed_form = domain
            .spec()
            .beta_c
            .harmonic_coefficients()
            .into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        let corners = domain
            .corners()
            .iter()
            .map(|c| CornerFactor {
                rot: Complex64::from_polar(1.0, -c.theta),
                point: Complex64::from_polar(1.0, c.theta),
                alpha: c.alpha,
            })
            .collect();
        let mut map = ConformalMap {
            domain,
            quad_order,
            twist_nodes,
            herglotz,
            quad_error,
            closed_form,
            corners,
            anchor: Complex64::new(0.0, 0.0),
            seeds: Vec::new(),
            diam: 1.0,
        };
        map.build_seeds()?;
        Ok(map)
    }

    /// Same map with `S(0) = anchor`.
    pub fn with_anchor(mut self, anchor: Complex64) -> Self {
        let shift = anchor - self.anchor;
        self.anchor = anchor;
        for s in &mut self.seeds {
            s.1 += shift;
        }
        self
    }

    fn build_seeds(&mut self) -> Result<()> {
        const RADII: [f64; 11] = [
            0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.98, 0.99, 0.995, 0.999,
        ];
        const ANGLES: usize = 64;
        let mut seeds = vec![(Complex64::new(0.0, 0.0), self.anchor)];
        let mut rim = Vec::with_capacity(ANGLES);
        for k in 0..ANGLES {
            let e = Complex64::from_polar(1.0, TAU * (k as f64 + 0.5) / ANGLES as f64);
            let mut prev = Complex64::new(0.0, 0.0);
            let mut s = self.anchor;
            for &r in &RADII[1..] {
                let z = e * r;
                s += self.segment_integral(prev, z)?;
                seeds.push((z, s));
                prev = z;
            }
            let edge = e * (1.0 - 1e-8);
            rim.push(s + self.segment_integral(prev, edge)?);
        }
        let mut diam: f64 = 0.0;
        for (i, a) in rim.iter().enumerate() {
            for b in &rim[i + 1..] {
                diam = diam.max((a - b).norm());
            }
        }
        self.seeds = seeds;
        self.diam = diam.max(f64::MIN_POSITIVE);
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    /// Node-doubling estimate of the boundary quadrature error.
    pub fn quad_error(&self) -> f64 {
        self.quad_error
    }

    /// Values of `beta_c - kappa theta` at the quadrature nodes.
    pub fn twist_nodes(&self) -> &[f64] {
        &self.twist_nodes
    }

    pub fn anchor(&self) -> Complex64 {
        self.anchor
    }

    /// Diameter estimate of `Omega` from boundary samples.
    pub fn diameter(&self) -> f64 {
        self.diam
    }

    pub fn sprime0(&self) -> f64 {
        self.domain.spec().sprime0
    }

    /// `S'(z)` without the disc check; `|z| < 1` is assumed.
    pub fn sprime_raw(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(self.sprime0().ln(), 0.0);
        for c in &self.corners {
            acc -= c.alpha * (Complex64::new(1.0, 0.0) - z * c.rot).ln();
        }
        let h = horner(&self.herglotz, z);
        // exp(i H) = exp(-Im H) e^{i Re H}
        acc += Complex64::new(-h.im, h.re);
        acc.exp()
    }

    pub fn sprime(&self, z: DiskPoint) -> Complex64 {
        self.sprime_raw(z.z())
    }

    /// Harmonic integral `int Im(z / (e^{i theta} - z)) (beta_c - kappa theta) d theta`,
    /// from the closed-form Fourier data of the twist.
    pub fn dini_integral_raw(&self, z: Complex64) -> f64 {
        PI * horner(&self.closed_form, z).im
    }

    pub fn dini_integral(&self, z: DiskPoint) -> f64 {
        self.dini_integral_raw(z.z())
    }

    /// `det DS(z)` from the product formula, without the disc check.
    pub fn det_ds_raw(&self, z: Complex64) -> f64 {
        let mut log = 2.0 * self.sprime0().ln();
        for c in &self.corners {
            log -= 2.0 * c.alpha * (z - c.point).norm().ln();
        }
        log -= 2.0 / PI * self.dini_integral_raw(z);
        log.exp()
    }

    pub fn det_ds(&self, z: DiskPoint) -> f64 {
        self.det_ds_raw(z.z())
    }

    /// Empirical supremum of `|dini_integral|` over `sample_count` points
    /// with `1 - |z|` log-spaced in `[min_gap, 1/2]`.
    pub fn dini_integral_sup_to(&self, sample_count: usize, min_gap: f64) -> f64 {
        let n = sample_count.max(1);
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        let (lo, hi) = (min_gap.ln(), 0.5f64.ln());
        (0..n)
            .map(|k| {
                let s = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
                let r = 1.0 - (hi + (lo - hi) * s).exp();
                let th = TAU * (k as f64 * golden).fract();
                self.dini_integral_raw(Complex64::from_polar(r, th)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn dini_integral_sup(&self, sample_count: usize) -> f64 {
        self.dini_integral_sup_to(sample_count, 1e-6)
    }

    /// `int_{a}^{b} S'(w) dw` along the straight segment.
    fn segment_integral(&self, a: Complex64, b: Complex64) -> Result<Complex64> {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let gap = (1.0 - a.norm()).min(1.0 - b.norm()).max(1e-16);
        let scale = (gap / len).min(0.5);
        let toward_b = (1.0 - b.norm()) <= (1.0 - a.norm());
        let mut breaks = vec![0.0, 0.5, 1.0];
        let mut h = 0.25;
        while h > scale {
            breaks.push(if toward_b { 1.0 - h } else { h });
            h *= 0.5;
        }
        breaks.sort_by(f64::total_cmp);
        let tol = 1e-14 * self.sprime0() * len;
        let f = |t: f64| self.sprime_raw(a + d * t);
        Ok(integrate_complex(&f, &breaks, tol)? * d)
    }

    /// `S(z) = S(0) + int_0^1 S'(t z) z dt`.
    pub fn eval_s(&self, z: DiskPoint) -> Result<PhysicalPoint> {
        Ok(self.anchor + self.segment_integral(Complex64::new(0.0, 0.0), z.z())?)
    }

    /// Inverse map by damped Newton iteration from the nearest grid seed.
    pub fn eval_t(&self, x: PhysicalPoint) -> Result<DiskPoint> {
        let diverged = |iterations| Error::InversionDiverged {
            x1: x.re,
            x2: x.im,
            iterations,
        };
        if !(x.re.is_finite() && x.im.is_finite()) {
            return Err(diverged(0));
        }
        let &(mut zeta, mut s) = self
            .seeds
            .iter()
            .min_by(|a, b| (a.1 - x).norm().total_cmp(&(b.1 - x).norm()))
            .expect("seed grid is never empty");
        let tol = NEWTON_REL_TOL * self.diam;
        let mut polish = false;
        for it in 0..NEWTON_MAX_ITER {
            let resid = x - s;
            if resid.norm() <= tol {
                if polish {
                    return DiskPoint::new(zeta).map_err(|_| diverged(it));
                }
                polish = true;
            }
            let step = resid / self.sprime_raw(zeta);
            let mut lambda = 1.0;
            loop {
                let cand = zeta + step * lambda;
                if cand.norm() <= DISC_CUTOFF {
                    let s_new = s + self.segment_integral(zeta, cand)?;
                    if (x - s_new).norm() < resid.norm() || resid.norm() <= tol {
                        zeta = cand;
                        s = s_new;
                        break;
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-10 {
                    if resid.norm() <= tol {
                        return DiskPoint::new(zeta).map_err(|_| diverged(it));
                    }
                    return Err(diverged(it + 1));
                }
            }
        }
        Err(diverged(NEWTON_MAX_ITER))
    }

    /// Jacobian of `T` at `x`, built from `T'(x) = 1 / S'(T(x))`.
    pub fn dt_matrix(&self, x: PhysicalPoint) -> Result<[[f64; 2]; 2]> {
        let zeta = self.eval_t(x)?;
        Ok(derivative_matrix(1.0 / self.sprime(zeta)))
    }

    /// Physical boundary distance estimate `(1 - |z|) |S'(z)|`.
    pub fn boundary_distance_estimate(&self, z: Complex64) -> f64 {
        (1.0 - z.norm()) * self.sprime_raw(z).norm()
    }

    /// `S` at `n` equispaced angles on the circle of radius `r`.
    pub fn boundary_samples(&self, n: usize, r: f64) -> Result<Vec<PhysicalPoint>> {
        (0..n)
            .map(|k| self.eval_s(DiskPoint::from_polar(r, TAU * k as f64 / n as f64)?))
            .collect()
    }
}
