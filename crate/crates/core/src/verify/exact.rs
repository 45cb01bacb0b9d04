//! Exact algebraic identities and explicit-constant inequalities.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{random_in_disc, EstimateReport};
use crate::conformal::{derivative_matrix, image};
use crate::error::{Error, Result};
use crate::quadrature::{annular_sector, pair_kernel_integral};

/// Tolerance of the exact identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Relative quadrature tolerance of the rearrangement inequality.
pub const REARRANGEMENT_TOL: f64 = 1e-6;
/// Tolerance of the rearrangement equality cases.
pub const EQUALITY_TOL: f64 = 1e-8;
/// Refinement target of the pair-kernel integral.
pub const KERNEL_REL_TOL: f64 = 1e-4;
const KERNEL_MAX_LEVEL: usize = 6;
/// Smallest `|xi - xi'|` sampled for the pair-kernel bound.
pub const KERNEL_MIN_SEPARATION: f64 = 1e-4;

/// Errors of the inversion-distance identity, the chordal identity and the
/// conformal Jacobian identity at one sample.
fn identity_errors(z: Complex64, w: Complex64, d: Complex64) -> [f64; 3] {
    // |z* - w*| = |z - w| / (|z||w|)
    let lhs = (image(z).unwrap() - image(w).unwrap()).norm();
    let rhs = (z - w).norm() / (z.norm() * w.norm());
    let e1 = (lhs - rhs).abs() / lhs.max(rhs).max(1.0);

    // |xi - z|^2 / (|xi - z*|^2 |z|^2) = 1 - (1 - |xi|^2)(1 - |z|^2) / (|xi - z*|^2 |z|^2)
    let (xi, zz) = (z, w);
    let den = (xi - image(zz).unwrap()).norm_sqr() * zz.norm_sqr();
    let l2 = (xi - zz).norm_sqr() / den;
    let r2 = 1.0 - (1.0 - xi.norm_sqr()) * (1.0 - zz.norm_sqr()) / den;
    let e2 = (l2 - r2).abs();

    // DT DT^T = det DT I
    let m = derivative_matrix(d);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let mut e3: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let p = m[i][0] * m[j][0] + m[i][1] * m[j][1];
            let target = if i == j { det } else { 0.0 };
            e3 = e3.max((p - target).abs() / det.abs().max(1.0));
        }
    }
    [e1, e2, e3]
}

/// The three exact identities on `n_samples` random draws each. `z, w` are
/// uniform in the disc, Jacobian symbols `d` uniform in `|d| < 4`.
pub fn check_identities(n_samples: usize, seed: u64) -> EstimateReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<[Complex64; 3]> = (0..n_samples)
        .map(|_| {
            let mut nz = || loop {
                let z = random_in_disc(&mut rng, 1.0);
                if z.norm() > 0.0 {
                    break z;
                }
            };
            let (z, w) = (nz(), nz());
            [z, w, random_in_disc(&mut rng, 4.0)]
        })
        .collect();
    let errs: Vec<[f64; 3]> = draws
        .par_iter()
        .map(|[z, w, d]| identity_errors(*z, *w, *d))
        .collect();
    let mut max = [0.0f64; 3];
    let mut violations = 0;
    for e in &errs {
        for k in 0..3 {
            max[k] = max[k].max(e[k]);
        }
        if e.iter().any(|x| !(*x <= IDENTITY_TOL)) {
            violations += 1;
        }
    }
    let mut r = EstimateReport::new(
        "identities",
        seed,
        format!("{n_samples} draws of z, w uniform in the unit disc and d uniform in |d| < 4"),
    );
    r.samples = n_samples;
    r.tolerance = IDENTITY_TOL;
    r.max_ratio = max.iter().copied().fold(0.0, f64::max);
    r.violations = violations;
    r.pass = violations == 0;
    r.detail("inversion_distance_max_err", max[0]);
    r.detail("chordal_max_err", max[1]);
    r.detail("jacobian_max_err", max[2]);
    r
}

/// One instance of the rearrangement inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementInstance {
    pub theta_star: f64,
    pub delta: f64,
    /// Atoms `(theta_j, m_j)` of the measure, all inside
    /// `(theta_star - 2 delta, theta_star + 2 delta)`.
    pub atoms: Vec<(f64, f64)>,
    /// Annular sector `r0 < |z| < r1`, `|arg z - theta_star| < half`.
    pub r0: f64,
    pub r1: f64,
    pub half: f64,
    /// Weight exponent: `f(z) = |z - e^{i theta_star}|^{-p}`.
    pub p: f64,
}

impl RearrangementInstance {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let theta_star = TAU * rng.random::<f64>();
        let delta = FRAC_PI_2 * (1.0 - rng.random::<f64>());
        let n_atoms = 1 + (rng.random::<f64>() * 4.0) as usize;
        let atoms = (0..n_atoms)
            .map(|_| {
                let th = theta_star + 2.0 * delta * (2.0 * rng.random::<f64>() - 1.0);
                let m = 0.5 * (1.0 - rng.random::<f64>());
                (th, m)
            })
            .collect();
        let r0 = 0.5 * rng.random::<f64>();
        let r1 = r0 + 0.1 + (0.95 - r0 - 0.1) * rng.random::<f64>();
        let half = PI * (1.0 - rng.random::<f64>());
        let p = rng.random::<f64>();
        RearrangementInstance {
            theta_star,
            delta,
            atoms,
            r0,
            r1,
            half,
            p,
        }
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Both sides, each refined until successive levels agree to 1e-10.
    pub fn sides(&self) -> Result<(f64, f64)> {
        let e_star = Complex64::from_polar(1.0, self.theta_star);
        let f = |z: Complex64| (z - e_star).norm().powf(-self.p);
        let atoms: Vec<(Complex64, f64)> = self
            .atoms
            .iter()
            .map(|&(th, m)| (Complex64::from_polar(1.0, th), m))
            .collect();
        let mass = self.mass();
        let lhs = |z: Complex64| {
            let log: f64 = atoms.iter().map(|(e, m)| m * (z - e).norm().ln()).sum();
            f(z) * (-2.0 * log).exp()
        };
        let rhs = |z: Complex64| f(z) * (z - e_star).norm().powf(-2.0 * mass);
        let integrate = |g: &(dyn Fn(Complex64) -> f64 + Sync)| -> Result<f64> {
            let mut prev = f64::NAN;
            let mut change = f64::INFINITY;
            for level in 0..6 {
                let grid = annular_sector(self.r0, self.r1, self.theta_star, self.half, level);
                let v = grid.integrate(g);
                change = (v - prev).abs() / v.abs().max(1e-300);
                if change < 1e-10 {
                    return Ok(v);
                }
                prev = v;
            }
            Err(Error::QuadratureUnderresolved {
                estimate: change,
                tolerance: 1e-10,
                context: "rearrangement sector integral".into(),
            })
        };
        Ok((integrate(&lhs)?, integrate(&rhs)?))
    }
}

/// Rearrangement inequality on `n_instances` random instances, preceded by
/// the two equality cases (a single atom at `theta_star`, and zero mass).
pub fn check_rearrangement(n_instances: usize, seed: u64) -> Result<EstimateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances: Vec<RearrangementInstance> =
        (0..n_instances).map(|_| RearrangementInstance::random(&mut rng)).collect();
    let mut single = RearrangementInstance::random(&mut rng);
    single.atoms = vec![(single.theta_star, 0.7)];
    let mut massless = RearrangementInstance::random(&mut rng);
    massless.atoms = vec![(massless.theta_star + massless.delta, 0.0)];
    instances.insert(0, massless);
    instances.insert(0, single);

    let mut r = EstimateReport::new(
        "rearrangement",
        seed,
        format!(
            "2 equality cases + {n_instances} random instances: theta* uniform, delta uniform in (0, pi/2], \
             1-4 atoms uniform in I with masses in (0, 1/2], annular sector with r1 <= 0.95, f = |z - e^(i theta*)|^-p, p in [0, 1)"
        ),
    );
    r.tolerance = REARRANGEMENT_TOL;
    let mut max_eq_err: f64 = 0.0;
    for (k, inst) in instances.iter().enumerate() {
        let (lhs, rhs) = inst.sides()?;
        let ratio = lhs / rhs;
        r.max_ratio = r.max_ratio.max(ratio);
        if k < 2 {
            let err = (lhs - rhs).abs() / rhs.abs();
            max_eq_err = max_eq_err.max(err);
            if !(err <= EQUALITY_TOL) {
                r.violations += 1;
            }
        } else if !(lhs <= rhs * (1.0 + REARRANGEMENT_TOL)) {
            r.violations += 1;
        }
        r.series.push([inst.mass(), lhs, rhs, ratio]);
    }
    r.samples = instances.len();
    r.pass = r.violations == 0;
    r.detail("equality_case_max_rel_err", max_eq_err);
    r.notes.push("series x column holds the total mass of the measure".into());
    Ok(r)
}

/// Right side of the pair-kernel bound: `6 pi ln+(1/|xi - xi'|) + 50`.
pub fn pair_kernel_bound(a: Complex64, b: Complex64) -> f64 {
    6.0 * PI * (1.0 / (a - b).norm()).ln().max(0.0) + 50.0
}

/// `int_D dz / (|z - a| |z - b|)` refined to [`KERNEL_REL_TOL`].
pub fn pair_kernel_lhs(a: Complex64, b: Complex64) -> Result<f64> {
    pair_kernel_integral(a, b, |_| 1.0, KERNEL_REL_TOL, KERNEL_MAX_LEVEL)
}

/// Pair-kernel bound on `n` random pairs with `|xi|, |xi'| <= 2` and
/// `|xi - xi'| >= 1e-4`; separations are log-uniform in `[1e-4, 2]`.
pub fn check_kernel_bounds(n: usize, seed: u64) -> Result<EstimateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let a = random_in_disc(&mut rng, 2.0);
        let sep = KERNEL_MIN_SEPARATION * (2.0 / KERNEL_MIN_SEPARATION).powf(rng.random::<f64>());
        let b = a + Complex64::from_polar(sep, TAU * rng.random::<f64>());
        if b.norm() <= 2.0 {
            pairs.push((a, b));
        }
    }
    let mut r = EstimateReport::new(
        "kernel_bounds",
        seed,
        format!("{n} pairs: xi uniform in |xi| <= 2, xi' = xi + s e^(i phi), s log-uniform in [1e-4, 2], rejected if |xi'| > 2"),
    );
    r.tolerance = KERNEL_REL_TOL;
    for (a, b) in pairs {
        let lhs = pair_kernel_lhs(a, b)?;
        let rhs = pair_kernel_bound(a, b);
        let ratio = lhs / rhs;
        // the quadrature value is accurate to KERNEL_REL_TOL
        if !(lhs * (1.0 - KERNEL_REL_TOL) <= rhs) {
            r.violations += 1;
        }
        r.max_ratio = r.max_ratio.max(ratio);
        r.series.push([(a - b).norm(), lhs, rhs, ratio]);
    }
    r.samples = n;
    r.pass = r.violations == 0;
    r.notes.push("series x column holds |xi - xi'|".into());
    Ok(r)
}
