//! Gauss–Legendre panels, adaptive line integrals and polar grids over the
//! unit disc.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::KahanSum;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n).expect("rule order must be positive");
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}

fn gl16() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Apply a `[-1, 1]` rule on `[a, b]`, pushing `(x, w)` pairs.
fn map_rule(rule: &[(f64, f64)], a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    out.extend(rule.iter().map(|&(x, w)| (m + h * x, h * w)));
}

fn panel_c(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let mut s = Complex64::new(0.0, 0.0);
    for &(x, w) in gl16() {
        s += f(m + h * x) * w;
    }
    s * h
}

fn adapt_c(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> std::result::Result<Complex64, f64> {
    let m = 0.5 * (a + b);
    let left = panel_c(f, a, m);
    let right = panel_c(f, m, b);
    let err = (left + right - whole).norm();
    let floor = 64.0 * f64::EPSILON * (left.norm() + right.norm());
    if err <= tol.max(floor) || b - a < 1e-15 * (1.0 + a.abs()) {
        return Ok(left + right);
    }
    if depth == 0 {
        return Err(err);
    }
    let l = adapt_c(f, a, m, left, 0.5 * tol, depth - 1)?;
    let r = adapt_c(f, m, b, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Adaptive composite Gauss–Legendre integral of a complex function over the
/// panels delimited by `breaks`, to absolute tolerance `tol` per panel.
pub fn integrate_complex(
    f: &dyn Fn(f64) -> Complex64,
    breaks: &[f64],
    tol: f64,
) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let whole = panel_c(f, a, b);
        total += adapt_c(f, a, b, whole, tol, 40).map_err(|estimate| {
            Error::QuadratureUnderresolved {
                estimate,
                tolerance: tol,
                context: format!("adaptive line integral on [{a}, {b}]"),
            }
        })?;
    }
    Ok(total)
}

/// Breakpoints on `[0, 1]` graded geometrically toward `t = 1` down to `scale`.
pub fn graded_toward_one(scale: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut gap = 0.5;
    while gap > scale.max(1e-16) {
        breaks.push(1.0 - gap);
        gap *= 0.5;
    }
    breaks.push(1.0);
    breaks
}

/// A weighted point set over (part of) the unit disc.
#[derive(Debug, Clone, Default)]
pub struct DiscGrid {
    pub points: Vec<Complex64>,
    pub weights: Vec<f64>,
}

/// Geometric breakpoints on `[lo, hi]` accumulating at `lo` down to relative
/// gap `min_gap`; `panels_per_octave` panels between successive halvings.
fn geometric_breaks(lo: f64, hi: f64, min_gap: f64, panels_per_octave: usize) -> Vec<f64> {
    let len = hi - lo;
    let mut breaks = vec![hi];
    let mut gap = len;
    while gap > min_gap.max(len * 1e-15) {
        let next = 0.5 * gap;
        for k in 1..=panels_per_octave {
            let g = gap - (gap - next) * k as f64 / panels_per_octave as f64;
            breaks.push(lo + g);
        }
        gap = next;
    }
    breaks.push(lo);
    breaks.reverse();
    breaks.dedup();
    breaks
}

/// Breakpoints in `[lo, hi]` graded toward both ends.
fn two_sided_breaks(lo: f64, hi: f64, min_gap: f64, ppo: usize) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let mut left = geometric_breaks(lo, mid, min_gap, ppo);
    let right: Vec<f64> = geometric_breaks(lo, mid, min_gap, ppo)
        .iter()
        .rev()
        .map(|&x| hi - (x - lo))
        .collect();
    left.pop();
    left.extend(right);
    left
}

fn rule_on_breaks(rule: &[(f64, f64)], breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(rule.len() * breaks.len());
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            map_rule(rule, w[0], w[1], &mut out);
        }
    }
    out
}

impl DiscGrid {
    /// Origin-centred polar grid with geometric radial refinement toward
    /// `|z| = 1`. Larger `level` means finer.
    pub fn polar(level: usize) -> Self {
        let order = 8 + 2 * level;
        let rule = gauss_legendre(order);
        let min_gap = 0.5f64.powi(12 + 3 * level as i32);
        let breaks: Vec<f64> = geometric_breaks(0.0, 1.0, min_gap, 1 + level)
            .into_iter()
            .map(|g| 1.0 - g)
            .rev()
            .collect();
        let radial = rule_on_breaks(&rule, &breaks);
        let n_theta = 32 << level;
        let mut grid = DiscGrid::default();
        for &(r, wr) in &radial {
            for k in 0..n_theta {
                let th = TAU * (k as f64 + 0.5) / n_theta as f64;
                grid.points.push(Complex64::from_polar(r, th));
                grid.weights.push(r * wr * TAU / n_theta as f64);
            }
        }
        grid
    }

    /// Polar grid centred at `center` covering `D` (clipped to the disc when
    /// the centre lies outside), graded toward the centre and toward the
    /// directions and distances of the `features` points.
    pub fn centered(center: Complex64, features: &[Complex64], level: usize) -> Self {
        let order = 6 + 2 * level;
        let rule = gauss_legendre(order);
        let ppo = 1 + level;
        let abs_c = center.norm();
        let mut grid = DiscGrid::default();

        let feat_dist: Vec<f64> = features.iter().map(|f| (f - center).norm()).collect();
        let feat_dir: Vec<f64> = features
            .iter()
            .zip(&feat_dist)
            .filter(|(_, &d)| d > 0.0)
            .map(|(f, _)| (f - center).arg())
            .collect();

        // angular sections, in absolute angle
        let interior = abs_c < 1.0;
        let (phi_lo, phi_hi, mut angle_breaks) = if interior {
            let d = 1.0 - abs_c;
            let base = if abs_c > 0.0 { center.arg() } else { 0.0 };
            let mut b = Vec::new();
            if d < 0.5 {
                let s = d.sqrt() * 0.25 * 0.5f64.powi(level as i32);
                for sign in [-1.0, 1.0] {
                    let t = base + sign * FRAC_PI_2;
                    for x in geometric_breaks(0.0, FRAC_PI_2, s, ppo) {
                        b.push(t + x);
                        b.push(t - x);
                    }
                }
            }
            for k in 0..(8 << level) {
                b.push(base - PI + TAU * k as f64 / (8 << level) as f64);
            }
            (base - PI, base + PI, b)
        } else {
            let toward = (-center).arg();
            let half = (1.0 / abs_c).min(1.0).asin();
            let min_gap = 1e-10_f64.max(half * 1e-9);
            let b: Vec<f64> = two_sided_breaks(toward - half, toward + half, min_gap, ppo + 1);
            (toward - half, toward + half, b)
        };
        for &dir in &feat_dir {
            for shift in [-TAU, 0.0, TAU] {
                let a = dir + shift;
                if a > phi_lo && a < phi_hi {
                    angle_breaks.push(a);
                }
            }
        }
        angle_breaks.push(phi_lo);
        angle_breaks.push(phi_hi);
        angle_breaks.retain(|a| *a >= phi_lo && *a <= phi_hi);
        angle_breaks.sort_by(f64::total_cmp);
        angle_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let angular = rule_on_breaks(&rule, &angle_breaks);

        let min_feature = feat_dist
            .iter()
            .copied()
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min);

        for &(phi, wphi) in &angular {
            let e = Complex64::from_polar(1.0, phi);
            // |center + rho e|^2 = 1  ->  rho^2 + 2 p rho + |c|^2 - 1 = 0
            let p = (center.conj() * e).re;
            let disc = p * p + 1.0 - abs_c * abs_c;
            if disc <= 0.0 {
                continue;
            }
            let sq = disc.sqrt();
            let (r0, r1) = if interior {
                (0.0, -p + sq)
            } else {
                let lo = -p - sq;
                (lo.max(0.0), -p + sq)
            };
            if r1 <= r0 {
                continue;
            }
            let len = r1 - r0;
            let scale = if interior {
                (0.02 * min_feature).min(len * 1e-3)
            } else {
                (0.05 * r0).max(len * 1e-12).min(len * 1e-2)
            };
            let mut rb = geometric_breaks(r0, r1, scale * 0.5f64.powi(level as i32), ppo);
            // mild grading toward the circle as well
            let tail: Vec<f64> = geometric_breaks(0.0, 0.5 * len, len * 1e-4, 1)
                .into_iter()
                .map(|g| r1 - g)
                .collect();
            rb.extend(tail);
            for &fd in &feat_dist {
                if fd > r0 && fd < r1 {
                    rb.push(fd);
                }
            }
            rb.retain(|x| *x >= r0 && *x <= r1);
            rb.sort_by(f64::total_cmp);
            rb.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + a.abs()));
            for w in rb.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                let h = 0.5 * (b - a);
                let m = 0.5 * (a + b);
                for &(x, wr) in &rule {
                    let rho = m + h * x;
                    let z = center + e * rho;
                    if z.norm_sqr() >= 1.0 {
                        continue;
                    }
                    grid.points.push(z);
                    grid.weights.push(rho * h * wr * wphi);
                }
            }
        }
        grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        let mut s = KahanSum::new();
        for &w in &self.weights {
            s.add(w);
        }
        s.value()
    }

    /// Weighted sum of `f` over the grid. Evaluated in parallel; the
    /// reduction is sequential in point order.
    pub fn integrate<F: Fn(Complex64) -> f64 + Sync>(&self, f: F) -> f64 {
        let vals: Vec<f64> = self
            .points
            .par_iter()
            .zip(self.weights.par_iter())
            .map(|(&z, &w)| f(z) * w)
            .collect();
        let mut s = KahanSum::new();
        for v in vals {
            s.add(v);
        }
        s.value()
    }
}

/// `int_D g(z) / (|z - a| |z - b|) dz` for `a != b` anywhere in the plane,
/// refining until successive levels agree to `rel_tol`.
///
/// The kernel is split as `1/(|z-a| (|z-a| + |z-b|)) + 1/(|z-b| (|z-a| + |z-b|))`
/// and each piece is integrated on a grid centred at its own singular point.
pub fn pair_kernel_integral<G: Fn(Complex64) -> f64 + Sync>(
    a: Complex64,
    b: Complex64,
    g: G,
    rel_tol: f64,
    max_level: usize,
) -> Result<f64> {
    let part = |center: Complex64, other: Complex64, level: usize| {
        let grid = DiscGrid::centered(center, &[other], level);
        grid.integrate(|z| {
            let da = (z - center).norm();
            let db = (z - other).norm();
            if da == 0.0 {
                return 0.0;
            }
            g(z) / (da * (da + db))
        })
    };
    let eval = |level: usize| part(a, b, level) + part(b, a, level);
    let mut prev = eval(0);
    let mut last_change = f64::INFINITY;
    for level in 1..=max_level {
        let cur = eval(level);
        last_change = (cur - prev).abs() / cur.abs().max(1e-300);
        if last_change < rel_tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureUnderresolved {
        estimate: last_change,
        tolerance: rel_tol,
        context: format!("pair kernel integral at ({a}, {b})"),
    })
}

/// Tensor Gauss–Legendre rule on the annular sector
/// `{r e^{i phi}: r0 < r < r1, |phi - phi0| < half}`.
pub fn annular_sector(r0: f64, r1: f64, phi0: f64, half: f64, level: usize) -> DiscGrid {
    let order = 8 + 2 * level;
    let rule = gauss_legendre(order);
    let nr = 2 << level;
    let nphi = 4 << level;
    let rbreaks: Vec<f64> = (0..=nr)
        .map(|k| r0 + (r1 - r0) * k as f64 / nr as f64)
        .collect();
    let pbreaks: Vec<f64> = (0..=nphi)
        .map(|k| phi0 - half + 2.0 * half * k as f64 / nphi as f64)
        .collect();
    let radial = rule_on_breaks(&rule, &rbreaks);
    let angular = rule_on_breaks(&rule, &pbreaks);
    let mut grid = DiscGrid::default();
    for &(r, wr) in &radial {
        for &(p, wp) in &angular {
            grid.points.push(Complex64::from_polar(r, p));
            grid.weights.push(r * wr * wp);
        }
    }
    grid
}

/// Polar grid about an interior point `center`, clipped exactly to the disc.
/// Radii past `rho = 1 - |center|`, where the clipping circle first touches
/// the boundary, use a cosine substitution graded toward that radius; each
/// clipped arc carries uniform angular panels. Cheaper than
/// [`DiscGrid::centered`] for integrands that are smooth apart from a
/// `1/|z - center|` singularity and a near-singularity just outside the
/// circle next to `center`.
pub fn punctured_disc(center: Complex64, level: usize) -> DiscGrid {
    let rule = gauss_legendre(6);
    let ppo = 1 + level;
    let a = center.norm();
    let gap = 1.0 - a;
    let top = 1.0 + a;
    let mut radial = rule_on_breaks(&rule, &[0.0, 0.5 * gap, gap]);
    if a > 0.0 {
        // rho = gap + (top - gap)(1 - cos s)/2 removes the square-root
        // endpoint behaviour of the clipped arc length at both ends; s is
        // graded toward 0 to resolve the near-singularity next to `center`
        let h = 0.5 * (top - gap);
        let s_min = (2.0 * gap * 1e-3 * 0.5f64.powi(level as i32) / h).sqrt();
        for (s, ws) in rule_on_breaks(&rule, &geometric_breaks(0.0, PI, s_min, 2 * ppo)) {
            radial.push((gap + h * (1.0 - s.cos()), ws * h * s.sin()));
        }
    }
    let base = if a > 0.0 { center.arg() + PI } else { 0.0 };
    let n_panels = 8 * (1 + level);
    let mut grid = DiscGrid::default();
    for &(rho, wr) in &radial {
        // |center + rho e^{i phi}| < 1  <=>  cos(phi - arg center) < c
        let half = if a == 0.0 {
            PI
        } else {
            let c = (1.0 - a * a - rho * rho) / (2.0 * rho * a);
            if c >= 1.0 {
                PI
            } else if c <= -1.0 {
                continue;
            } else {
                PI - c.acos()
            }
        };
        let abreaks: Vec<f64> = (0..=n_panels)
            .map(|k| -half + 2.0 * half * k as f64 / n_panels as f64)
            .collect();
        for &(phi, wphi) in &rule_on_breaks(&rule, &abreaks) {
            let z = center + Complex64::from_polar(rho, base + phi);
            if z.norm_sqr() >= 1.0 {
                continue;
            }
            grid.points.push(z);
            grid.weights.push(rho * wr * wphi);
        }
    }
    grid
}
