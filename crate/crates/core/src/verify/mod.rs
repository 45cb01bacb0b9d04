//! Numerical stress tests of the analytic estimates.
//!
//! Every check returns an [`EstimateReport`]. Hard inequalities count
//! violations against a stated slack; boundedness claims are read as
//! log-log slope tests of a ratio over decades of `1 - |xi|`.

mod dynamics;
mod exact;
mod stream;

pub use dynamics::{check_double_exponential, check_gronwall, GRONWALL_STABILITY, TRANSIENT};
pub use exact::{check_identities, check_kernel_bounds, check_rearrangement, RearrangementInstance};
pub use stream::{check_lemma33, check_lemma34, check_lemma35, check_r_bound, LEMMA34_CONSTANT};

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::numerics::{fit_line, logspace};

/// Largest admissible `|slope|` in the bounded-ratio test.
pub const SLOPE_TOL: f64 = 0.1;
/// Minimum span of `1 - |xi|`, in decades, for a slope test to count.
pub const MIN_DECADES: f64 = 3.0;
/// Bin width, in decades, of the upper-envelope fit.
const BIN_DECADES: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub seed: u64,
    pub samples: usize,
    pub sampling: String,
    /// Largest observed lhs/rhs (or error, for exact identities).
    pub max_ratio: f64,
    pub slope: Option<f64>,
    pub pass: bool,
    pub tolerance: f64,
    pub violations: usize,
    pub fitted: BTreeMap<String, f64>,
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Per-sample `(x, lhs, rhs, ratio)`; `x` is `1 - |xi|` where meaningful.
    pub series: Vec<[f64; 4]>,
}

impl EstimateReport {
    pub fn new(name: &str, seed: u64, sampling: impl Into<String>) -> Self {
        EstimateReport {
            name: name.to_string(),
            seed,
            samples: 0,
            sampling: sampling.into(),
            max_ratio: 0.0,
            slope: None,
            pass: true,
            tolerance: 0.0,
            violations: 0,
            fitted: BTreeMap::new(),
            details: BTreeMap::new(),
            notes: Vec::new(),
            series: Vec::new(),
        }
    }

    fn detail(&mut self, key: &str, v: f64) {
        self.details.insert(key.to_string(), v);
    }

    fn fit(&mut self, key: &str, v: f64) {
        self.fitted.insert(key.to_string(), v);
    }
}

/// Outcome of the shared bounded-ratio test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeTest {
    /// `d ln(ratio) / d ln(1 - |xi|)` of the per-bin maxima.
    pub slope: f64,
    pub decades: f64,
    pub bins: usize,
    /// `|slope| < SLOPE_TOL` over at least `MIN_DECADES`.
    pub pass: bool,
    /// The ratio does not grow toward the circle: `slope > -SLOPE_TOL`.
    pub one_sided_pass: bool,
}

/// Slope test on the upper envelope of `ratios` against `gaps = 1 - |xi|`.
/// Samples are binned in half-decades of the gap; the log of each bin's
/// largest ratio is fitted against the log of the bin's geometric centre.
pub fn slope_test(gaps: &[f64], ratios: &[f64]) -> SlopeTest {
    let positive: Vec<(f64, f64)> = gaps
        .iter()
        .zip(ratios)
        .filter(|(g, r)| **g > 0.0 && **r > 0.0 && r.is_finite())
        .map(|(g, r)| (g.log10(), *r))
        .collect();
    let (lo, hi) = gaps
        .iter()
        .filter(|g| **g > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), g| (a.min(*g), b.max(*g)));
    let decades = if hi > lo { (hi / lo).log10() } else { 0.0 };
    let nonfinite = ratios.iter().any(|r| !r.is_finite());
    if positive.is_empty() {
        // identically zero ratios are trivially bounded
        let ok = !nonfinite;
        return SlopeTest {
            slope: 0.0,
            decades,
            bins: 0,
            pass: ok && decades >= MIN_DECADES,
            one_sided_pass: ok,
        };
    }
    let lmin = positive.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut bins: BTreeMap<i64, f64> = BTreeMap::new();
    for &(lg, r) in &positive {
        let k = ((lg - lmin) / BIN_DECADES).floor() as i64;
        let e = bins.entry(k).or_insert(0.0);
        *e = e.max(r);
    }
    let xs: Vec<f64> = bins
        .keys()
        .map(|&k| (lmin + (k as f64 + 0.5) * BIN_DECADES) * std::f64::consts::LN_10)
        .collect();
    let ys: Vec<f64> = bins.values().map(|r| r.ln()).collect();
    let slope = fit_line(&xs, &ys).map(|f| f.slope).unwrap_or(f64::NAN);
    let ok = slope.is_finite() && !nonfinite && bins.len() >= 3;
    SlopeTest {
        slope,
        decades,
        bins: bins.len(),
        pass: ok && slope.abs() < SLOPE_TOL && decades >= MIN_DECADES,
        one_sided_pass: ok && slope > -SLOPE_TOL,
    }
}

fn record_slope(report: &mut EstimateReport, st: &SlopeTest) {
    report.slope = Some(st.slope);
    report.pass = st.pass;
    report.detail("slope_decades", st.decades);
    report.detail("slope_bins", st.bins as f64);
    report.detail("slope_tolerance", SLOPE_TOL);
    report.detail("one_sided_pass", if st.one_sided_pass { 1.0 } else { 0.0 });
    report.tolerance = SLOPE_TOL;
}

/// `|a - b| <= tol * |b|`.
pub fn within_relative(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

/// Evaluation points `xi` near the circle with a recorded sampling law.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSamples {
    pub points: Vec<Complex64>,
    pub law: String,
    pub seed: u64,
}

impl XiSamples {
    /// `n` points with `1 - |xi|` log-spaced in `[gap_lo, gap_hi]`. Angles are
    /// uniform random, except that every other point sits at one of
    /// `special_angles` in turn when that list is non-empty.
    pub fn log_gaps(n: usize, gap_lo: f64, gap_hi: f64, special_angles: &[f64], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gaps = logspace(gap_lo, gap_hi, n);
        let mut special = special_angles.iter().cycle();
        let points = gaps
            .iter()
            .enumerate()
            .map(|(k, &g)| {
                let u: f64 = rng.random();
                let th = if k % 2 == 1 && !special_angles.is_empty() {
                    *special.next().unwrap()
                } else {
                    TAU * u
                };
                Complex64::from_polar(1.0 - g, th)
            })
            .collect();
        let law = format!(
            "1-|xi| log-spaced in [{gap_lo:e}, {gap_hi:e}], {n} points, angles uniform{}",
            if special_angles.is_empty() {
                String::new()
            } else {
                format!(" with every second point at one of {} corner preimages", special_angles.len())
            }
        );
        XiSamples { points, law, seed }
    }

    /// `n_radii` rays, `per_ray` points per ray with gaps log-spaced in
    /// `[gap_lo, gap_hi]`.
    pub fn along_radii(n_radii: usize, per_ray: usize, gap_lo: f64, gap_hi: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gaps = logspace(gap_lo, gap_hi, per_ray);
        let mut points = Vec::with_capacity(n_radii * per_ray);
        for _ in 0..n_radii {
            let th = TAU * rng.random::<f64>();
            points.extend(gaps.iter().map(|g| Complex64::from_polar(1.0 - g, th)));
        }
        let law = format!(
            "{n_radii} random rays, {per_ray} points each, 1-|xi| log-spaced in [{gap_lo:e}, {gap_hi:e}]"
        );
        XiSamples { points, law, seed }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Point uniformly distributed in the disc of radius `r`.
pub(crate) fn random_in_disc(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    let rho = r * rng.random::<f64>().sqrt();
    Complex64::from_polar(rho, TAU * rng.random::<f64>())
}
