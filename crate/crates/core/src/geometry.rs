//! Disc-side description of a singular boundary.
//!
//! A boundary is given by the argument `beta` of its forward tangent, written
//! as a continuous twist `beta_c` plus a jump part `beta_d` that increases by
//! `pi * alpha_j` at every corner preimage `theta_j`. The corner at
//! `S(e^{i theta_j})` has interior angle `pi - pi * alpha_j`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the winding consistency `sum(alpha_j) = 2 (1 - kappa)`.
pub const WINDING_TOL: f64 = 1e-12;

/// Guard band subtracted from the critical window span when maximizing delta.
const DELTA_GUARD: f64 = 1e-9;

/// Upper bound for the structural window half-width delta.
pub const DELTA_MAX: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corner {
    pub theta: f64,
    pub alpha: f64,
}

/// Finite, strictly ordered list of corner preimages.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CornerSet(pub Vec<Corner>);

impl CornerSet {
    pub fn new(corners: Vec<Corner>) -> Self {
        CornerSet(corners)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Corner> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn alpha_sum(&self) -> f64 {
        self.0.iter().map(|c| c.alpha).sum()
    }

    pub fn alpha_plus_sum(&self) -> f64 {
        self.0.iter().map(|c| c.alpha.max(0.0)).sum()
    }

    fn check(&self) -> Result<()> {
        let mut prev = 0.0;
        for (index, c) in self.0.iter().enumerate() {
            if !c.alpha.is_finite() || c.alpha <= -1.0 || c.alpha >= 1.0 || c.alpha == 0.0 {
                return Err(Error::AngleOutOfRange {
                    index,
                    alpha: c.alpha,
                });
            }
            if !c.theta.is_finite() || c.theta <= prev || c.theta > TAU {
                return Err(Error::NonmonotoneCorners { index });
            }
            prev = c.theta;
        }
        Ok(())
    }
}

/// Closed-form continuous part `beta_c` of the tangent argument.
///
/// `Linear` is `offset + slope * theta`; `Fourier` adds
/// `sum_k cos[k-1] cos(k theta) + sin[k-1] sin(k theta)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TwistFunction {
    Zero,
    Linear {
        offset: f64,
        slope: f64,
    },
    Fourier {
        offset: f64,
        slope: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TwistRepr {
    kind: String,
    #[serde(default)]
    coeffs: Vec<f64>,
}

impl TryFrom<TwistRepr> for TwistFunction {
    type Error = String;

    fn try_from(r: TwistRepr) -> std::result::Result<Self, String> {
        if r.coeffs.iter().any(|c| !c.is_finite()) {
            return Err("beta_c coefficients must be finite".into());
        }
        match r.kind.as_str() {
            "zero" => {
                if r.coeffs.iter().any(|&c| c != 0.0) {
                    return Err("beta_c kind 'zero' takes no nonzero coefficients".into());
                }
                Ok(TwistFunction::Zero)
            }
            "linear" => match r.coeffs.as_slice() {
                [offset, slope] => Ok(TwistFunction::Linear {
                    offset: *offset,
                    slope: *slope,
                }),
                _ => Err("beta_c kind 'linear' needs coeffs [offset, slope]".into()),
            },
            "fourier" => {
                if r.coeffs.len() < 2 || r.coeffs.len() % 2 != 0 {
                    return Err(
                        "beta_c kind 'fourier' needs coeffs [offset, slope, a1, b1, a2, b2, ...]"
                            .into(),
                    );
                }
                let (cos, sin) = r.coeffs[2..].chunks(2).map(|p| (p[0], p[1])).unzip();
                Ok(TwistFunction::Fourier {
                    offset: r.coeffs[0],
                    slope: r.coeffs[1],
                    cos,
                    sin,
                })
            }
            other => Err(format!("unknown beta_c kind '{other}'")),
        }
    }
}

impl From<TwistFunction> for TwistRepr {
    fn from(t: TwistFunction) -> Self {
        match t {
            TwistFunction::Zero => TwistRepr {
                kind: "zero".into(),
                coeffs: vec![],
            },
            TwistFunction::Linear { offset, slope } => TwistRepr {
                kind: "linear".into(),
                coeffs: vec![offset, slope],
            },
            TwistFunction::Fourier {
                offset,
                slope,
                cos,
                sin,
            } => {
                let mut coeffs = vec![offset, slope];
                for (a, b) in cos.iter().zip(&sin) {
                    coeffs.push(*a);
                    coeffs.push(*b);
                }
                TwistRepr {
                    kind: "fourier".into(),
                    coeffs,
                }
            }
        }
    }
}

impl Serialize for TwistFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TwistRepr::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TwistFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TwistRepr::deserialize(d)?;
        TwistFunction::try_from(repr).map_err(serde::de::Error::custom)
    }
}

impl TwistFunction {
    pub fn eval(&self, theta: f64) -> f64 {
        self.slope() * theta + self.periodic_part(theta)
    }

    /// Linear growth rate; must equal the winding split kappa.
    pub fn slope(&self) -> f64 {
        match self {
            TwistFunction::Zero => 0.0,
            TwistFunction::Linear { slope, .. } | TwistFunction::Fourier { slope, .. } => *slope,
        }
    }

    /// The 2pi-periodic function `beta_c(theta) - slope * theta`.
    pub fn periodic_part(&self, theta: f64) -> f64 {
        match self {
            TwistFunction::Zero => 0.0,
            TwistFunction::Linear { offset, .. } => *offset,
            TwistFunction::Fourier {
                offset, cos, sin, ..
            } => {
                let mut acc = *offset;
                for (k, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let kt = (k + 1) as f64 * theta;
                    acc += a * kt.cos() + b * kt.sin();
                }
                acc
            }
        }
    }

    /// Mean of the periodic part.
    pub fn mean(&self) -> f64 {
        match self {
            TwistFunction::Zero => 0.0,
            TwistFunction::Linear { offset, .. } | TwistFunction::Fourier { offset, .. } => *offset,
        }
    }

    /// Complex Fourier data of the periodic part: `(a_k - i b_k)` for k >= 1,
    /// so that the Herglotz extension is `mean + sum_k (a_k - i b_k) z^k`.
    pub fn harmonic_coefficients(&self) -> Vec<(f64, f64)> {
        match self {
            TwistFunction::Fourier { cos, sin, .. } => {
                cos.iter().zip(sin).map(|(&a, &b)| (a, -b)).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Highest harmonic present in the periodic part.
    pub fn degree(&self) -> usize {
        match self {
            TwistFunction::Fourier { cos, .. } => cos.len(),
            _ => 0,
        }
    }

    /// Lipschitz modulus `m(r) = L r`, reported as metadata only.
    pub fn modulus_bound(&self, r: f64) -> f64 {
        let lip = match self {
            TwistFunction::Zero => 0.0,
            TwistFunction::Linear { slope, .. } => slope.abs(),
            TwistFunction::Fourier {
                slope, cos, sin, ..
            } => {
                slope.abs()
                    + cos
                        .iter()
                        .zip(sin)
                        .enumerate()
                        .map(|(k, (a, b))| (k + 1) as f64 * (a.abs() + b.abs()))
                        .sum::<f64>()
            }
        };
        lip * r.abs()
    }
}

/// Disc-side boundary description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub corners: CornerSet,
    pub beta_c: TwistFunction,
    pub kappa: f64,
    pub sprime0: f64,
}

impl DomainSpec {
    /// The unit disc: no corners, `beta_c = theta + pi/2`, `kappa = 1`.
    pub fn disc() -> Self {
        DomainSpec {
            corners: CornerSet::default(),
            beta_c: TwistFunction::Linear {
                offset: PI / 2.0,
                slope: 1.0,
            },
            kappa: 1.0,
            sprime0: 1.0,
        }
    }

    /// Square with corner preimages at quarter turns.
    pub fn square() -> Self {
        DomainSpec {
            corners: CornerSet::new(
                (1..=4)
                    .map(|k| Corner {
                        theta: k as f64 * PI / 2.0,
                        alpha: 0.5,
                    })
                    .collect(),
            ),
            beta_c: TwistFunction::Linear {
                offset: 0.75 * PI,
                slope: 0.0,
            },
            kappa: 0.0,
            sprime0: 1.0,
        }
    }

    /// L-shaped hexagon: five right angles and one reentrant 3pi/2 corner,
    /// with equally spaced corner preimages.
    pub fn l_shape() -> Self {
        let alphas = [0.5, 0.5, 0.5, -0.5, 0.5, 0.5];
        DomainSpec {
            corners: CornerSet::new(
                alphas
                    .iter()
                    .enumerate()
                    .map(|(j, &alpha)| Corner {
                        theta: (j + 1) as f64 * PI / 3.0,
                        alpha,
                    })
                    .collect(),
            ),
            beta_c: TwistFunction::Linear {
                offset: 0.0,
                slope: 0.0,
            },
            kappa: 0.0,
            sprime0: 1.0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Derived constants controlling how much positive turning can cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralConstants {
    pub alpha_star: f64,
    pub delta: f64,
    pub alpha_plus: Vec<f64>,
}

/// A validated [`DomainSpec`] annotated with its structural constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    spec: DomainSpec,
    constants: StructuralConstants,
}

/// Check every invariant of `spec` and compute `alpha_*` and `delta`.
pub fn validate_domain(spec: DomainSpec) -> Result<Domain> {
    spec.corners.check()?;
    if !(spec.sprime0.is_finite() && spec.sprime0 > 0.0) {
        return Err(Error::InvalidDomain(format!(
            "sprime0 must be positive, got {}",
            spec.sprime0
        )));
    }
    if !spec.kappa.is_finite() {
        return Err(Error::InvalidDomain("kappa must be finite".into()));
    }
    let slope = spec.beta_c.slope();
    if (slope - spec.kappa).abs() > WINDING_TOL {
        return Err(Error::WindingMismatch {
            detail: format!(
                "beta_c grows by 2pi*{slope} per turn but kappa = {}",
                spec.kappa
            ),
        });
    }
    let sum = spec.corners.alpha_sum();
    let expected = 2.0 * (1.0 - spec.kappa);
    if (sum - expected).abs() > WINDING_TOL {
        return Err(Error::WindingMismatch {
            detail: format!("sum of alpha_j = {sum} but 2(1 - kappa) = {expected}"),
        });
    }

    let alpha_plus: Vec<f64> = spec.corners.iter().map(|c| c.alpha.max(0.0)).collect();
    let max_plus = alpha_plus.iter().copied().fold(0.0, f64::max);
    let alpha_star = 0.5 * (1.0 + max_plus);
    let delta = max_delta(&spec.corners, alpha_star);
    Ok(Domain {
        spec,
        constants: StructuralConstants {
            alpha_star,
            delta,
            alpha_plus,
        },
    })
}

/// Smallest circular span of a run of consecutive corners whose positive
/// turning exceeds `alpha_star`, if any such run exists.
fn critical_span(corners: &CornerSet, alpha_star: f64) -> Option<f64> {
    let n = corners.len();
    let c = &corners.0;
    let mut best: Option<f64> = None;
    for start in 0..n {
        let mut acc = 0.0;
        for len in 0..n {
            let j = (start + len) % n;
            acc += c[j].alpha.max(0.0);
            if acc > alpha_star {
                let wraps = (start + len) / n;
                let span = c[j].theta + TAU * wraps as f64 - c[start].theta;
                best = Some(best.map_or(span, |b: f64| b.min(span)));
                break;
            }
        }
    }
    best
}

fn max_delta(corners: &CornerSet, alpha_star: f64) -> f64 {
    match critical_span(corners, alpha_star) {
        None => DELTA_MAX,
        Some(span) => {
            let guarded = if span > 2.0 * DELTA_GUARD {
                span - DELTA_GUARD
            } else {
                0.5 * span
            };
            (guarded / 6.0).min(DELTA_MAX)
        }
    }
}

/// Reduce `theta` to `(0, 2pi]`, returning the reduced angle and the number
/// of full turns removed.
fn reduce(theta: f64) -> (f64, f64) {
    let mut k = (theta / TAU).ceil() - 1.0;
    let mut r = theta - TAU * k;
    if r <= 0.0 {
        r += TAU;
        k -= 1.0;
    } else if r > TAU {
        r -= TAU;
        k += 1.0;
    }
    (r, k)
}

impl Domain {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn constants(&self) -> &StructuralConstants {
        &self.constants
    }

    pub fn alpha_star(&self) -> f64 {
        self.constants.alpha_star
    }

    pub fn delta(&self) -> f64 {
        self.constants.delta
    }

    pub fn kappa(&self) -> f64 {
        self.spec.kappa
    }

    pub fn corners(&self) -> &CornerSet {
        &self.spec.corners
    }

    /// Exponent `2 min(1 - alpha_*, 1/4)` of the stream-function bound.
    pub fn stream_exponent(&self) -> f64 {
        2.0 * (1.0 - self.alpha_star()).min(0.25)
    }

    /// Jump part: `pi * sum_{theta_j <= theta} alpha_j`, extended so that it
    /// grows by `2pi (1 - kappa)` per turn.
    pub fn beta_d(&self, theta: f64) -> f64 {
        let (r, k) = reduce(theta);
        let local: f64 = self
            .spec
            .corners
            .iter()
            .take_while(|c| c.theta <= r)
            .map(|c| c.alpha)
            .sum();
        PI * local + TAU * (1.0 - self.spec.kappa) * k
    }

    /// Tangent argument `beta_c + beta_d`.
    pub fn beta(&self, theta: f64) -> f64 {
        self.spec.beta_c.eval(theta) + self.beta_d(theta)
    }

    /// Positive-turning step function `pi * sum_{theta_j <= theta} alpha_j^+`.
    pub fn beta_d_plus(&self, theta: f64) -> f64 {
        let (r, k) = reduce(theta);
        let local: f64 = self
            .spec
            .corners
            .iter()
            .take_while(|c| c.theta <= r)
            .map(|c| c.alpha.max(0.0))
            .sum();
        PI * (local + self.spec.corners.alpha_plus_sum() * k)
    }

    /// Left side of the window condition, `(beta_d^+(theta + 3 delta) -
    /// beta_d^+(theta - 3 delta)) / pi`.
    pub fn window_turning(&self, theta: f64, delta: f64) -> f64 {
        (self.beta_d_plus(theta + 3.0 * delta) - self.beta_d_plus(theta - 3.0 * delta)) / PI
    }
}

/// Largest admissible delta in `(0, 1/8]` for the window condition.
pub fn compute_delta(domain: &Domain) -> f64 {
    domain.delta()
}
