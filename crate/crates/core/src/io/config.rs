//! Run configuration: parsing, defaults and validation.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::advect::SimConfig;
pub use crate::conformal::DEFAULT_QUAD_ORDER;
use crate::conformal::ConformalMap;
use crate::error::{Error, Result};
use crate::field::{init_patch, init_rings, random_blobs, ring_tracers, Particle, VortexField};
use crate::geometry::{validate_domain, Domain, DomainSpec};

/// Either a named preset (`"disc"`, `"square"`, `"l_shape"`) or a full
/// boundary description.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DomainChoice {
    Preset(String),
    Spec(DomainSpec),
}

impl<'de> Deserialize<'de> for DomainChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        // branch on the JSON shape so that schema errors inside a full
        // description keep their field names
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) => Ok(DomainChoice::Preset(s)),
            other => DomainSpec::deserialize(other)
                .map(DomainChoice::Spec)
                .map_err(serde::de::Error::custom),
        }
    }
}

impl DomainChoice {
    pub fn spec(&self) -> Result<DomainSpec> {
        match self {
            DomainChoice::Spec(s) => Ok(s.clone()),
            DomainChoice::Preset(name) => match name.as_str() {
                "disc" => Ok(DomainSpec::disc()),
                "square" => Ok(DomainSpec::square()),
                "l_shape" => Ok(DomainSpec::l_shape()),
                other => Err(Error::Schema(format!(
                    "unknown domain preset '{other}' (expected disc, square or l_shape)"
                ))),
            },
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn origin() -> [f64; 2] {
    [0.0, 0.0]
}

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Initial vorticity. Positions and radii are disc-side.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldInit {
    /// No vorticity; tracers only.
    #[default]
    None,
    /// Constant `omega0` on the disc-side ball `|z - center| < radius`,
    /// sampled on a `resolution x resolution` grid.
    Patch {
        #[serde(default = "origin")]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "one")]
        omega0: f64,
        resolution: usize,
    },
    /// Constant `omega0` on concentric rings about `center`.
    Rings {
        #[serde(default = "origin")]
        center: [f64; 2],
        r_max: f64,
        rings: usize,
        per_ring: usize,
        #[serde(default = "one")]
        omega0: f64,
    },
    /// Explicit blobs. `omega_inf` defaults to the largest `|w| / (pi eps^2)`.
    Blobs {
        particles: Vec<BlobSpec>,
        #[serde(default)]
        omega_inf: Option<f64>,
        #[serde(default = "yes")]
        nonnegative: bool,
    },
    /// `n` random nonnegative blobs drawn from the run seed.
    RandomBlobs { n: usize },
    /// Field snapshot CSV written by a previous run.
    Snapshot { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub z: [f64; 2],
    pub w: f64,
    pub eps: f64,
}

/// Passive tracers added to the initial field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracerSpec {
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    /// Closed tracer ring whose enclosed area is logged.
    #[serde(default)]
    pub ring: Option<RingSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub n: usize,
}

/// Names accepted by the `verify` subcommand besides `all`.
pub const CHECKS: [&str; 9] = [
    "identities",
    "rearrangement",
    "lemma33",
    "lemma34",
    "lemma35",
    "kernel_bounds",
    "r_bound",
    "gronwall",
    "double_exponential",
];

/// Checks whose failure makes the run exit nonzero.
pub const HARD_CHECKS: [&str; 4] = ["identities", "rearrangement", "lemma34", "kernel_bounds"];

fn all_checks() -> Vec<String> {
    vec!["all".into()]
}

fn gap_lo() -> f64 {
    1e-6
}

fn gap_hi() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "all_checks")]
    pub checks: Vec<String>,
    /// Overrides the per-check default sample count.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Range of `1 - |xi|` for the boundary sweeps.
    #[serde(default = "gap_lo")]
    pub gap_lo: f64,
    #[serde(default = "gap_hi")]
    pub gap_hi: f64,
    /// Place every other sweep point at a corner preimage.
    #[serde(default = "yes")]
    pub corner_angles: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            checks: all_checks(),
            samples: None,
            gap_lo: gap_lo(),
            gap_hi: gap_hi(),
            corner_angles: true,
        }
    }
}

impl VerifyConfig {
    /// Expanded, de-duplicated check list in canonical order.
    pub fn resolved_checks(&self) -> Result<Vec<&'static str>> {
        for name in &self.checks {
            if name != "all" && !CHECKS.contains(&name.as_str()) {
                return Err(Error::Schema(format!(
                    "unknown check '{name}' (expected all or one of {})",
                    CHECKS.join(", ")
                )));
            }
        }
        let all = self.checks.iter().any(|n| n == "all");
        Ok(CHECKS
            .iter()
            .copied()
            .filter(|c| all || self.checks.iter().any(|n| n == c))
            .collect())
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_quad_order() -> usize {
    DEFAULT_QUAD_ORDER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainChoice,
    #[serde(default)]
    pub field_init: FieldInit,
    #[serde(default)]
    pub tracers: TracerSpec,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

impl RunConfig {
    /// Config for a named domain with every other setting at its default.
    pub fn for_domain(spec: DomainSpec) -> Self {
        RunConfig {
            domain: DomainChoice::Spec(spec),
            field_init: FieldInit::None,
            tracers: TracerSpec::default(),
            sim: SimConfig::default(),
            verify: VerifyConfig::default(),
            output_dir: default_output_dir(),
            seed: 0,
            quad_order: DEFAULT_QUAD_ORDER,
        }
    }

    pub fn domain(&self) -> Result<Domain> {
        validate_domain(self.domain.spec()?)
    }

    pub fn map(&self) -> Result<ConformalMap> {
        ConformalMap::with_order(self.domain()?, self.quad_order)
    }

    /// Initial field with tracers attached.
    pub fn build_field(&self, map: &ConformalMap) -> Result<VortexField> {
        let field = match &self.field_init {
            FieldInit::None => VortexField::empty(),
            FieldInit::Patch {
                center,
                radius,
                omega0,
                resolution,
            } => {
                let (ctr, r, om) = (c(*center), *radius, *omega0);
                init_patch(map, &|z| (z - ctr).norm() < r, &|_| om, *resolution)?
            }
            FieldInit::Rings {
                center,
                r_max,
                rings,
                per_ring,
                omega0,
            } => {
                let om = *omega0;
                init_rings(map, c(*center), *r_max, *rings, *per_ring, &|_| om)?
            }
            FieldInit::Blobs {
                particles,
                omega_inf,
                nonnegative,
            } => {
                let ps: Vec<Particle> = particles
                    .iter()
                    .map(|b| Particle {
                        z: c(b.z),
                        w: b.w,
                        eps: b.eps,
                    })
                    .collect();
                let w_inf = omega_inf.unwrap_or_else(|| {
                    ps.iter()
                        .map(|p| p.w.abs() / (PI * p.eps * p.eps))
                        .fold(0.0, f64::max)
                });
                VortexField::new(ps, Vec::new(), w_inf, *nonnegative)?
            }
            FieldInit::RandomBlobs { n } => random_blobs(map, *n, self.seed)?,
            FieldInit::Snapshot { path } => return VortexField::load_csv(path),
        };
        let tracers: Vec<Complex64> = self.tracers.points.iter().map(|p| c(*p)).collect();
        match (&self.tracers.ring, tracers.is_empty()) {
            (Some(r), true) => field.with_tracers(ring_tracers(c(r.center), r.radius, r.n), true),
            (Some(_), false) => Err(Error::InvalidConfig(
                "tracer ring and explicit tracer points cannot be combined".into(),
            )),
            (None, true) => Ok(field),
            (None, false) => field.with_tracers(tracers, false),
        }
    }

    /// Checks the parts of the config that serde cannot.
    pub fn validate(&self) -> Result<()> {
        self.domain()?;
        self.sim.validate()?;
        self.verify.resolved_checks()?;
        let v = &self.verify;
        if !(v.gap_lo > 0.0 && v.gap_lo < v.gap_hi && v.gap_hi < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "verify gap range [{}, {}] must satisfy 0 < gap_lo < gap_hi < 1",
                v.gap_lo, v.gap_hi
            )));
        }
        if self.quad_order < 16 {
            return Err(Error::InvalidConfig(format!(
                "quad_order {} is below 16",
                self.quad_order
            )));
        }
        Ok(())
    }
}

/// Parses and validates a UTF-8 JSON run configuration. Malformed JSON is a
/// `Parse` error; unknown, missing or mistyped keys are `Schema` errors;
/// invalid domains surface the domain error.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => Error::Schema(e.to_string()),
            _ => Error::Parse(e.to_string()),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(r#"{"domain": "disc"}"#).unwrap();
        assert_eq!(cfg.sim.dt0, 1e-2);
        assert_eq!(cfg.sim.cfl, 0.2);
        assert_eq!(cfg.sim.exit_tol, 1e-10);
        assert_eq!(cfg.quad_order, 1024);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.field_init, FieldInit::None);
        assert_eq!(cfg.verify.resolved_checks().unwrap().len(), CHECKS.len());
    }

    #[test]
    fn errors_are_classified() {
        assert!(matches!(parse_config("{"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_config(r#"{"domain": "disc", "viscosity": 1e-3}"#),
            Err(Error::Schema(_))
        ));
        assert!(matches!(parse_config(r#"{"seed": 1}"#), Err(Error::Schema(_))));
        assert!(matches!(
            parse_config(r#"{"domain": "torus"}"#),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_config(r#"{"domain": "disc", "verify": {"checks": ["lemma99"]}}"#),
            Err(Error::Schema(_))
        ));
        let bad_angle = r#"{"domain": {"corners": [{"theta": 1.0, "alpha": 1.5}],
            "beta_c": {"kind": "zero"}, "kappa": 0.0, "sprime0": 1.0}}"#;
        assert!(matches!(
            parse_config(bad_angle),
            Err(Error::AngleOutOfRange { .. })
        ));
    }

    #[test]
    fn blob_field_with_tracers() {
        let cfg = parse_config(
            r#"{"domain": "square",
                "field_init": {"kind": "blobs", "particles": [{"z": [0.1, 0.2], "w": 0.5, "eps": 0.05}]},
                "tracers": {"ring": {"center": [0.0, 0.0], "radius": 0.5, "n": 8}}}"#,
        )
        .unwrap();
        let map = cfg.map().unwrap();
        let f = cfg.build_field(&map).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.tracers().len(), 8);
        assert!(f.ring().is_some());
        assert!((f.omega_inf() - 0.5 / (PI * 0.0025)).abs() < 1e-9);
    }
}
