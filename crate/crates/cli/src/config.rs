use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use raytrap_core::geometry::{ConvexBody, Scene};
use raytrap_core::linalg::{Mat3, Vec3};
use raytrap_core::Real;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "RAYTRAP_OUT";

/// One obstacle of a scene file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Sphere { center: [f64; 3], radius: f64 },
    /// Axis-aligned.
    Ellipsoid { center: [f64; 3], semi_axes: [f64; 3] },
    Quartic { center: [f64; 3], semi_axes: [f64; 3], beta: f64 },
}

impl BodySpec {
    fn build<T: Real>(&self) -> raytrap_core::Result<ConvexBody<T>> {
        match *self {
            BodySpec::Sphere { center, radius } => ConvexBody::sphere(Vec3::from_f64(center), T::lit(radius)),
            BodySpec::Ellipsoid { center, semi_axes } => {
                ConvexBody::ellipsoid(Vec3::from_f64(center), Vec3::from_f64(semi_axes), Mat3::identity())
            }
            BodySpec::Quartic { center, semi_axes, beta } => {
                ConvexBody::quartic(Vec3::from_f64(center), Vec3::from_f64(semi_axes), T::lit(beta))
            }
        }
    }
}

/// Scene file: two bodies and the radius of the cylinder around the trapped ray.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub bodies: [BodySpec; 2],
    pub cylinder_radius: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            bodies: [
                BodySpec::Sphere { center: [0.0; 3], radius: 1.0 },
                BodySpec::Sphere { center: [4.0, 0.0, 0.0], radius: 1.0 },
            ],
            cylinder_radius: 0.5,
        }
    }
}

impl SceneSpec {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Usage(format!("{origin}:{}:{}: {}", e.line(), e.column(), e))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read scene file {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn build<T: Real>(&self) -> Result<Scene<T>, CliError> {
        let [a, b] = &self.bodies;
        Ok(Scene::new(a.build()?, b.build()?, T::lit(self.cylinder_radius))?)
    }
}

/// Everything that determines a run's numbers.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub scene: SceneSpec,
    pub scene_path: Option<PathBuf>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    /// Not part of the digest: where files go does not change them.
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// `name=value` pairs; values must be positive.
    pub fn parse_tolerances(pairs: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
        let mut out = BTreeMap::new();
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--tol expects name=value, got `{p}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--tol {k}: `{v}` is not a number")))?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Usage(format!("--tol {k}: tolerances must be positive, got {v}")));
            }
            out.insert(k.trim().to_string(), v);
        }
        Ok(out)
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// SHA-256 of the canonical JSON of the config.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
