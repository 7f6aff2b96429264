//! JSON run configuration.
//!
//! ```json
//! {
//!   "rho_m": 1000.0, "k_m": 2.25e9, "delta": 0.001, "z": [0, 0, 0],
//!   "rho_c_bar": 1.2e3, "k_c_bar": 1.4e5, "x0": [-0.1, 0, 0],
//!   "pulse": {"kind": "smooth_bump", "T_p": 1e-4, "amplitude": 1.0},
//!   "mesh": {"kind": "icosphere", "radius": 1.0, "subdivisions": 4},
//!   "quadrature": {"regular_order": 7}
//! }
//! ```
//!
//! `mesh` and `quadrature` are optional. A relative mesh `path` is resolved
//! against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{load_mesh, make_ellipsoid, make_icosphere, MeshFormat, SurfaceMesh, Vec3};
use crate::incident::{IncidentPulse, PulseProfile};
use crate::physics::{vec3_serde, MediumBubbleSpec};
use crate::potentials::QuadratureConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    Icosphere {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "default_subdivisions")]
        subdivisions: u32,
    },
    Ellipsoid {
        radii: [f64; 3],
        #[serde(default = "default_subdivisions")]
        subdivisions: u32,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn default_subdivisions() -> u32 {
    4
}

impl Default for MeshSource {
    fn default() -> Self {
        MeshSource::Icosphere {
            radius: 1.0,
            subdivisions: default_subdivisions(),
        }
    }
}

impl MeshSource {
    pub fn build(&self) -> Result<SurfaceMesh> {
        match self {
            MeshSource::Icosphere { radius, subdivisions } => make_icosphere(*radius, *subdivisions),
            MeshSource::Ellipsoid { radii, subdivisions } => make_ellipsoid(*radii, *subdivisions),
            MeshSource::File { path } => {
                let format = MeshFormat::from_path(path)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown mesh format for {}", path.display())))?;
                load_mesh(path, format)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub rho_m: f64,
    pub k_m: f64,
    pub delta: f64,
    #[serde(with = "vec3_serde")]
    pub z: Vec3,
    pub rho_c_bar: f64,
    pub k_c_bar: f64,
    #[serde(with = "vec3_serde")]
    pub x0: Vec3,
    pub pulse: PulseProfile,
    #[serde(default)]
    pub mesh: MeshSource,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses and validates; relative mesh paths become relative to
    /// the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        if let MeshSource::File { path: mesh_path } = &mut cfg.mesh {
            if mesh_path.is_relative() {
                if let Some(dir) = path.parent() {
                    *mesh_path = dir.join(&*mesh_path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> MediumBubbleSpec {
        MediumBubbleSpec {
            rho_m: self.rho_m,
            k_m: self.k_m,
            delta: self.delta,
            z: self.z,
            rho_c_bar: self.rho_c_bar,
            k_c_bar: self.k_c_bar,
        }
    }

    pub fn incident(&self) -> IncidentPulse {
        IncidentPulse {
            profile: self.pulse,
            source: self.x0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec().validate()?;
        self.incident().validate()?;
        self.quadrature.validate()?;
        if (self.x0 - self.z).norm() == 0.0 {
            return Err(Error::InvalidParameter(
                "source x0 coincides with the bubble centre z".into(),
            ));
        }
        match &self.mesh {
            MeshSource::Icosphere { radius, subdivisions } => {
                if !(*radius > 0.0) || *subdivisions > crate::geometry::MAX_SUBDIVISIONS {
                    return Err(Error::InvalidParameter(format!(
                        "invalid icosphere radius {radius} / subdivisions {subdivisions}"
                    )));
                }
            }
            MeshSource::Ellipsoid { radii, subdivisions } => {
                if radii.iter().any(|r| !(*r > 0.0)) || *subdivisions > crate::geometry::MAX_SUBDIVISIONS {
                    return Err(Error::InvalidParameter(format!(
                        "invalid ellipsoid radii {radii:?} / subdivisions {subdivisions}"
                    )));
                }
            }
            MeshSource::File { path } => {
                if !path.is_file() {
                    return Err(Error::InvalidParameter(format!(
                        "mesh file {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }
}
