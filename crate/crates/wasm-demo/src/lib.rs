//! Browser bindings: build a bubble from a JSON config, trace the field at a
//! point and tune a parameter to a target peak. Every method returns JSON.

use bubble_core::config::RunConfig;
use bubble_core::field::{evaluate_dominant, BubbleModel, FieldRequest, TimeGrid, DECOMPOSITION_SIGNS};
use bubble_core::geometry::{SurfaceMesh, Vec3};
use bubble_core::potentials::{shape_factors, ShapeFactors};
use bubble_core::tuner::{tune, FreeParameter, ProbeWindow, TuningProblem};
use serde_json::json;
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[wasm_bindgen]
pub struct Demo {
    cfg: RunConfig,
    mesh: SurfaceMesh,
    factors: ShapeFactors,
}

#[wasm_bindgen]
impl Demo {
    /// Parses and validates the config, builds the mesh and its shape factors.
    #[wasm_bindgen(constructor)]
    pub fn new(config_json: &str) -> Result<Demo, String> {
        let cfg = RunConfig::from_json(config_json).map_err(err)?;
        let mesh = cfg.mesh.build().map_err(err)?;
        let factors = shape_factors(&mesh, &cfg.quadrature).map_err(err)?;
        Ok(Demo { cfg, mesh, factors })
    }

    fn model(&self) -> Result<BubbleModel, String> {
        BubbleModel::with_factors(self.cfg.spec(), &self.mesh, self.factors.clone(), self.cfg.incident()).map_err(err)
    }

    /// Mesh size, shape factors and derived constants.
    pub fn summary(&self) -> Out {
        let model = self.model()?;
        let v = json!({
            "vertices": self.mesh.num_vertices(),
            "faces": self.mesh.num_faces(),
            "A_dB": self.factors.a_db,
            "area_B": self.factors.area_b,
            "vol_B": self.factors.vol_b,
            "constants": model.constants,
            "omega_exact": model.constants.omega_exact(),
            "arrival_at_center": model.arrival_at_center(),
            "sign_pair": DECOMPOSITION_SIGNS,
        });
        Ok(v.to_string())
    }

    /// Time trace at `(x, y, z)` as `{t, u_s, u1, u2, q_eff, arrival}`.
    pub fn trace(&self, x: f64, y: f64, z: f64, t0: f64, t1: f64, dt: f64) -> Out {
        let model = self.model()?;
        let point = Vec3::new(x, y, z);
        let times = TimeGrid::new(t0, t1, dt).map_err(err)?;
        if times.len() > 200_000 {
            return Err(format!(
                "{} samples requested, the demo caps traces at 200000",
                times.len()
            ));
        }
        let request = FieldRequest {
            points: vec![point],
            times,
            want_decomposition: true,
        };
        let samples = evaluate_dominant(&model, &request).map_err(err)?;
        let v = json!({
            "t": samples.iter().map(|s| s.time).collect::<Vec<_>>(),
            "u_s": samples.iter().map(|s| s.u_s).collect::<Vec<_>>(),
            "u1": samples.iter().map(|s| s.u1).collect::<Vec<_>>(),
            "u2": samples.iter().map(|s| s.u2).collect::<Vec<_>>(),
            "q_eff": samples.first().map(|s| s.q_effective),
            "arrival": model.arrival_at(&point),
        });
        Ok(v.to_string())
    }

    /// Solves for `free` (`k_c_bar` or `delta`) in `[lo, hi]` so the peak
    /// at standoff exponent `q` along +x hits `target`.
    pub fn tune(&self, target: f64, q: f64, free: &str, lo: f64, hi: f64, tol: f64) -> Out {
        let free: FreeParameter = free.parse().map_err(err)?;
        let pulse = self.cfg.incident();
        let problem = TuningProblem {
            target_peak: target,
            standoff_q: q,
            free_parameter: free,
            bounds: (lo, hi),
            fixed: self.cfg.spec(),
            pulse,
            tolerance: tol,
            probe: ProbeWindow::for_pulse(&pulse).map_err(err)?,
        };
        let result = tune(&problem, &self.mesh, &self.factors).map_err(err)?;
        serde_json::to_string(&result).map_err(err)
    }
}
