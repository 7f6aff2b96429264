//! Background medium and bubble parameters under the critical scaling
//! `rho_c = rho_c_bar delta^2`, `k_c = k_c_bar delta^2`, and the constants
//! derived from them. All quantities are raw SI.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::potentials::ShapeFactors;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumBubbleSpec {
    /// Background mass density (kg/m^3).
    pub rho_m: f64,
    /// Background bulk modulus (Pa).
    pub k_m: f64,
    /// Bubble size scale (m).
    pub delta: f64,
    /// Bubble centre (m).
    #[serde(with = "vec3_serde")]
    pub z: Vec3,
    /// Scaled bubble density, `rho_c = rho_c_bar * delta^2`.
    pub rho_c_bar: f64,
    /// Scaled bubble bulk modulus, `k_c = k_c_bar * delta^2`.
    pub k_c_bar: f64,
}

impl MediumBubbleSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho_m", self.rho_m),
            ("k_m", self.k_m),
            ("delta", self.delta),
            ("rho_c_bar", self.rho_c_bar),
            ("k_c_bar", self.k_c_bar),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.delta > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "delta = {} is outside the small-bubble regime (delta <= 1)",
                self.delta
            )));
        }
        if self.delta > 0.1 {
            log::warn!("delta = {} > 0.1: asymptotic remainder may not be small", self.delta);
        }
        if !self.z.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("z must be finite".into()));
        }
        Ok(())
    }

    pub fn rho_c(&self) -> f64 {
        self.rho_c_bar * self.delta * self.delta
    }

    pub fn k_c(&self) -> f64 {
        self.k_c_bar * self.delta * self.delta
    }

    pub fn c0(&self) -> f64 {
        (self.k_m / self.rho_m).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Background wave speed `sqrt(k_m / rho_m)`.
    pub c0: f64,
    pub rho_c: f64,
    pub k_c: f64,
    /// `1/rho_c - 1/rho_m`
    pub alpha: f64,
    /// `1/k_c - 1/k_m`
    pub beta: f64,
    /// `beta - alpha rho_c / k_c`
    pub gamma: f64,
    /// Minnaert angular frequency `sqrt(2 k_c_bar / (A_dB rho_m))`.
    pub omega_m: f64,
    /// `A_dOmega = delta^2 A_dB`.
    pub a_domega: f64,
    /// `|Omega| = delta^3 |B|`.
    pub vol_omega: f64,
    /// Resonator inertia `(alpha rho_m / 2)(rho_c / k_c) A_dOmega` (s^2).
    pub p: f64,
    /// Field amplitude `omega_M rho_m |B| delta / (4 pi k_c_bar)`.
    pub prefactor: f64,
    /// Leading-order assembly `(c0^2/4pi)(1/delta^2)(rho_m/k_c_bar) omega_M`.
    pub d_leading: f64,
    /// Exact assembly `(alpha rho_m p^{-1/2} / 4pi)(rho_c/k_c) c0^2`.
    pub d_exact: f64,
}

pub fn minnaert_frequency(k_c_bar: f64, rho_m: f64, a_db: f64) -> Result<f64> {
    if !(k_c_bar > 0.0 && rho_m > 0.0 && a_db > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Minnaert frequency needs positive inputs, got k_c_bar={k_c_bar}, rho_m={rho_m}, A_dB={a_db}"
        )));
    }
    Ok((2.0 * k_c_bar / (a_db * rho_m)).sqrt())
}

/// `factors` must come from the reference mesh `B` (unit scale).
pub fn derive_constants(spec: &MediumBubbleSpec, factors: &ShapeFactors) -> Result<DerivedConstants> {
    spec.validate()?;
    if !(factors.a_db > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "A_dB must be positive, got {}",
            factors.a_db
        )));
    }
    let c0 = spec.c0();
    let rho_c = spec.rho_c();
    let k_c = spec.k_c();
    let alpha = 1.0 / rho_c - 1.0 / spec.rho_m;
    let beta = 1.0 / k_c - 1.0 / spec.k_m;
    let gamma = beta - alpha * rho_c / k_c;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bubble must be lighter than the medium (alpha = {alpha} <= 0)"
        )));
    }
    let omega_m = minnaert_frequency(spec.k_c_bar, spec.rho_m, factors.a_db)?;
    let delta = spec.delta;
    let a_domega = delta * delta * factors.a_db;
    let vol_omega = delta.powi(3) * factors.vol_b;
    let p = 0.5 * alpha * spec.rho_m * (rho_c / k_c) * a_domega;
    let prefactor = omega_m * spec.rho_m * factors.vol_b * delta / (4.0 * PI * spec.k_c_bar);
    let d_leading = c0 * c0 / (4.0 * PI) / (delta * delta) * (spec.rho_m / spec.k_c_bar) * omega_m;
    let d_exact = alpha * spec.rho_m / p.sqrt() / (4.0 * PI) * (rho_c / k_c) * c0 * c0;
    Ok(DerivedConstants {
        c0,
        rho_c,
        k_c,
        alpha,
        beta,
        gamma,
        omega_m,
        a_domega,
        vol_omega,
        p,
        prefactor,
        d_leading,
        d_exact,
    })
}

impl DerivedConstants {
    /// Exact resonance frequency `p^{-1/2}`; tends to `omega_M` as delta -> 0.
    pub fn omega_exact(&self) -> f64 {
        1.0 / self.p.sqrt()
    }

    /// `1 - gamma k_c rho_m / rho_c - (k_c / rho_c) c0^{-2}`; zero up to rounding.
    pub fn contrast_identity_residual(&self, rho_m: f64) -> f64 {
        1.0 - self.gamma * self.k_c * rho_m / self.rho_c - (self.k_c / self.rho_c) / (self.c0 * self.c0)
    }

    /// Amplitude reached through the leading-order assembly times the
    /// point-wise incident flux factor `(rho_m / k_m) |Omega|`.
    pub fn prefactor_via_assembly(&self, rho_m: f64, k_m: f64) -> f64 {
        self.d_leading * (rho_m / k_m) * self.vol_omega
    }

    /// `c0^2 p^{1/2} / (2 pi A_dOmega)`, the cancelled form of `d_exact`.
    pub fn d_exact_reduced(&self) -> f64 {
        self.c0 * self.c0 * self.p.sqrt() / (2.0 * PI * self.a_domega)
    }
}

pub(crate) mod vec3_serde {
    use super::Vec3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec3, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec3, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        Ok(Vec3::new(a[0], a[1], a[2]))
    }
}
