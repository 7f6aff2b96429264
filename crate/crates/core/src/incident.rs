//! Causal point-source incident waves `u_i(x, t) = lambda(t - |x - x0|/c0) / |x - x0|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::physics::vec3_serde;

/// Time profile of the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseProfile {
    /// `amplitude * exp(-1 / (s (1 - s)))`, `s = t / T_p`, on `(0, T_p)`;
    /// zero elsewhere. C-infinity with compact support.
    SmoothBump {
        #[serde(rename = "T_p")]
        t_p: f64,
        amplitude: f64,
    },
    /// Idealised wavefront `delta(t - |x - x0|/c0) / |x - x0|`. Has no
    /// point-wise values; only the closed-form secondary wave uses it.
    DeltaFront,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentPulse {
    #[serde(flatten)]
    pub profile: PulseProfile,
    #[serde(with = "vec3_serde")]
    pub source: Vec3,
}

/// `(lambda, lambda', lambda'')` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaDerivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl IncidentPulse {
    pub fn smooth_bump(t_p: f64, amplitude: f64, source: Vec3) -> Self {
        Self {
            profile: PulseProfile::SmoothBump { t_p, amplitude },
            source,
        }
    }

    pub fn delta_front(source: Vec3) -> Self {
        Self {
            profile: PulseProfile::DeltaFront,
            source,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let PulseProfile::SmoothBump { t_p, amplitude } = self.profile {
            if !(t_p > 0.0) || !t_p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "pulse T_p must be positive, got {t_p}"
                )));
            }
            if !amplitude.is_finite() {
                return Err(Error::InvalidParameter("pulse amplitude must be finite".into()));
            }
        }
        if !self.source.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("pulse source must be finite".into()));
        }
        Ok(())
    }

    /// Support `(0, T_p)` of the profile.
    pub fn duration(&self) -> Result<f64> {
        match self.profile {
            PulseProfile::SmoothBump { t_p, .. } => Ok(t_p),
            PulseProfile::DeltaFront => Err(Error::DeltaFront("pulse duration")),
        }
    }

    pub fn with_amplitude_scaled(&self, factor: f64) -> Self {
        match self.profile {
            PulseProfile::SmoothBump { t_p, amplitude } => Self::smooth_bump(t_p, amplitude * factor, self.source),
            PulseProfile::DeltaFront => *self,
        }
    }

    /// Closed-form bump value and first two time derivatives.
    pub fn lambda_derivs(&self, t: f64) -> Result<LambdaDerivs> {
        let PulseProfile::SmoothBump { t_p, amplitude } = self.profile else {
            return Err(Error::DeltaFront("lambda derivatives"));
        };
        const ZERO: LambdaDerivs = LambdaDerivs {
            value: 0.0,
            d1: 0.0,
            d2: 0.0,
        };
        if t <= 0.0 || t >= t_p {
            return Ok(ZERO);
        }
        let s = t / t_p;
        let u = s * (1.0 - s);
        let phi = -1.0 / u;
        if phi < -700.0 {
            return Ok(ZERO);
        }
        let e = amplitude * phi.exp();
        let du = 1.0 - 2.0 * s;
        // phi = -1/u, phi' = u'/u^2, phi'' = -2(u + u'^2)/u^3 with u'' = -2
        let dphi = du / (u * u);
        let d2phi = -2.0 * (u + du * du) / (u * u * u);
        Ok(LambdaDerivs {
            value: e,
            d1: e * dphi / t_p,
            d2: e * (dphi * dphi + d2phi) / (t_p * t_p),
        })
    }

    fn distance(&self, x: &Vec3) -> Result<f64> {
        let r = (x - self.source).norm();
        if r == 0.0 {
            return Err(Error::InvalidParameter(
                "incident field is singular at the source".into(),
            ));
        }
        Ok(r)
    }

    /// Retarded incident field `u_i(x, t)`.
    pub fn u_i(&self, c0: f64, x: &Vec3, t: f64) -> Result<f64> {
        let r = self.distance(x)?;
        Ok(self.lambda_derivs(t - r / c0)?.value / r)
    }

    /// `d^2 u_i / dt^2 (x, t) = lambda''(t - |x - x0|/c0) / |x - x0|`.
    pub fn u_i_tt(&self, c0: f64, x: &Vec3, t: f64) -> Result<f64> {
        let r = self.distance(x)?;
        Ok(self.lambda_derivs(t - r / c0)?.d2 / r)
    }

    /// Spatial gradient of `u_i`.
    pub fn grad_u_i(&self, c0: f64, x: &Vec3, t: f64) -> Result<Vec3> {
        let r = self.distance(x)?;
        let l = self.lambda_derivs(t - r / c0)?;
        let dr = -(l.d1 / (c0 * r) + l.value / (r * r));
        Ok((x - self.source) * (dr / r))
    }
}
