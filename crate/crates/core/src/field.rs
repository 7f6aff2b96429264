//! The dominant scattered field outside the bubble and its split into the
//! primary (time-shifted incident) and secondary (ringing) reflected waves.
//!
//! With `s = t - |x - z|/c0`,
//!
//! ```text
//! u_s(x, t) = prefactor * Q(x) * int_0^s sin(omega_M (s - tau)) u_i_tt(z, tau) dtau
//! U1(x, t)  = omega_M   * prefactor * Q(x) * u_i(z, s)
//! U2(x, t)  = omega_M^2 * prefactor * Q(x) * int_0^s sin(omega_M (s - tau)) u_i(z, tau) dtau
//! ```
//!
//! Integrating by parts twice with `u_i(z, 0) = u_i_t(z, 0) = 0` gives
//! `u_s = U1 - U2`; see [`DECOMPOSITION_SIGNS`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{scale_translate, SurfaceMesh, Vec3};
use crate::incident::{IncidentPulse, PulseProfile};
use crate::parallel::pool;
use crate::physics::{derive_constants, DerivedConstants, MediumBubbleSpec};
use crate::potentials::{is_exterior, shape_factors, single_layer_mean, QuadratureConfig, ShapeFactors};

/// Coefficients with `u_s = primary * U1 + secondary * U2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignPair {
    pub primary: f64,
    pub secondary: f64,
}

/// Fixed by the integration-by-parts oracle in
/// [`crate::validation::determine_sign_pair`].
pub const DECOMPOSITION_SIGNS: SignPair = SignPair {
    primary: 1.0,
    secondary: -1.0,
};

/// Uniform time grid `t0, t0 + dt, ...` up to `t1` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        let g = Self { t0, t1, dt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t0 >= 0.0) || !(self.t1 >= self.t0) || !self.t1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time grid needs dt > 0 and 0 <= t0 <= t1, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.t1 - self.t0) / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRequest {
    pub points: Vec<Vec3>,
    pub times: TimeGrid,
    pub want_decomposition: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point: Vec3,
    pub time: f64,
    pub u_s: f64,
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    /// `ln dist(x, Omega) / ln delta`.
    pub q_effective: f64,
}

/// Everything needed to evaluate the field for one bubble and one source.
#[derive(Debug, Clone)]
pub struct BubbleModel {
    pub spec: MediumBubbleSpec,
    pub pulse: IncidentPulse,
    /// Shape factors of the reference mesh `B`.
    pub factors: ShapeFactors,
    pub constants: DerivedConstants,
    /// `dOmega = delta * dB + z`.
    pub bubble_mesh: SurfaceMesh,
}

impl BubbleModel {
    pub fn new(
        spec: MediumBubbleSpec,
        reference: &SurfaceMesh,
        pulse: IncidentPulse,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        let factors = shape_factors(reference, cfg)?;
        Self::with_factors(spec, reference, factors, pulse)
    }

    /// Reuses shape factors already computed for `reference`.
    pub fn with_factors(
        spec: MediumBubbleSpec,
        reference: &SurfaceMesh,
        factors: ShapeFactors,
        pulse: IncidentPulse,
    ) -> Result<Self> {
        spec.validate()?;
        pulse.validate()?;
        let constants = derive_constants(&spec, &factors)?;
        let bubble_mesh = scale_translate(reference, spec.delta, &spec.z)?;
        if is_exterior(&bubble_mesh, &pulse.source) {
            Ok(Self {
                spec,
                pulse,
                factors,
                constants,
                bubble_mesh,
            })
        } else {
            Err(Error::InvalidParameter(
                "the source x0 must lie outside the bubble".into(),
            ))
        }
    }

    /// Distance from the source to the bubble centre.
    pub fn source_distance(&self) -> f64 {
        (self.spec.z - self.pulse.source).norm()
    }

    /// Time at which the incident pulse reaches `z`.
    pub fn arrival_at_center(&self) -> f64 {
        self.source_distance() / self.constants.c0
    }

    /// Earliest time the scattered field can be nonzero at `x`.
    pub fn arrival_at(&self, x: &Vec3) -> f64 {
        self.arrival_at_center() + (x - self.spec.z).norm() / self.constants.c0
    }

    pub fn q(&self, x: &Vec3) -> Result<f64> {
        single_layer_mean(&self.bubble_mesh, x)
    }

    fn check_exterior(&self, points: &[Vec3]) -> Result<()> {
        for (index, x) in points.iter().enumerate() {
            if !is_exterior(&self.bubble_mesh, x) {
                return Err(Error::InteriorPoint { index });
            }
        }
        Ok(())
    }

    fn point_kernel(&self, x: &Vec3) -> Result<PointKernel> {
        let q = self.q(x)?;
        let dist = self.bubble_mesh.distance_to(x);
        Ok(PointKernel {
            amplitude: self.constants.prefactor * q,
            delay: (x - self.spec.z).norm() / self.constants.c0,
            q_effective: dist.ln() / self.spec.delta.ln(),
        })
    }
}

struct PointKernel {
    /// `prefactor * Q(x)`
    amplitude: f64,
    /// `|x - z| / c0`
    delay: f64,
    q_effective: f64,
}

fn simpson(a: f64, b: f64, dt: f64, f: impl Fn(f64) -> f64) -> f64 {
    let len = b - a;
    if !(len > 0.0) {
        return 0.0;
    }
    let mut n = ((len / dt).ceil() as usize).max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = len / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// `int_0^s sin(omega (s - tau)) f(tau) dtau` by composite Simpson with
/// step at most `dt`; the grid is stretched to end exactly at `s`.
pub fn sine_convolution(omega: f64, f: impl Fn(f64) -> f64, s: f64, dt: f64) -> f64 {
    sine_convolution_supported(omega, f, (0.0, f64::INFINITY), s, dt)
}

/// As [`sine_convolution`] for an `f` known to vanish outside `support`.
pub fn sine_convolution_supported(omega: f64, f: impl Fn(f64) -> f64, support: (f64, f64), s: f64, dt: f64) -> f64 {
    let a = support.0.max(0.0);
    let b = support.1.min(s);
    if s <= 0.0 || b <= a {
        return 0.0;
    }
    simpson(a, b, dt, |tau| (omega * (s - tau)).sin() * f(tau))
}

/// `int_0^{t_k} sin(omega (t_k - tau)) f(tau) dtau` at every `t_k = k dt`,
/// `k = 0..=n`, in O(n) via running cosine/sine moments.
pub fn sine_convolution_series(omega: f64, f: impl Fn(f64) -> f64, dt: f64, n: usize) -> Vec<f64> {
    let fc: Vec<f64> = (0..=n)
        .map(|k| f(k as f64 * dt) * (omega * k as f64 * dt).cos())
        .collect();
    let fs: Vec<f64> = (0..=n)
        .map(|k| f(k as f64 * dt) * (omega * k as f64 * dt).sin())
        .collect();
    // Simpson on even prefixes, plus one quadratic end panel on odd ones.
    let cumulative = |g: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        let mut even = 0.0;
        for k in 1..=n {
            if k % 2 == 0 {
                even += dt / 3.0 * (g[k - 2] + 4.0 * g[k - 1] + g[k]);
                out[k] = even;
            } else if k == 1 {
                if n >= 2 {
                    out[1] = dt / 12.0 * (5.0 * g[0] + 8.0 * g[1] - g[2]);
                } else {
                    out[1] = 0.5 * dt * (g[0] + g[1]);
                }
            } else {
                out[k] = even + dt / 12.0 * (-g[k - 2] + 8.0 * g[k - 1] + 5.0 * g[k]);
            }
        }
        out
    };
    let c = cumulative(&fc);
    let s = cumulative(&fs);
    (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            (omega * t).sin() * c[k] - (omega * t).cos() * s[k]
        })
        .collect()
}

fn smooth_profile(pulse: &IncidentPulse) -> Result<f64> {
    match pulse.profile {
        PulseProfile::SmoothBump { t_p, .. } => Ok(t_p),
        PulseProfile::DeltaFront => Err(Error::DeltaFront("dominant field evaluation needs a smooth pulse")),
    }
}

/// Dominant scattered field on every (point, time) pair, point-major order.
pub fn evaluate_dominant(model: &BubbleModel, request: &FieldRequest) -> Result<Vec<FieldSample>> {
    let t_p = smooth_profile(&model.pulse)?;
    request.times.validate()?;
    model.check_exterior(&request.points)?;

    let omega = model.constants.omega_m;
    let rz = model.source_distance();
    let tz = model.arrival_at_center();
    let support = (tz, tz + t_p);
    let dt = request.times.dt;
    let pulse = model.pulse;
    let src_tt = move |tau: f64| pulse.lambda_derivs(tau - tz).map(|l| l.d2 / rz).unwrap_or(0.0);
    let src = move |tau: f64| pulse.lambda_derivs(tau - tz).map(|l| l.value / rz).unwrap_or(0.0);

    let per_point: Vec<Result<Vec<FieldSample>>> = pool().install(|| {
        request
            .points
            .par_iter()
            .map(|x| {
                let k = model.point_kernel(x)?;
                Ok(request
                    .times
                    .times()
                    .map(|t| {
                        let s = t - k.delay;
                        let u_s = k.amplitude * sine_convolution_supported(omega, src_tt, support, s, dt);
                        let (u1, u2) = if request.want_decomposition {
                            let u1 = omega * k.amplitude * src(s);
                            let u2 =
                                omega * omega * k.amplitude * sine_convolution_supported(omega, src, support, s, dt);
                            (Some(u1), Some(u2))
                        } else {
                            (None, None)
                        };
                        FieldSample {
                            point: *x,
                            time: t,
                            u_s,
                            u1,
                            u2,
                            q_effective: k.q_effective,
                        }
                    })
                    .collect())
            })
            .collect()
    });
    let mut out = Vec::with_capacity(request.points.len() * request.times.len());
    for r in per_point {
        out.extend(r?);
    }
    Ok(out)
}

/// Primary and secondary reflected waves `(U1, U2)` per sample.
pub fn decompose(model: &BubbleModel, request: &FieldRequest) -> Result<Vec<(f64, f64)>> {
    let req = FieldRequest {
        want_decomposition: true,
        ..request.clone()
    };
    Ok(evaluate_dominant(model, &req)?
        .into_iter()
        .map(|s| (s.u1.unwrap_or(0.0), s.u2.unwrap_or(0.0)))
        .collect())
}

/// Closed-form secondary wave for a delta wavefront, zero before the total
/// travel time `(|x - z| + |z - x0|)/c0`.
pub fn delta_front_u2(model: &BubbleModel, x: &Vec3, t: f64) -> Result<f64> {
    if model.pulse.profile != PulseProfile::DeltaFront {
        return Err(Error::InvalidParameter(
            "delta_front_u2 needs a delta_front pulse".into(),
        ));
    }
    model.check_exterior(std::slice::from_ref(x))?;
    let phase_time = t - model.arrival_at(x);
    if phase_time < 0.0 {
        return Ok(0.0);
    }
    let omega = model.constants.omega_m;
    let q = model.q(x)?;
    Ok(omega * omega * model.constants.prefactor * q * (omega * phase_time).sin() / model.source_distance())
}

pub const CSV_HEADER: &str = "x,y,z,t,u_s,u1,u2,q_eff";

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per sample, 17 significant digits; `u1`/`u2` are left empty
/// when the decomposition was not requested.
pub fn write_csv(samples: &[FieldSample], mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in samples {
        let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            sci(s.point.x),
            sci(s.point.y),
            sci(s.point.z),
            sci(s.time),
            sci(s.u_s),
            opt(s.u1),
            opt(s.u2),
            sci(s.q_effective)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_icosphere;
    use crate::validation::quad::adaptive_gauss_kronrod;
    use std::f64::consts::PI;

    fn model(delta: f64, amplitude: f64) -> BubbleModel {
        let reference = make_icosphere(1.0, 2).unwrap();
        let spec = MediumBubbleSpec {
            rho_m: 1.0,
            k_m: 1.0,
            delta,
            z: Vec3::zeros(),
            rho_c_bar: 1.0,
            k_c_bar: 1.0,
        };
        let pulse = IncidentPulse::smooth_bump(2.0, amplitude, Vec3::new(-3.0, 0.0, 0.0));
        BubbleModel::new(spec, &reference, pulse, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn sine_convolution_basics() {
        assert_eq!(sine_convolution(1.0, |t| t.sin(), 0.0, 1e-3), 0.0);
        assert_eq!(sine_convolution(1.0, |t| t.sin(), -1.0, 1e-3), 0.0);
        let v = sine_convolution(1.0, |t| t.sin(), PI, 1e-3);
        assert!((v - PI / 2.0).abs() < 1e-10);
        // closed form (sin s - s cos s)/2 at a non-grid-aligned s
        let s = 2.345;
        let v = sine_convolution(1.0, |t| t.sin(), s, 1e-3);
        assert!((v - 0.5 * (s.sin() - s * s.cos())).abs() < 1e-10);
    }

    #[test]
    fn sine_convolution_matches_adaptive_oracle_for_bump() {
        let pulse = IncidentPulse::smooth_bump(1.0, 1.0, Vec3::zeros());
        let f = |t: f64| pulse.lambda_derivs(t).unwrap().d2;
        for s in [0.3, 0.77, 1.0, 2.5] {
            let v = sine_convolution_supported(2.0, f, (0.0, 1.0), s, 1e-3);
            let oracle = adaptive_gauss_kronrod(|tau| (2.0 * (s - tau)).sin() * f(tau), 0.0, s.min(1.0), 1e-13);
            assert!((v - oracle).abs() < 1e-8, "s={s}: {v} vs {oracle}");
        }
    }

    #[test]
    fn series_matches_pointwise() {
        let f = |t: f64| (0.7 * t).sin() * t;
        let dt = 1e-3;
        let series = sine_convolution_series(3.0, f, dt, 2001);
        for k in [0, 1, 2, 7, 1000, 2001] {
            let p = sine_convolution(3.0, f, k as f64 * dt, dt);
            assert!((series[k] - p).abs() < 1e-9, "k={k}: {} vs {p}", series[k]);
        }
    }

    #[test]
    fn causality_and_linearity() {
        let m1 = model(0.01, 1.0);
        let m2 = model(0.01, 2.0);
        let x = Vec3::new(0.0, 1.0, 0.0);
        let req = FieldRequest {
            points: vec![x],
            times: TimeGrid::new(0.0, 8.0, 0.01).unwrap(),
            want_decomposition: false,
        };
        let a = evaluate_dominant(&m1, &req).unwrap();
        let b = evaluate_dominant(&m2, &req).unwrap();
        let arrival = m1.arrival_at(&x);
        let mut nonzero = 0;
        for (sa, sb) in a.iter().zip(&b) {
            if sa.time <= arrival {
                assert_eq!(sa.u_s, 0.0);
            }
            if sa.u_s != 0.0 {
                nonzero += 1;
                assert!((sb.u_s / sa.u_s - 2.0).abs() < 1e-12);
            }
        }
        assert!(nonzero > 100);
    }

    #[test]
    fn interior_points_are_rejected() {
        let m = model(0.1, 1.0);
        let req = FieldRequest {
            points: vec![Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.01, 0.0, 0.0)],
            times: TimeGrid::new(0.0, 1.0, 0.1).unwrap(),
            want_decomposition: false,
        };
        assert!(matches!(
            evaluate_dominant(&m, &req),
            Err(Error::InteriorPoint { index: 1 })
        ));
    }

    #[test]
    fn decomposition_reproduces_field() {
        let m = model(0.01, 1.0);
        let req = FieldRequest {
            points: vec![Vec3::new(0.0, 0.02, 0.0), Vec3::new(0.5, 0.5, 0.0)],
            times: TimeGrid::new(2.5, 12.0, 0.005).unwrap(),
            want_decomposition: true,
        };
        let samples = evaluate_dominant(&m, &req).unwrap();
        let peak = samples.iter().map(|s| s.u_s.abs()).fold(0.0, f64::max);
        for s in &samples {
            let recon = DECOMPOSITION_SIGNS.primary * s.u1.unwrap() + DECOMPOSITION_SIGNS.secondary * s.u2.unwrap();
            assert!((recon - s.u_s).abs() <= 1e-7 * peak);
        }
    }

    #[test]
    fn delta_front_closed_form() {
        let reference = make_icosphere(1.0, 2).unwrap();
        let spec = MediumBubbleSpec {
            rho_m: 1.0,
            k_m: 4.0,
            delta: 0.01,
            z: Vec3::zeros(),
            rho_c_bar: 1.0,
            k_c_bar: 1.0,
        };
        let m = BubbleModel::new(
            spec,
            &reference,
            IncidentPulse::delta_front(Vec3::new(0.0, 0.0, 2.0)),
            &QuadratureConfig::default(),
        )
        .unwrap();
        let x = Vec3::new(0.05, 0.0, 0.0);
        let t_arr = m.arrival_at(&x);
        assert_eq!(delta_front_u2(&m, &x, t_arr).unwrap(), 0.0);
        assert_eq!(delta_front_u2(&m, &x, t_arr - 0.1).unwrap(), 0.0);
        let w = m.constants.omega_m;
        let full = w * w * m.constants.prefactor * m.q(&x).unwrap() / m.source_distance();
        let v = delta_front_u2(&m, &x, t_arr + PI / (2.0 * w)).unwrap();
        assert!((v - full).abs() < 1e-14 * full);
        let req = FieldRequest {
            points: vec![x],
            times: TimeGrid::new(0.0, 1.0, 0.1).unwrap(),
            want_decomposition: false,
        };
        assert!(matches!(evaluate_dominant(&m, &req), Err(Error::DeltaFront(_))));
    }

    #[test]
    fn csv_layout() {
        let s = FieldSample {
            point: Vec3::new(1.0, 0.0, -0.5),
            time: 0.1,
            u_s: 1.0 / 3.0,
            u1: None,
            u2: Some(2.0),
            q_effective: 0.5,
        };
        let mut buf = Vec::new();
        write_csv(&[s], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 8);
        assert_eq!(row[4], "3.3333333333333331e-1");
        assert_eq!(row[4].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(row[5], "");
    }

    #[test]
    fn time_grid_len() {
        let g = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g.time(10) - 1.0).abs() < 1e-15);
        assert!(TimeGrid::new(1.0, 0.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
    }
}
