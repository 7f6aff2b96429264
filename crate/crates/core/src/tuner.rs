//! Inverse design: choose `k_c_bar` or `delta` so that the peak dominant
//! pressure at a probe point matches a target.
//!
//! The probe sits on a ray from `z`, at distance `delta^q` beyond the point
//! where the ray leaves the bubble. The peak is the max of `|u_s|` over a
//! window of fixed length that opens when the wave reaches the probe, so it
//! does not depend on travel times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{evaluate_dominant, BubbleModel, FieldRequest, TimeGrid};
use crate::geometry::{SurfaceMesh, Vec3};
use crate::incident::IncidentPulse;
use crate::physics::{vec3_serde, MediumBubbleSpec};
use crate::potentials::ShapeFactors;

pub const MAX_ITERATIONS: usize = 200;
const SCAN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreeParameter {
    #[serde(rename = "k_c_bar")]
    KcBar,
    #[serde(rename = "delta")]
    Delta,
}

impl FreeParameter {
    pub fn name(&self) -> &'static str {
        match self {
            FreeParameter::KcBar => "k_c_bar",
            FreeParameter::Delta => "delta",
        }
    }

    pub fn apply(&self, spec: &MediumBubbleSpec, value: f64) -> MediumBubbleSpec {
        let mut s = *spec;
        match self {
            FreeParameter::KcBar => s.k_c_bar = value,
            FreeParameter::Delta => s.delta = value,
        }
        s
    }
}

impl std::str::FromStr for FreeParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k_c_bar" => Ok(FreeParameter::KcBar),
            "delta" => Ok(FreeParameter::Delta),
            other => Err(Error::InvalidParameter(format!("unknown free parameter {other:?}"))),
        }
    }
}

/// Where and when the peak is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeWindow {
    #[serde(with = "vec3_serde")]
    pub direction: Vec3,
    /// Delay after arrival at the probe before the window opens.
    #[serde(default)]
    pub start_offset: f64,
    pub duration: f64,
    pub dt: f64,
}

impl ProbeWindow {
    /// `+x` probe, window of four pulse lengths sampled 200 times per pulse.
    pub fn for_pulse(pulse: &IncidentPulse) -> Result<Self> {
        let t_p = pulse.duration()?;
        Ok(Self {
            direction: Vec3::x(),
            start_offset: 0.0,
            duration: 4.0 * t_p,
            dt: t_p / 200.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter(
                "probe direction must be a nonzero vector".into(),
            ));
        }
        if !(self.dt > 0.0) || !(self.duration >= self.dt) || !(self.start_offset >= 0.0) {
            return Err(Error::InvalidParameter(format!("invalid probe window {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningProblem {
    pub target_peak: f64,
    pub standoff_q: f64,
    pub free_parameter: FreeParameter,
    pub bounds: (f64, f64),
    /// The free parameter's value in here is ignored.
    pub fixed: MediumBubbleSpec,
    pub pulse: IncidentPulse,
    pub tolerance: f64,
    pub probe: ProbeWindow,
}

impl TuningProblem {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds;
        if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bounds need 0 < lo < hi, got ({lo}, {hi})"
            )));
        }
        if self.free_parameter == FreeParameter::Delta && hi > 1.0 {
            return Err(Error::InvalidParameter("delta bounds must not exceed 1".into()));
        }
        if !(self.target_peak > 0.0) || !self.target_peak.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "target peak must be positive, got {}",
                self.target_peak
            )));
        }
        if !(0.0..=1.0).contains(&self.standoff_q) {
            return Err(Error::InvalidParameter(format!(
                "standoff q must lie in [0, 1], got {}",
                self.standoff_q
            )));
        }
        if !(self.tolerance > 0.0) || self.tolerance >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        self.pulse.validate()?;
        self.pulse.duration()?;
        self.probe.validate()?;
        self.free_parameter.apply(&self.fixed, lo).validate()?;
        self.free_parameter.apply(&self.fixed, hi).validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub parameter: String,
    pub value: f64,
    pub achieved_peak: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Probe point at distance `delta^q` outside the bubble along `direction`.
pub fn probe_point(model: &BubbleModel, q: f64, direction: &Vec3) -> Result<Vec3> {
    let dir = direction.normalize();
    let z = model.spec.z;
    let exit = model
        .bubble_mesh
        .ray_exit(&z, &dir)
        .ok_or_else(|| Error::InvalidParameter("probe ray from z does not leave the bubble".into()))?;
    Ok(z + (exit + model.spec.delta.powf(q)) * dir)
}

/// Max of `|u_s|` over the probe window.
pub fn peak_pressure(
    spec: &MediumBubbleSpec,
    reference: &SurfaceMesh,
    factors: &ShapeFactors,
    pulse: &IncidentPulse,
    standoff_q: f64,
    probe: &ProbeWindow,
) -> Result<f64> {
    probe.validate()?;
    let model = BubbleModel::with_factors(*spec, reference, factors.clone(), *pulse)?;
    let x = probe_point(&model, standoff_q, &probe.direction)?;
    let t0 = model.arrival_at(&x) + probe.start_offset;
    let n = (probe.duration / probe.dt).round() as usize;
    let request = FieldRequest {
        points: vec![x],
        times: TimeGrid::new(t0, t0 + n as f64 * probe.dt, probe.dt)?,
        want_decomposition: false,
    };
    let samples = evaluate_dominant(&model, &request)?;
    Ok(samples.iter().map(|s| s.u_s.abs()).fold(0.0, f64::max))
}

/// Bracketing root find on `peak(theta) - target`: Brent's method with a
/// bisection step whenever interpolation misbehaves.
pub fn tune(problem: &TuningProblem, reference: &SurfaceMesh, factors: &ShapeFactors) -> Result<TuningResult> {
    problem.validate()?;
    let target = problem.target_peak;
    let g = |theta: f64| -> Result<f64> {
        let spec = problem.free_parameter.apply(&problem.fixed, theta);
        Ok(peak_pressure(
            &spec,
            reference,
            factors,
            &problem.pulse,
            problem.standoff_q,
            &problem.probe,
        )? - target)
    };
    let (lo, hi) = problem.bounds;
    let mut warnings = Vec::new();

    // geometric scan for the bracket and a monotonicity check
    let ratio = (hi / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let thetas: Vec<f64> = (0..SCAN_POINTS)
        .map(|k| {
            if k == SCAN_POINTS - 1 {
                hi
            } else {
                lo * ratio.powi(k as i32)
            }
        })
        .collect();
    let values: Vec<f64> = thetas.iter().map(|&t| g(t)).collect::<Result<_>>()?;
    let crossings: Vec<usize> = (0..SCAN_POINTS - 1)
        .filter(|&k| values[k] == 0.0 || values[k].signum() != values[k + 1].signum())
        .collect();
    if crossings.is_empty() {
        return Err(Error::NoBracket {
            lo,
            hi,
            peak_lo: values[0] + target,
            peak_hi: values[SCAN_POINTS - 1] + target,
            target,
        });
    }
    if crossings.len() > 1 {
        warnings.push(format!(
            "peak is not monotone in {}: {} sign changes on a {SCAN_POINTS}-point scan; returning the first bracketed root",
            problem.free_parameter.name(),
            crossings.len()
        ));
        log::warn!("{}", warnings[0]);
    }
    let k = crossings[0];
    let (value, residual, iterations) = brent(
        &g,
        thetas[k],
        thetas[k + 1],
        values[k],
        values[k + 1],
        problem.tolerance,
        target,
    )?;
    Ok(TuningResult {
        parameter: problem.free_parameter.name().to_string(),
        value,
        achieved_peak: residual + target,
        iterations,
        warnings,
    })
}

/// Returns `(root, g(root), iterations)`. Stops when `|g| <= 0.01 tol target`
/// or the bracket is narrower than `0.01 tol |root|`.
fn brent(
    g: &impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    tol: f64,
    target: f64,
) -> Result<(f64, f64, usize)> {
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == 0.0 {
        return Ok((a, 0.0, 0));
    }
    if fb == 0.0 {
        return Ok((b, 0.0, 0));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut bisected = true;
    let ftol = 0.01 * tol * target;
    for it in 1..=MAX_ITERATIONS {
        let xtol = 0.01 * tol * b.abs();
        let s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo_edge = (3.0 * a + b) / 4.0;
        let between = (s > lo_edge.min(b)) && (s < lo_edge.max(b));
        let use_bisection = !between
            || (bisected && (s - b).abs() >= 0.5 * (b - c).abs())
            || (!bisected && (s - b).abs() >= 0.5 * (c - d).abs())
            || (bisected && (b - c).abs() < xtol)
            || (!bisected && (c - d).abs() < xtol);
        let s = if use_bisection { 0.5 * (a + b) } else { s };
        bisected = use_bisection;
        let fs = g(s)?;
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
        if fb.abs() <= ftol || (b - a).abs() <= 0.01 * tol * b.abs() {
            return Ok((b, fb, it));
        }
    }
    Err(Error::Numerical(format!(
        "root finder did not converge in {MAX_ITERATIONS} iterations"
    )))
}
