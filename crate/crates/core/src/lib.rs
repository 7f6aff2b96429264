//! Dominant acoustic pressure near a resonating micro-bubble.
//!
//! The bubble is `Omega = delta * B + z` for a closed reference surface `B`
//! discretised by flat triangles. Under the critical scaling
//! `rho_c = rho_c_bar * delta^2`, `k_c = k_c_bar * delta^2` the scattered
//! field outside the bubble is dominated by a point-like resonator ringing at
//! the Minnaert frequency `omega_M = sqrt(2 k_c_bar / (A_dB rho_m))`:
//!
//! ```text
//! u_s(x, t) = prefactor * Q(x) * int_0^{t - |x-z|/c0} sin(omega_M (t - |x-z|/c0 - tau)) u_i_tt(z, tau) dtau
//! ```
//!
//! Modules:
//! - [`geometry`]: closed triangle meshes, icosphere/ellipsoid builders, OFF/OBJ IO.
//! - [`potentials`]: panel integrals, the shape factor `A_dB`, `Q(x)` and the Gauss identities.
//! - [`physics`]: medium/bubble parameters and every derived constant.
//! - [`incident`]: causal point-source pulses.
//! - [`field`]: the dominant field and its primary/secondary decomposition.
//! - [`tuner`]: inverse design of `k_c_bar` or `delta` for a target peak pressure.
//! - [`validation`]: independent oracles (RK4, adaptive quadrature) and identity suites.
//! - [`config`]: JSON run configuration.

// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod incident;
pub mod parallel;
pub mod physics;
pub mod potentials;
pub mod tuner;
pub mod validation;

pub use error::{Error, Result};
pub use geometry::{SurfaceMesh, Vec3};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fit the slope of `ln y` against `ln x` by least squares.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}
