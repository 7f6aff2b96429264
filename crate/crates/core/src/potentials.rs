//! Weakly singular surface integrals over flat-panel meshes: the 1/r panel
//! potential, the boundary-averaged kernel `Q(x)`, the shape factor
//! `A(y)`/`A_dB`, and the two Gauss identities.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SurfaceMesh, Vec3};
use crate::parallel::pool;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Points per regular panel: 1, 3 or 7.
    pub regular_order: usize,
    /// 4-way refinement depth for panels near the evaluation point.
    pub singular_subdivision_depth: u32,
    /// A panel is near when `|y - centroid| < threshold * panel diameter`.
    pub near_singular_threshold: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            regular_order: 7,
            singular_subdivision_depth: 3,
            near_singular_threshold: 2.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if ![1, 3, 7].contains(&self.regular_order) {
            return Err(Error::InvalidParameter(format!(
                "regular_order must be 1, 3 or 7, got {}",
                self.regular_order
            )));
        }
        if self.singular_subdivision_depth > 8 {
            return Err(Error::InvalidParameter(
                "singular_subdivision_depth must be <= 8".into(),
            ));
        }
        if !(self.near_singular_threshold > 0.0) {
            return Err(Error::InvalidParameter("near_singular_threshold must be > 0".into()));
        }
        Ok(())
    }
}

/// Symmetric triangle rules as (barycentric point, weight) with weights
/// summing to one.
pub fn triangle_rule(order: usize) -> &'static [([f64; 3], f64)] {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W1: f64 = 0.132_394_152_788_506;
    const W2: f64 = 0.125_939_180_544_827;
    static ONE: [([f64; 3], f64); 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];
    static THREE: [([f64; 3], f64); 3] = [
        ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
        ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
        ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
    ];
    static SEVEN: [([f64; 3], f64); 7] = [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ];
    match order {
        1 => &ONE,
        3 => &THREE,
        _ => &SEVEN,
    }
}

/// Integrates `f` over the flat triangle with a symmetric rule.
pub fn integrate_triangle(tri: &[Vec3; 3], order: usize, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
    let area = 0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm();
    let mut acc = 0.0;
    for (l, w) in triangle_rule(order) {
        let x = l[0] * tri[0] + l[1] * tri[1] + l[2] * tri[2];
        acc += w * f(&x);
    }
    area * acc
}

/// Exact `int_T 1/|x - y| dsigma_y` over a flat triangle, valid for `x` on,
/// near or far from the panel.
pub fn panel_potential(tri: &[Vec3; 3], x: &Vec3) -> Result<f64> {
    let cross = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let scale = (tri[1] - tri[0])
        .norm()
        .max((tri[2] - tri[1]).norm())
        .max((tri[0] - tri[2]).norm());
    let twice_area = cross.norm();
    if !(twice_area > 1e-14 * scale * scale) {
        return Err(Error::DegenerateTriangle(0));
    }
    Ok(panel_potential_unchecked(tri, &(cross / twice_area), scale, x))
}

fn panel_potential_unchecked(tri: &[Vec3; 3], n: &Vec3, scale: f64, x: &Vec3) -> f64 {
    let h = n.dot(&(x - tri[0]));
    let habs = h.abs();
    let rho = x - h * n;
    let tiny = 1e-14 * scale;
    let mut acc = 0.0;
    for i in 0..3 {
        let p = tri[i];
        let q = tri[(i + 1) % 3];
        let edge = q - p;
        let s = edge / edge.norm();
        let m = s.cross(n);
        let t0 = (p - rho).dot(&m);
        let l_minus = (p - rho).dot(&s);
        let l_plus = (q - rho).dot(&s);
        let r_minus = (x - p).norm();
        let r_plus = (x - q).norm();
        let r0_sq = t0 * t0 + h * h;
        if r0_sq.sqrt() <= tiny {
            // x on the edge line: the edge term vanishes
            continue;
        }
        let log_term = if l_minus >= 0.0 {
            ((r_plus + l_plus) / (r_minus + l_minus)).ln()
        } else if l_plus <= 0.0 {
            ((r_minus - l_minus) / (r_plus - l_plus)).ln()
        } else {
            // Straddling: (R - l)(R + l) = R0^2 keeps both forms positive.
            ((r_plus + l_plus) * (r_minus - l_minus) / r0_sq).ln()
        };
        acc += t0 * log_term;
        if habs > 0.0 {
            acc -= habs * ((t0 * l_plus).atan2(r0_sq + habs * r_plus) - (t0 * l_minus).atan2(r0_sq + habs * r_minus));
        }
    }
    acc
}

/// `Q(x) = (1/|dOmega|) int 1/|x - y| dsigma_y` for `x` off the surface.
pub fn single_layer_mean(mesh: &SurfaceMesh, x: &Vec3) -> Result<f64> {
    let diam = mesh.bounding_diameter();
    let dist = mesh.distance_to(x);
    if dist <= 1e-12 * diam {
        return Err(Error::OnSurface(dist));
    }
    let mut total = 0.0;
    for f in 0..mesh.num_faces() {
        let tri = mesh.triangle(f);
        let pd = mesh.face_diameter(f);
        let r = (x - mesh.face_centroid(f)).norm();
        total += if r > 50.0 * pd {
            integrate_triangle(&tri, 7, |y| 1.0 / (x - y).norm())
        } else {
            panel_potential_unchecked(&tri, &mesh.face_normal(f), pd, x)
        };
    }
    Ok(total / mesh.area())
}

#[inline]
fn a_kernel(x: &Vec3, y: &Vec3, n: &Vec3) -> f64 {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        0.0
    } else {
        d.dot(n) / r
    }
}

fn refined_centroid_rule(tri: &[Vec3; 3], depth: u32, f: &impl Fn(&Vec3) -> f64) -> f64 {
    if depth == 0 {
        let area = 0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm();
        return area * f(&((tri[0] + tri[1] + tri[2]) / 3.0));
    }
    let ab = 0.5 * (tri[0] + tri[1]);
    let bc = 0.5 * (tri[1] + tri[2]);
    let ca = 0.5 * (tri[2] + tri[0]);
    refined_centroid_rule(&[tri[0], ab, ca], depth - 1, f)
        + refined_centroid_rule(&[tri[1], bc, ab], depth - 1, f)
        + refined_centroid_rule(&[tri[2], ca, bc], depth - 1, f)
        + refined_centroid_rule(&[ab, bc, ca], depth - 1, f)
}

/// `A(y) = int (x - y) . nu_x / |x - y| dsigma_x` for `y` on the surface.
/// The kernel is bounded; panels near `y` are refined, the rest use the
/// regular rule.
pub fn a_of_y(mesh: &SurfaceMesh, y: &Vec3, cfg: &QuadratureConfig) -> f64 {
    let mut total = 0.0;
    for f in 0..mesh.num_faces() {
        let tri = mesh.triangle(f);
        let n = mesh.face_normal(f);
        let kernel = |x: &Vec3| a_kernel(x, y, &n);
        let near = (y - mesh.face_centroid(f)).norm() < cfg.near_singular_threshold * mesh.face_diameter(f);
        total += if near {
            refined_centroid_rule(&tri, cfg.singular_subdivision_depth, &kernel)
        } else {
            integrate_triangle(&tri, cfg.regular_order, kernel)
        };
    }
    total
}

/// Mixed Voronoi areas per vertex: the circumcentric dual cell for
/// non-obtuse faces, with the usual half/quarter split on obtuse ones. They
/// sum to the total area.
pub fn voronoi_weights(mesh: &SurfaceMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_vertices()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let area = mesh.face_area(f);
        let p = mesh.triangle(f);
        let angle = |i: usize| {
            let a = p[(i + 1) % 3] - p[i];
            let b = p[(i + 2) % 3] - p[i];
            a.angle(&b)
        };
        let angles = [angle(0), angle(1), angle(2)];
        if let Some(obtuse) = (0..3).find(|&i| angles[i] > 0.5 * PI) {
            for (i, &v) in face.iter().enumerate() {
                w[v] += if i == obtuse { 0.5 * area } else { 0.25 * area };
            }
            continue;
        }
        for (i, &v) in face.iter().enumerate() {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            let eij = (p[j] - p[i]).norm_squared();
            let eik = (p[k] - p[i]).norm_squared();
            w[v] += 0.125 * (eij / angles[k].tan() + eik / angles[j].tan());
        }
    }
    w
}

/// Per-vertex barycentric dual areas (one third of each adjacent face).
pub fn vertex_weights(mesh: &SurfaceMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_vertices()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let a = mesh.face_area(f) / 3.0;
        for &v in face {
            w[v] += a;
        }
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFactors {
    #[serde(rename = "A_dB")]
    pub a_db: f64,
    #[serde(rename = "area_B")]
    pub area_b: f64,
    #[serde(rename = "vol_B")]
    pub vol_b: f64,
    /// `A(y)` at each mesh vertex.
    #[serde(rename = "A_profile")]
    pub a_profile: Vec<f64>,
}

/// `A_dB` as the area-weighted mean of `A(y)` over the vertices.
pub fn shape_factors(mesh: &SurfaceMesh, cfg: &QuadratureConfig) -> Result<ShapeFactors> {
    cfg.validate()?;
    let a_profile: Vec<f64> = pool().install(|| mesh.vertices().par_iter().map(|y| a_of_y(mesh, y, cfg)).collect());
    let weights = voronoi_weights(mesh);
    let area = mesh.area();
    let a_db = a_profile.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() / area;
    if !(a_db > 0.0) {
        return Err(Error::Numerical(format!("non-positive shape factor A_dB = {a_db}")));
    }
    Ok(ShapeFactors {
        a_db,
        area_b: area,
        vol_b: mesh.volume(),
        a_profile,
    })
}

/// Alternative `A_dB` from collocation at panel centroids.
pub fn shape_factor_centroid(mesh: &SurfaceMesh, cfg: &QuadratureConfig) -> f64 {
    let values: Vec<f64> = pool().install(|| {
        (0..mesh.num_faces())
            .into_par_iter()
            .map(|f| mesh.face_area(f) * a_of_y(mesh, &mesh.face_centroid(f), cfg))
            .collect()
    });
    values.iter().sum::<f64>() / mesh.area()
}

/// Solid angle of a flat triangle seen from `y` (Van Oosterom–Strackee),
/// positive when `y` is behind the outward normal. Zero when `y` lies in
/// the panel plane.
pub fn triangle_solid_angle(tri: &[Vec3; 3], y: &Vec3) -> f64 {
    let a = tri[0] - y;
    let b = tri[1] - y;
    let c = tri[2] - y;
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let det = a.dot(&b.cross(&c));
    if det.abs() <= 1e-13 * la * lb * lc {
        return 0.0;
    }
    let denom = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * det.atan2(denom)
}

/// `(1/4pi) int (x - y) . nu_x / |x - y|^3 dsigma_x`: 1 inside, 1/2 on a
/// smooth part of the boundary, 0 outside.
pub fn gauss_solid_angle(mesh: &SurfaceMesh, y: &Vec3) -> f64 {
    (0..mesh.num_faces())
        .map(|f| triangle_solid_angle(&mesh.triangle(f), y))
        .sum::<f64>()
        / (4.0 * PI)
}

/// `int (x - y) . nu_x dsigma_x`, equal to `3 |Omega|` for every `y`.
pub fn flux_identity(mesh: &SurfaceMesh, y: &Vec3) -> f64 {
    (0..mesh.num_faces())
        .map(|f| (mesh.face_centroid(f) - y).dot(&mesh.face_normal(f)) * mesh.face_area(f))
        .sum()
}

/// True when `x` is strictly outside the closed surface.
pub fn is_exterior(mesh: &SurfaceMesh, x: &Vec3) -> bool {
    gauss_solid_angle(mesh, x) < 0.25 && mesh.distance_to(x) > 1e-12 * mesh.bounding_diameter()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ellipsoid, make_icosphere, rigid_motion, scale_translate};
    use crate::validation::quad::panel_potential_reference;
    use nalgebra::{Matrix3, Rotation3};

    fn unit_right() -> [Vec3; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn rules_integrate_polynomials() {
        let tri = unit_right();
        for order in [1, 3, 7] {
            let one = integrate_triangle(&tri, order, |_| 1.0);
            assert!((one - 0.5).abs() < 1e-15);
        }
        // int x^2 y^2 over the unit right triangle = 1/180 (degree 4)
        let v = integrate_triangle(&tri, 7, |p| p.x * p.x * p.y * p.y);
        assert!((v - 1.0 / 180.0).abs() < 1e-14);
    }

    #[test]
    fn panel_potential_at_centroid_matches_reference() {
        let tri = unit_right();
        let x = (tri[0] + tri[1] + tri[2]) / 3.0;
        let exact = panel_potential(&tri, &x).unwrap();
        let oracle = panel_potential_reference(&tri, &x, 64);
        assert!((exact - oracle).abs() < 1e-6 * oracle, "{exact} vs {oracle}");
    }

    #[test]
    fn panel_potential_off_plane_and_at_vertex() {
        let tri = unit_right();
        for x in [
            Vec3::new(0.3, 0.2, 0.05),
            Vec3::new(0.3, 0.2, -0.4),
            Vec3::new(1.5, -0.5, 0.1),
            Vec3::new(-0.2, 0.5, 0.0),
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.5, 0.0, 0.0),
        ] {
            let exact = panel_potential(&tri, &x).unwrap();
            let oracle = panel_potential_reference(&tri, &x, 64);
            assert!(
                (exact - oracle).abs() < 1e-8 * oracle.abs().max(1.0),
                "x={x:?}: {exact} vs {oracle}"
            );
        }
    }

    #[test]
    fn panel_potential_far_is_point_mass() {
        let tri = unit_right();
        let c = (tri[0] + tri[1] + tri[2]) / 3.0;
        let diam = 2f64.sqrt();
        let x = c + Vec3::new(0.3, -0.5, 0.8).normalize() * 100.0 * diam;
        let v = panel_potential(&tri, &x).unwrap();
        let approx = 0.5 / (x - c).norm();
        assert!((v - approx).abs() < 1e-4 * approx);
    }

    #[test]
    fn panel_potential_degenerate() {
        let tri = [Vec3::zeros(), Vec3::x(), 2.0 * Vec3::x()];
        assert!(panel_potential(&tri, &Vec3::z()).is_err());
    }

    #[test]
    fn panel_potential_is_euclidean_invariant() {
        let tri = [
            Vec3::new(0.1, 0.2, 0.0),
            Vec3::new(1.3, -0.1, 0.2),
            Vec3::new(0.4, 0.9, -0.3),
        ];
        let x = Vec3::new(0.5, 0.3, 0.4);
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let shift = Vec3::new(3.0, -7.0, 1.5);
        let moved = tri.map(|v| rot * v + shift);
        let a = panel_potential(&tri, &x).unwrap();
        let b = panel_potential(&moved, &(rot * x + shift)).unwrap();
        assert!((a - b).abs() < 1e-14 * a.abs().max(1.0) * 10.0);
    }

    #[test]
    fn q_on_unit_sphere() {
        let m = make_icosphere(1.0, 4).unwrap();
        let q = single_layer_mean(&m, &Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((q - 0.5).abs() < 0.5e-3);
        let q0 = single_layer_mean(&m, &Vec3::zeros()).unwrap();
        assert!((q0 - 1.0).abs() < 1e-3, "{q0}");
        assert!(matches!(
            single_layer_mean(&m, &m.vertices()[3]),
            Err(Error::OnSurface(_))
        ));
    }

    #[test]
    fn q_far_field_monopole() {
        let m = make_ellipsoid([2.0, 1.0, 1.0], 2).unwrap();
        let x = Vec3::new(1.0, 2.0, -0.5).normalize() * 1e6 * m.bounding_diameter();
        let q = single_layer_mean(&m, &x).unwrap();
        assert!((q * x.norm() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn a_of_y_on_sphere() {
        let cfg = QuadratureConfig::default();
        let m = make_icosphere(1.0, 4).unwrap();
        let exact = 8.0 * PI / 3.0;
        let a = a_of_y(&m, &m.vertices()[7], &cfg);
        // flat-panel volume defect at level 4 is about 2.2e-3
        assert!((a / exact - 1.0).abs() < 2.5e-3, "{}", a / exact - 1.0);
        let s = scale_translate(&m, 0.1, &Vec3::zeros()).unwrap();
        let b = a_of_y(&s, &s.vertices()[7], &cfg);
        assert!((b / (0.01 * a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a_positive_on_convex_ellipsoid() {
        let m = make_ellipsoid([2.0, 1.0, 0.7], 2).unwrap();
        let f = shape_factors(&m, &QuadratureConfig::default()).unwrap();
        assert!(f.a_profile.iter().all(|&a| a > 0.0));
        let w = voronoi_weights(&m);
        assert!((w.iter().sum::<f64>() / m.area() - 1.0).abs() < 1e-12);
        let mean = f.a_profile.iter().zip(&w).map(|(a, w)| a * w).sum::<f64>() / w.iter().sum::<f64>();
        assert!((mean - f.a_db).abs() < 1e-14 * f.a_db);
    }

    #[test]
    fn shape_factor_scaling_and_rigid_invariance() {
        let cfg = QuadratureConfig::default();
        let m = make_ellipsoid([1.0, 0.8, 0.6], 2).unwrap();
        let f = shape_factors(&m, &cfg).unwrap();
        let s = scale_translate(&m, 0.01, &Vec3::new(1.0, -2.0, 0.5)).unwrap();
        let fs = shape_factors(&s, &cfg).unwrap();
        assert!((fs.a_db / (1e-4 * f.a_db) - 1.0).abs() < 1e-12);
        let rot: Matrix3<f64> = *Rotation3::from_euler_angles(0.4, 0.2, -0.9).matrix();
        let r = rigid_motion(&m, &rot, &Vec3::new(2.0, 1.0, -3.0));
        let fr = shape_factors(&r, &cfg).unwrap();
        assert!((fr.a_db / f.a_db - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_factors_json_keys() {
        let m = make_icosphere(1.0, 0).unwrap();
        let f = shape_factors(&m, &QuadratureConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&f).unwrap();
        for key in ["A_dB", "area_B", "vol_B", "A_profile"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn gauss_identities() {
        let m = make_icosphere(1.0, 3).unwrap();
        for f in [0, 17, 400] {
            let g = gauss_solid_angle(&m, &m.face_centroid(f));
            assert!((g - 0.5).abs() < 1e-12, "{g}");
        }
        assert!((gauss_solid_angle(&m, &Vec3::new(0.1, 0.2, -0.3)) - 1.0).abs() < 1e-12);
        assert!(gauss_solid_angle(&m, &Vec3::new(1.5, 0.2, -0.3)).abs() < 1e-12);
        let vol = m.volume();
        for y in [m.centroid(), Vec3::new(17.0, -3.0, 2.0)] {
            assert!((flux_identity(&m, &y) / (3.0 * vol) - 1.0).abs() < 1e-12);
        }
        let s = scale_translate(&m, 0.2, &Vec3::zeros()).unwrap();
        assert!((flux_identity(&s, &Vec3::zeros()) / flux_identity(&m, &Vec3::zeros()) - 0.008).abs() < 1e-14);
    }

    #[test]
    fn quadrature_config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            regular_order: 5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig {
            singular_subdivision_depth: 9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
