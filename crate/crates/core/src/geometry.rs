//! Closed, outward-oriented triangle meshes for the reference shape `B` and
//! the bubble `Omega = delta * B + z`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Largest icosphere subdivision level accepted (20 * 4^7 = 327 680 faces).
pub const MAX_SUBDIVISIONS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

/// A closed orientable triangulated surface with outward (counter-clockwise
/// seen from outside) faces. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    label: Option<String>,
}

impl SurfaceMesh {
    /// Validates and builds a mesh. Rejects out-of-range indices, degenerate
    /// faces, edges not shared by exactly two consistently oriented faces,
    /// and inward winding. Nothing is repaired.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, label: Option<String>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidMesh("no faces".into()));
        }
        for (fi, f) in faces.iter().enumerate() {
            for &i in f {
                if i >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "face {fi} references vertex {i}, only {} vertices",
                        vertices.len()
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateTriangle(fi));
            }
        }
        let mesh = SurfaceMesh { vertices, faces, label };

        let scale = mesh.bounding_diameter();
        for fi in 0..mesh.faces.len() {
            if !(mesh.face_area(fi) > 1e-14 * scale * scale) {
                return Err(Error::DegenerateTriangle(fi));
            }
        }

        // Each directed edge must appear once and its reverse once.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * mesh.faces.len());
        for f in &mesh.faces {
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 || directed.get(&(b, a)) != Some(&1) {
                return Err(Error::OpenSurface(a.min(b), a.max(b)));
            }
        }

        let vol = mesh.volume();
        if !(vol > 0.0) {
            return Err(Error::NegativeVolume(vol));
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        // closed manifold: every edge borders exactly two faces
        3 * self.faces.len() / 2
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    #[inline]
    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Twice-area vector `(b - a) x (c - a)`.
    #[inline]
    fn face_cross(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    pub fn face_normal(&self, face: usize) -> Vec3 {
        self.face_cross(face).normalize()
    }

    pub fn face_centroid(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        (a + b + c) / 3.0
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Volume from the flux of `x . nu / 3`; the integrand is linear on each
    /// flat panel so the centroid value is exact.
    pub fn volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let c = self.face_centroid(f);
                0.5 * c.dot(&self.face_cross(f))
            })
            .sum::<f64>()
            / 3.0
    }

    /// Volume as a sum of signed tetrahedra with apex at the origin.
    pub fn volume_tetrahedra(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                a.dot(&b.cross(&c))
            })
            .sum::<f64>()
            / 6.0
    }

    /// Centroid of the enclosed volume.
    pub fn centroid(&self) -> Vec3 {
        let mut acc = Vec3::zeros();
        let mut vol = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            let v = a.dot(&b.cross(&c)) / 6.0;
            acc += v * (a + b + c) / 4.0;
            vol += v;
        }
        acc / vol
    }

    /// Sum of area-weighted outward normals; zero for a closed surface.
    pub fn normal_sum(&self) -> Vec3 {
        (0..self.faces.len())
            .map(|f| 0.5 * self.face_cross(f))
            .fold(Vec3::zeros(), |a, b| a + b)
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn bounding_diameter(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm()
    }

    /// Largest edge length of a face.
    pub fn face_diameter(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                (closest_point_on_triangle(p, &a, &b, &c) - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest ray parameter `s >= 0` at which `origin + s * dir` crosses the
    /// surface, or `None` when the ray misses.
    pub fn ray_exit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let mut best: Option<f64> = None;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            if let Some(s) = ray_triangle(origin, dir, &a, &b, &c) {
                if s >= 0.0 && best.is_none_or(|b| s > b) {
                    best = Some(s);
                }
            }
        }
        best
    }

    /// Canonical ASCII OFF serialisation. Numbers use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_off_string(&self) -> String {
        let mut s = String::with_capacity(40 * (self.vertices.len() + self.faces.len()));
        s.push_str("OFF\n");
        let _ = writeln!(s, "{} {} {}", self.vertices.len(), self.faces.len(), self.num_edges());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
        }
        s
    }

    pub fn write_off(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_off_string()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Maps every vertex `v` to `delta * v + z`.
pub fn scale_translate(mesh: &SurfaceMesh, delta: f64, z: &Vec3) -> Result<SurfaceMesh> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {delta}")));
    }
    Ok(SurfaceMesh {
        vertices: mesh.vertices.iter().map(|v| delta * v + z).collect(),
        faces: mesh.faces.clone(),
        label: mesh.label.clone(),
    })
}

/// Rigid motion `v -> rotation * v + shift`. `rotation` must be orthogonal
/// with determinant +1 so that orientation is kept.
pub fn rigid_motion(mesh: &SurfaceMesh, rotation: &nalgebra::Matrix3<f64>, shift: &Vec3) -> SurfaceMesh {
    SurfaceMesh {
        vertices: mesh.vertices.iter().map(|v| rotation * v + shift).collect(),
        faces: mesh.faces.clone(),
        label: mesh.label.clone(),
    }
}

/// Geodesic icosphere centred at the origin; midpoints are pushed back onto
/// the sphere after every subdivision step.
pub fn make_icosphere(radius: f64, subdivisions: u32) -> Result<SurfaceMesh> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(Error::InvalidParameter(format!(
            "subdivisions {subdivisions} exceeds the limit {MAX_SUBDIVISIONS}"
        )));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push((vertices[a] + vertices[b]).normalize());
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    for v in vertices.iter_mut() {
        *v *= radius;
    }
    SurfaceMesh::new(
        vertices,
        faces,
        Some(format!("icosphere r={radius} subdiv={subdivisions}")),
    )
}

/// Icosphere stretched to semi-axes `radii`.
pub fn make_ellipsoid(radii: [f64; 3], subdivisions: u32) -> Result<SurfaceMesh> {
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ellipsoid radii must be positive, got {radii:?}"
        )));
    }
    let sphere = make_icosphere(1.0, subdivisions)?;
    let vertices = sphere
        .vertices
        .iter()
        .map(|v| Vec3::new(radii[0] * v.x, radii[1] * v.y, radii[2] * v.z))
        .collect();
    SurfaceMesh::new(
        vertices,
        sphere.faces,
        Some(format!(
            "ellipsoid radii={},{},{} subdiv={subdivisions}",
            radii[0], radii[1], radii[2]
        )),
    )
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<SurfaceMesh> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let label = path.file_name().map(|n| n.to_string_lossy().into_owned());
    let (vertices, faces) = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::Obj => parse_obj(&text)?,
    };
    SurfaceMesh::new(vertices, faces, label)
}

type RawMesh = (Vec<Vec3>, Vec<[usize; 3]>);

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a number, found {tok:?}"),
    })
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| Error::Parse {
        line,
        msg: format!("expected an index, found {tok:?}"),
    })
}

/// ASCII OFF: `OFF`, `nv nf ne`, vertex lines, then faces starting with `3`.
/// `#` starts a comment.
pub fn parse_off(text: &str) -> Result<RawMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty file".into(),
    })?;
    let mut counts_line = None;
    if header == "OFF" {
    } else if let Some(rest) = header.strip_prefix("OFF") {
        // counts on the header line
        counts_line = Some((ln, rest.trim()));
    } else {
        return Err(Error::Parse {
            line: ln,
            msg: "missing OFF header".into(),
        });
    }
    let (ln, counts) = match counts_line {
        Some(c) => c,
        None => lines.next().ok_or(Error::Parse {
            line: ln,
            msg: "missing counts".into(),
        })?,
    };
    let nums: Vec<&str> = counts.split_whitespace().collect();
    if nums.len() < 2 {
        return Err(Error::Parse {
            line: ln,
            msg: "counts line needs at least nv nf".into(),
        });
    }
    let nv = parse_index(nums[0], ln)?;
    let nf = parse_index(nums[1], ln)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: ln,
            msg: "unexpected end of vertices".into(),
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "vertex needs 3 coordinates".into(),
            });
        }
        vertices.push(Vec3::new(
            parse_f64(toks[0], ln)?,
            parse_f64(toks[1], ln)?,
            parse_f64(toks[2], ln)?,
        ));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: ln,
            msg: "unexpected end of faces".into(),
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.first() != Some(&"3") || toks.len() < 4 {
            return Err(Error::Parse {
                line: ln,
                msg: "only triangular faces (\"3 i j k\") are supported".into(),
            });
        }
        faces.push([
            parse_index(toks[1], ln)?,
            parse_index(toks[2], ln)?,
            parse_index(toks[3], ln)?,
        ]);
    }
    Ok((vertices, faces))
}

/// Wavefront OBJ, `v` and `f` records only, 1-based indices. `f a/b/c`
/// forms keep the position index.
pub fn parse_obj(text: &str) -> Result<RawMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<&str> = toks.collect();
                if c.len() < 3 {
                    return Err(Error::Parse {
                        line: ln,
                        msg: "vertex needs 3 coordinates".into(),
                    });
                }
                vertices.push(Vec3::new(
                    parse_f64(c[0], ln)?,
                    parse_f64(c[1], ln)?,
                    parse_f64(c[2], ln)?,
                ));
            }
            Some("f") => {
                let idx = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let k = parse_index(head, ln)?;
                        if k == 0 {
                            return Err(Error::Parse {
                                line: ln,
                                msg: "OBJ indices are 1-based".into(),
                            });
                        }
                        Ok(k - 1)
                    })
                    .collect::<Result<Vec<usize>>>()?;
                if idx.len() != 3 {
                    return Err(Error::Parse {
                        line: ln,
                        msg: "only triangular faces are supported".into(),
                    });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Möller–Trumbore; returns the ray parameter of the hit.
fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = inv * s.dot(&h);
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = inv * dir.dot(&q);
    if v < -1e-12 || u + v > 1.0 + 1e-12 {
        return None;
    }
    Some(inv * e2.dot(&q))
}
