use std::f64::consts::PI;

use bubble_core::geometry::{load_mesh, make_ellipsoid, make_icosphere, MeshFormat};
use bubble_core::Error;

#[test]
fn off_file_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.off");
    let b = dir.path().join("b.off");
    let mesh = make_icosphere(1.0, 2).unwrap();
    mesh.write_off(&a).unwrap();
    let back = load_mesh(&a, MeshFormat::Off).unwrap();
    back.write_off(&b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(back.num_faces(), 320);
    assert_eq!(back.vertices(), mesh.vertices());
}

#[test]
fn obj_and_off_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = make_icosphere(2.0, 1).unwrap();
    let mut obj = String::new();
    for v in mesh.vertices() {
        obj.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        obj.push_str(&format!("f {}/1 {}/1 {}/1\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    let path = dir.path().join("m.obj");
    std::fs::write(&path, obj).unwrap();
    let loaded = load_mesh(&path, MeshFormat::Obj).unwrap();
    assert_eq!(loaded.faces(), mesh.faces());
    assert_eq!(loaded.volume(), mesh.volume());
}

#[test]
fn flipped_orientation_is_rejected_at_load() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = make_icosphere(1.0, 1).unwrap();
    let mut text = format!("OFF\n{} {} 0\n", mesh.num_vertices(), mesh.num_faces());
    for v in mesh.vertices() {
        text.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        text.push_str(&format!("3 {} {} {}\n", f[0], f[2], f[1]));
    }
    let path = dir.path().join("flipped.off");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(
        load_mesh(&path, MeshFormat::Off),
        Err(Error::NegativeVolume(_))
    ));
}

#[test]
fn ellipsoid_volume_close_to_analytic() {
    let e = make_ellipsoid([2.0, 1.0, 1.0], 3).unwrap();
    let exact = 4.0 * PI / 3.0 * 2.0;
    assert!((e.volume() / exact - 1.0).abs() < 0.01);
    assert_eq!(e.euler_characteristic(), 2);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_mesh(std::path::Path::new("/nonexistent/mesh.off"), MeshFormat::Off).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}
