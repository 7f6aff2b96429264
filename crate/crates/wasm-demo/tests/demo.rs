use bubble_wasm_demo::Demo;

const CONFIG: &str = r#"{
  "rho_m": 1.0, "k_m": 1.0, "delta": 0.01, "z": [0, 0, 0],
  "rho_c_bar": 1.0, "k_c_bar": 1.0, "x0": [-3, 0, 0],
  "pulse": {"kind": "smooth_bump", "T_p": 2.0, "amplitude": 1.0},
  "mesh": {"kind": "icosphere", "radius": 1.0, "subdivisions": 2}
}"#;

fn parse(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn summary_reports_the_sphere() {
    let d = Demo::new(CONFIG).unwrap();
    let v = parse(&d.summary().unwrap());
    assert_eq!(v["faces"], 320);
    let a = v["A_dB"].as_f64().unwrap();
    assert!((a / (8.0 * std::f64::consts::PI / 3.0) - 1.0).abs() < 0.05);
    assert!(v["constants"]["omega_m"].as_f64().unwrap() > 0.0);
}

#[test]
fn trace_is_causal_and_decomposes() {
    let d = Demo::new(CONFIG).unwrap();
    let v = parse(&d.trace(0.0, 0.1, 0.0, 0.0, 8.0, 0.01).unwrap());
    let t = v["t"].as_array().unwrap();
    let arrival = v["arrival"].as_f64().unwrap();
    assert_eq!(t.len(), 801);
    let peak = v["u_s"]
        .as_array()
        .unwrap()
        .iter()
        .map(|u| u.as_f64().unwrap().abs())
        .fold(0.0, f64::max);
    assert!(peak > 0.0);
    for k in 0..t.len() {
        let u = v["u_s"][k].as_f64().unwrap();
        let (u1, u2) = (v["u1"][k].as_f64().unwrap(), v["u2"][k].as_f64().unwrap());
        if t[k].as_f64().unwrap() <= arrival {
            assert_eq!(u, 0.0);
        }
        assert!((u - (u1 - u2)).abs() <= 1e-4 * peak);
    }
}

#[test]
fn tune_and_errors_come_back_as_messages() {
    let d = Demo::new(CONFIG).unwrap();
    let v = parse(&d.tune(1e-5, 0.0, "delta", 1e-3, 0.1, 1e-6).unwrap());
    assert!((v["achieved_peak"].as_f64().unwrap() / 1e-5 - 1.0).abs() <= 1e-6);
    assert!(d
        .tune(10.0, 0.0, "delta", 1e-3, 0.1, 1e-6)
        .unwrap_err()
        .contains("unattainable"));
    assert!(d.tune(1e-5, 0.0, "bogus", 1e-3, 0.1, 1e-6).is_err());
    assert!(d.trace(0.0, 0.0, 0.0, 0.0, 1.0, 0.1).is_err());
    assert!(Demo::new("{}").is_err());
}
