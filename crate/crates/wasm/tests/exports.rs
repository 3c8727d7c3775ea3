use nvrf_wasm::{field_map_json, optimize_json, sensitivity_curves_json};
use serde_json::Value;

#[test]
fn curves_have_one_entry_per_laser() {
    let s = sensitivity_curves_json("perpendicular", "slope", 0.5, &[0.01, 1.0]).unwrap();
    let v: Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["unit"], "W/Hz");
    let curves = v["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 2);
    assert_eq!(curves[0]["size_m"].as_array().unwrap().len(), 81);
    let xc = curves[1]["crossover_m"].as_f64().unwrap();
    assert!((xc - 31.6227766e-6).abs() < 1e-12);
}

#[test]
fn bad_names_are_reported() {
    assert!(sensitivity_curves_json("spiral", "slope", 0.5, &[1.0]).is_err());
    assert!(sensitivity_curves_json("loop", "slope", 0.3, &[1.0]).is_err());
    assert!(field_map_json("coax", false, 60).is_err());
    assert!(field_map_json("cpw", false, 8).is_err());
}

#[test]
fn map_view_matches_grid() {
    let v: Value = serde_json::from_str(&field_map_json("loop", false, 48).unwrap()).unwrap();
    assert_eq!(v["nx"], 48);
    assert_eq!(v["alpha"].as_array().unwrap().len(), 48 * 48);
    assert!(v["masked"].as_array().unwrap().iter().any(|m| m == true));
}

#[test]
fn optimum_sits_at_relative_fom_one() {
    let v: Value = serde_json::from_str(&optimize_json("cpw", "slope", 0.5, true, 120).unwrap()).unwrap();
    let c1: Vec<f64> = serde_json::from_value(v["c1"].clone()).unwrap();
    let c2: Vec<f64> = serde_json::from_value(v["c2"].clone()).unwrap();
    let rel: Vec<Option<f64>> = serde_json::from_value(v["relative_fom"].clone()).unwrap();
    let i = c1.iter().position(|&c| c == v["c1_opt"].as_f64().unwrap()).unwrap();
    let j = c2.iter().position(|&c| c == v["c2_opt"].as_f64().unwrap()).unwrap();
    assert_eq!(rel[j * c1.len() + i], Some(1.0));
    assert!(rel.iter().flatten().all(|&r| r <= 1.0));
}
