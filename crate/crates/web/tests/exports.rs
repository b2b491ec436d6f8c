use std::f64::consts::PI;

use isp_web::{roundtrip_json, spectrum_json, weyl_curve_json};
use serde_json::Value;

#[test]
fn spectrum_lists_dirichlet_eigenvalues_for_the_zero_model() {
    let rows: Value = serde_json::from_str(&spectrum_json(2, "zero", 400, 3).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let l = row["l"].as_u64().unwrap() as f64;
        let re = row["lambda"][0].as_f64().unwrap();
        assert!((re + (PI * l).powi(2)).abs() < 1e-6 * (PI * l).powi(2));
        assert_eq!(row["k"], 1);
    }
}

#[test]
fn weyl_curve_has_a_point_per_sample_and_rejects_upper_entries() {
    let points: Value = serde_json::from_str(&weyl_curve_json(3, "smooth-poly", 200, 2, 1, -50.0, 50.0, 1.0, 11).unwrap()).unwrap();
    let points = points.as_array().unwrap();
    assert_eq!(points.len(), 11);
    assert_eq!(points[0]["t"], -50.0);
    assert_eq!(points[10]["t"], 50.0);
    assert!(points.iter().all(|p| p["m"].is_array()));
    assert!(weyl_curve_json(3, "smooth-poly", 200, 1, 2, 0.0, 1.0, 1.0, 5).is_err());
    assert!(weyl_curve_json(3, "smooth-poly", 200, 2, 1, 0.0, 1.0, 1.0, 1).is_err());
}

#[test]
fn roundtrip_reports_small_discrepancies() {
    let out: Value = serde_json::from_str(&roundtrip_json(3, "smooth-poly", 400, 4, 2, 1e-3, 5).unwrap()).unwrap();
    assert!(out["omega"].as_f64().unwrap() > 0.0);
    assert!(out["max_rel_lambda"].as_f64().unwrap() < 1e-4);
    let x = out["x"].as_array().unwrap();
    let coefficients = out["coefficients"].as_array().unwrap();
    assert_eq!(coefficients.len(), 2);
    for c in coefficients {
        assert_eq!(c["model"].as_array().unwrap().len(), x.len());
        assert_eq!(c["recovered"].as_array().unwrap().len(), x.len());
    }
    assert!(roundtrip_json(3, "no-such-preset", 400, 4, 2, 1e-3, 5).is_err());
}
