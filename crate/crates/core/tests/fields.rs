//! Field configurations: analytic forms, tabulated input and consistency checks.

use std::path::PathBuf;
use std::sync::Arc;

use fw_core::hamiltonians::{FieldConfiguration, SampledField, V3, FIELD_CONSISTENCY_TOL};
use fw_core::FwError;

fn gaussian_columns(n: usize, half: f64, depth: f64, width: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
    let phi = x.iter().map(|&x| -depth * (-x * x / (2.0 * width * width)).exp()).collect();
    let ex = x.iter().map(|&x| -depth * x / (width * width) * (-x * x / (2.0 * width * width)).exp()).collect();
    (x, phi, ex)
}

fn write_csv(name: &str, x: &[f64], phi: &[f64], ex: &[f64]) -> PathBuf {
    let path = std::env::temp_dir().join(format!("fw-fields-{}-{name}.csv", std::process::id()));
    let mut s = String::from("x,Phi,Ax,Ay,Az,Ex,Ey,Ez,Hx,Hy,Hz\n");
    for i in 0..x.len() {
        s.push_str(&format!("{:e},{:e},0,0,0,{:e},0,0,0,0,0\n", x[i], phi[i], ex[i]));
    }
    std::fs::write(&path, s).unwrap();
    path
}

#[test]
fn analytic_configurations_are_consistent() {
    let fields = [
        FieldConfiguration::Zero,
        FieldConfiguration::uniform([0.3, -0.2, 0.1], [0.0, 0.4, 1.0]),
        FieldConfiguration::GaussianWell { depth: 0.3, width: 1.5, center: 0.2 },
        FieldConfiguration::LinearGradientB { b0: 1.0, gradient: 0.2 },
    ];
    for f in &fields {
        let r = f.check_consistency(&f.default_check_points(), FIELD_CONSISTENCY_TOL).unwrap();
        assert!(r.max_deviation <= FIELD_CONSISTENCY_TOL, "{f:?}: {}", r.max_deviation);
    }
}

#[test]
fn gradient_field_is_divergence_and_curl_free() {
    let f = FieldConfiguration::LinearGradientB { b0: 1.0, gradient: 0.2 };
    let g = f.gradients(&V3::new(0.3, -0.4, 0.5)).unwrap();
    assert!(g.dh.trace().abs() <= 1e-15);
    assert!((g.dh - g.dh.transpose()).norm() <= 1e-15);
}

#[test]
fn tabulated_well_matches_the_analytic_well() {
    let (depth, width) = (0.3, 1.2);
    let (x, phi, ex) = gaussian_columns(801, 10.0, depth, width);
    let path = write_csv("good", &x, &phi, &ex);
    let table = SampledField::from_csv(&path, Some(width)).unwrap();
    std::fs::remove_file(&path).ok();
    let tab = FieldConfiguration::Table(Arc::new(table));
    let ana = FieldConfiguration::GaussianWell { depth, width, center: 0.0 };
    assert_eq!(tab.length_scale(), width);
    for &xi in &[-3.1, -0.77, 0.0, 0.41, 2.5] {
        let r = V3::new(xi, 0.2, -0.1);
        let (a, b) = (ana.sample(&r).unwrap(), tab.sample(&r).unwrap());
        assert!((a.phi - b.phi).abs() <= 1e-7);
        assert!((a.e - b.e).norm() <= 1e-7);
        let (ga, gb) = (ana.gradients(&r).unwrap(), tab.gradients(&r).unwrap());
        assert!((ga.de - gb.de).norm() <= 1e-5);
    }
    let report = tab.check_consistency(&tab.default_check_points(), FIELD_CONSISTENCY_TOL).unwrap();
    assert!(report.max_deviation <= FIELD_CONSISTENCY_TOL);
}

#[test]
fn table_rejects_points_outside_its_range() {
    let (x, phi, ex) = gaussian_columns(101, 5.0, 0.3, 1.0);
    let path = write_csv("domain", &x, &phi, &ex);
    let tab = FieldConfiguration::Table(Arc::new(SampledField::from_csv(&path, None).unwrap()));
    std::fs::remove_file(&path).ok();
    assert!(matches!(tab.sample(&V3::new(5.5, 0.0, 0.0)), Err(FwError::FieldDomain(_))));
    assert!(tab.sample(&V3::new(4.9, 3.0, 0.0)).is_ok());
}

#[test]
fn inconsistent_table_is_reported() {
    let (x, phi, mut ex) = gaussian_columns(201, 5.0, 0.3, 1.0);
    for v in ex.iter_mut() {
        *v *= 1.5;
    }
    let path = write_csv("bad", &x, &phi, &ex);
    let tab = FieldConfiguration::Table(Arc::new(SampledField::from_csv(&path, None).unwrap()));
    std::fs::remove_file(&path).ok();
    match tab.check_consistency(&tab.default_check_points(), FIELD_CONSISTENCY_TOL) {
        Err(FwError::FieldConsistency { max_deviation, .. }) => assert!(max_deviation > 0.3),
        other => panic!("expected a consistency error, got {other:?}"),
    }
}

#[test]
fn malformed_tables_are_rejected() {
    let path = std::env::temp_dir().join(format!("fw-fields-{}-cols.csv", std::process::id()));
    std::fs::write(&path, "x,Phi,Ax\n0,0,0\n1,0,0\n").unwrap();
    assert!(matches!(SampledField::from_csv(&path, None), Err(FwError::InvalidParameter(_))));
    std::fs::write(&path, "x,Phi,Ax,Ay,Az\n0,0,0,0,0\n1,zz,0,0,0\n2,0,0,0,0\n").unwrap();
    assert!(matches!(SampledField::from_csv(&path, None), Err(FwError::InvalidParameter(_))));
    std::fs::remove_file(&path).ok();
    assert!(matches!(SampledField::from_csv(&path, None), Err(FwError::Io(_))));
}
