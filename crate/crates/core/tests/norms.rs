use std::sync::Arc;

use fracorlicz::geometry::{dist, make_domain, Grid};
use fracorlicz::norms::{
    average, inf_centered_norm, luxemburg_root, luxemburg_seminorm, median, orlicz_norm, seminorm_modular, truncate,
    SampledFunction,
};
use fracorlicz::young::{power, power_log};
use proptest::prelude::*;

fn grid(shape: &str, res: usize) -> Arc<Grid> {
    let d = Arc::new(make_domain(shape, &Default::default()).unwrap());
    Arc::new(Grid::over_domain(d, res).unwrap())
}

/// Direct pair sum `2 sum_{i<j} h^{2n} |u_i - u_j|^p / |x_i - x_j|^{n+beta}`.
fn brute_power(u: &SampledFunction, p: f64, beta: f64) -> f64 {
    let g = u.grid();
    let n = g.dim() as f64;
    let hn = g.cell_measure();
    let xs: Vec<_> = u.cells().iter().map(|&c| g.center(c as usize)).collect();
    let v = u.values();
    let mut s = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            s += 2.0 * hn * hn * (v[i] - v[j]).abs().powf(p) / dist(xs[i], xs[j]).powf(n + beta);
        }
    }
    s.powf(1.0 / p)
}

#[test]
fn power_seminorm_matches_direct_sum() {
    let g = grid("disk", 20);
    let u = SampledFunction::on_inside(g, "xy", |x| x[0] * x[1] + x[0]);
    for (p, beta) in [(2.0, 1.0), (3.0, 0.5)] {
        let a = luxemburg_seminorm(&u, &power(p), beta).unwrap();
        let b = brute_power(&u, p, beta);
        assert!((a / b - 1.0).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn root_path_agrees_with_closed_form() {
    let g = grid("square", 24);
    let u = SampledFunction::on_inside(g, "wave", |x| (3.0 * x[0]).sin() + x[1] * x[1]);
    let phi = power(2.0);
    let closed = luxemburg_seminorm(&u, &phi, 1.0).unwrap();
    let root = luxemburg_root(|l| seminorm_modular(&u, &phi, 1.0, l), 1.0).unwrap();
    assert!((root / closed - 1.0).abs() < 1e-9);
    assert!((seminorm_modular(&u, &phi, 1.0, closed) - 1.0).abs() < 1e-9);
}

#[test]
fn general_seminorm_hits_unit_modular() {
    let g = grid("disk", 16);
    let u = SampledFunction::on_inside(g, "x", |x| x[0]);
    let phi = power_log(2.0, 1.0);
    let l = luxemburg_seminorm(&u, &phi, 1.0).unwrap();
    assert!((seminorm_modular(&u, &phi, 1.0, l) - 1.0).abs() < 1e-8);
}

#[test]
fn constants_have_zero_seminorm() {
    let g = grid("disk", 16);
    let u = SampledFunction::on_inside(g, "c", |_| 4.0);
    assert_eq!(luxemburg_seminorm(&u, &power_log(2.0, 1.0), 1.0).unwrap(), 0.0);
}

#[test]
fn orlicz_norm_of_indicator() {
    // ||1_E||_{L^phi} = 1 / phi^{-1}(1/|E|); for t^2 that is sqrt(|E|)
    let g = grid("square", 32);
    let u = SampledFunction::on_inside(g.clone(), "one", |_| 1.0);
    let area = g.inside_cells().len() as f64 * g.cell_measure();
    let n = orlicz_norm(&u, &power(2.0)).unwrap();
    assert!((n - area.sqrt()).abs() < 1e-9);
}

#[test]
fn centered_norm_of_odd_function_centers_at_zero() {
    let g = grid("disk", 24);
    let u = SampledFunction::on_inside(g, "x", |x| x[0]);
    let (c, _) = inf_centered_norm(&u, &power(2.0)).unwrap();
    assert!(c.abs() < 1e-4, "{c}");
}

#[test]
fn average_median_truncate() {
    let g = grid("interval", 10);
    let u = SampledFunction::on_inside(g, "x", |x| x[0]);
    assert!((average(&u, |_| true).unwrap() - 0.5).abs() < 1e-12);
    let m = median(&u, |_| true).unwrap();
    assert!((m - 0.45).abs() < 1e-12, "{m}");
    let t = truncate(&u.map("s", |v| v - 0.5), 0.2).unwrap();
    assert!(t.max() <= 0.2 && t.min() >= -0.2);
    assert!(average(&u, |x| x[0] > 2.0).is_err());
}

#[test]
fn csv_roundtrip() {
    let g = grid("disk", 12);
    let u = SampledFunction::on_inside(g.clone(), "u", |x| x[0] - 2.0 * x[1]);
    let mut buf = Vec::new();
    u.write_csv(&mut buf).unwrap();
    let back = SampledFunction::read_csv(g, buf.as_slice(), "u").unwrap();
    assert_eq!(back.values(), u.values());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seminorm_is_homogeneous(c in -5.0f64..5.0, a in -2.0f64..2.0) {
        let g = grid("disk", 12);
        let u = SampledFunction::on_inside(g, "u", |x| (a * x[0]).sin() + x[1]);
        let phi = power_log(2.0, 1.0);
        let base = luxemburg_seminorm(&u, &phi, 1.0).unwrap();
        let scaled = luxemburg_seminorm(&u.map("cu", |v| c * v), &phi, 1.0).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-8 * (1.0 + base));
    }

    #[test]
    fn seminorm_ignores_constants(c in -5.0f64..5.0) {
        let g = grid("disk", 12);
        let u = SampledFunction::on_inside(g, "u", |x| x[0] * x[0] - x[1]);
        let phi = power_log(2.0, 1.0);
        let a = luxemburg_seminorm(&u, &phi, 1.0).unwrap();
        let b = luxemburg_seminorm(&u.map("u+c", |v| v + c), &phi, 1.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn seminorm_triangle(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = grid("disk", 12);
        let u = SampledFunction::on_inside(g.clone(), "u", move |x| (a * x[0]).cos());
        let v = SampledFunction::on_inside(g, "v", move |x| b * x[0] * x[1]);
        let phi = power_log(2.0, 1.0);
        let sum = luxemburg_seminorm(&u.combine(1.0, &v, 1.0).unwrap(), &phi, 0.5).unwrap();
        let parts = luxemburg_seminorm(&u, &phi, 0.5).unwrap() + luxemburg_seminorm(&v, &phi, 0.5).unwrap();
        prop_assert!(sum <= parts * (1.0 + 1e-9));
    }
}
