mod common;

use common::fixture;
use hypan_core::cauchy::LossVerdict;
use hypan_core::{integrate_mode, sobolev_loss, solve_cauchy, CauchyData, IntegratorOptions};
use num_complex::Complex64;
use std::f64::consts::TAU;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_err(u: &[Complex64], x: &[f64], f: impl Fn(f64) -> Complex64) -> f64 {
    u.iter().zip(x).map(|(z, &x)| (z - f(x)).norm()).fold(0.0, f64::max)
}

/// Direct DFT coefficient `(1/N) Σ g(x_k) e^{-iκx_k}` on `[0, 2π)`.
fn dft(g: &[Complex64], kappa: i64) -> Complex64 {
    let n = g.len();
    g.iter()
        .enumerate()
        .map(|(k, z)| z * Complex64::from_polar(1.0, -(kappa as f64) * TAU * k as f64 / n as f64))
        .sum::<Complex64>()
        / n as f64
}

#[test]
fn dalembert() {
    // u = sin x cos t + cos x sin t = sin(x + t), so D_t u(0) = -i cos x.
    let data = CauchyData::from_functions(2, 256, 0.0, |j, x| if j == 0 { c(x.sin(), 0.0) } else { c(0.0, -x.cos()) })
        .unwrap();
    let sol = solve_cauchy(&fixture("wave"), &data, &[0.5, 1.0], &IntegratorOptions::default()).unwrap();
    for (i, &t) in [0.5, 1.0].iter().enumerate() {
        assert!(max_err(&sol.u[i], &sol.x, |x| c((x + t).sin(), 0.0)) < 1e-7);
        assert!(max_err(&sol.dtu[i][1], &sol.x, |x| c(0.0, -(x + t).cos())) < 1e-7);
        assert!(sol.imag_ratio[i] < 1e-8);
    }
    assert!(!sol.nyquist_dropped);
    assert_eq!(sol.modes_integrated, 2);
}

#[test]
fn transport_shifts_data() {
    // D_t u = D_x u, i.e. u_t = u_x, so u(t, x) = g(x + t).
    let g = |x: f64| c(x.sin().exp(), 0.0);
    let data = CauchyData::from_functions(1, 64, 0.0, |_, x| g(x)).unwrap();
    let sol = solve_cauchy(&fixture("transport"), &data, &[0.7], &IntegratorOptions::default()).unwrap();
    assert!(max_err(&sol.u[0], &sol.x, |x| g(x + 0.7)) < 1e-9);
}

fn real_data(n: usize) -> CauchyData {
    // Real u(0) and real u_t(0), hence imaginary D_t u(0).
    CauchyData::from_functions(2, n, 0.0, |j, x| {
        let s: f64 = (1..12).map(|k| ((k as f64 * x) + 0.3 * k as f64).cos() / (k * k) as f64).sum();
        if j == 0 {
            c(s, 0.0)
        } else {
            c(0.0, -(2.0 * x).sin())
        }
    })
    .unwrap()
}

#[test]
fn real_operators_keep_real_solutions() {
    for name in ["wave", "t2", "t2_levi_ok", "t2_levi_fail", "piecewise_lower"] {
        let sol = solve_cauchy(&fixture(name), &real_data(64), &[0.25, 1.0], &IntegratorOptions::default()).unwrap();
        for r in &sol.imag_ratio {
            assert!(*r < 1e-8, "{name}: {r}");
        }
    }
    // A complex first order coefficient breaks reality.
    let sol = solve_cauchy(&fixture("complex_lower"), &real_data(64), &[1.0], &IntegratorOptions::default()).unwrap();
    assert!(sol.imag_ratio[0] > 1e-3);
}

#[test]
fn agrees_with_single_modes() {
    let spec = fixture("t2_levi_ok");
    let kappa = 3;
    let data = CauchyData::from_functions(2, 32, 0.0, |j, x| {
        let e = Complex64::from_polar(1.0, kappa as f64 * x);
        if j == 0 {
            e
        } else {
            e * c(0.5, 0.25)
        }
    })
    .unwrap();
    let opts = IntegratorOptions::default();
    let sol = solve_cauchy(&spec, &data, &[1.0], &opts).unwrap();
    let xi = kappa as f64;
    let br = (1.0 + xi * xi).sqrt();
    let tr = integrate_mode(&spec, &[xi], &[c(br, 0.0), c(0.5, 0.25)], (0.0, 1.0), &opts).unwrap();
    let v = tr.final_v();
    let err0 = max_err(&sol.u[0], &sol.x, |x| v[0] / br * Complex64::from_polar(1.0, xi * x));
    let err1 = max_err(&sol.dtu[0][1], &sol.x, |x| v[1] * Complex64::from_polar(1.0, xi * x));
    assert!(err0 < 1e-10 && err1 < 1e-10, "{err0} {err1}");
}

#[test]
fn grid_doubling_is_stable() {
    let spec = fixture("t2_levi_ok");
    let opts = IntegratorOptions::default();
    let a = solve_cauchy(&spec, &real_data(64), &[1.0], &opts).unwrap();
    let b = solve_cauchy(&spec, &real_data(128), &[1.0], &opts).unwrap();
    let diff = (0..64).map(|k| (a.u[0][k] - b.u[0][2 * k]).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn self_convergence_on_levi_compliant_fixture() {
    let spec = fixture("t2_levi_ok");
    let data = CauchyData::random_spectral(2, 64, 0.0, 11, 2.0, 8).unwrap();
    let run = |h: f64| {
        let o = IntegratorOptions {
            fixed_step: Some(h),
            min_output: 1,
            ..Default::default()
        };
        solve_cauchy(&spec, &data, &[1.0], &o).unwrap().u.remove(0)
    };
    let u: Vec<Vec<Complex64>> = [0.02, 0.01, 0.005].iter().map(|&h| run(h)).collect();
    let d = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let order = (d(&u[0], &u[1]) / d(&u[1], &u[2])).log2();
    assert!(order >= 3.7, "{order}");
}

#[test]
fn rough_data() {
    // Negative Sobolev index: coefficients grow like <κ>.
    let spec = fixture("wave");
    let data = CauchyData::random_spectral(2, 64, 0.0, 5, -1.0, 20).unwrap();
    let g0: Vec<Complex64> = data.g[0].clone();
    let g1: Vec<Complex64> = data.g[1].clone();
    let t = 0.8;
    let sol = solve_cauchy(&spec, &data, &[t], &IntegratorOptions::default()).unwrap();
    assert_eq!(sol.modes_integrated, 41);
    // û(t) = ĝ_0 cos(κt) + i ĝ_1 sin(κt)/κ.
    let x = &sol.x;
    let exact = |xv: f64| {
        (-20i64..=20)
            .map(|k| {
                let (a, b) = (dft(&g0, k), dft(&g1, k));
                let kf = k as f64;
                let s = if k == 0 { t } else { (kf * t).sin() / kf };
                (a * (kf * t).cos() + c(0.0, 1.0) * b * s) * Complex64::from_polar(1.0, kf * xv)
            })
            .sum::<Complex64>()
    };
    let scale = sol.u[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(max_err(&sol.u[0], x, exact) < 1e-8 * scale);
}

#[test]
fn nyquist_content_is_dropped() {
    let data = CauchyData::from_functions(2, 16, 0.0, |j, x| if j == 0 { c((8.0 * x).cos() + x.cos(), 0.0) } else { c(0.0, 0.0) })
        .unwrap();
    let sol = solve_cauchy(&fixture("wave"), &data, &[0.5], &IntegratorOptions::default()).unwrap();
    assert!(sol.nyquist_dropped);
    assert!(!sol.warnings.is_empty());
    assert!(max_err(&sol.u[0], &sol.x, |x| c(x.cos() * 0.5f64.cos(), 0.0)) < 1e-8);
}

#[test]
fn derivative_loss() {
    let opts = IntegratorOptions::default();
    let data = CauchyData::random_spectral(2, 512, 0.0, 3, 0.0, 255).unwrap();
    let w = sobolev_loss(&fixture("wave"), &data, 1.0, &opts).unwrap();
    assert_eq!(w.verdict, LossVerdict::Finite);
    assert!(w.loss < 0.05, "{}", w.loss);
    let l = sobolev_loss(&fixture("t2_levi_ok"), &data, 1.0, &opts).unwrap();
    assert_eq!(l.verdict, LossVerdict::Finite);
    assert!((l.loss - 0.5).abs() < 0.05, "{}", l.loss);
    let f = sobolev_loss(&fixture("t6_levi_fail"), &data, 1.0, &opts).unwrap();
    assert_eq!(f.verdict, LossVerdict::Unbounded);
    assert!(f.loss.is_infinite());
    // Too few bins.
    let small = CauchyData::random_spectral(2, 64, 0.0, 3, 0.0, 31).unwrap();
    assert_eq!(sobolev_loss(&fixture("wave"), &small, 1.0, &opts).unwrap().verdict, LossVerdict::Inconclusive);
}

#[test]
fn json_data() {
    let g: Vec<String> = (0..16).map(|k| if k % 2 == 0 { format!("{k}") } else { format!("[{k}, -1]") }).collect();
    let s = format!(r#"{{"t0": 0, "g": [[{}], [{}]]}}"#, g.join(","), vec!["0"; 16].join(","));
    let d = CauchyData::from_json_str(&s).unwrap();
    assert_eq!(d.period, TAU);
    assert_eq!(d.x0, 0.0);
    assert_eq!(d.g[0][3], c(3.0, -1.0));
    assert_eq!(d.g[0][4], c(4.0, 0.0));
    assert!(CauchyData::from_json_str(&s.replace("\"t0\"", "\"t_0\"")).is_err());
    let short = format!(r#"{{"t0": 0, "g": [[{}]]}}"#, vec!["0"; 12].join(","));
    assert!(CauchyData::from_json_str(&short).is_err());
}

#[test]
fn rejects_mismatches() {
    let opts = IntegratorOptions::default();
    let d1 = CauchyData::from_functions(1, 16, 0.0, |_, x| c(x.sin(), 0.0)).unwrap();
    assert!(solve_cauchy(&fixture("wave"), &d1, &[0.5], &opts).is_err());
    let d2 = real_data(16);
    assert!(solve_cauchy(&fixture("wave"), &d2, &[1.5], &opts).is_err());
    assert!(solve_cauchy(&fixture("wave"), &d2, &[], &opts).is_err());
    assert!(solve_cauchy(&fixture("wave_2d_split"), &d2, &[0.5], &opts).is_err());
    let late = CauchyData { t0: 0.5, ..d2 };
    assert!(solve_cauchy(&fixture("wave"), &late, &[0.25], &opts).is_err());
    let sol = solve_cauchy(&fixture("wave"), &late, &[0.5, 0.75], &opts).unwrap();
    assert!(!sol.warnings.is_empty());
}
