mod common;

use common::{fixture, rel_err};
use hypan_core::modesolver::{energy_rate_matrix, qb_commutator_bound, quadratic_form};
use hypan_core::{
    build_frame, build_symmetriser, growth_scan, integrate_mode, linalg, traced_mode, GrowthVerdict, IntegratorOptions,
    V0Policy,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(i t M) V0` for `M = <ξ>[[0, 1], [s², 0]]`, `s = ξ/<ξ>`.
fn wave_exact(xi: f64, t: f64, v0: &[Complex64]) -> Vec<Complex64> {
    let br = (1.0 + xi * xi).sqrt();
    let s2 = xi * xi / (br * br);
    let mv = [br * v0[1], br * s2 * v0[0]];
    let (cs, sn) = ((xi * t).cos(), (xi * t).sin());
    (0..2).map(|k| v0[k] * cs + c(0.0, sn / xi) * mv[k]).collect()
}

/// The local tolerance is 1e-10 per step and about 10⁴ steps are taken at
/// `<ξ> = 1024`, so the global error is allowed 1e-7.
#[test]
fn wave_matches_closed_form() {
    let v0 = [c(0.3, -0.2), c(1.0, 0.5)];
    for xi in [1.0, 17.0, 300.0, 1023.0] {
        let tr = integrate_mode(&fixture("wave"), &[xi], &v0, (0.0, 1.0), &IntegratorOptions::default()).unwrap();
        for (k, &t) in tr.t_nodes.iter().enumerate().step_by(64) {
            let ex = wave_exact(xi, t, &v0);
            assert!(dist(&tr.v[k], &ex) < 1e-7 * norm(&ex), "xi {xi}, t {t}: {}", dist(&tr.v[k], &ex) / norm(&ex));
        }
    }
}

#[test]
fn wave_energy_is_conserved() {
    let spec = fixture("wave");
    let v0 = [c(1.0, 0.0), c(0.0, 1.0)];
    for xi in [1.0, 32.0, 1023.0] {
        let (tr, _) = traced_mode(&spec, &[xi], &v0, 0.3, &IntegratorOptions::default()).unwrap();
        let e0 = tr.e_hyp[0].unwrap();
        for e in &tr.e_hyp {
            assert!(rel_err(e.unwrap(), e0) < 1e-7, "xi {xi}: {}", rel_err(e.unwrap(), e0));
        }
    }
}

#[test]
fn step_cap_does_not_change_the_answer() {
    let spec = fixture("t2");
    let xi = (256.0f64 * 256.0 - 1.0).sqrt();
    let v0 = [c(1.0, 0.0), c(0.5, 0.5)];
    let opts = IntegratorOptions::default();
    let a = integrate_mode(&spec, &[xi], &v0, (0.0, 1.0), &opts).unwrap();
    let half = IntegratorOptions {
        h_max: opts.h_max / 2.0,
        ..opts
    };
    let b = integrate_mode(&spec, &[xi], &v0, (0.0, 1.0), &half).unwrap();
    assert!(dist(a.final_v(), b.final_v()) < 1e-8 * norm(a.final_v()));
}

#[test]
fn fixed_step_order_four() {
    let spec = fixture("t2_levi_ok");
    let v0 = [c(1.0, 0.0), c(0.0, 1.0)];
    let run = |h: f64| {
        let o = IntegratorOptions {
            fixed_step: Some(h),
            min_output: 1,
            ..Default::default()
        };
        integrate_mode(&spec, &[8.0], &v0, (0.0, 1.0), &o).unwrap().final_v().to_vec()
    };
    let (a, b, cc) = (run(0.02), run(0.01), run(0.005));
    let order = (dist(&a, &b) / dist(&b, &cc)).log2();
    assert!((order - 4.0).abs() < 0.2, "{order}");
}

#[test]
fn gronwall_envelopes_dominate() {
    let v0 = [c(1.0, 0.0), c(1.0, 0.0)];
    for name in ["wave", "t2", "t2_levi_ok", "t2_shifted", "piecewise_lower", "complex_lower"] {
        let spec = fixture(name);
        for xi in [16.0, 128.0, 1024.0] {
            let (tr, part) = traced_mode(&spec, &[xi], &v0, 0.1, &IntegratorOptions::default()).unwrap();
            let worst = tr.bound_slack.iter().map(|s| s.unwrap()).fold(0.0, f64::max);
            assert!(worst <= 1.0 + 1e-6, "{name} at {xi}: {worst}");
            for &(lo, hi) in &part.excluded {
                for b in [lo, hi] {
                    if b > spec.t0 && b < spec.work.1 {
                        assert!(tr.t_nodes.iter().any(|&t| (t - b).abs() < 1e-14), "{name}: boundary {b}");
                    }
                }
            }
        }
    }
}

#[test]
fn energy_rate_matches_difference_quotient() {
    let spec = fixture("complex_lower");
    let xi = 20.0;
    let opts = IntegratorOptions {
        min_output: 4000,
        ..Default::default()
    };
    let tr = integrate_mode(&spec, &[xi], &[c(1.0, -0.5), c(0.2, 0.7)], (0.0, 1.0), &opts).unwrap();
    let energy = |k: usize| {
        let f = build_frame(&spec, tr.t_nodes[k], &[xi]).unwrap();
        quadratic_form(&build_symmetriser(&f).q, &tr.v[k])
    };
    for k in [500, 1700, 3100] {
        let t = tr.t_nodes[k];
        let h = tr.t_nodes[k + 1] - t;
        let fd = (energy(k + 1) - energy(k - 1)) / (2.0 * h);
        let f = build_frame(&spec, t, &[xi]).unwrap();
        let s = build_symmetriser(&f);
        let hm = energy_rate_matrix(&f, &s.q, &s.dq);
        let v = &tr.v[k];
        let mut rate = c(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                rate += v[i].conj() * hm[(i, j)] * v[j];
            }
        }
        assert!(rate.im.abs() < 1e-12 * rate.norm().max(1.0));
        assert!((fd - rate.re).abs() < 1e-4 * (1.0 + rate.re.abs()), "t {t}: {fd} vs {}", rate.re);
    }
}

#[test]
fn quadratic_energy_is_sandwiched() {
    // λ_min(Q) ≥ det Q / λ_max^{m-1} and λ_max(Q) ≤ ‖Q‖.
    let spec = fixture("t2_levi_ok");
    let (tr, _) = traced_mode(&spec, &[50.0], &[c(0.0, 1.0), c(1.0, 0.0)], 0.2, &IntegratorOptions::default()).unwrap();
    for (k, &t) in tr.t_nodes.iter().enumerate() {
        let Some(e) = tr.e_hyp[k] else { continue };
        let s = build_symmetriser(&build_frame(&spec, t, &[50.0]).unwrap());
        let top = linalg::spectral_norm(&s.q);
        let low = s.delta / top;
        assert!(e <= top * tr.e_kov[k] * (1.0 + 1e-12));
        assert!(e >= low * tr.e_kov[k] * (1.0 - 1e-12));
    }
}

#[test]
fn commutator_without_lower_terms_vanishes() {
    let spec = fixture("t2");
    let f = build_frame(&spec, 0.4, &[9.0]).unwrap();
    let b = qb_commutator_bound(&f, &build_symmetriser(&f));
    assert_eq!(b.direct, 0.0);
    assert_eq!(b.entrywise, 0.0);
}

#[test]
fn commutator_with_real_b_is_skew() {
    use hypan_core::{ComplexPoly, TimeCoefficient};
    let spec = fixture("t2")
        .with_lower(vec![1], 2, TimeCoefficient::Polynomial(ComplexPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.5, 0.0)])))
        .unwrap()
        .with_lower(vec![0], 1, TimeCoefficient::Polynomial(ComplexPoly::new(vec![c(-0.3, 0.0)])))
        .unwrap();
    let f = build_frame(&spec, 0.6, &[5.0]).unwrap();
    let s = build_symmetriser(&f);
    let q = s.q.map(|x| c(x, 0.0));
    let bm = f.b_matrix();
    let k = &q * &bm - bm.transpose() * &q;
    assert!((&k + k.transpose()).norm() < 1e-14);
    assert!(k.iter().all(|z| z.im == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commutator_two_ways(
        t in 0.0..1.0f64,
        xi in 1.0..500.0f64,
        b1 in (-2.0..2.0f64, -2.0..2.0f64),
        b2 in (-2.0..2.0f64, -2.0..2.0f64),
    ) {
        use hypan_core::{ComplexPoly, TimeCoefficient};
        let spec = fixture("t2")
            .with_lower(vec![1], 2, TimeCoefficient::Polynomial(ComplexPoly::new(vec![c(0.0, 0.0), c(b1.0, b1.1)])))
            .unwrap()
            .with_lower(vec![0], 1, TimeCoefficient::Polynomial(ComplexPoly::new(vec![c(b2.0, b2.1)])))
            .unwrap();
        let f = build_frame(&spec, t, &[xi]).unwrap();
        let b = qb_commutator_bound(&f, &build_symmetriser(&f));
        prop_assert!(b.max_entry_diff <= 1e-12 * (1.0 + b.direct));
        prop_assert!((b.direct - b.entrywise).abs() <= 1e-12 * (1.0 + b.direct));
    }
}

#[test]
fn growth_verdicts() {
    let mags = hypan_core::modesolver::dyadic_magnitudes(16.0, 1024.0);
    let opts = IntegratorOptions::default();
    let dir = [1.0];
    let g = growth_scan(&fixture("wave"), &dir, &mags, V0Policy::Ones, &opts).unwrap();
    assert_eq!(g.verdict, GrowthVerdict::Polynomial);
    assert!(g.slope.abs() < 0.1);
    let g = growth_scan(&fixture("t2_levi_ok"), &dir, &mags, V0Policy::Random { seed: 7 }, &opts).unwrap();
    assert_eq!(g.verdict, GrowthVerdict::Polynomial);
    let g = growth_scan(&fixture("t6_levi_fail"), &dir, &mags, V0Policy::Ones, &opts).unwrap();
    assert_eq!(g.verdict, GrowthVerdict::Superpolynomial, "{:?}", g.slope_thirds);
    assert!(growth_scan(&fixture("wave"), &dir, &mags[..3], V0Policy::Ones, &opts).is_err());
}

#[test]
fn piecewise_lower_terms() {
    let spec = fixture("piecewise_lower");
    assert_eq!(spec.breakpoints(), vec![0.3, 0.5]);
    let tr = integrate_mode(&spec, &[64.0], &[c(1.0, 0.0), c(0.0, 0.0)], (0.0, 1.0), &IntegratorOptions::default()).unwrap();
    for b in [0.3, 0.5] {
        assert!(tr.t_nodes.iter().any(|&t| t == b));
    }
    assert!(!tr.overflow);
    let mags = hypan_core::modesolver::dyadic_magnitudes(16.0, 1024.0);
    let g = growth_scan(&spec, &[1.0], &mags, V0Policy::Ones, &IntegratorOptions::default()).unwrap();
    assert_eq!(g.regularity, "C^1 with W^{inf,2} in t");
    assert_eq!(g.verdict, GrowthVerdict::Polynomial);
}

#[test]
fn rejects_bad_inputs() {
    let spec = fixture("wave");
    let opts = IntegratorOptions::default();
    assert!(integrate_mode(&spec, &[1.0, 2.0], &[c(1.0, 0.0); 2], (0.0, 1.0), &opts).is_err());
    assert!(integrate_mode(&spec, &[1.0], &[c(1.0, 0.0)], (0.0, 1.0), &opts).is_err());
    let bad = IntegratorOptions {
        fixed_step: Some(0.0),
        ..Default::default()
    };
    assert!(integrate_mode(&spec, &[1.0], &[c(1.0, 0.0); 2], (0.0, 1.0), &bad).is_err());
}
