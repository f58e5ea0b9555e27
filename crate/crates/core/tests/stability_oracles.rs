use std::f64::consts::PI;

use convspline::stability::{
    locate_transition, pn_max_at, pn_scan, rational_q, root_condition_check, step_m1_pn_reference,
    step_modified_growth_check, Classification, OscillatoryFamily, RationalZ, RootConditionOptions, SCAN_STEPS,
    UNBOUNDED_THRESHOLD,
};
use convspline::vie::stability_coeffs;
use convspline::weights::weights_quadrature;
use convspline::{CqMethod, Kernel, TemporalBasis, TimeGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn iso(m: usize) -> TemporalBasis {
    TemporalBasis::bspline(m).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn constant_kernel_is_stable_for_every_basis() {
    let grid = TimeGrid::new(0.05, 10).unwrap();
    let mut bases: Vec<_> = (0..=3).map(iso).collect();
    bases.push(TemporalBasis::ModifiedCubic);
    bases.extend(CqMethod::ALL.map(TemporalBasis::Cq));
    for basis in bases {
        let q = rational_q(basis, &Kernel::Constant, grid).unwrap();
        let v = root_condition_check(&q, grid.dt(), RootConditionOptions::default()).unwrap();
        assert_eq!(v.classification, Classification::Stable, "{basis}");
    }
}

#[test]
fn constant_kernel_iso_roots_are_roots_of_unity() {
    let grid = TimeGrid::new(0.1, 10).unwrap();
    for m in 1..=3 {
        let q = rational_q(iso(m), &Kernel::Constant, grid).unwrap();
        let v = root_condition_check(&q, grid.dt(), RootConditionOptions::default()).unwrap();
        assert_eq!(v.roots.len(), m);
        for z in &v.roots {
            assert_eq!(z.multiplicity, 1);
            assert!((z.modulus - 1.0).abs() < 1e-12);
            // z^{m+1} = 1 and z != 1.
            assert!((z.center.powu(m as u32 + 1) - 1.0).norm() < 1e-12);
            assert!((z.center - 1.0).norm() > 0.5);
        }
    }
    // Primitive cube roots for m = 2.
    let q = rational_q(iso(2), &Kernel::Constant, grid).unwrap();
    let v = root_condition_check(&q, 0.1, RootConditionOptions::default()).unwrap();
    for target in [Complex64::from_polar(1.0, 2.0 * PI / 3.0), Complex64::from_polar(1.0, -2.0 * PI / 3.0)] {
        assert!(v.roots.iter().any(|z| (z.center - target).norm() < 1e-12));
    }
}

#[test]
fn constant_kernel_rational_matches_weights() {
    // Q(ξ) = Σ q_j ξ^j inside the unit disc.
    let grid = TimeGrid::new(0.07, 400).unwrap();
    for basis in [iso(0), iso(1), iso(2), iso(3), TemporalBasis::ModifiedCubic] {
        let q = rational_q(basis, &Kernel::Constant, grid).unwrap();
        let w = weights_quadrature(&Kernel::Constant, basis, grid).unwrap();
        for xi in [Complex64::new(0.3, 0.2), Complex64::new(-0.5, 0.1), Complex64::new(0.0, -0.6)] {
            let series: Complex64 = w.q.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * xi + c);
            assert!((q.eval(xi) - series).norm() < 1e-13, "{basis}");
        }
    }
}

#[test]
fn step_m0_coefficients() {
    let h = 0.1;
    let grid = TimeGrid::new(h, 10).unwrap();
    let q = rational_q(iso(0), &Kernel::step(2.0 * h).unwrap(), grid).unwrap();
    assert_eq!(q.numerator.len(), 2);
    assert!(q.numerator.iter().all(|c| (c - h).abs() < 1e-15));
    assert_eq!(q.denominator, [1.0]);

    let q = rational_q(iso(0), &Kernel::step(3.5 * h).unwrap(), grid).unwrap();
    let expect = [h, h, h, 0.5 * h];
    assert_eq!(q.numerator.len(), 4);
    for (c, e) in q.numerator.iter().zip(expect) {
        assert!((c - e).abs() < 1e-15);
    }
}

#[test]
fn step_m0_r0_roots_are_stable_roots_of_unity() {
    let h = 0.05;
    for m in [2usize, 5, 8] {
        let q = rational_q(iso(0), &Kernel::step(m as f64 * h).unwrap(), TimeGrid::new(h, 10).unwrap()).unwrap();
        let v = root_condition_check(&q, h, RootConditionOptions::default()).unwrap();
        assert_eq!(v.classification, Classification::Stable);
        assert_eq!(v.roots.len(), m - 1);
        for j in 1..m {
            let target = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
            assert!(v.roots.iter().any(|z| (z.center - target).norm() < 1e-10 && z.multiplicity == 1));
        }
    }
}

fn q0_formula(big_m: usize, r: f64, h: f64, xi: Complex64) -> Complex64 {
    h * (r * xi.powu(big_m as u32 + 1) + (1.0 - r) * xi.powu(big_m as u32) - 1.0) / (xi - 1.0)
}

fn q1_formula(big_m: usize, r: f64, h: f64, xi: Complex64) -> Complex64 {
    let b = 1.0 - r + r * xi;
    let g = xi + b * b;
    0.5 * h * (1.0 + xi - xi.powu(big_m as u32) * g) / (1.0 - xi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn step_rational_matches_closed_forms(
        big_m in 3usize..30,
        r in 0.0f64..0.999,
        re in -1.3f64..1.3,
        im in -1.3f64..1.3,
    ) {
        let xi = Complex64::new(re, im);
        prop_assume!((xi - 1.0).norm() > 1e-2);
        let h = 0.02;
        let k = Kernel::step((big_m as f64 + r) * h).unwrap();
        let grid = TimeGrid::new(h, 5).unwrap();
        let scale = h * (1.0 + xi.norm()).powi(big_m as i32 + 2);
        let q0 = rational_q(iso(0), &k, grid).unwrap();
        prop_assert!((q0.eval(xi) - q0_formula(big_m, r, h, xi)).norm() <= 1e-12 * scale);
        let q1 = rational_q(iso(1), &k, grid).unwrap();
        prop_assert!((q1.eval(xi) - q1_formula(big_m, r, h, xi)).norm() <= 1e-12 * scale);
    }
}

#[test]
fn step_m1_matches_closed_form_pn() {
    for (big_m, r) in [(20usize, 0.5), (20, 0.25), (13, 0.8), (40, 0.1), (20, 0.0)] {
        let h = 0.05;
        let k = Kernel::step((big_m as f64 + r) * h).unwrap();
        let w = weights_quadrature(&k, iso(1), TimeGrid::new(h, 2 * big_m).unwrap()).unwrap();
        let p = stability_coeffs(&w, 2 * big_m).unwrap().p;
        for n in big_m + 2..=2 * big_m - 1 {
            let exact = step_m1_pn_reference(big_m, r, n).unwrap();
            assert!((p[n] - exact).abs() <= 1e-9, "M={big_m} r={r} n={n}: {} vs {exact}", p[n]);
        }
    }
}

#[test]
fn step_m1_reference_examples() {
    for n in 22..=39 {
        let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
        assert_eq!(step_m1_pn_reference(20, 0.0, n).unwrap(), 2.0 * sign(n) + 2.0 * sign(n + 20));
    }
    assert_eq!(step_m1_pn_reference(20, 0.5, 25).unwrap(), 7.0);
    let a = step_m1_pn_reference(20, 0.5, 22).unwrap();
    let b = step_m1_pn_reference(20, 0.5, 23).unwrap();
    // Alternating parts cancel in |a + b|, leaving the linear-in-n slope 8r(1-r).
    assert_eq!((a + b).abs(), 2.0);
    assert!(step_m1_pn_reference(20, 0.5, 21).is_err());
    assert!(step_m1_pn_reference(20, 0.5, 40).is_err());
}

#[test]
fn step_m1_growth_when_dt_halves() {
    let l = 1.0;
    let horizon = 3.0;
    let run = |dt: f64| {
        let n = (horizon / dt).round() as usize;
        let w = weights_quadrature(&Kernel::step(l).unwrap(), iso(1), TimeGrid::new(dt, n).unwrap()).unwrap();
        stability_coeffs(&w, n).unwrap().max_abs()
    };
    let coarse = run(1.0 / 10.25);
    let fine = run(1.0 / 20.5);
    assert!(fine >= 1.8 * coarse, "{coarse} -> {fine}");
}

#[test]
fn modified_cubic_step_growth() {
    let reports: Vec<_> =
        [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0].iter().map(|&dt| step_modified_growth_check(1.0, 10.0, dt).unwrap()).collect();
    for r in &reports {
        assert!((r.p[0] - 1.0).abs() < 1e-15);
        assert!((r.p[1] + 4.0 / 3.0).abs() < 1e-14);
        assert!(r.growth_factor <= 1.6, "{}", r.growth_factor);
        assert!(r.max_abs_pn.is_finite());
    }
    let lo = reports.iter().map(|r| r.max_abs_pn).fold(f64::INFINITY, f64::min);
    let hi = reports.iter().map(|r| r.max_abs_pn).fold(0.0, f64::max);
    assert!(hi / lo < 1.1, "{lo} .. {hi}");
    assert!(step_modified_growth_check(1.0, 10.0, 0.25).is_err());
}

#[test]
fn explicit_root_examples() {
    let inside = RationalZ::new(vec![1.0, -2.0], vec![1.0]).unwrap();
    let v = root_condition_check(&inside, 0.01, RootConditionOptions::default()).unwrap();
    assert_eq!(v.classification, Classification::Unstable);
    assert!(v.witness.is_some());

    let double = RationalZ::new(vec![1.0, -2.0, 1.0], vec![1.0]).unwrap();
    let v = root_condition_check(&double, 0.01, RootConditionOptions::default()).unwrap();
    assert_eq!(v.classification, Classification::Unstable);
    assert_eq!(v.roots[0].multiplicity, 2);
}

#[test]
fn j0_scans() {
    let f = OscillatoryFamily::BesselJ0;
    for p in pn_scan(iso(0), f, &linspace(0.0, PI, 25), SCAN_STEPS, 1.0).unwrap() {
        assert!(p.max_abs_pn <= 1.0 + 1e-6, "{p:?}");
    }
    for p in pn_scan(iso(1), f, &linspace(0.0, 0.7 * PI, 25), SCAN_STEPS, 1.0).unwrap() {
        assert!(p.max_abs_pn <= 2.0 + 1e-6, "{p:?}");
    }
    assert!(pn_max_at(iso(2), f, 2.4, SCAN_STEPS, 1.0).unwrap() <= 10.0);
    assert!(pn_max_at(iso(2), f, 2.8, SCAN_STEPS, 1.0).unwrap() > UNBOUNDED_THRESHOLD);
    for p in pn_scan(TemporalBasis::ModifiedCubic, f, &linspace(0.0, 20.0 * PI, 41), SCAN_STEPS, 1.0).unwrap() {
        assert!(p.max_abs_pn <= 4.0 / 3.0 + 1e-6, "{p:?}");
    }
}

#[test]
fn cosine_scans() {
    let f = OscillatoryFamily::Cosine;
    for p in pn_scan(iso(1), f, &linspace(0.0, 1.95 * PI, 25), SCAN_STEPS, 1.0).unwrap() {
        assert!(p.max_abs_pn <= UNBOUNDED_THRESHOLD, "{p:?}");
    }
    let theta = locate_transition(iso(2), f, 1.5, 2.5, SCAN_STEPS, 1e-3).unwrap();
    assert!((theta - 1.9747).abs() <= 0.05, "{theta}");
    for p in pn_scan(TemporalBasis::ModifiedCubic, f, &linspace(0.0, 20.0 * PI, 41), SCAN_STEPS, 1.0).unwrap() {
        assert!(p.max_abs_pn <= 1.82 + 0.01, "{p:?}");
    }
}

#[test]
fn scans_are_independent_of_dt_and_threads() {
    let grid = linspace(0.1, 3.0, 12);
    let run = |threads: usize, dt: f64| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| pn_scan(iso(2), OscillatoryFamily::BesselJ0, &grid, 400, dt).unwrap())
    };
    let a = run(1, 1.0);
    let b = run(3, 1.0);
    assert_eq!(a, b);
    let c = run(2, 0.01);
    for (x, y) in a.iter().zip(&c) {
        let s = x.max_abs_pn.max(1.0);
        assert!((x.max_abs_pn - y.max_abs_pn).abs() <= 1e-8 * s);
    }
}
