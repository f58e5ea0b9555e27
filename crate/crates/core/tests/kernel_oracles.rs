use convspline::kernels::bessel_j0;
use convspline::quadrature::adaptive_integrate;
use convspline::Kernel;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};

const FRAC_BITS: u32 = 480;

/// `x` as an exact fixed-point integer `x * 2^FRAC_BITS`.
fn to_fixed(x: f64) -> BigInt {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = if exp == 0 { (bits & 0xf_ffff_ffff_ffff) << 1 } else { (bits & 0xf_ffff_ffff_ffff) | (1 << 52) };
    let shift = exp - 1075 + FRAC_BITS as i64;
    let mut v = BigInt::from(mant);
    v = if shift >= 0 { v << shift as usize } else { v >> (-shift) as usize };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn from_fixed(v: &BigInt) -> f64 {
    let keep = 100u32;
    let shifted: BigInt = v >> (FRAC_BITS - keep) as usize;
    shifted.to_f64().unwrap() / 2f64.powi(keep as i32)
}

/// `J0(x) = Σ (-1)^k (x²/4)^k / (k!)²` in fixed point with 480 fractional bits.
fn j0_series_oracle(x: f64) -> f64 {
    let one = BigInt::from(1) << FRAC_BITS as usize;
    let xf = to_fixed(x);
    let y: BigInt = (&xf * &xf) >> (FRAC_BITS as usize + 2);
    let mut term = one.clone();
    let mut sum = one.clone();
    let tiny = BigInt::from(1) << 8usize;
    let mut k: u64 = 1;
    loop {
        term = -(&term * &y >> FRAC_BITS as usize) / BigInt::from(k * k);
        if term.abs() < tiny && k as f64 > x.abs() {
            break;
        }
        sum += &term;
        k += 1;
    }
    if sum.is_zero() {
        0.0
    } else {
        from_fixed(&sum)
    }
}

/// Hankel asymptotic expansion for large arguments.
fn j0_asymptotic_oracle(x: f64) -> f64 {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0f64;
    for k in 0..40 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= -odd * odd / (k as f64 * 8.0 * x);
        }
        if a.abs() < 1e-20 {
            break;
        }
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
    }
    let (s, c) = x.sin_cos();
    let cos_chi = (c + s) / std::f64::consts::SQRT_2;
    let sin_chi = (s - c) / std::f64::consts::SQRT_2;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

#[test]
fn series_oracle_sanity() {
    assert_eq!(j0_series_oracle(0.0), 1.0);
    // J0(1) to 20 digits.
    assert!((j0_series_oracle(1.0) - 0.765_197_686_557_966_551_4).abs() < 1e-16);
}

#[test]
fn j0_examples() {
    assert_eq!(bessel_j0(0.0), 1.0);
    assert!(bessel_j0(2.404_825_557_695_772_8).abs() <= 1e-12);
    assert!((bessel_j0(10.0) - j0_series_oracle(10.0)).abs() <= 1e-12);
}

#[test]
fn first_zero_by_bisection_on_series() {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if j0_series_oracle(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    assert!((z - 2.404_825_557_695_772_8).abs() < 1e-15);
    assert!(bessel_j0(z).abs() <= 1e-12);
}

#[test]
fn j0_matches_series_up_to_thirty() {
    let mut worst = 0.0f64;
    for i in 0..=600 {
        let x = i as f64 * 0.05 + 1e-3 * (i % 7) as f64;
        let x = if i % 2 == 0 { x } else { -x };
        let err = (bessel_j0(x) - j0_series_oracle(x)).abs();
        worst = worst.max(err);
        assert!(bessel_j0(x).abs() <= 1.0);
    }
    assert!(worst <= 1e-12, "worst {worst:e}");
}

#[test]
fn j0_relative_to_local_amplitude_up_to_1e4() {
    // Relative accuracy is measured against the envelope sqrt(2/(pi x)), since J0 has zeros.
    for i in 0..=2000 {
        let x = 30.0 + (i as f64).powf(1.5) * 0.11;
        if x > 1e4 {
            break;
        }
        let amp = (2.0 / (std::f64::consts::PI * x)).sqrt();
        let err = (bessel_j0(x) - j0_asymptotic_oracle(x)).abs();
        assert!(err <= 1e-13 * amp, "x={x}: err {err:e}");
    }
}

#[test]
fn laplace_transforms_match_numerical_integrals() {
    let kernels = [
        Kernel::Constant,
        Kernel::step(1.3).unwrap(),
        Kernel::cosine(2.0).unwrap(),
        Kernel::bessel_j0(3.0).unwrap(),
    ];
    let samples = [Complex64::new(1.0, 0.0), Complex64::new(1.5, 2.0), Complex64::new(2.0, -5.0)];
    for k in &kernels {
        for &s in &samples {
            // e^{-Re(s) X} < 1e-14 at X = 34 / Re(s).
            let x_end = 34.0 / s.re;
            let jumps = k.jumps();
            let re = adaptive_integrate(
                |t| ((-s * t).exp() * k.eval(t).unwrap()).re,
                0.0,
                x_end,
                &jumps,
                1e-13,
                0.0,
            )
            .unwrap();
            let im = adaptive_integrate(
                |t| ((-s * t).exp() * k.eval(t).unwrap()).im,
                0.0,
                x_end,
                &jumps,
                1e-13,
                0.0,
            )
            .unwrap();
            let got = k.laplace(s).unwrap();
            let err = (got - Complex64::new(re, im)).norm();
            assert!(err <= 1e-9, "{k} s={s}: {got} vs {re}+{im}i");
        }
    }
}
