//! Floating-point building blocks shared by every module: compensated
//! summation, the additive character `e(x) = exp(2πix)`, and conversion of
//! exact big rationals to `f64` with full relative precision.

use std::f64::consts::PI;
use std::ops::AddAssign;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

/// Neumaier's variant of Kahan summation.
///
/// The running compensation also survives terms larger than the partial sum,
/// which happens constantly in oscillatory sums.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for KahanSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

/// Componentwise compensated sum of complex terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexKahan {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexKahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl AddAssign<Complex64> for ComplexKahan {
    fn add_assign(&mut self, rhs: Complex64) {
        self.add(rhs);
    }
}

/// Compensated accumulator that keeps its value reduced to `[0, 1)`.
///
/// Dropping the integer part is exact in binary floating point, so the
/// compensation term stays valid and the absolute error does not grow with
/// the magnitude of the unreduced sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModOneSum {
    inner: KahanSum,
}

impl ModOneSum {
    pub fn new(start: f64) -> Self {
        let mut s = Self::default();
        s.add(start);
        s
    }

    pub fn add(&mut self, x: f64) {
        self.inner.add(x);
        let whole = self.inner.sum.floor();
        if whole != 0.0 {
            self.inner.sum -= whole;
        }
    }

    pub fn value(&self) -> f64 {
        frac(self.inner.value())
    }
}

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Signed representative of `x mod 1` in `[-1/2, 1/2)`.
#[inline]
pub fn signed_frac(x: f64) -> f64 {
    let f = frac(x);
    if f >= 0.5 {
        f - 1.0
    } else {
        f
    }
}

/// `e(x) = exp(2πix)`, reducing the argument mod 1 first.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * signed_frac(x)).sin_cos();
    Complex64::new(c, s)
}

/// `e(θ) − 1`, computed as `2i·sin(πθ)·e(θ/2)` so tiny arguments keep full
/// relative precision. `theta` should be a signed representative.
#[inline]
pub fn e_minus_one(theta: f64) -> Complex64 {
    // e(θ/2) = cos(πθ) + i sin(πθ)
    let (s, c) = (PI * theta).sin_cos();
    Complex64::new(-2.0 * s * s, 2.0 * s * c)
}

/// Geometric kernel `(e(nθ) − 1)/(e(θ) − 1) = Σ_{j<n} e(jθ)`.
///
/// `theta` is the signed residue of `mα`, `phi` the signed residue of `mnα`;
/// both come from exact reduction so neither carries wrap-around error.
/// A zero `theta` means the frequency is degenerate and the sum is `n`.
#[inline]
pub fn geometric_kernel(theta: f64, phi: f64, n: u64) -> Complex64 {
    if theta == 0.0 {
        return Complex64::new(n as f64, 0.0);
    }
    let ratio = (PI * phi).sin() / (PI * theta).sin();
    let (s, c) = (PI * (phi - theta)).sin_cos();
    Complex64::new(ratio * c, ratio * s)
}

/// `num/den` as `f64` with full relative precision, even when both operands
/// have thousands of bits or the quotient is far below `f64::EPSILON`.
pub fn ratio_to_f64(num: &BigInt, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "zero denominator");
    if num.is_zero() {
        return 0.0;
    }
    let sign = if num.sign() == Sign::Minus { -1.0 } else { 1.0 };
    sign * unsigned_ratio(num.magnitude(), den)
}

pub fn unsigned_ratio(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let (nm, ne) = top_bits(num);
    let (dm, de) = top_bits(den);
    let exp = ne - de;
    let r = nm / dm;
    if exp > 1023 {
        return f64::INFINITY;
    }
    if exp < -1100 {
        return 0.0;
    }
    r * 2f64.powi(exp as i32)
}

/// Leading 64 bits of `x` as an `f64` mantissa plus the binary exponent
/// of the discarded tail.
fn top_bits(x: &BigUint) -> (f64, i64) {
    let bits = x.bits();
    if bits <= 64 {
        (x.to_u64().unwrap() as f64, 0)
    } else {
        let shift = bits - 64;
        let top = (x >> shift).to_u64().unwrap();
        (top as f64, shift as i64)
    }
}

/// Unsigned 0.128 fixed-point number to `f64` in `[0, 1)`.
#[inline]
pub fn fixed128_to_f64(v: u128) -> f64 {
    let x = (v >> 64) as f64 / 18446744073709551616.0 + (v as u64) as f64 / 3.402823669209385e38;
    frac(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_cancelled_mass() {
        let mut k = KahanSum::new();
        k += 1.0;
        k += 1e100;
        k += 1.0;
        k += -1e100;
        assert_eq!(k.value(), 2.0);
    }

    #[test]
    fn mod_one_sum_tracks_fraction() {
        let mut s = ModOneSum::new(0.25);
        for _ in 0..1000 {
            s.add(0.1);
        }
        // 0.25 + 100 = 100.25
        assert!((s.value() - 0.25).abs() < 1e-13);
    }

    #[test]
    fn e_is_periodic() {
        let a = e(0.3);
        let b = e(7.3);
        assert!((a - b).norm() < 1e-14);
        assert!((e(0.25) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn e_minus_one_matches_naive_for_moderate_arguments() {
        for &t in &[0.1, -0.3, 0.49, 0.01] {
            let naive = e(t) - Complex64::new(1.0, 0.0);
            assert!((e_minus_one(t) - naive).norm() < 1e-15);
        }
        // tiny argument: relative precision survives
        let t = 1e-200;
        let z = e_minus_one(t);
        assert!((z.im / (2.0 * PI * t) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn geometric_kernel_matches_direct_sum() {
        let theta: f64 = 0.137;
        for n in [0u64, 1, 2, 17, 300] {
            let phi = signed_frac(theta * n as f64);
            let direct: Complex64 = (0..n).map(|j| e(theta * j as f64)).sum();
            assert!((geometric_kernel(theta, phi, n) - direct).norm() < 1e-11, "n={n}");
        }
        assert_eq!(geometric_kernel(0.0, 0.0, 5), Complex64::new(5.0, 0.0));
    }

    #[test]
    fn ratio_keeps_relative_precision() {
        let den = BigUint::from(10u32).pow(400);
        let num = BigInt::from(3);
        let r = ratio_to_f64(&num, &den);
        assert_eq!(r, 0.0); // below f64 range
        let den = BigUint::from(10u32).pow(250);
        let r = ratio_to_f64(&BigInt::from(-7), &den);
        assert!((r / -7e-250 - 1.0).abs() < 1e-15);
        let big = BigUint::from(3u32).pow(1000);
        let r = unsigned_ratio(&big, &(&big * 4u32));
        assert_eq!(r, 0.25);
    }

    #[test]
    fn fixed_point_conversion() {
        assert_eq!(fixed128_to_f64(1u128 << 127), 0.5);
        assert_eq!(fixed128_to_f64(0), 0.0);
    }
}
