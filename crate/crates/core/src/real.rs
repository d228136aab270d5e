//! Scalar abstraction shared by the whole numeric path.
//!
//! Everything downstream of the coefficient generator is generic over
//! [`Real`]. Two implementations exist: `f64` and [`DoubleDouble`], an
//! unevaluated sum of two `f64`s carrying roughly 106 bits of mantissa.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Floating-point scalar used by reconstructions, solvers and the harness.
pub trait Real:
    Copy
    + Send
    + Sync
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + 'static
{
    /// Unit roundoff of the type.
    const EPSILON: f64;
    /// Short name used in manifests.
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn from_ratio(r: &BigRational) -> Self;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    /// `sin(pi * self)`, with the reduction done before the multiplication by pi.
    fn sin_pi(self) -> Self;
    /// `cos(pi * self)`.
    fn cos_pi(self) -> Self;
    fn exp(self) -> Self;
    fn is_finite(self) -> bool;
    fn pi() -> Self;

    #[inline]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    #[inline]
    fn one() -> Self {
        Self::from_f64(1.0)
    }

    #[inline]
    fn from_i64(x: i64) -> Self {
        Self::from_ratio(&BigRational::from_integer(BigInt::from(x)))
    }

    #[inline]
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    #[inline]
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    fn is_nan(self) -> bool {
        self.to_f64().is_nan()
    }
}

const TWO_53: i64 = 1 << 53;

fn small_int(x: &BigInt) -> Option<f64> {
    let v = x.to_i64()?;
    (v.abs() <= TWO_53).then_some(v as f64)
}

impl Real for f64 {
    const EPSILON: f64 = f64::EPSILON / 2.0;
    const NAME: &'static str = "double";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    fn from_ratio(r: &BigRational) -> Self {
        match (small_int(r.numer()), small_int(r.denom())) {
            // Both exact, so the quotient is correctly rounded.
            (Some(n), Some(d)) => n / d,
            _ => r.to_f64().unwrap_or(f64::NAN),
        }
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin_pi(self) -> Self {
        let (q, y) = reduce_half_turns(self);
        let v = match q {
            0 => (std::f64::consts::PI * y).sin(),
            1 => (std::f64::consts::PI * y).cos(),
            2 => -(std::f64::consts::PI * y).sin(),
            _ => -(std::f64::consts::PI * y).cos(),
        };
        v
    }
    fn cos_pi(self) -> Self {
        (self + 0.5).sin_pi()
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn pi() -> Self {
        std::f64::consts::PI
    }
}

/// Splits `x` into a quadrant `q` and a remainder `y` in [-1/4, 1/4] with
/// `x = q/2 + y` modulo 2.
fn reduce_half_turns(x: f64) -> (u8, f64) {
    let k = (2.0 * x).round();
    let y = x - 0.5 * k;
    (k.rem_euclid(4.0) as u8, y)
}

/// Double-double scalar: the value is `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

// Dekker's product; avoids a software fma on targets without one.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, err)
}

impl DoubleDouble {
    pub const PI: DoubleDouble = DoubleDouble {
        hi: 3.141592653589793,
        lo: 1.2246467991473532e-16,
    };
    pub const LN_2: DoubleDouble = DoubleDouble {
        hi: 0.6931471805599453,
        lo: 2.3190468138462996e-17,
    };

    #[inline]
    pub const fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * b);
        DoubleDouble { hi, lo }
    }

    fn from_bigint(x: &BigInt) -> Self {
        if let Some(v) = small_int(x) {
            return DoubleDouble::from_f64(v);
        }
        let hi = x.to_f64().unwrap_or(f64::NAN);
        if !hi.is_finite() {
            return DoubleDouble::from_f64(hi);
        }
        // hi is an integer-valued f64, so the residual is exact as a BigInt.
        let hi_int = match BigInt::from_f64(hi) {
            Some(v) => v,
            None => return DoubleDouble::from_f64(hi),
        };
        let rest = (x - hi_int).to_f64().unwrap_or(0.0);
        DoubleDouble::from_sum(hi, rest)
    }

    fn round(self) -> Self {
        let hi = self.hi.round();
        if hi == self.hi {
            let lo = self.lo.round();
            let (h, l) = quick_two_sum(hi, lo);
            DoubleDouble { hi: h, lo: l }
        } else if (hi - self.hi).abs() == 0.5 && self.lo != 0.0 {
            // Tie in hi broken by the sign of lo.
            let hi = if self.lo < 0.0 && hi > self.hi {
                hi - 1.0
            } else if self.lo > 0.0 && hi < self.hi {
                hi + 1.0
            } else {
                hi
            };
            DoubleDouble { hi, lo: 0.0 }
        } else {
            DoubleDouble { hi, lo: 0.0 }
        }
    }

    /// Taylor series of sin and cos for |x| <= pi/4.
    fn sin_cos_taylor(x: Self) -> (Self, Self) {
        let x2 = x * x;
        let mut term = x;
        let mut sin = x;
        let mut k = 1.0;
        loop {
            term = -(term * x2) / DoubleDouble::from_f64((k + 1.0) * (k + 2.0));
            k += 2.0;
            sin += term;
            if term.hi.abs() < 1e-34 || k > 60.0 {
                break;
            }
        }
        let mut term = DoubleDouble::one();
        let mut cos = term;
        let mut k = 0.0;
        loop {
            term = -(term * x2) / DoubleDouble::from_f64((k + 1.0) * (k + 2.0));
            k += 2.0;
            cos += term;
            if term.hi.abs() < 1e-34 || k > 60.0 {
                break;
            }
        }
        (sin, cos)
    }

    fn sin_cos_pi(self) -> (Self, Self) {
        let k = (self * DoubleDouble::from_f64(2.0)).round();
        let y = self - k.mul_f64(0.5);
        let q = k.hi.rem_euclid(4.0) as u8;
        let (s, c) = Self::sin_cos_taylor(y * DoubleDouble::PI);
        match q {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    /// Scientific notation with 32 significant digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.hi.is_finite() {
            return write!(f, "{}", self.hi);
        }
        if self.hi == 0.0 {
            return write!(f, "0e0");
        }
        let neg = self.hi < 0.0;
        let mut v = self.abs();
        let mut e = v.hi.log10().floor() as i32;
        let ten = DoubleDouble::from_f64(10.0);
        v /= ten.powi_signed(e);
        if v.hi >= 10.0 {
            v /= ten;
            e += 1;
        } else if v.hi < 1.0 {
            v *= ten;
            e -= 1;
        }
        let mut digits = Vec::with_capacity(33);
        for _ in 0..33 {
            let d = v.hi.floor().clamp(0.0, 9.0);
            digits.push(d as u8);
            v = (v - DoubleDouble::from_f64(d)) * ten;
        }
        // Round on the 33rd digit.
        if digits[32] >= 5 {
            let mut i = 31;
            loop {
                if digits[i] < 9 {
                    digits[i] += 1;
                    break;
                }
                digits[i] = 0;
                if i == 0 {
                    digits.insert(0, 1);
                    e += 1;
                    break;
                }
                i -= 1;
            }
        }
        digits.truncate(32);
        let mut s = String::with_capacity(40);
        if neg {
            s.push('-');
        }
        s.push((b'0' + digits[0]) as char);
        s.push('.');
        for d in &digits[1..] {
            s.push((b'0' + d) as char);
        }
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
        write!(f, "{s}e{e}")
    }
}

impl DoubleDouble {
    fn powi_signed(self, e: i32) -> Self {
        let p = self.powi(e.unsigned_abs());
        if e < 0 {
            DoubleDouble::one() / p
        } else {
            p
        }
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        DoubleDouble { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::from_f64(q3)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for DoubleDouble {
            #[inline]
            fn $m(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl Sum for DoubleDouble {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(DoubleDouble::zero(), |a, b| a + b)
    }
}

impl Real for DoubleDouble {
    const EPSILON: f64 = 4.930380657631324e-32; // 2^-104
    const NAME: &'static str = "extended";

    #[inline]
    fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn from_ratio(r: &BigRational) -> Self {
        if r.is_zero() {
            return DoubleDouble::zero();
        }
        DoubleDouble::from_bigint(r.numer()) / DoubleDouble::from_bigint(r.denom())
    }
    #[inline]
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble::from_f64(self.hi.sqrt());
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let ax_dd = DoubleDouble::from_f64(ax);
        let corr = (self - ax_dd * ax_dd).hi * (x * 0.5);
        DoubleDouble::from_sum(ax, corr)
    }
    fn sin_pi(self) -> Self {
        self.sin_cos_pi().0
    }
    fn cos_pi(self) -> Self {
        self.sin_cos_pi().1
    }
    fn exp(self) -> Self {
        if self.hi > 709.0 {
            return DoubleDouble::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DoubleDouble::zero();
        }
        // x = k ln2 + r, then exp(r) = (exp(r / 2^10))^(2^10).
        let k = (self / DoubleDouble::LN_2).round();
        let r = (self - DoubleDouble::LN_2 * k).mul_f64(1.0 / 1024.0);
        // Work with exp(r) - 1 so the squarings keep full relative accuracy.
        let mut term = r;
        let mut s = r;
        for i in 2..30 {
            term = term * r / DoubleDouble::from_f64(i as f64);
            s += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            s = s.mul_f64(2.0) + s * s;
        }
        let sum = s + DoubleDouble::one();
        let scale = 2f64.powi(k.hi as i32);
        DoubleDouble {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
    #[inline]
    fn pi() -> Self {
        DoubleDouble::PI
    }
    #[inline]
    fn is_nan(self) -> bool {
        self.hi.is_nan() || self.lo.is_nan()
    }
}

/// Exact absolute value of a rational as `f64`, for reports.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    let v = <f64 as Real>::from_ratio(&r.abs());
    if r.is_negative() {
        -v
    } else {
        v
    }
}
