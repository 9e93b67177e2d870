//! Low-discrepancy Weyl sequences frac(r * n) with irrational multipliers.
//! Multipliers like e^j overflow the f64 mantissa long before their
//! fractional parts stop mattering, so products and powers are carried in
//! double-double (roughly 106-bit) arithmetic and only the final
//! fractional part is rounded.

/// Error-free sum: s + err == a + b exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Fast error-free sum requiring |a| >= |b|.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

/// Error-free product via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

/// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const E: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::E,
        lo: 1.4456468917292502e-16,
    };

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn add(self, other: DoubleDouble) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        DoubleDouble { hi, lo }
    }

    pub fn mul(self, other: DoubleDouble) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    /// Fractional part folded into [0, 1).
    pub fn fract(self) -> Self {
        let f = self.hi.floor();
        let mut r = self.add(DoubleDouble::from_f64(-f));
        if r.hi >= 1.0 {
            r = r.add(DoubleDouble::from_f64(-1.0));
        }
        if r.hi < 0.0 {
            r = r.add(DoubleDouble::from_f64(1.0));
        }
        r
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// e^j by repeated multiplication. Loses the fractional part once the
    /// integer part of e^j outgrows ~106 bits (j >= 74); use
    /// [`frac_e_pow`] when only the fractional part matters.
    pub fn e_pow(j: u32) -> Self {
        let mut acc = DoubleDouble::from_f64(1.0);
        for _ in 0..j {
            acc = acc.mul(DoubleDouble::E);
        }
        acc
    }
}

/// frac(e^j) through 512-bit fixed-point arithmetic: e from its Taylor
/// series, the power exactly, the fractional part truncated to
/// double-double at the end. Valid for any j that keeps e^j under
/// ~2^400 (j <= 277).
pub fn frac_e_pow(j: u32) -> DoubleDouble {
    use num_bigint::BigUint;
    assert!(j >= 1 && j <= 277, "multiplier exponent out of range");
    const SCALE_BITS: u64 = 512;
    let one: BigUint = BigUint::from(1u8) << SCALE_BITS;
    // e * 2^512 = sum over k of 2^512 / k!; terms below 2^-512 are gone by
    // k = 98.
    let mut e_fixed = BigUint::from(0u8);
    let mut term = one.clone();
    let mut k = 1u32;
    while term != BigUint::from(0u8) {
        e_fixed += &term;
        term /= k;
        k += 1;
    }
    // (e * 2^512)^j = e^j * 2^(512 j); shift back to scale 2^512.
    let powered = e_fixed.pow(j) >> (SCALE_BITS * (j as u64 - 1));
    let frac = powered % &one;
    // Top 106 bits -> double-double in [0, 1).
    let top: BigUint = frac >> (SCALE_BITS - 106);
    let digits = top.to_u64_digits();
    let (lo64, hi64) = match digits.len() {
        0 => (0u64, 0u64),
        1 => (digits[0], 0u64),
        _ => (digits[0], digits[1]),
    };
    let v = (hi64 as u128) << 64 | lo64 as u128;
    let hi_part = (v >> 53) as u64 as f64 / (1u64 << 53) as f64;
    let lo_part = (v & ((1u128 << 53) - 1)) as u64 as f64 / (1u64 << 53) as f64 / (1u64 << 53) as f64;
    let (hi, lo) = quick_two_sum(hi_part, lo_part);
    DoubleDouble { hi, lo }
}

/// Fractional part of r * n where the product is evaluated exactly before
/// rounding, so large indices do not quantize the sequence.
pub fn weyl_sequence(r: f64, n: u64) -> f64 {
    assert!(r > 0.0, "multiplier must be positive");
    assert!(n >= 1, "index starts at 1");
    let (p, e) = two_prod(r, n as f64);
    let f = DoubleDouble { hi: p, lo: e }.fract().to_f64();
    // Rounding at the interval edge folds back into [0, 1).
    if f >= 1.0 {
        0.0
    } else if f < 0.0 {
        0.0
    } else {
        f
    }
}

/// Iterator over frac(r * n), n = 1, 2, ... with the multiplier held in
/// double-double precision. Additive recurrence keeps the error growth
/// linear in n at ~1e-32 per step.
#[derive(Debug, Clone)]
pub struct WeylStream {
    step: DoubleDouble,
    state: DoubleDouble,
}

impl WeylStream {
    pub fn new(multiplier: DoubleDouble) -> Self {
        WeylStream {
            step: multiplier.fract(),
            state: DoubleDouble::from_f64(0.0),
        }
    }

    /// Stream for r = e^j, the multiplier family used for sampling.
    pub fn e_power(j: u32) -> Self {
        WeylStream::new(frac_e_pow(j))
    }

    pub fn next_value(&mut self) -> f64 {
        self.state = self.state.add(self.step).fract();
        let f = self.state.to_f64();
        if (0.0..1.0).contains(&f) {
            f
        } else {
            0.0
        }
    }
}
