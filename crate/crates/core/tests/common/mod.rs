//! Independent reference computations for the integration tests. Nothing
//! here calls into the library's numerics.

#![allow(dead_code)]

/// A complex number as `(re, im)`.
pub type Cx = (f64, f64);

pub fn abs2(z: Cx) -> f64 {
    z.0 * z.0 + z.1 * z.1
}

/// `log2(1 + x)` by the plain definition.
pub fn lg(x: f64) -> f64 {
    (1.0 + x).ln() / std::f64::consts::LN_2
}

pub fn c_sum(h: &[Cx], total: f64, noise: f64) -> f64 {
    lg(total * h.iter().map(|&z| abs2(z)).sum::<f64>() / noise)
}

pub fn c_ma(h: &[Cx], p: &[f64], noise: f64) -> f64 {
    lg(h.iter().zip(p).map(|(&z, &pk)| pk * abs2(z)).sum::<f64>() / noise)
}

pub fn c_pa(h: &[Cx], p: &[f64], noise: f64) -> f64 {
    let amp: f64 = h.iter().zip(p).map(|(&z, &pk)| (abs2(z) * pk).sqrt()).sum();
    lg(amp * amp / noise)
}

/// `E[ln(1 + a X)]`, `X ~ Exp(1)`, by composite Simpson on
/// `int_0^1 a / (1 - a ln u) du` (integration by parts, then `u = e^{-x}`).
pub fn exp_log_mean(a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let f = |u: f64| if u == 0.0 { 0.0 } else { a / (1.0 - a * u.ln()) };
    // The integrand has an infinite slope at u = 0; a graded mesh u = t^4
    // keeps Simpson accurate there.
    let m = 200_000;
    let g = |t: f64| f(t.powi(4)) * 4.0 * t.powi(3);
    let h = 1.0 / m as f64;
    let mut acc = g(0.0) + g(1.0);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(k as f64 * h);
    }
    acc * h / 3.0
}

/// `E[ln(1 + a1 X1 + a2 X2)]` for i.i.d. `Exp(1)` and `a1 != a2`, from the
/// hypoexponential density.
pub fn exp_log_mean2(a1: f64, a2: f64) -> f64 {
    if a2 == 0.0 {
        return exp_log_mean(a1);
    }
    if a1 == 0.0 {
        return exp_log_mean(a2);
    }
    assert!(a1 != a2, "distinct scales required");
    (a1 * exp_log_mean(a1) - a2 * exp_log_mean(a2)) / (a1 - a2)
}

/// Small deterministic generator (SplitMix64) for test-side instance draws.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize % n
    }
}
