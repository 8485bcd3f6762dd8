//! Channel vectors, power constraints and the Rayleigh-fading sampler.

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel coefficients `h_1..h_n` from the transmit antennas to the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(Vec<Complex64>);

impl ChannelVector {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::validation("channel vector needs at least one coefficient"));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("channel coefficients must be finite"));
        }
        Ok(Self(coeffs))
    }

    /// Real channel `h_k = values[k]`.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.0
    }

    /// `||h||^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Copy with coefficient `k` negated.
    pub fn with_flipped_sign(&self, k: usize) -> Self {
        let mut coeffs = self.0.clone();
        coeffs[k] = -coeffs[k];
        Self(coeffs)
    }
}

/// Transmit power constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerConstraint {
    /// `trace(Q) <= P`.
    SumPower(f64),
    /// `q_ii <= P_i`, antennas fully cooperate.
    PerAntenna(Vec<f64>),
    /// Independent signals: `Q = diag{P_1..P_n}`.
    IndependentMA(Vec<f64>),
}

impl PowerConstraint {
    pub fn validate(&self) -> Result<()> {
        let check = |p: f64| {
            if p.is_finite() && p >= 0.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("power {p} must be finite and non-negative")))
            }
        };
        match self {
            PowerConstraint::SumPower(p) => check(*p),
            PowerConstraint::PerAntenna(ps) | PowerConstraint::IndependentMA(ps) => {
                if ps.is_empty() {
                    return Err(Error::validation("power list must not be empty"));
                }
                ps.iter().try_for_each(|&p| check(p))
            }
        }
    }

    /// Antenna count implied by the constraint, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            PowerConstraint::SumPower(_) => None,
            PowerConstraint::PerAntenna(ps) | PowerConstraint::IndependentMA(ps) => Some(ps.len()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PowerConstraint::SumPower(_) => "sum",
            PowerConstraint::PerAntenna(_) => "per_antenna",
            PowerConstraint::IndependentMA(_) => "ma",
        }
    }
}

/// Total transmit power: `P` for a sum constraint, `sum P_i` otherwise.
pub fn total_power(pc: &PowerConstraint) -> f64 {
    match pc {
        PowerConstraint::SumPower(p) => *p,
        PowerConstraint::PerAntenna(ps) | PowerConstraint::IndependentMA(ps) => ps.iter().sum(),
    }
}

/// Unit of reported rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    /// Converts a value in nats into this unit. This is the only place a
    /// change of logarithm base happens.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Bits => nats / LN_2,
            LogBase::Nats => nats,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            LogBase::Bits => "bits",
            LogBase::Nats => "nats",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bits" => Ok(LogBase::Bits),
            "nats" => Ok(LogBase::Nats),
            other => Err(Error::validation(format!(
                "unknown log base '{other}' (expected bits|nats)"
            ))),
        }
    }
}

/// Receiver noise power and output unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub noise_power: f64,
    pub log_base: LogBase,
}

impl SystemParams {
    pub fn new(noise_power: f64, log_base: LogBase) -> Result<Self> {
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::validation("noise power must be finite and positive"));
        }
        Ok(Self { noise_power, log_base })
    }

    pub fn nats() -> Self {
        Self {
            noise_power: 1.0,
            log_base: LogBase::Nats,
        }
    }

    /// `log(1 + snr)` in the configured unit.
    pub fn log1p(&self, snr: f64) -> f64 {
        self.log_base.from_nats(snr.ln_1p())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            noise_power: 1.0,
            log_base: LogBase::Bits,
        }
    }
}

/// Counter-based random source: draw `index` is a pure function of
/// `(seed, index)`.
///
/// Backed by ChaCha8 with the sample index selecting the stream, so samples
/// can be generated in any order or partition and come out identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for draw `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Derived generator for a sub-purpose (e.g. an oracle restart), so that
    /// unrelated consumers of one seed never share streams.
    pub fn derive(&self, tag: u64) -> SeededRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX - tag);
        SeededRng::new(rng.next_u64())
    }
}

/// Uniform double in `[0, 1)` with 53 random bits.
pub(crate) fn unit_uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Circularly-symmetric complex normal with unit total variance
/// (variance 1/2 per real component), by Box-Muller.
pub(crate) fn complex_normal(rng: &mut impl RngCore) -> Complex64 {
    // 1 - u lies in (0, 1], so the log is finite.
    let u1 = 1.0 - unit_uniform(rng);
    let u2 = unit_uniform(rng);
    let radius = (-u1.ln()).sqrt();
    Complex64::from_polar(radius, TAU * u2)
}

/// Rayleigh-fading channel draw number `index`: i.i.d. `CN(0, 1)` entries.
pub fn sample_rayleigh(n: usize, rng: &SeededRng, index: u64) -> Result<ChannelVector> {
    if n == 0 {
        return Err(Error::validation("antenna count must be at least 1"));
    }
    let mut stream = rng.stream(index);
    Ok(ChannelVector((0..n).map(|_| complex_normal(&mut stream)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn total_power_per_variant() {
        assert_eq!(total_power(&PowerConstraint::SumPower(10.0)), 10.0);
        assert_eq!(total_power(&PowerConstraint::PerAntenna(vec![5.0, 5.0])), 10.0);
        assert_eq!(total_power(&PowerConstraint::PerAntenna(vec![1.0, 1.0, 1.0])), 3.0);
        assert_eq!(total_power(&PowerConstraint::IndependentMA(vec![2.0, 0.5])), 2.5);
    }

    #[test]
    fn constraint_validation() {
        assert!(PowerConstraint::SumPower(-1.0).validate().is_err());
        assert!(PowerConstraint::PerAntenna(vec![]).validate().is_err());
        assert!(PowerConstraint::IndependentMA(vec![1.0, f64::NAN]).validate().is_err());
        assert!(PowerConstraint::PerAntenna(vec![0.0, 3.0]).validate().is_ok());
    }

    #[test]
    fn channel_validation() {
        assert!(ChannelVector::new(vec![]).is_err());
        assert!(ChannelVector::new(vec![Complex64::new(f64::INFINITY, 0.0)]).is_err());
        assert!(SystemParams::new(0.0, LogBase::Bits).is_err());
        assert!(sample_rayleigh(0, &SeededRng::new(1), 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed_and_index() {
        let rng = SeededRng::new(42);
        let a = sample_rayleigh(4, &rng, 17).unwrap();
        let b = sample_rayleigh(4, &rng, 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_rayleigh(4, &rng, 18).unwrap());
        assert_ne!(a, sample_rayleigh(4, &SeededRng::new(43), 17).unwrap());
    }

    #[test]
    fn unit_power_and_zero_mean() {
        let rng = SeededRng::new(2024);
        let n = 100_000;
        let draws: Vec<Complex64> = (0..n)
            .map(|i| sample_rayleigh(1, &rng, i).unwrap().coeffs()[0])
            .collect();
        // |h|^2 ~ Exp(1): mean 1, variance 1.
        let power: Vec<f64> = draws.iter().map(|z| z.norm_sqr()).collect();
        let (m, se) = mean_and_se(&power);
        assert!((m - 1.0).abs() <= 3.0 * se, "power mean {m} se {se}");
        for part in [
            draws.iter().map(|z| z.re).collect::<Vec<_>>(),
            draws.iter().map(|z| z.im).collect::<Vec<_>>(),
        ] {
            let (m, se) = mean_and_se(&part);
            assert!(m.abs() <= 3.0 * se, "component mean {m} se {se}");
        }
    }

    #[test]
    fn sign_flip_preserves_second_moments() {
        let n = 100_000u64;
        let paired = SeededRng::new(5);
        let independent = SeededRng::new(6);
        let stats = |f: &dyn Fn(Complex64) -> f64, rng: &SeededRng, flip: bool| {
            let xs: Vec<f64> = (0..n)
                .map(|i| {
                    let mut h = sample_rayleigh(2, rng, i).unwrap();
                    if flip {
                        h = h.with_flipped_sign(0);
                    }
                    f(h.coeffs()[0])
                })
                .collect();
            mean_and_se(&xs)
        };
        let moments: [&dyn Fn(Complex64) -> f64; 4] = [&|z| z.re, &|z| z.im, &|z| z.re * z.re, &|z| z.re * z.im];
        for f in moments {
            let (a, sa) = stats(f, &paired, true);
            let (b, sb) = stats(f, &independent, false);
            assert!((a - b).abs() <= 3.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
        }
    }

    #[test]
    fn draws_across_indices_are_uncorrelated() {
        let rng = SeededRng::new(99);
        let n = 100_000u64;
        let prods: Vec<f64> = (0..n)
            .map(|i| {
                let a = sample_rayleigh(1, &rng, 2 * i).unwrap().coeffs()[0];
                let b = sample_rayleigh(1, &rng, 2 * i + 1).unwrap().coeffs()[0];
                a.re * b.re + a.im * b.im
            })
            .collect();
        let (m, se) = mean_and_se(&prods);
        assert!(m.abs() <= 3.0 * se, "cross-index correlation {m} se {se}");
    }

    #[test]
    fn bits_are_nats_over_ln2() {
        let x = 1.2345;
        assert_eq!(LogBase::Bits.from_nats(x), x / LN_2);
        assert_eq!(LogBase::Nats.from_nats(x), x);
        assert_eq!("nats".parse::<LogBase>().unwrap(), LogBase::Nats);
        assert!("dB".parse::<LogBase>().is_err());
    }
}
