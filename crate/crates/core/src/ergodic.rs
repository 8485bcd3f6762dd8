//! Monte-Carlo ergodic capacities under i.i.d. Rayleigh fading, with the
//! transmitter blind to the channel.
//!
//! Every estimator draws channel `i` from `sample_rayleigh(n, seed, i)` and
//! reduces per-sample rates in index order. Sampling may be spread over any
//! number of workers without changing a single output bit. Comparisons
//! between covariances reuse one sample set (common random numbers) and
//! report the standard error of the per-sample differences.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::capacity::rate;
use crate::channel::{sample_rayleigh, ChannelVector, PowerConstraint, SeededRng, SystemParams};
use crate::covariance::optimal_cov_ma;
use crate::error::{Error, Result};
use crate::hermitian::{is_psd, HermitianMatrix, DEFAULT_PSD_TOL};
use crate::special::exponential_expectation_rule;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const MIN_SAMPLES: usize = 100;
/// Gauss-Laguerre order of the quadrature oracle.
pub const QUADRATURE_NODES: usize = 64;

/// Monte-Carlo estimate of an expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        assert!(n >= 2, "an estimate needs at least two samples");
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
        Self {
            mean,
            std_error: (var / nf).sqrt(),
            n_samples: n,
            seed,
        }
    }
}

/// Sample count, seed and worker count for a Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub n_samples: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

impl McSettings {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::validation(format!(
                "Monte-Carlo runs need at least {MIN_SAMPLES} samples"
            )));
        }
        Ok(())
    }
}

/// Transmit covariance used while the transmitter does not know the channel.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariancePolicy {
    FixedQ(HermitianMatrix),
    /// `(P/n) I`, optimal under a sum constraint.
    SumPowerIso(f64),
    /// `diag(p)` under the independent multiple-access constraint.
    MaDiag(Vec<f64>),
    /// Optimal under per-antenna constraints: also `diag(p)`.
    PerAntennaDiag(Vec<f64>),
}

impl CovariancePolicy {
    pub fn covariance(&self, n: usize) -> Result<HermitianMatrix> {
        if n == 0 {
            return Err(Error::validation("antenna count must be at least 1"));
        }
        let q = match self {
            CovariancePolicy::FixedQ(q) => {
                if !is_psd(q, DEFAULT_PSD_TOL)? {
                    return Err(Error::validation("fixed covariance must be PSD"));
                }
                q.clone()
            }
            CovariancePolicy::SumPowerIso(total) => {
                PowerConstraint::SumPower(*total).validate()?;
                HermitianMatrix::diagonal(&vec![total / n as f64; n])
            }
            CovariancePolicy::MaDiag(p) | CovariancePolicy::PerAntennaDiag(p) => optimal_cov_ma(p)?,
        };
        if q.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: q.dim(),
            });
        }
        Ok(q)
    }
}

/// Runs `f` on a pool with the requested number of workers.
pub(crate) fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::validation(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Evaluates `per_sample(h_i)` for every channel draw, in index order.
pub fn map_samples<T, F>(n: usize, settings: &McSettings, per_sample: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ChannelVector) -> Result<T> + Sync + Send,
{
    settings.validate()?;
    let rng = SeededRng::new(settings.seed);
    with_pool(settings.workers, || {
        (0..settings.n_samples as u64)
            .into_par_iter()
            .map(|i| per_sample(&sample_rayleigh(n, &rng, i)?))
            .collect::<Result<Vec<T>>>()
    })?
}

/// Per-sample rates of several covariances over one shared sample set.
#[derive(Debug, Clone)]
pub struct SampleRates {
    /// `rates[k][i]` is the rate of covariance `k` on channel draw `i`.
    pub rates: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SampleRates {
    pub fn evaluate(covs: &[HermitianMatrix], n: usize, sys: &SystemParams, settings: &McSettings) -> Result<Self> {
        if let Some(q) = covs.iter().find(|q| q.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: q.dim(),
            });
        }
        let per_sample = map_samples(n, settings, |h| {
            covs.iter().map(|q| rate(h, q, sys)).collect::<Result<Vec<f64>>>()
        })?;
        let mut rates = vec![Vec::with_capacity(per_sample.len()); covs.len()];
        for row in per_sample {
            for (k, r) in row.into_iter().enumerate() {
                rates[k].push(r);
            }
        }
        Ok(Self {
            rates,
            seed: settings.seed,
        })
    }

    pub fn estimate(&self, k: usize) -> McEstimate {
        McEstimate::from_samples(&self.rates[k], self.seed)
    }

    /// Estimate of `E[rate_a - rate_b]` from paired samples.
    pub fn difference(&self, a: usize, b: usize) -> McEstimate {
        let diffs: Vec<f64> = self.rates[a].iter().zip(&self.rates[b]).map(|(x, y)| x - y).collect();
        McEstimate::from_samples(&diffs, self.seed)
    }
}

/// Ergodic rate of a covariance policy, `E_h[log(1 + h^T Q h^* / sigma^2)]`.
///
/// The MA and per-antenna policies build the same covariance, so their
/// estimates are identical for equal powers and seed.
pub fn ergodic_capacity_mc(
    policy: &CovariancePolicy,
    n: usize,
    sys: &SystemParams,
    settings: &McSettings,
) -> Result<McEstimate> {
    let q = policy.covariance(n)?;
    Ok(SampleRates::evaluate(&[q], n, sys, settings)?.estimate(0))
}

/// Deterministic value of `E[log(1 + sum_i a_i X_i)]`, `X_i ~ Exp(1)` i.i.d.
/// with `a_i = q_ii / sigma^2`, by (tensor) Gauss-Laguerre quadrature.
/// Supports one or two antennas and diagonal policies.
pub fn ergodic_oracle_quadrature(n: usize, policy: &CovariancePolicy, sys: &SystemParams) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(Error::validation("quadrature oracle supports n = 1 or n = 2"));
    }
    let q = policy.covariance(n)?;
    if q.max_abs_offdiag() != 0.0 {
        return Err(Error::validation("quadrature oracle needs a diagonal covariance"));
    }
    let a: Vec<f64> = q.diag().iter().map(|d| d / sys.noise_power).collect();
    let (x, w) = exponential_expectation_rule(QUADRATURE_NODES)?;
    let nats = if n == 1 {
        x.iter().zip(&w).map(|(xi, wi)| wi * (a[0] * xi).ln_1p()).sum()
    } else {
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            for (xj, wj) in x.iter().zip(&w) {
                acc += wi * wj * (a[0] * xi + a[1] * xj).ln_1p();
            }
        }
        acc
    };
    Ok(sys.log_base.from_nats(nats))
}

/// Two-antenna covariance `[[P1, conj(q)], [q, P2]]` (`q = q_21`).
pub fn two_antenna_cov(q: Complex64, p: [f64; 2]) -> Result<HermitianMatrix> {
    PowerConstraint::PerAntenna(p.to_vec()).validate()?;
    if q.norm_sqr() > p[0] * p[1] * (1.0 + 1e-12) {
        return Err(Error::validation("off-diagonal entry exceeds sqrt(P1 P2)"));
    }
    let mut m = HermitianMatrix::diagonal(&p);
    m.set(1, 0, q);
    Ok(m)
}

/// Exact identity behind the optimality of diagonal covariances: averaging
/// the objective with off-diagonal `q` over the sample set with `h_1`
/// negated gives the same bits as averaging with `-q` over the original
/// set. Returns whether every per-sample pair and the means agree exactly.
pub fn signflip_identity_check(q: Complex64, p: [f64; 2], sys: &SystemParams, settings: &McSettings) -> Result<bool> {
    let q_plus = two_antenna_cov(q, p)?;
    let q_minus = two_antenna_cov(-q, p)?;
    let pairs = map_samples(2, settings, |h| {
        let flipped = rate(&h.with_flipped_sign(0), &q_plus, sys)?;
        let negated = rate(h, &q_minus, sys)?;
        Ok((flipped, negated))
    })?;
    let (flipped, negated): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let pairwise = flipped.iter().zip(&negated).all(|(a, b)| a == b);
    let a = McEstimate::from_samples(&flipped, settings.seed);
    let b = McEstimate::from_samples(&negated, settings.seed);
    Ok(pairwise && a.mean == b.mean)
}

/// Two estimates over common random numbers and their paired difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedEstimate {
    pub first: McEstimate,
    pub second: McEstimate,
    /// `first - second`, with the standard error of the per-sample differences.
    pub difference: McEstimate,
}

impl PairedEstimate {
    fn from_rates(rates: &SampleRates) -> Self {
        Self {
            first: rates.estimate(0),
            second: rates.estimate(1),
            difference: rates.difference(0, 1),
        }
    }

    /// `first` exceeds `second` by more than `k` paired standard errors.
    pub fn first_exceeds_by(&self, k: f64) -> bool {
        self.difference.mean > k * self.difference.std_error
    }
}

/// Ergodic rate of `diag(p)` (first) against the same diagonal with
/// off-diagonal `q` (second).
pub fn diagonal_dominance_mc(
    q: Complex64,
    p: [f64; 2],
    sys: &SystemParams,
    settings: &McSettings,
) -> Result<PairedEstimate> {
    let covs = [HermitianMatrix::diagonal(&p), two_antenna_cov(q, p)?];
    Ok(PairedEstimate::from_rates(&SampleRates::evaluate(
        &covs, 2, sys, settings,
    )?))
}

/// Result of [`permutation_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationBound {
    /// Isotropic `(P/n) I` (first) against `diag(p)` (second).
    pub paired: PairedEstimate,
    /// `C_p <= C_s + 3 * paired SE`.
    pub holds: bool,
}

impl PermutationBound {
    pub fn sum_power(&self) -> McEstimate {
        self.paired.first
    }

    pub fn per_antenna(&self) -> McEstimate {
        self.paired.second
    }
}

/// Checks that the ergodic per-antenna capacity does not exceed the
/// sum-power one at the same total power.
pub fn permutation_bound_check(p: &[f64], sys: &SystemParams, settings: &McSettings) -> Result<PermutationBound> {
    let n = p.len();
    if n < 2 {
        return Err(Error::validation("permutation bound needs at least two antennas"));
    }
    let total: f64 = p.iter().sum();
    let covs = [
        CovariancePolicy::SumPowerIso(total).covariance(n)?,
        CovariancePolicy::PerAntennaDiag(p.to_vec()).covariance(n)?,
    ];
    let paired = PairedEstimate::from_rates(&SampleRates::evaluate(&covs, n, sys, settings)?);
    let holds = paired.second.mean <= paired.first.mean + 3.0 * paired.difference.std_error;
    Ok(PermutationBound { paired, holds })
}
