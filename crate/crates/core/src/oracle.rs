//! Numerical maximizers of the per-antenna problem, independent of the
//! closed forms they are used to check.
//!
//! - [`maximize_per_antenna_phases`]: coordinate ascent over beam phases
//!   with amplitudes pinned at `sqrt(P_k)`.
//! - [`grid_search_n2`]: exhaustive grid over the single off-diagonal entry
//!   of a 2x2 covariance.
//! - [`maximize_general_rank`]: projected gradient ascent over a factor
//!   `A` (`Q = A A^dagger`) of configurable rank, which makes no rank-one
//!   assumption.
//!
//! Restarts are independent and run on the rayon pool; the merge is by
//! maximum rate with ties going to the lowest restart index, so results do
//! not depend on scheduling.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::capacity::rate;
use crate::channel::{complex_normal, unit_uniform, ChannelVector, PowerConstraint, SeededRng, SystemParams};
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;

/// Absolute rate improvement per sweep below which ascent stops.
pub const CONVERGENCE_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 10_000;
pub const DEFAULT_RESTARTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Equal to `rate(h, best_cov)`.
    pub best_rate: f64,
    pub best_cov: HermitianMatrix,
    pub restarts_used: usize,
    /// Every restart met the convergence threshold before the sweep cap.
    pub converged: bool,
    /// The iterate rate never decreased (beyond round-off) in any restart.
    pub monotone: bool,
}

struct Run {
    rate: f64,
    cov: HermitianMatrix,
    converged: bool,
    monotone: bool,
}

fn validate(h: &ChannelVector, p: &[f64], restarts: usize) -> Result<()> {
    PowerConstraint::PerAntenna(p.to_vec()).validate()?;
    if h.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: p.len(),
        });
    }
    if restarts == 0 {
        return Err(Error::validation("at least one restart is required"));
    }
    Ok(())
}

fn merge(runs: Vec<Run>, h: &ChannelVector, sys: &SystemParams) -> Result<OracleResult> {
    let restarts_used = runs.len();
    let converged = runs.iter().all(|r| r.converged);
    let monotone = runs.iter().all(|r| r.monotone);
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.rate > runs[best].rate {
            best = i;
        }
    }
    let best_cov = runs.into_iter().nth(best).expect("restarts >= 1").cov;
    Ok(OracleResult {
        best_rate: rate(h, &best_cov, sys)?,
        best_cov,
        restarts_used,
        converged,
        monotone,
    })
}

/// `a a^dagger` with the diagonal pinned to `p` exactly.
fn beam_covariance(a: &[Complex64], p: &[f64]) -> HermitianMatrix {
    let mut q = HermitianMatrix::outer(1.0, a);
    for (k, &pk) in p.iter().enumerate() {
        q.set(k, k, Complex64::new(pk, 0.0));
    }
    q
}

/// Maximizes the rate over beams `a_k = sqrt(P_k) e^{i phi_k}` by cyclic
/// coordinate ascent. Each coordinate step is exact: `phi_k` is chosen so
/// that `h_k a_k` points along the sum of the other terms.
pub fn maximize_per_antenna_phases(
    h: &ChannelVector,
    p: &[f64],
    sys: &SystemParams,
    restarts: usize,
    rng: &SeededRng,
) -> Result<OracleResult> {
    validate(h, p, restarts)?;
    let runs: Vec<Run> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| phase_ascent(h, p, sys, &mut rng.stream(r)))
        .collect();
    merge(runs, h, sys)
}

fn phase_ascent(h: &ChannelVector, p: &[f64], sys: &SystemParams, stream: &mut impl rand_core::RngCore) -> Run {
    let hs = h.coeffs();
    let amps: Vec<f64> = p.iter().map(|pk| pk.sqrt()).collect();
    let mut a: Vec<Complex64> = amps
        .iter()
        .map(|&m| Complex64::from_polar(m, TAU * unit_uniform(stream)))
        .collect();
    let objective = |a: &[Complex64]| {
        let s: Complex64 = hs.iter().zip(a).map(|(x, y)| x * y).sum();
        sys.log1p(s.norm_sqr() / sys.noise_power)
    };

    let mut current = objective(&a);
    let mut converged = false;
    let mut monotone = true;
    for _ in 0..MAX_SWEEPS {
        for k in 0..a.len() {
            let rest: Complex64 = hs
                .iter()
                .zip(&a)
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, (x, y))| x * y)
                .sum();
            if rest.norm() == 0.0 || hs[k].norm() == 0.0 {
                continue;
            }
            a[k] = Complex64::from_polar(amps[k], rest.arg() - hs[k].arg());
        }
        let next = objective(&a);
        if next < current - CONVERGENCE_TOL {
            monotone = false;
        }
        let gain = next - current;
        current = next;
        if gain < CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }
    Run {
        rate: current,
        cov: beam_covariance(&a, p),
        converged,
        monotone,
    }
}

/// Result of [`grid_search_n2`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub oracle: OracleResult,
    /// Phase of `q_12` at the grid maximum, in `[0, 2 pi)`.
    pub best_phase: f64,
    /// `|q_12|` at the maximum of the magnitude sweep along `best_phase`.
    pub best_magnitude: f64,
}

/// Exhaustive search over `q_12 = sqrt(P_1 P_2) e^{i psi}` on a uniform
/// phase grid, followed by a sweep of `|q_12|` from 0 to `sqrt(P_1 P_2)`
/// along the best phase.
pub fn grid_search_n2(
    h: &ChannelVector,
    p: &[f64],
    sys: &SystemParams,
    grid_points: usize,
) -> Result<GridSearchResult> {
    if h.len() != 2 {
        return Err(Error::validation("grid search is defined for two antennas only"));
    }
    validate(h, p, 1)?;
    if grid_points < 8 {
        return Err(Error::validation("grid search needs at least 8 points"));
    }
    let bound = (p[0] * p[1]).sqrt();
    let cov = |q12: Complex64| {
        let mut q = HermitianMatrix::diagonal(p);
        q.set(0, 1, q12);
        q
    };

    let mut best_phase = 0.0;
    let mut best_rate = f64::NEG_INFINITY;
    for j in 0..grid_points {
        let psi = TAU * j as f64 / grid_points as f64;
        let r = rate(h, &cov(Complex64::from_polar(bound, psi)), sys)?;
        if r > best_rate {
            best_rate = r;
            best_phase = psi;
        }
    }

    let mut best_magnitude = 0.0;
    let mut best_mag_rate = f64::NEG_INFINITY;
    for j in 0..grid_points {
        let m = bound * j as f64 / (grid_points - 1) as f64;
        let r = rate(h, &cov(Complex64::from_polar(m, best_phase)), sys)?;
        if r > best_mag_rate {
            best_mag_rate = r;
            best_magnitude = m;
        }
    }

    let best_cov = cov(Complex64::from_polar(best_magnitude, best_phase));
    Ok(GridSearchResult {
        oracle: OracleResult {
            best_rate: rate(h, &best_cov, sys)?,
            best_cov,
            restarts_used: 1,
            converged: true,
            monotone: true,
        },
        best_phase,
        best_magnitude,
    })
}

/// Projected gradient ascent on `h^T A A^dagger h^*` over `n x rank_cap`
/// factors `A`, with every row rescaled to squared norm `P_k` after each
/// step (the per-antenna budgets are active at the optimum). The gradient
/// with respect to `conj(A)` is `conj(h) (A^T h)^T`; the step size is
/// found by backtracking and grows after each accepted step.
pub fn maximize_general_rank(
    h: &ChannelVector,
    p: &[f64],
    sys: &SystemParams,
    rank_cap: usize,
    restarts: usize,
    rng: &SeededRng,
) -> Result<OracleResult> {
    validate(h, p, restarts)?;
    if rank_cap == 0 || rank_cap > h.len() {
        return Err(Error::validation("rank cap must lie in 1..=n"));
    }
    let runs: Vec<Run> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| factor_ascent(h, p, sys, rank_cap, &mut rng.stream(r)))
        .collect();
    merge(runs, h, sys)
}

fn factor_ascent(
    h: &ChannelVector,
    p: &[f64],
    sys: &SystemParams,
    cols: usize,
    stream: &mut impl rand_core::RngCore,
) -> Run {
    let hs = h.coeffs();
    let n = hs.len();

    let project = |a: &mut [Complex64]| {
        for k in 0..n {
            let row = &mut a[k * cols..(k + 1) * cols];
            let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let target = p[k].sqrt();
            if norm == 0.0 {
                row.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                row[0] = Complex64::new(target, 0.0);
            } else {
                let scale = target / norm;
                row.iter_mut().for_each(|z| *z *= scale);
            }
        }
    };
    // g = A^T h, the received combination per column.
    let combine = |a: &[Complex64]| -> Vec<Complex64> {
        (0..cols)
            .map(|j| (0..n).map(|k| hs[k] * a[k * cols + j]).sum())
            .collect()
    };
    let objective = |g: &[Complex64]| {
        let power: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        sys.log1p(power / sys.noise_power)
    };

    let mut a: Vec<Complex64> = (0..n * cols).map(|_| complex_normal(stream)).collect();
    project(&mut a);
    let mut g = combine(&a);
    let mut current = objective(&g);

    let gain_scale = h.norm_sqr().max(f64::MIN_POSITIVE);
    let mut step = 1.0 / gain_scale;
    let mut converged = false;
    let mut monotone = true;
    let mut candidate = vec![Complex64::new(0.0, 0.0); n * cols];
    for _ in 0..MAX_SWEEPS {
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            for k in 0..n {
                for j in 0..cols {
                    candidate[k * cols + j] = a[k * cols + j] + hs[k].conj() * g[j] * t;
                }
            }
            project(&mut candidate);
            let cg = combine(&candidate);
            let value = objective(&cg);
            if value >= current {
                accepted = Some((cg, value));
                break;
            }
            t *= 0.5;
        }
        let Some((cg, value)) = accepted else {
            // No ascent direction at any step size: stationary.
            converged = true;
            break;
        };
        if value < current - CONVERGENCE_TOL {
            monotone = false;
        }
        let gain = value - current;
        std::mem::swap(&mut a, &mut candidate);
        g = cg;
        current = value;
        step = (2.0 * t).min(1e12 / gain_scale);
        if gain < CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }

    let mut cov = HermitianMatrix::gram(&a, n, cols);
    for (k, &pk) in p.iter().enumerate() {
        cov.set(k, k, Complex64::new(pk, 0.0));
    }
    Run {
        rate: current,
        cov,
        converged,
        monotone,
    }
}

/// Wraps a phase into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::capacity_per_antenna;
    use crate::covariance::{check_constraint, minor_relaxation_check};
    use crate::hermitian::numerical_rank;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_channel() -> ChannelVector {
        ChannelVector::new(vec![c(0.3, 0.2), c(0.4, -0.7)]).unwrap()
    }

    #[test]
    fn phases_match_closed_form_on_test_channel() {
        let sys = SystemParams::default();
        let h = test_channel();
        let res = maximize_per_antenna_phases(&h, &[5.0, 5.0], &sys, 8, &SeededRng::new(1)).unwrap();
        let cp = capacity_per_antenna(&h, &[5.0, 5.0], &sys).unwrap().value;
        assert!(((res.best_rate - cp) / cp).abs() <= 1e-9);
        assert!(res.converged && res.monotone);
        assert_eq!(res.restarts_used, 8);
    }

    #[test]
    fn phases_real_channel_by_hand() {
        // (sqrt 2 + sqrt 8)^2 = 18.
        let sys = SystemParams::nats();
        let h = ChannelVector::from_real(&[1.0, 1.0]).unwrap();
        let res = maximize_per_antenna_phases(&h, &[2.0, 8.0], &sys, 4, &SeededRng::new(9)).unwrap();
        assert!((res.best_rate - 19f64.ln()).abs() <= 1e-12);
    }

    #[test]
    fn single_antenna_phase_is_irrelevant() {
        let sys = SystemParams::nats();
        let h = ChannelVector::new(vec![c(0.5, -1.5)]).unwrap();
        let res = maximize_per_antenna_phases(&h, &[4.0], &sys, 3, &SeededRng::new(2)).unwrap();
        assert!((res.best_rate - (4.0 * 2.5f64).ln_1p()).abs() < 1e-14);
    }

    #[test]
    fn oracle_is_deterministic() {
        let sys = SystemParams::default();
        let h = ChannelVector::new(vec![c(0.1, 0.9), c(-0.3, 0.2), c(1.2, -0.4)]).unwrap();
        let p = [1.0, 2.0, 3.0];
        let a = maximize_general_rank(&h, &p, &sys, 3, 4, &SeededRng::new(5)).unwrap();
        let b = maximize_general_rank(&h, &p, &sys, 3, 4, &SeededRng::new(5)).unwrap();
        assert_eq!(a, b);
        let a = maximize_per_antenna_phases(&h, &p, &sys, 4, &SeededRng::new(5)).unwrap();
        let b = maximize_per_antenna_phases(&h, &p, &sys, 4, &SeededRng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_search_on_test_channel() {
        let sys = SystemParams::default();
        let h = test_channel();
        let p = [5.0, 5.0];
        let grid = grid_search_n2(&h, &p, &sys, 4096).unwrap();
        let cp = capacity_per_antenna(&h, &p, &sys).unwrap().value;
        let eps = (TAU / 4096.0).powi(2);
        assert!(grid.oracle.best_rate <= cp + 1e-12);
        assert!(cp - grid.oracle.best_rate <= eps, "gap {}", cp - grid.oracle.best_rate);
        assert_eq!(grid.best_magnitude, 5.0);
    }

    #[test]
    fn grid_search_phase_matching() {
        let sys = SystemParams::default();
        let g = grid_search_n2(&ChannelVector::from_real(&[1.0, 1.0]).unwrap(), &[1.0, 1.0], &sys, 64).unwrap();
        assert_eq!(g.best_phase, 0.0);
        let g = grid_search_n2(&ChannelVector::from_real(&[1.0, -1.0]).unwrap(), &[1.0, 1.0], &sys, 64).unwrap();
        assert!((wrap_phase(g.best_phase) - PI).abs() < 1e-12);
    }

    #[test]
    fn grid_search_validation() {
        let sys = SystemParams::default();
        let h3 = ChannelVector::from_real(&[1.0, 1.0, 1.0]).unwrap();
        assert!(grid_search_n2(&h3, &[1.0; 3], &sys, 64).is_err());
        assert!(grid_search_n2(&test_channel(), &[1.0; 2], &sys, 4).is_err());
    }

    #[test]
    fn general_rank_finds_rank_one_optimum() {
        let sys = SystemParams::default();
        let h = ChannelVector::new(vec![c(0.1, 0.9), c(-0.3, 0.2), c(1.2, -0.4), c(0.05, -0.6)]).unwrap();
        let p = [1.5, 2.0, 0.7, 4.0];
        let res = maximize_general_rank(&h, &p, &sys, 4, 4, &SeededRng::new(21)).unwrap();
        let cp = capacity_per_antenna(&h, &p, &sys).unwrap().value;
        assert!(((res.best_rate - cp) / cp).abs() <= 1e-6);
        assert!(res.best_rate <= cp + 1e-9);
        assert_eq!(numerical_rank(&res.best_cov, 1e-9).unwrap(), 1);
        let pc = PowerConstraint::PerAntenna(p.to_vec());
        assert!(check_constraint(&res.best_cov, &pc, 1e-9).unwrap().satisfied);
        assert!(minor_relaxation_check(&res.best_cov, &p, 1e-9).unwrap());
        assert!(res.monotone);
    }

    #[test]
    fn rank_one_factor_agrees_with_phase_oracle() {
        let sys = SystemParams::default();
        let h = ChannelVector::new(vec![c(0.7, -0.2), c(-0.3, 0.9), c(0.4, 0.4)]).unwrap();
        let p = [3.0, 1.0, 2.0];
        let a = maximize_general_rank(&h, &p, &sys, 1, 4, &SeededRng::new(8)).unwrap();
        let b = maximize_per_antenna_phases(&h, &p, &sys, 4, &SeededRng::new(8)).unwrap();
        assert!((a.best_rate - b.best_rate).abs() <= 1e-9 * b.best_rate);
    }

    #[test]
    fn general_rank_with_single_powered_antenna() {
        let sys = SystemParams::default();
        let h = ChannelVector::new(vec![c(0.6, 0.8), c(-0.3, 0.9), c(0.4, 0.4)]).unwrap();
        let res = maximize_general_rank(&h, &[6.0, 0.0, 0.0], &sys, 3, 2, &SeededRng::new(3)).unwrap();
        assert!((res.best_rate - (6.0f64 * 1.0).ln_1p() / 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let sys = SystemParams::default();
        let h = test_channel();
        let rng = SeededRng::new(0);
        assert!(maximize_per_antenna_phases(&h, &[1.0, 1.0], &sys, 0, &rng).is_err());
        assert!(maximize_general_rank(&h, &[1.0, 1.0], &sys, 3, 1, &rng).is_err());
        assert!(maximize_general_rank(&h, &[1.0, 1.0], &sys, 0, 1, &rng).is_err());
        assert!(maximize_per_antenna_phases(&h, &[1.0], &sys, 1, &rng).is_err());
    }
}
