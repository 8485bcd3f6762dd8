//! Optimal transmit covariances for each power-constraint regime, plus
//! constraint checks.

use num_complex::Complex64;

use crate::channel::{ChannelVector, PowerConstraint};
use crate::error::{Error, Result};
use crate::hermitian::{min_eigen_violation, HermitianMatrix};

/// Default absolute tolerance on power checks.
pub const DEFAULT_POWER_TOL: f64 = 1e-9;

/// Beamforming weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector(pub Vec<Complex64>);

impl BeamVector {
    pub fn weights(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn validate_powers(p: &[f64]) -> Result<()> {
    PowerConstraint::PerAntenna(p.to_vec()).validate()
}

fn check_dims(h: &ChannelVector, p: &[f64]) -> Result<()> {
    if h.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: p.len(),
        });
    }
    Ok(())
}

/// Unit phasor `conj(h_k) / |h_k|`, taken as `1` when `h_k = 0`.
pub fn phase_conjugate(hk: Complex64) -> Complex64 {
    let mag = hk.norm();
    if mag == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        hk.conj() / mag
    }
}

/// `Q = P u u^dagger` with `u = h^* / ||h||`: all power along the matched beam.
pub fn optimal_cov_sum_power(h: &ChannelVector, total: f64) -> Result<HermitianMatrix> {
    PowerConstraint::SumPower(total).validate()?;
    let norm = h.norm();
    if norm == 0.0 {
        return Err(Error::validation("zero channel has no beam direction"));
    }
    let u: Vec<Complex64> = h.coeffs().iter().map(|z| z.conj() / norm).collect();
    Ok(HermitianMatrix::outer(total, &u))
}

/// Optimal covariance under per-antenna constraints: rank one, diagonal
/// exactly `p`, and off-diagonals `eta_i conj(eta_j) sqrt(P_i P_j)` where
/// `eta_k` is the conjugate phase of `h_k`. This is `P v v^dagger` for the
/// beam `v` of [`beam_weights_per_antenna`].
pub fn optimal_cov_per_antenna(h: &ChannelVector, p: &[f64]) -> Result<HermitianMatrix> {
    validate_powers(p)?;
    check_dims(h, p)?;
    let amp: Vec<Complex64> = h
        .coeffs()
        .iter()
        .zip(p)
        .map(|(&hk, &pk)| phase_conjugate(hk) * pk.sqrt())
        .collect();
    let mut q = HermitianMatrix::outer(1.0, &amp);
    for (k, &pk) in p.iter().enumerate() {
        q.set(k, k, Complex64::new(pk, 0.0));
    }
    Ok(q)
}

/// `diag{P_1..P_n}`: independent signals at full power.
pub fn optimal_cov_ma(p: &[f64]) -> Result<HermitianMatrix> {
    validate_powers(p)?;
    Ok(HermitianMatrix::diagonal(p))
}

/// Per-antenna beam `w_k = eta_k sqrt(P_k / P)` with `P = sum P_i`.
pub fn beam_weights_per_antenna(h: &ChannelVector, p: &[f64]) -> Result<BeamVector> {
    validate_powers(p)?;
    check_dims(h, p)?;
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::validation("beam weights need positive total power"));
    }
    Ok(BeamVector(
        h.coeffs()
            .iter()
            .zip(p)
            .map(|(&hk, &pk)| phase_conjugate(hk) * (pk / total).sqrt())
            .collect(),
    ))
}

/// Outcome of [`check_constraint`]. Each field is a violation amount; zero
/// means the check holds with room to spare.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub satisfied: bool,
    pub worst_violation: f64,
    /// `max_i (q_ii - P_i)` (per-antenna and MA).
    pub diagonal: f64,
    /// `trace(Q) - P` (sum power).
    pub trace: f64,
    /// `-lambda_min / max(1, trace)`.
    pub psd: f64,
    /// Largest off-diagonal magnitude (MA only).
    pub off_diagonal: f64,
}

/// Checks `q` against a power constraint with absolute tolerance `tol`.
pub fn check_constraint(q: &HermitianMatrix, pc: &PowerConstraint, tol: f64) -> Result<ConstraintReport> {
    pc.validate()?;
    if let Some(n) = pc.dim() {
        if n != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: q.dim(),
                found: n,
            });
        }
    }
    let diag = q.diag();
    let excess = |limits: &[f64]| {
        diag.iter()
            .zip(limits)
            .map(|(d, l)| d - l)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    };
    let mut report = ConstraintReport {
        satisfied: false,
        worst_violation: 0.0,
        diagonal: 0.0,
        trace: 0.0,
        psd: 0.0,
        off_diagonal: 0.0,
    };
    match pc {
        PowerConstraint::SumPower(p) => {
            report.trace = (q.trace() - p).max(0.0);
            report.psd = min_eigen_violation(q, 0.0)?.max(0.0);
        }
        PowerConstraint::PerAntenna(ps) => {
            report.diagonal = excess(ps);
            report.psd = min_eigen_violation(q, 0.0)?.max(0.0);
        }
        PowerConstraint::IndependentMA(ps) => {
            report.diagonal = excess(ps);
            report.off_diagonal = q.max_abs_offdiag();
            // A diagonal matrix is PSD iff its diagonal is non-negative.
            report.psd = diag.iter().map(|&d| -d).fold(0.0, f64::max);
        }
    }
    report.worst_violation = report
        .diagonal
        .max(report.trace)
        .max(report.psd)
        .max(report.off_diagonal);
    report.satisfied = report.worst_violation <= tol;
    Ok(report)
}

/// True iff every 2x2 principal minor built on the power budgets is PSD,
/// i.e. `|q_ij|^2 <= P_i P_j + tol` for all `i != j`. Requires `q_ii = P_i`
/// to within `tol`.
pub fn minor_relaxation_check(q: &HermitianMatrix, p: &[f64], tol: f64) -> Result<bool> {
    validate_powers(p)?;
    if p.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            found: p.len(),
        });
    }
    if q.diag().iter().zip(p).any(|(d, pk)| (d - pk).abs() > tol) {
        return Err(Error::validation("diagonal of Q must equal the antenna powers"));
    }
    let n = q.dim();
    for i in 0..n {
        for j in (i + 1)..n {
            if q.get(i, j).norm_sqr() > p[i] * p[j] + tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
