//! The rate functional and closed-form capacities.

use num_complex::Complex64;

use crate::channel::{ChannelVector, PowerConstraint, SystemParams};
use crate::covariance::{optimal_cov_ma, optimal_cov_per_antenna, optimal_cov_sum_power, BeamVector};
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;

/// Round-off allowance on the quadratic form, relative to its absolute-sum bound.
const QUAD_FORM_TOL: f64 = 1e-12;

/// A capacity together with the constraint and the covariance achieving it.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub value: f64,
    pub constraint: PowerConstraint,
    pub achieving_cov: HermitianMatrix,
}

/// Received SNR `h^T Q h^* / sigma^2`, validated to be real and non-negative
/// up to round-off.
pub fn received_snr(h: &ChannelVector, q: &HermitianMatrix, sys: &SystemParams) -> Result<f64> {
    let form = q.quadratic_form(h.coeffs())?;
    let scale = q.quadratic_form_scale(h.coeffs());
    let slack = QUAD_FORM_TOL * scale;
    if form.im.abs() > slack {
        return Err(Error::NumericalIntegrity(format!(
            "quadratic form has imaginary part {:e} (scale {:e})",
            form.im, scale
        )));
    }
    if form.re < -slack {
        return Err(Error::NumericalIntegrity(format!(
            "quadratic form is negative: {:e}",
            form.re
        )));
    }
    Ok(form.re.max(0.0) / sys.noise_power)
}

/// Achievable rate `log(1 + h^T Q h^* / sigma^2)` for a Gaussian input with
/// covariance `q`.
pub fn rate(h: &ChannelVector, q: &HermitianMatrix, sys: &SystemParams) -> Result<f64> {
    Ok(sys.log1p(received_snr(h, q, sys)?))
}

fn check_powers(h: &ChannelVector, p: &[f64]) -> Result<()> {
    PowerConstraint::PerAntenna(p.to_vec()).validate()?;
    if h.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: p.len(),
        });
    }
    Ok(())
}

/// Capacity under a sum power constraint, `log(1 + P ||h||^2 / sigma^2)`.
pub fn capacity_sum(h: &ChannelVector, total: f64, sys: &SystemParams) -> Result<CapacityResult> {
    let constraint = PowerConstraint::SumPower(total);
    constraint.validate()?;
    let gain = h.norm_sqr();
    let achieving_cov = if gain == 0.0 {
        HermitianMatrix::zeros(h.len())
    } else {
        optimal_cov_sum_power(h, total)?
    };
    Ok(CapacityResult {
        value: sys.log1p(total * gain / sys.noise_power),
        constraint,
        achieving_cov,
    })
}

/// Capacity with independent antennas, `log(1 + sum P_i |h_i|^2 / sigma^2)`.
pub fn capacity_ma(h: &ChannelVector, p: &[f64], sys: &SystemParams) -> Result<CapacityResult> {
    check_powers(h, p)?;
    let snr: f64 = h.coeffs().iter().zip(p).map(|(hk, pk)| pk * hk.norm_sqr()).sum::<f64>() / sys.noise_power;
    Ok(CapacityResult {
        value: sys.log1p(snr),
        constraint: PowerConstraint::IndependentMA(p.to_vec()),
        achieving_cov: optimal_cov_ma(p)?,
    })
}

/// `sum_k |h_k| sqrt(P_k)`, the coherent amplitude of the per-antenna beam.
pub fn coherent_amplitude(h: &ChannelVector, p: &[f64]) -> f64 {
    h.coeffs().iter().zip(p).map(|(hk, pk)| hk.norm() * pk.sqrt()).sum()
}

/// Capacity under per-antenna constraints,
/// `log(1 + (sum |h_i| sqrt(P_i))^2 / sigma^2)`.
pub fn capacity_per_antenna(h: &ChannelVector, p: &[f64], sys: &SystemParams) -> Result<CapacityResult> {
    check_powers(h, p)?;
    let amp = coherent_amplitude(h, p);
    Ok(CapacityResult {
        value: sys.log1p(amp * amp / sys.noise_power),
        constraint: PowerConstraint::PerAntenna(p.to_vec()),
        achieving_cov: optimal_cov_per_antenna(h, p)?,
    })
}

/// Cosine of the angle between beam `w` and the channel:
/// `|h^T w| / (||h|| ||w||)`.
///
/// The rate of beam `w` depends on `h` through `h^T w`, so this is the
/// inner product of `w` with `h^*`. For the per-antenna beam it is real and
/// non-negative before the modulus is taken.
pub fn beam_angle_cos(w: &BeamVector, h: &ChannelVector) -> Result<f64> {
    if w.weights().len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: w.weights().len(),
        });
    }
    let (wn, hn) = (w.norm(), h.norm());
    if wn == 0.0 || hn == 0.0 {
        return Err(Error::validation("beam angle is undefined for a zero vector"));
    }
    let inner: Complex64 = h.coeffs().iter().zip(w.weights()).map(|(a, b)| a * b).sum();
    Ok((inner.norm() / (hn * wn)).min(1.0))
}

/// Rate of beamforming with weights `w` at total power `P`:
/// `log(1 + P ||h||^2 cos^2(theta) / sigma^2)`.
pub fn beamforming_rate(w: &BeamVector, h: &ChannelVector, total: f64, sys: &SystemParams) -> Result<f64> {
    let cos = beam_angle_cos(w, h)?;
    Ok(sys.log1p(total * h.norm_sqr() * cos * cos / sys.noise_power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LogBase;
    use crate::covariance::beam_weights_per_antenna;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_channel() -> ChannelVector {
        ChannelVector::new(vec![c(0.3, 0.2), c(0.4, -0.7)]).unwrap()
    }

    fn bits() -> SystemParams {
        SystemParams::default()
    }

    #[test]
    fn rate_basics() {
        let h = ChannelVector::from_real(&[1.0, 1.0]).unwrap();
        assert_eq!(rate(&h, &HermitianMatrix::zeros(2), &bits()).unwrap(), 0.0);
        let r = rate(&h, &HermitianMatrix::identity(2), &SystemParams::nats()).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rate_rejects_negative_form() {
        let h = ChannelVector::from_real(&[1.0, 0.0]).unwrap();
        let q = HermitianMatrix::diagonal(&[-1.0, 0.0]);
        assert!(matches!(rate(&h, &q, &bits()), Err(Error::NumericalIntegrity(_))));
    }

    // ||h||^2 = 0.13 + 0.65 = 0.78.
    #[test]
    fn test_channel_closed_forms() {
        let h = test_channel();
        let cs = capacity_sum(&h, 10.0, &bits()).unwrap().value;
        assert!((cs - 8.8f64.log2()).abs() < 1e-13);
        assert!((cs - 3.1375).abs() < 1e-4);

        let cma = capacity_ma(&h, &[5.0, 5.0], &bits()).unwrap().value;
        assert!((cma - 4.9f64.log2()).abs() < 1e-13);
        assert!((cma - 2.2928).abs() < 1e-4);

        let amp = 0.13f64.sqrt() + 0.65f64.sqrt();
        let cp = capacity_per_antenna(&h, &[5.0, 5.0], &bits()).unwrap().value;
        assert!((cp - (1.0 + 5.0 * amp * amp).log2()).abs() < 1e-13);
        assert!((cp - 2.9648).abs() < 1e-4);

        assert!((cp / cs - 0.945).abs() < 1e-3);
        assert!((cp / cma - 1.293).abs() < 1e-3);
    }

    #[test]
    fn degenerate_inputs_give_zero() {
        let zero = ChannelVector::from_real(&[0.0, 0.0]).unwrap();
        let r = capacity_sum(&zero, 10.0, &bits()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.achieving_cov, HermitianMatrix::zeros(2));
        assert_eq!(capacity_sum(&test_channel(), 0.0, &bits()).unwrap().value, 0.0);
        assert_eq!(capacity_ma(&test_channel(), &[0.0, 0.0], &bits()).unwrap().value, 0.0);
        assert_eq!(
            capacity_per_antenna(&test_channel(), &[0.0, 0.0], &bits())
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn single_antenna_formulas_coincide() {
        let h = ChannelVector::new(vec![c(-0.4, 1.1)]).unwrap();
        let s = capacity_sum(&h, 3.0, &bits()).unwrap().value;
        let m = capacity_ma(&h, &[3.0], &bits()).unwrap().value;
        let p = capacity_per_antenna(&h, &[3.0], &bits()).unwrap().value;
        assert!((s - m).abs() < 1e-15 && (s - p).abs() < 1e-15);
    }

    #[test]
    fn achieving_covariances_reproduce_values() {
        let h = test_channel();
        let sys = bits();
        for r in [
            capacity_sum(&h, 10.0, &sys).unwrap(),
            capacity_ma(&h, &[2.0, 8.0], &sys).unwrap(),
            capacity_per_antenna(&h, &[2.0, 8.0], &sys).unwrap(),
        ] {
            let direct = rate(&h, &r.achieving_cov, &sys).unwrap();
            assert!((direct - r.value).abs() <= 1e-12 * r.value, "{:?}", r.constraint);
        }
    }

    #[test]
    fn beam_angle_cases() {
        let h = test_channel();
        let norm = h.norm();
        let matched = BeamVector(h.coeffs().iter().map(|z| z.conj() / norm).collect());
        assert!((beam_angle_cos(&matched, &h).unwrap() - 1.0).abs() < 1e-15);

        // Powers proportional to |h_k|^2 align the beam with the channel.
        let p: Vec<f64> = h.coeffs().iter().map(|z| 3.0 * z.norm_sqr()).collect();
        let w = beam_weights_per_antenna(&h, &p).unwrap();
        assert!((beam_angle_cos(&w, &h).unwrap() - 1.0).abs() < 1e-14);

        let w = beam_weights_per_antenna(&h, &[5.0, 5.0]).unwrap();
        let cos = beam_angle_cos(&w, &h).unwrap();
        let amp = 0.13f64.sqrt() + 0.65f64.sqrt();
        assert!((cos - amp * 5f64.sqrt() / (0.78f64.sqrt() * 10f64.sqrt())).abs() < 1e-14);
        assert!((cos - 0.9341).abs() < 1e-4);

        let bf = beamforming_rate(&w, &h, 10.0, &bits()).unwrap();
        let cp = capacity_per_antenna(&h, &[5.0, 5.0], &bits()).unwrap().value;
        assert!((bf - cp).abs() <= 1e-12 * cp);

        assert!(beam_angle_cos(&BeamVector(vec![c(0.0, 0.0); 2]), &h).is_err());
    }

    #[test]
    fn nats_and_bits_agree() {
        let h = test_channel();
        let n = capacity_per_antenna(&h, &[1.0, 4.0], &SystemParams::nats())
            .unwrap()
            .value;
        let b = capacity_per_antenna(&h, &[1.0, 4.0], &bits()).unwrap().value;
        assert_eq!(b, LogBase::Bits.from_nats(n));
    }
}
