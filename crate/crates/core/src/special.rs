//! Exponential integral and Gauss-Laguerre quadrature.
//!
//! Both exist to check the Monte-Carlo engine against deterministic
//! numerics: for `X ~ Exp(1)`, `E[ln(1 + a X)] = e^{1/a} E1(1/a)`.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = int_x^inf e^{-t}/t dt` for `x > 0`.
///
/// Power series below 1, modified-Lentz continued fraction above.
pub fn expint_e1(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::validation("E1 requires a finite positive argument"));
    }
    if x <= 1.0 {
        // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let contrib = term / k as f64;
            sum += contrib;
            if contrib.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        Ok(-EULER_GAMMA - x.ln() - sum)
    } else {
        // E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        Ok(h * (-x).exp())
    }
}

/// `E[ln(1 + a X)]` for `X ~ Exp(1)`, in nats, via `e^{1/a} E1(1/a)`.
pub fn exp_log1p_mean(a: f64) -> Result<f64> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::validation("scale must be finite and non-negative"));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let inv = 1.0 / a;
    // For large 1/a, e^{1/a} overflows before the product does; 1/a > 700
    // means a < 1.4e-3 where ln(1 + aX) ~ aX to well below 1e-6.
    if inv > 700.0 {
        return Ok(a - a * a + 2.0 * a * a * a);
    }
    Ok(inv.exp() * expint_e1(inv)?)
}

/// Nodes and weights of the `n`-point Gauss-Laguerre rule for weight
/// `e^{-x}` on `[0, inf)`.
///
/// Newton iteration on the three-term recurrence, seeded with the usual
/// asymptotic node estimates.
pub fn gauss_laguerre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > 180 {
        return Err(Error::validation("Gauss-Laguerre order must be in 1..=180"));
    }
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut z = 0.0_f64;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - nodes[i - 2])
            }
        };
        let mut converged = false;
        let mut deriv = 0.0;
        let mut prev = 0.0;
        for _ in 0..100 {
            // L_n(z) and L_{n-1}(z) by recurrence.
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
            }
            prev = p2;
            deriv = nf * (p1 - p2) / z;
            let z1 = z;
            z = z1 - p1 / deriv;
            if (z - z1).abs() <= 3e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NumericalIntegrity(format!(
                "Gauss-Laguerre node {i} of {n} did not converge"
            )));
        }
        nodes[i] = z;
        weights[i] = -1.0 / (deriv * nf * prev);
    }
    Ok((nodes, weights))
}

/// Quadrature rule for `E[f(X)]`, `X ~ Exp(1)`, as `(points, weights)`.
///
/// The integrands of interest, `ln(1 + a x)` with `a` up to ~100, have a
/// log singularity at `x = -1/a`, which starves plain Gauss-Laguerre of
/// accuracy. The rule substitutes `x = t^3 / (t + 8)^2` (a monotone map of
/// `[0, inf)` onto itself with `x ~ t` at infinity) and applies
/// Gauss-Laguerre in `t`, which pushes the singularity away from the
/// integration path.
pub fn exponential_expectation_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const SHIFT: f64 = 8.0;
    let (t, w) = gauss_laguerre(n)?;
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (&ti, &wi) in t.iter().zip(&w) {
        let s = ti + SHIFT;
        let x = ti * ti * ti / (s * s);
        let dx = (3.0 * ti * ti * s - 2.0 * ti * ti * ti) / (s * s * s);
        points.push(x);
        weights.push(wi * (ti - x).exp() * dx);
    }
    Ok((points, weights))
}
