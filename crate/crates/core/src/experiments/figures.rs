use rayon::prelude::*;

use super::config::{default_channel, RunConfig, DEFAULT_TOTAL_POWER};
use super::locate_crossing;
use super::table::{fmt_num, num_row, Table};
use crate::capacity::{beam_angle_cos, capacity_ma, capacity_per_antenna, capacity_sum};
use crate::channel::{ChannelVector, PowerConstraint};
use crate::covariance::beam_weights_per_antenna;
use crate::ergodic::{ergodic_oracle_quadrature, with_pool, CovariancePolicy, McEstimate, McSettings, SampleRates};
use crate::error::{Error, Result};

/// Slack allowed on `C_ma <= C_p <= C_s` per row.
const ORDERING_SLACK: f64 = 1e-12;
const FORMULA_REL_TOL: f64 = 1e-12;

/// Per-antenna budgets for an `n`-antenna command: the given list, or an
/// even split of the total.
fn per_antenna_powers(cfg: &RunConfig, n: usize) -> Result<Vec<f64>> {
    match &cfg.powers {
        Some(PowerConstraint::PerAntenna(p)) => {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.len(),
                });
            }
            Ok(p.clone())
        }
        Some(PowerConstraint::SumPower(total)) => Ok(vec![total / n as f64; n]),
        Some(PowerConstraint::IndependentMA(_)) => Err(Error::validation("unsupported power specification")),
        None => Ok(vec![DEFAULT_TOTAL_POWER / n as f64; n]),
    }
}

fn check_ordering(c_sum: f64, c_pa: f64, c_ma: f64, at: &str) -> Result<()> {
    if c_ma > c_pa + ORDERING_SLACK || c_pa > c_sum + ORDERING_SLACK {
        return Err(Error::Verification(format!(
            "capacity ordering violated at {at}: C_ma={c_ma}, C_p={c_pa}, C_s={c_sum}"
        )));
    }
    Ok(())
}

/// Closed-form capacities of one channel under the three constraints.
pub fn run_capacity(cfg: &RunConfig) -> Result<Table> {
    let h = cfg
        .channel
        .as_ref()
        .ok_or_else(|| Error::validation("capacity requires a channel"))?;
    let p = per_antenna_powers(cfg, h.len())?;
    let total: f64 = p.iter().sum();
    let c_sum = capacity_sum(h, total, &cfg.sys)?.value;
    let c_pa = capacity_per_antenna(h, &p, &cfg.sys)?.value;
    let c_ma = capacity_ma(h, &p, &cfg.sys)?.value;
    check_ordering(c_sum, c_pa, c_ma, "the given channel")?;

    let unit = cfg.sys.log_base.unit();
    let mut t = Table::new(&["constraint", "capacity", "unit"]);
    for (name, value) in [("sum", c_sum), ("per_antenna", c_pa), ("ma", c_ma)] {
        t.push(vec![name.into(), fmt_num(value), unit.into()]);
    }
    t.note("powers", p.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(";"));
    if total > 0.0 && h.norm_sqr() > 0.0 {
        let w = beam_weights_per_antenna(h, &p)?;
        t.note("cos_theta", fmt_num(beam_angle_cos(&w, h)?));
    }
    if c_sum > 0.0 {
        t.note("ratio_pa_over_sum", fmt_num(c_pa / c_sum));
    }
    if c_ma > 0.0 {
        t.note("ratio_pa_over_ma", fmt_num(c_pa / c_ma));
    }
    Ok(t)
}

/// Two-antenna sweep of `P1` at fixed total power on a constant channel.
pub fn run_figure1(cfg: &RunConfig) -> Result<Table> {
    let h = cfg.channel.clone().unwrap_or_else(default_channel);
    let sweep = cfg.sweep.ok_or_else(|| Error::validation("figure1 needs a sweep"))?;
    let total = cfg.total_power();
    let sys = cfg.sys;
    let c_sum = capacity_sum(&h, total, &sys)?.value;

    let p1s: Vec<f64> = sweep.values().collect();
    let rows = with_pool(cfg.workers, || {
        p1s.par_iter()
            .map(|&p1| {
                let p = [p1, (total - p1).max(0.0)];
                let c_pa = capacity_per_antenna(&h, &p, &sys)?.value;
                let c_ma = capacity_ma(&h, &p, &sys)?.value;
                check_ordering(c_sum, c_pa, c_ma, &format!("P1={p1}"))?;
                let ratio = if c_sum > 0.0 { c_pa / c_sum } else { f64::NAN };
                Ok(num_row(&[p[0], p[1], c_sum, c_pa, c_ma, ratio]))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut t = Table::new(&["p1", "p2", "c_sum", "c_per_antenna", "c_ma", "ratio_pa_over_sum"]);
    for row in rows {
        t.push(row);
    }
    let crossing = locate_crossing(&h, total, &sys, &sweep)?;
    t.note("crossing_p1_grid", fmt_num(crossing.grid_p1));
    t.note("crossing_p1", fmt_num(crossing.p1));
    t.note("crossing_gap", fmt_num(crossing.gap));
    t.note("crossing_p1_equality", fmt_num(crossing.exact_p1));
    Ok(t)
}

fn relative_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Capacities for `h_k = k`, `k = 1..n`, from the general formulas and from
/// their closed-form specializations.
pub fn run_figure2(cfg: &RunConfig) -> Result<Table> {
    let p0 = match &cfg.powers {
        Some(PowerConstraint::PerAntenna(p)) => p[0],
        _ => 1.0,
    };
    let sys = cfg.sys;
    let snr0 = p0 / sys.noise_power;
    let mut t = Table::new(&[
        "n",
        "c_sum",
        "c_per_antenna",
        "c_ma",
        "c_sum_formula",
        "c_per_antenna_formula",
        "c_ma_formula",
        "max_rel_diff",
    ]);
    for n in 1..=cfg.max_antennas {
        let h = ChannelVector::from_real(&(1..=n).map(|k| k as f64).collect::<Vec<_>>())?;
        let p = vec![p0; n];
        let nf = n as f64;
        let c_sum = capacity_sum(&h, nf * p0, &sys)?.value;
        let c_pa = capacity_per_antenna(&h, &p, &sys)?.value;
        let c_ma = capacity_ma(&h, &p, &sys)?.value;
        check_ordering(c_sum, c_pa, c_ma, &format!("n={n}"))?;

        let squares = nf * nf * nf / 3.0 + nf * nf / 2.0 + nf / 6.0;
        let f_ma = sys.log1p(snr0 * squares);
        let f_pa = sys.log1p(snr0 * (nf * nf + nf) * (nf * nf + nf) / 4.0);
        let f_sum = sys.log1p(nf * snr0 * squares);
        let diff = relative_diff(c_sum, f_sum)
            .max(relative_diff(c_pa, f_pa))
            .max(relative_diff(c_ma, f_ma));
        if diff.is_nan() || diff > FORMULA_REL_TOL {
            return Err(Error::Verification(format!(
                "closed forms disagree with the general formulas at n={n} (relative {diff:e})"
            )));
        }
        let mut row = vec![n.to_string()];
        row.extend(num_row(&[c_sum, c_pa, c_ma, f_sum, f_pa, f_ma, diff]));
        t.push(row);
    }
    t.note("p0", fmt_num(p0));
    Ok(t)
}

fn mc_settings(cfg: &RunConfig) -> McSettings {
    McSettings::new(cfg.n_samples, cfg.seed).with_workers(cfg.workers)
}

fn push_estimates(values: &mut Vec<f64>, estimates: &[McEstimate]) {
    for e in estimates {
        values.push(e.mean);
        values.push(e.std_error);
    }
}

/// Two-antenna Rayleigh-fading sweep of `P1` at fixed total power. All rows
/// share one sample set.
pub fn run_figure3(cfg: &RunConfig) -> Result<Table> {
    let sweep = cfg.sweep.ok_or_else(|| Error::validation("figure3 needs a sweep"))?;
    let total = cfg.total_power();
    let p1s: Vec<f64> = sweep.values().collect();

    let mut covs = vec![CovariancePolicy::SumPowerIso(total).covariance(2)?];
    for &p1 in &p1s {
        let p = vec![p1, (total - p1).max(0.0)];
        covs.push(CovariancePolicy::PerAntennaDiag(p.clone()).covariance(2)?);
        covs.push(CovariancePolicy::MaDiag(p).covariance(2)?);
    }
    let rates = SampleRates::evaluate(&covs, 2, &cfg.sys, &mc_settings(cfg))?;

    let mut t = Table::new(&[
        "p1",
        "p2",
        "c_sum",
        "c_sum_se",
        "c_per_antenna",
        "c_per_antenna_se",
        "c_ma",
        "c_ma_se",
        "gap_sum_minus_pa",
        "gap_se",
    ]);
    let c_sum = rates.estimate(0);
    let mut equal_power = None;
    for (k, &p1) in p1s.iter().enumerate() {
        let (pa, ma) = (1 + 2 * k, 2 + 2 * k);
        if rates.rates[pa] != rates.rates[ma] {
            return Err(Error::Verification(format!(
                "per-antenna and MA estimates differ at P1={p1}"
            )));
        }
        let gap = rates.difference(0, pa);
        let mut values = vec![p1, (total - p1).max(0.0)];
        push_estimates(&mut values, &[c_sum, rates.estimate(pa), rates.estimate(ma), gap]);
        t.push(num_row(&values));
        if p1 == total / 2.0 {
            equal_power = Some(gap);
        }
    }
    if let Some(gap) = equal_power {
        if gap.mean.abs() > 3.0 * gap.std_error {
            return Err(Error::Verification(format!(
                "sum-power and per-antenna estimates differ at P1 = P/2: gap {} > 3 SE {}",
                gap.mean, gap.std_error
            )));
        }
        t.note("equal_power_gap", fmt_num(gap.mean));
        t.note("equal_power_gap_se", fmt_num(gap.std_error));
    }
    t.note("samples", cfg.n_samples);
    t.note("seed", cfg.seed);
    Ok(t)
}

/// Ergodic capacities for one power vector, with quadrature references for
/// one or two antennas.
pub fn run_ergodic(cfg: &RunConfig) -> Result<Table> {
    let p = match &cfg.powers {
        Some(PowerConstraint::PerAntenna(p)) => p.clone(),
        Some(_) => return Err(Error::validation("ergodic takes per-antenna powers")),
        None => vec![5.0, 5.0],
    };
    let n = p.len();
    let total: f64 = p.iter().sum();
    let policies = [
        CovariancePolicy::SumPowerIso(total),
        CovariancePolicy::PerAntennaDiag(p.clone()),
        CovariancePolicy::MaDiag(p.clone()),
    ];
    let covs = policies
        .iter()
        .map(|pol| pol.covariance(n))
        .collect::<Result<Vec<_>>>()?;
    let rates = SampleRates::evaluate(&covs, n, &cfg.sys, &mc_settings(cfg))?;

    let mut t = Table::new(&[
        "n",
        "total_power",
        "c_sum",
        "c_sum_se",
        "c_per_antenna",
        "c_per_antenna_se",
        "c_ma",
        "c_ma_se",
        "gap_sum_minus_pa",
        "gap_se",
        "c_sum_quadrature",
        "c_ma_quadrature",
    ]);
    let mut values = vec![total];
    push_estimates(
        &mut values,
        &[
            rates.estimate(0),
            rates.estimate(1),
            rates.estimate(2),
            rates.difference(0, 1),
        ],
    );
    let mut row = vec![n.to_string()];
    row.extend(num_row(&values));
    for policy in [&policies[0], &policies[2]] {
        row.push(if n <= 2 {
            fmt_num(ergodic_oracle_quadrature(n, policy, &cfg.sys)?)
        } else {
            String::new()
        });
    }
    t.push(row);
    t.note("samples", cfg.n_samples);
    t.note("seed", cfg.seed);
    Ok(t)
}
