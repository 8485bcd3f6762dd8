//! Command runners behind the `miso` CLI: closed-form tables, figure sweeps,
//! Monte-Carlo runs and the end-to-end verification suite.

pub mod config;
mod figures;
pub mod table;
mod verify;

pub use config::{parse_config, Command, Overrides, RunConfig, Sweep};
pub use figures::{run_capacity, run_ergodic, run_figure1, run_figure2, run_figure3};
pub use table::{fmt_num, Table};
pub use verify::{random_instance, run_verify, CheckRecord, Threshold, VerifyReport, PUBLISHED_CROSSING};

use crate::capacity::{capacity_per_antenna, capacity_sum};
use crate::channel::{ChannelVector, SystemParams};
use crate::error::{Error, Result};

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    /// Machine-readable CSV.
    pub csv: String,
    /// Human-readable report, if the command has one.
    pub summary: Option<String>,
    /// False when a verification check failed.
    pub passed: bool,
}

/// Runs the command selected in `cfg`.
pub fn run(cfg: &RunConfig) -> Result<Output> {
    let table = match cfg.command {
        Command::Capacity => run_capacity(cfg)?,
        Command::Figure1 => run_figure1(cfg)?,
        Command::Figure2 => run_figure2(cfg)?,
        Command::Figure3 => run_figure3(cfg)?,
        Command::Ergodic => run_ergodic(cfg)?,
        Command::Verify => {
            let report = run_verify(cfg)?;
            return Ok(Output {
                csv: report.to_table().render(),
                summary: Some(report.summary()),
                passed: report.passed(),
            });
        }
    };
    Ok(Output {
        csv: table.render(),
        summary: None,
        passed: true,
    })
}

/// Point on the two-antenna sweep `p = [P1, P - P1]` where the per-antenna
/// capacity meets the sum-power capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Grid argmin of `|C_s - C_p|`.
    pub grid_p1: f64,
    /// Refined location.
    pub p1: f64,
    /// `|C_s - C_p|` at `p1`.
    pub gap: f64,
    /// Equality condition `P |h_1|^2 / ||h||^2`.
    pub exact_p1: f64,
}

/// Finds the crossing on `sweep` and refines it by bisection.
///
/// `|C_s - C_p|` touches zero without changing sign, so the bisection runs
/// on the derivative of `|h_1| sqrt(P1) + |h_2| sqrt(P - P1)`, which is
/// decreasing in `P1` and vanishes exactly where the capacities meet.
pub fn locate_crossing(h: &ChannelVector, total: f64, sys: &SystemParams, sweep: &Sweep) -> Result<Crossing> {
    if h.len() != 2 {
        return Err(Error::validation("crossing point is defined for two antennas"));
    }
    let c_sum = capacity_sum(h, total, sys)?.value;
    let gap_at = |p1: f64| -> Result<f64> {
        let p = [p1, (total - p1).max(0.0)];
        Ok((c_sum - capacity_per_antenna(h, &p, sys)?.value).abs())
    };
    let mut grid_p1 = sweep.start;
    let mut best = f64::INFINITY;
    for p1 in sweep.values() {
        let g = gap_at(p1)?;
        if g < best {
            best = g;
            grid_p1 = p1;
        }
    }

    let (a, b) = (h.coeffs()[0].norm(), h.coeffs()[1].norm());
    if a == 0.0 || b == 0.0 || total == 0.0 {
        return Ok(Crossing {
            grid_p1,
            p1: grid_p1,
            gap: best,
            exact_p1: if a == 0.0 && b == 0.0 {
                grid_p1
            } else {
                total * a * a / (a * a + b * b)
            },
        });
    }
    let slope = |x: f64| a / x.sqrt() - b / (total - x).sqrt();
    let step = sweep.spacing().abs();
    let (mut lo, mut hi) = ((grid_p1 - step).max(0.0), (grid_p1 + step).min(total));
    if !(slope(lo) > 0.0 && slope(hi) <= 0.0) {
        (lo, hi) = (0.0, total);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p1 = 0.5 * (lo + hi);
    Ok(Crossing {
        grid_p1,
        p1,
        gap: gap_at(p1)?,
        exact_p1: total * a * a / h.norm_sqr(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_channel_crossing() {
        let h = config::default_channel();
        let sweep = Sweep::new(0.0, 10.0, 201).unwrap();
        let c = locate_crossing(&h, 10.0, &SystemParams::default(), &sweep).unwrap();
        assert!((c.grid_p1 - 1.65).abs() < 1e-12 || (c.grid_p1 - 1.7).abs() < 1e-12);
        assert!((c.exact_p1 - 10.0 / 6.0).abs() < 1e-12);
        assert!((c.p1 - 10.0 / 6.0).abs() < 1e-9);
        assert!(c.gap <= 1e-9);
    }

    #[test]
    fn crossing_on_coarse_grid_and_degenerate_channel() {
        let h = config::default_channel();
        let coarse = Sweep::new(0.0, 10.0, 3).unwrap();
        let c = locate_crossing(&h, 10.0, &SystemParams::default(), &coarse).unwrap();
        assert!((c.p1 - 10.0 / 6.0).abs() < 1e-9);

        let h = ChannelVector::from_real(&[0.0, 2.0]).unwrap();
        let c = locate_crossing(&h, 4.0, &SystemParams::default(), &coarse).unwrap();
        assert_eq!(c.p1, 0.0);
        assert_eq!(c.gap, 0.0);
    }
}
