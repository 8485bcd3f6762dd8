//! Run configuration: JSON file values overridden by command-line flags.

use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Deserialize;

use crate::channel::{ChannelVector, LogBase, PowerConstraint, SystemParams};
use crate::ergodic::DEFAULT_SAMPLES;
use crate::error::{Error, Result};
use crate::oracle::DEFAULT_RESTARTS;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TOTAL_POWER: f64 = 10.0;
pub const DEFAULT_INSTANCES: usize = 100;
pub const DEFAULT_MAX_ANTENNAS: usize = 32;
pub const FIGURE1_STEPS: usize = 201;
pub const FIGURE3_STEPS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Capacity,
    Verify,
    Figure1,
    Figure2,
    Figure3,
    Ergodic,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Capacity => "capacity",
            Command::Verify => "verify",
            Command::Figure1 => "figure1",
            Command::Figure2 => "figure2",
            Command::Figure3 => "figure3",
            Command::Ergodic => "ergodic",
        }
    }
}

/// Raw option values, from flags or from a config file. `None` means unset.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub channel: Option<String>,
    pub powers: Option<Vec<f64>>,
    pub power_total: Option<f64>,
    pub noise: Option<f64>,
    pub log_base: Option<LogBase>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub instances: Option<usize>,
    pub restarts: Option<usize>,
    pub max_antennas: Option<usize>,
    pub perturb_q: Option<f64>,
}

impl Overrides {
    fn check_conflicts(&self, source: &str) -> Result<()> {
        if self.powers.is_some() && self.power_total.is_some() {
            return Err(Error::validation(format!(
                "{source}: powers and power_total are mutually exclusive"
            )));
        }
        Ok(())
    }

    /// `self` with every value set in `top` replacing its own.
    fn overridden_by(mut self, top: Overrides) -> Overrides {
        if top.powers.is_some() || top.power_total.is_some() {
            self.powers = top.powers;
            self.power_total = top.power_total;
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if top.$field.is_some() { self.$field = top.$field; } )* };
        }
        take!(
            channel,
            noise,
            log_base,
            seed,
            samples,
            steps,
            out,
            workers,
            instances,
            restarts,
            max_antennas,
            perturb_q
        );
        self
    }
}

/// Uniform sweep `start..=stop` in `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) {
            return Err(Error::validation("sweep bounds must be finite"));
        }
        if steps < 2 {
            return Err(Error::validation("a sweep needs at least 2 steps"));
        }
        Ok(Self { start, stop, steps })
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            return self.stop;
        }
        self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(|i| self.value(i))
    }

    pub fn spacing(&self) -> f64 {
        (self.stop - self.start) / (self.steps - 1) as f64
    }
}

/// Fully resolved settings for one CLI invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub channel: Option<ChannelVector>,
    /// `PerAntenna` from a power list, `SumPower` from a total.
    pub powers: Option<PowerConstraint>,
    pub sys: SystemParams,
    pub sweep: Option<Sweep>,
    pub seed: u64,
    pub n_samples: usize,
    pub output_path: Option<PathBuf>,
    pub workers: usize,
    pub instances: usize,
    pub restarts: usize,
    pub max_antennas: usize,
    pub perturb_q: Option<f64>,
}

impl RunConfig {
    /// Total transmit power, defaulting to 10.
    pub fn total_power(&self) -> f64 {
        self.powers
            .as_ref()
            .map_or(DEFAULT_TOTAL_POWER, crate::channel::total_power)
    }
}

/// The test channel `[0.3+0.2i, 0.4-0.7i]`.
pub fn default_channel() -> ChannelVector {
    ChannelVector::new(vec![Complex64::new(0.3, 0.2), Complex64::new(0.4, -0.7)]).expect("finite")
}

/// Parses `a+bi`, `a-bi`, `a`, or `bi`. Only `i` is accepted as the
/// imaginary unit.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s = text.trim();
    let bad = || Error::validation(format!("malformed complex literal '{text}'"));
    if s.is_empty() {
        return Err(bad());
    }
    let number = |t: &str| -> Result<f64> {
        if t.is_empty() || t.contains(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
            return Err(bad());
        }
        let v = f64::from_str(t).map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(number(s)?, 0.0));
    };
    // Split at the last sign that is not leading and not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => number(t),
        }
    };
    match split {
        Some(k) => Ok(Complex64::new(number(&body[..k])?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Comma-separated complex coefficients.
pub fn parse_channel(text: &str) -> Result<ChannelVector> {
    let coeffs = text.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
    ChannelVector::new(coeffs)
}

/// Merges file values (if any) with flag values (flags win) and validates.
pub fn parse_config(command: Command, flags: Overrides, file: Option<&str>) -> Result<RunConfig> {
    flags.check_conflicts("command line")?;
    let base = match file {
        Some(text) => {
            let parsed: Overrides =
                serde_json::from_str(text).map_err(|e| Error::validation(format!("config file: {e}")))?;
            parsed.check_conflicts("config file")?;
            parsed
        }
        None => Overrides::default(),
    };
    let o = base.overridden_by(flags);

    let channel = o.channel.as_deref().map(parse_channel).transpose()?;
    let powers = match (o.powers, o.power_total) {
        (Some(list), None) => Some(PowerConstraint::PerAntenna(list)),
        (None, Some(total)) => Some(PowerConstraint::SumPower(total)),
        (None, None) => None,
        (Some(_), Some(_)) => unreachable!("conflicts rejected above"),
    };
    if let Some(pc) = &powers {
        pc.validate()?;
    }
    let sys = SystemParams::new(o.noise.unwrap_or(1.0), o.log_base.unwrap_or_default())?;

    let mut cfg = RunConfig {
        command,
        channel,
        powers,
        sys,
        sweep: None,
        seed: o.seed.unwrap_or(DEFAULT_SEED),
        n_samples: o.samples.unwrap_or(DEFAULT_SAMPLES),
        output_path: o.out,
        workers: o.workers.unwrap_or(0),
        instances: o.instances.unwrap_or(DEFAULT_INSTANCES),
        restarts: o.restarts.unwrap_or(DEFAULT_RESTARTS),
        max_antennas: o.max_antennas.unwrap_or(DEFAULT_MAX_ANTENNAS),
        perturb_q: o.perturb_q,
    };

    if cfg.restarts == 0 {
        return Err(Error::validation("--restarts must be at least 1"));
    }
    if let Some(eps) = cfg.perturb_q {
        if !eps.is_finite() {
            return Err(Error::validation("--perturb-q must be finite"));
        }
    }
    match command {
        Command::Capacity => {
            let h = cfg
                .channel
                .as_ref()
                .ok_or_else(|| Error::validation("capacity requires --channel"))?;
            if let Some(PowerConstraint::PerAntenna(p)) = &cfg.powers {
                if p.len() != h.len() {
                    return Err(Error::validation(format!(
                        "{} powers given for {} antennas",
                        p.len(),
                        h.len()
                    )));
                }
            }
        }
        Command::Figure1 => {
            let h = cfg.channel.get_or_insert_with(default_channel);
            if h.len() != 2 {
                return Err(Error::validation("figure1 needs a two-antenna channel"));
            }
            cfg.sweep = Some(Sweep::new(0.0, cfg.total_power(), o.steps.unwrap_or(FIGURE1_STEPS))?);
        }
        Command::Figure2 => {
            if let Some(pc) = &cfg.powers {
                if !matches!(pc, PowerConstraint::PerAntenna(p) if p.len() == 1) {
                    return Err(Error::validation(
                        "figure2 takes a single per-antenna power via --powers",
                    ));
                }
            }
            if cfg.max_antennas == 0 {
                return Err(Error::validation("--max-antennas must be at least 1"));
            }
        }
        Command::Figure3 => {
            cfg.sweep = Some(Sweep::new(0.0, cfg.total_power(), o.steps.unwrap_or(FIGURE3_STEPS))?);
        }
        Command::Ergodic => {
            if matches!(cfg.powers, Some(PowerConstraint::SumPower(_))) {
                return Err(Error::validation("ergodic takes a per-antenna power list via --powers"));
            }
        }
        Command::Verify => {
            if cfg.instances == 0 {
                return Err(Error::validation("--instances must be at least 1"));
            }
        }
    }
    if matches!(command, Command::Ergodic | Command::Figure3) && cfg.n_samples < crate::ergodic::MIN_SAMPLES {
        return Err(Error::validation("--samples must be at least 100"));
    }
    Ok(cfg)
}
