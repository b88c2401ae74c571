//! Parameter sweeps: configuration parsing, analytic and simulated
//! evaluation of each sweep point, CSV output, and the reference figure and
//! table presets.
//!
//! Configuration files are flat `key = value` text, one entry per line, with
//! `#` comments and comma-separated lists. Recognized keys and defaults:
//!
//! | key           | default          |                                      |
//! |---------------|------------------|--------------------------------------|
//! | `signal`      | `three_harmonic` | or `file`, read from `signal_file`   |
//! | `signal_file` |                  | one real per line                    |
//! | `eta`         | `10000`          | samples (three-harmonic only)        |
//! | `tau`         | `1`              | sampling period                      |
//! | `x_th`        | `4.5`            | threshold                            |
//! | `s`           | `0`              | label of `x <= x_th`                 |
//! | `n`           | `3`              | sensors                              |
//! | `mu`          | `0`              | noise mean                           |
//! | `sigma2`      | `1`              | noise variance                       |
//! | `hops`        | `0.1`            | per-hop flip probabilities           |
//! | `rules`       | `or,and,majority`| also `kofn:K`                        |
//! | `trials`      | `100`            | passes over the grid when simulating |
//! | `seed`        | `0`              |                                      |
//! | `workers`     | all cores        |                                      |
//! | `mode`        | `analytic`       | `simulate` or `both`                 |
//! | `sweep`       | `N=<n>`          | `AXIS=start:step:end` or `AXIS=a,b,c`|
//! | `out`         | stdout           | CSV path                             |
//!
//! Sweep axes are `N` (sensors), `M` (hops, each with the first hop's
//! probability), `p` (flip probability of every hop) and `x_th`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::fusion::{error_probability, per_sample_mismatch, ErrorReport, FusionRule};
use crate::montecarlo::{run_simulation, SimulationResult, TrialConfig, DEFAULT_TRIALS};
use crate::sensing::{sensing_profile, SensorModel};
use crate::signal::{quantize, QuantizationConvention, SignalSpec};

/// First line of every CSV written by [`write_csv`].
pub const CSV_SCHEMA: &str = "# wsn-fusion sweep v1";

const KNOWN_KEYS: &[&str] = &[
    "signal",
    "signal_file",
    "eta",
    "tau",
    "x_th",
    "s",
    "n",
    "mu",
    "sigma2",
    "hops",
    "rules",
    "trials",
    "seed",
    "workers",
    "mode",
    "sweep",
    "out",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Analytic,
    Simulate,
    Both,
}

impl Mode {
    pub fn analytic(self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }

    pub fn simulate(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Both)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analytic" => Ok(Mode::Analytic),
            "simulate" => Ok(Mode::Simulate),
            "both" => Ok(Mode::Both),
            _ => Err(Error::Parse {
                key: "mode".into(),
                value: s.into(),
                reason: "expected analytic, simulate or both".into(),
            }),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Both => "both",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Sensors,
    Hops,
    FlipProb,
    Threshold,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Sensors => "N",
            SweepAxis::Hops => "M",
            SweepAxis::FlipProb => "p",
            SweepAxis::Threshold => "x_th",
        }
    }

    fn integral(self) -> bool {
        matches!(self, SweepAxis::Sensors | SweepAxis::Hops)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "N" | "n" => Ok(SweepAxis::Sensors),
            "M" | "m" => Ok(SweepAxis::Hops),
            "p" | "P" => Ok(SweepAxis::FlipProb),
            "x_th" | "xth" => Ok(SweepAxis::Threshold),
            other => Err(Error::Parse {
                key: "sweep".into(),
                value: other.into(),
                reason: "axis must be N, M, p or x_th".into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("sweep has no values"));
        }
        for &v in &values {
            let ok = match axis {
                SweepAxis::Sensors | SweepAxis::Hops => v >= 1.0 && v.fract() == 0.0,
                SweepAxis::FlipProb => (0.0..=1.0).contains(&v),
                SweepAxis::Threshold => v.is_finite(),
            };
            if !ok {
                return Err(Error::config(format!(
                    "sweep value {v} is not valid for axis {}",
                    axis.name()
                )));
            }
        }
        Ok(Sweep { axis, values })
    }

    /// `AXIS=start:step:end` (inclusive) or `AXIS=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Parse {
            key: "sweep".into(),
            value: text.into(),
            reason: reason.into(),
        };
        let (axis, spec) = text
            .split_once('=')
            .ok_or_else(|| bad("expected AXIS=values"))?;
        let axis: SweepAxis = axis.parse()?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(&e.to_string()));
        let values = if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            let [start, step, end] = parts[..] else {
                return Err(bad("range must be start:step:end"));
            };
            let (start, step, end) = (num(start)?, num(step)?, num(end)?);
            if !(step > 0.0) || end < start {
                return Err(bad("range needs step > 0 and end >= start"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect()
        } else {
            spec.split(',').map(num).collect::<Result<Vec<_>>>()?
        };
        Sweep::new(axis, values)
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{}={}", self.axis.name(), vals.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub base: TrialConfig,
    pub sweep: Sweep,
    pub mode: Mode,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Base configuration with one sweep point substituted.
    pub fn point(&self, value: f64) -> Result<TrialConfig> {
        let mut cfg = self.base.clone();
        match self.sweep.axis {
            SweepAxis::Sensors => cfg.sensors = cfg.sensors.with_sensors(value as usize)?,
            SweepAxis::Hops => {
                cfg.channel = ChannelSpec::uniform(cfg.channel.hop_probs()[0], value as usize)?
            }
            SweepAxis::FlipProb => cfg.channel = ChannelSpec::uniform(value, cfg.channel.hops())?,
            SweepAxis::Threshold => cfg.x_th = value,
        }
        Ok(cfg)
    }
}

fn parse_key_values(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            key: format!("{origin}:{}", lineno + 1),
            value: line.into(),
            reason: "expected `key = value`".into(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn canonical_key(key: &str) -> Result<String> {
    let k = key.trim().to_ascii_lowercase().replace('-', "_");
    let k = match k.as_str() {
        "xth" => "x_th".to_string(),
        "sensors" => "n".to_string(),
        "convention" => "s".to_string(),
        _ => k,
    };
    if KNOWN_KEYS.contains(&k.as_str()) {
        Ok(k)
    } else {
        Err(Error::UnknownKey {
            key: key.trim().to_string(),
        })
    }
}

fn value<T: FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T>
where
    T::Err: fmt::Display,
{
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|e: T::Err| Error::Parse {
            key: key.into(),
            value: v.clone(),
            reason: e.to_string(),
        }),
    }
}

fn list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    text.split(',')
        .map(|s| {
            s.trim().parse().map_err(|e: T::Err| Error::Parse {
                key: key.into(),
                value: text.into(),
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Builds a configuration from an optional file and `key=value` overrides;
/// overrides win. Unknown or repeated file keys are rejected.
pub fn parse_config(
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut map = BTreeMap::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read configuration {}: {e}", path.display()))
        })?;
        for (k, v) in parse_key_values(&text, &path.display().to_string())? {
            let k = canonical_key(&k)?;
            if map.insert(k.clone(), v).is_some() {
                return Err(Error::config(format!(
                    "key `{k}` given twice in {}",
                    path.display()
                )));
            }
        }
    }
    for (k, v) in overrides {
        map.insert(canonical_key(k)?, v.clone());
    }
    build_config(&map)
}

fn build_config(map: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
    let signal = match map.get("signal").map(|s| s.to_ascii_lowercase()) {
        None => SignalSpec::three_harmonic(value(map, "eta", 10_000usize)?)?,
        Some(s) if s == "three_harmonic" => {
            SignalSpec::three_harmonic(value(map, "eta", 10_000usize)?)?
        }
        Some(s) if s == "file" => {
            let path = map
                .get("signal_file")
                .ok_or_else(|| Error::config("signal = file needs signal_file"))?;
            SignalSpec::from_file(path)?
        }
        Some(other) => {
            return Err(Error::Parse {
                key: "signal".into(),
                value: other,
                reason: "expected three_harmonic or file".into(),
            })
        }
    };
    let from_file = map
        .get("signal")
        .is_some_and(|s| s.eq_ignore_ascii_case("file"));
    if map.contains_key("signal_file") && !from_file {
        return Err(Error::config("signal_file given without signal = file"));
    }
    let signal = signal.with_tau(value(map, "tau", 1.0)?)?;
    let sensors = SensorModel::new(
        value(map, "n", 3usize)?,
        value(map, "mu", 0.0)?,
        value(map, "sigma2", 1.0)?,
    )?;
    let hops = match map.get("hops") {
        Some(text) => list::<f64>("hops", text)?,
        None => vec![0.1],
    };
    let rules = match map.get("rules") {
        Some(text) => list::<FusionRule>("rules", text)?,
        None => vec![FusionRule::Or, FusionRule::And, FusionRule::Majority],
    };
    let workers = match map.get("workers") {
        Some(_) => Some(value(map, "workers", 1usize)?),
        None => None,
    };
    let base = TrialConfig {
        signal,
        x_th: value(map, "x_th", 4.5)?,
        convention: QuantizationConvention::from_label(value(map, "s", 0u8)?)?,
        sensors,
        channel: ChannelSpec::new(hops)?,
        rules,
        trials: value(map, "trials", DEFAULT_TRIALS)?,
        seed: value(map, "seed", 0u64)?,
        workers,
    };
    base.validate()?;
    let sweep = match map.get("sweep") {
        Some(text) => Sweep::parse(text)?,
        None => Sweep::new(SweepAxis::Sensors, vec![base.sensors.sensors() as f64])?,
    };
    Ok(ExperimentConfig {
        base,
        sweep,
        mode: value(map, "mode", Mode::Analytic)?,
        out: map.get("out").map(PathBuf::from),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub rule: FusionRule,
    pub analytic: Option<f64>,
    pub simulated: Option<f64>,
    pub std_err: Option<f64>,
    /// Analytic when available, otherwise the simulated rate.
    pub type_i: f64,
    pub type_ii: f64,
    pub f0: f64,
    pub f1: f64,
}

impl SweepRow {
    /// Whether the simulated rate lies within `sigmas` standard errors of the
    /// analytic value; `None` unless both are present.
    pub fn agrees(&self, sigmas: f64) -> Option<bool> {
        match (self.analytic, self.simulated, self.std_err) {
            (Some(a), Some(s), Some(se)) => Some((a - s).abs() <= sigmas * se),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub mode: Mode,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn column(&self, rule: FusionRule) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.rule == rule).collect()
    }
}

/// Analytic reports for every rule of one configuration.
pub fn analytic_reports(cfg: &TrialConfig) -> Result<Vec<ErrorReport>> {
    cfg.validate()?;
    let signal = cfg.signal.sample();
    let states = quantize(&signal, cfg.x_th, cfg.convention);
    let profile = sensing_profile(&signal, cfg.x_th, &cfg.sensors);
    let mismatch = per_sample_mismatch(&profile, cfg.channel.flip_probability(), &states)?;
    cfg.rules
        .iter()
        .map(|&rule| error_probability(rule, &mismatch, &states, cfg.sensors.sensors()))
        .collect()
}

fn evaluate_point(config: &ExperimentConfig, value: f64) -> Result<Vec<SweepRow>> {
    let cfg = config.point(value)?;
    cfg.validate()?;
    let analytic = if config.mode.analytic() {
        Some(analytic_reports(&cfg)?)
    } else {
        None
    };
    let simulated: Option<SimulationResult> = if config.mode.simulate() {
        Some(run_simulation(&cfg)?)
    } else {
        None
    };
    let (f0, f1) = quantize(&cfg.signal.sample(), cfg.x_th, cfg.convention).frequencies();
    Ok(cfg
        .rules
        .iter()
        .enumerate()
        .map(|(k, &rule)| {
            let a = analytic.as_ref().map(|r| &r[k]);
            let s = simulated.as_ref().map(|r| &r.rules[k]);
            SweepRow {
                value,
                rule,
                analytic: a.map(|r| r.p_e),
                simulated: s.map(|r| r.p_e),
                std_err: s.map(|r| r.std_err),
                type_i: a.map_or_else(|| s.map_or(0.0, |s| s.type_i), |a| a.type_i),
                type_ii: a.map_or_else(|| s.map_or(0.0, |s| s.type_ii), |a| a.type_ii),
                f0,
                f1,
            }
        })
        .collect())
}

/// Evaluates every sweep point and, when `out` is set, writes the CSV.
/// Rows are ordered by sweep value, then by rule as configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult> {
    let per_point: Vec<Vec<SweepRow>> = config
        .sweep
        .values
        .par_iter()
        .map(|&v| evaluate_point(config, v))
        .collect::<Result<_>>()?;
    let result = SweepResult {
        axis: config.sweep.axis,
        mode: config.mode,
        seed: config.base.seed,
        rows: per_point.into_iter().flatten().collect(),
    };
    if let Some(path) = &config.out {
        write_csv_atomic(&result, path)?;
    }
    Ok(result)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_value(axis: SweepAxis, v: f64) -> String {
    if axis.integral() {
        format!("{}", v as u64)
    } else {
        v.to_string()
    }
}

/// Schema line, then `sweep_value,rule,analytic_pe,simulated_pe,std_err,
/// type_i,type_ii,f0,f1`. Missing values are empty fields.
pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{CSV_SCHEMA} axis={} mode={} seed={}",
        result.axis.name(),
        result.mode,
        result.seed
    )
    .map_err(|e| Error::io("<csv>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sweep_value",
        "rule",
        "analytic_pe",
        "simulated_pe",
        "std_err",
        "type_i",
        "type_ii",
        "f0",
        "f1",
    ])?;
    for r in &result.rows {
        w.write_record([
            fmt_value(result.axis, r.value),
            r.rule.to_string(),
            fmt_opt(r.analytic),
            fmt_opt(r.simulated),
            fmt_opt(r.std_err),
            r.type_i.to_string(),
            r.type_ii.to_string(),
            r.f0.to_string(),
            r.f1.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Writes to a temporary file next to `path` and renames it into place.
pub fn write_csv_atomic(result: &SweepResult, path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(result, &mut tmp)?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Sensor counts plotted by the N-sweep figures.
pub const FIGURE_N_RANGE: (usize, usize) = (1, 41);

/// Hop counts plotted by the M-sweep figure.
pub const FIGURE_M_RANGE: (usize, usize) = (1, 20);

/// Sweep of one reference figure, numbered 4 to 9.
pub fn figure_config(figure: u8) -> Result<ExperimentConfig> {
    let mut base = TrialConfig::reference(10_000)?;
    let n_values = || {
        (FIGURE_N_RANGE.0..=FIGURE_N_RANGE.1)
            .map(|n| n as f64)
            .collect::<Vec<_>>()
    };
    let sweep = match figure {
        4..=7 => {
            base.x_th = [4.5, 5.5, 3.0, 1.5][figure as usize - 4];
            Sweep::new(SweepAxis::Sensors, n_values())?
        }
        8 => Sweep::new(
            SweepAxis::Hops,
            (FIGURE_M_RANGE.0..=FIGURE_M_RANGE.1)
                .map(|m| m as f64)
                .collect(),
        )?,
        9 => Sweep::new(
            SweepAxis::FlipProb,
            (0..=10).map(|k| k as f64 * 0.05).collect(),
        )?,
        other => {
            return Err(Error::config(format!(
                "figure must be one of 4..=9, got {other}"
            )))
        }
    };
    Ok(ExperimentConfig {
        base,
        sweep,
        mode: Mode::Analytic,
        out: None,
    })
}

/// One row of the reference error-probability table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub rule: FusionRule,
    pub analytic_coarse: f64,
    pub analytic_fine: f64,
    pub simulated_coarse: f64,
    pub simulated_fine: f64,
    pub std_err_fine: f64,
}

/// Analytic values on the 300- and 10^4-sample grids, and single-pass
/// simulations on the 300- and 10^5-sample grids.
pub fn reference_table(seed: u64, workers: Option<usize>) -> Result<Vec<TableRow>> {
    let analytic = |eta| analytic_reports(&TrialConfig::reference(eta)?);
    let simulate = |eta| -> Result<SimulationResult> {
        let mut cfg = TrialConfig::reference(eta)?;
        cfg.trials = 1;
        cfg.seed = seed;
        cfg.workers = workers;
        run_simulation(&cfg)
    };
    let (a300, a10k) = (analytic(300)?, analytic(10_000)?);
    let (s300, s100k) = (simulate(300)?, simulate(100_000)?);
    Ok((0..a300.len())
        .map(|k| TableRow {
            rule: a300[k].rule,
            analytic_coarse: a300[k].p_e,
            analytic_fine: a10k[k].p_e,
            simulated_coarse: s300.rules[k].p_e,
            simulated_fine: s100k.rules[k].p_e,
            std_err_fine: s100k.rules[k].std_err,
        })
        .collect())
}
