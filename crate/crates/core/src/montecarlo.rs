//! Seeded Monte Carlo simulation of the full bit pipeline: noisy sensing,
//! per-hop channel flips, and fusion.
//!
//! Every `(trial, sample)` pair draws from its own ChaCha8 stream derived
//! from the seed, so results do not depend on how trials are scheduled over
//! worker threads. Within a stream the draw order is fixed: for each sensor
//! one Gaussian then one Bernoulli per hop, then one coin per rule whose
//! outcome is a tie.

use std::io::Write;
use std::ops::Range;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::fusion::{decide_counts, FusionRule};
use crate::sensing::SensorModel;
use crate::signal::{quantize, QuantizationConvention, SampledSignal, SignalSpec, StateSeries};

/// Passes over the sample grid when none is configured.
pub const DEFAULT_TRIALS: usize = 100;

/// Largest trace, counted in `(n, i, j)` cells.
pub const MAX_TRACE_CELLS: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub signal: SignalSpec,
    pub x_th: f64,
    pub convention: QuantizationConvention,
    pub sensors: SensorModel,
    pub channel: ChannelSpec,
    pub rules: Vec<FusionRule>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl TrialConfig {
    /// Three sensors, one 0.1 hop, x_th = 4.5 on the three-harmonic signal,
    /// OR / AND / MAJORITY.
    pub fn reference(eta: usize) -> Result<Self> {
        Ok(TrialConfig {
            signal: SignalSpec::three_harmonic(eta)?,
            x_th: 4.5,
            convention: QuantizationConvention::S0,
            sensors: SensorModel::new(3, 0.0, 1.0)?,
            channel: ChannelSpec::new(vec![0.1])?,
            rules: vec![FusionRule::Or, FusionRule::And, FusionRule::Majority],
            trials: DEFAULT_TRIALS,
            seed: 0,
            workers: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if !self.x_th.is_finite() {
            return Err(Error::config("threshold x_th must be finite"));
        }
        if self.rules.is_empty() {
            return Err(Error::config("no fusion rules selected"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        for rule in &self.rules {
            rule.validate(self.sensors.sensors())?;
        }
        Ok(())
    }
}

/// Empirical error rates of one rule.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleEstimate {
    pub rule: FusionRule,
    pub p_e: f64,
    pub std_err: f64,
    /// Error rate over at-or-below-threshold samples.
    pub type_i: f64,
    /// Error rate over exceedance samples.
    pub type_ii: f64,
    pub errors_s: u64,
    pub errors_s_bar: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub seed: u64,
    pub trials: usize,
    pub eta_s: usize,
    pub eta_s_bar: usize,
    pub rules: Vec<RuleEstimate>,
}

impl SimulationResult {
    pub fn samples(&self) -> u64 {
        self.trials as u64 * (self.eta_s + self.eta_s_bar) as u64
    }

    pub fn get(&self, rule: FusionRule) -> Option<&RuleEstimate> {
        self.rules.iter().find(|r| r.rule == rule)
    }
}

/// Counter-based source of per-`(trial, sample)` streams.
#[derive(Clone)]
struct StreamSource {
    base: ChaCha8Rng,
    eta: u64,
}

impl StreamSource {
    fn new(seed: u64, eta: usize) -> Self {
        StreamSource {
            base: ChaCha8Rng::seed_from_u64(seed),
            eta: eta as u64,
        }
    }

    fn stream(&self, trial: usize, sample: usize) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(
            (trial as u64)
                .wrapping_mul(self.eta)
                .wrapping_add(sample as u64),
        );
        rng.set_word_pos(0);
        rng
    }
}

/// Everything drawn for one sensor at one sample.
struct SensorDraw {
    observation: f64,
    /// `S_{i,0}, ..., S_{i,M}`.
    path: Vec<bool>,
}

struct Pipeline<'a> {
    x_th: f64,
    convention: QuantizationConvention,
    sensors: &'a SensorModel,
    channel: &'a ChannelSpec,
    rules: &'a [FusionRule],
}

impl Pipeline<'_> {
    fn from_config(config: &TrialConfig) -> Pipeline<'_> {
        Pipeline {
            x_th: config.x_th,
            convention: config.convention,
            sensors: &config.sensors,
            channel: &config.channel,
            rules: &config.rules,
        }
    }

    fn sense_and_send<R: RngCore>(&self, x: f64, rng: &mut R) -> (f64, bool) {
        let z: f64 = rng.sample(StandardNormal);
        let observation = x + self.sensors.mu() + self.sensors.sigma() * z;
        let mut bit = self.convention.label(observation <= self.x_th);
        for &p in self.channel.hop_probs() {
            if rng.random_bool(p) {
                bit = !bit;
            }
        }
        (observation, bit)
    }

    /// Draws one sample and writes each rule's decision into `decisions`.
    fn run_sample<R: RngCore>(&self, x: f64, rng: &mut R, decisions: &mut [bool]) {
        let n = self.sensors.sensors();
        let mut ones = 0;
        for _ in 0..n {
            let (_, bit) = self.sense_and_send(x, rng);
            ones += bit as usize;
        }
        for (rule, out) in self.rules.iter().zip(decisions.iter_mut()) {
            *out = decide_counts(*rule, ones, n).resolve(rng);
        }
    }

    /// Same draws as `run_sample`, keeping every intermediate state.
    fn trace_sample<R: RngCore>(
        &self,
        x: f64,
        rng: &mut R,
        decisions: &mut [bool],
    ) -> Vec<SensorDraw> {
        let n = self.sensors.sensors();
        let mut draws = Vec::with_capacity(n);
        let mut ones = 0;
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let observation = x + self.sensors.mu() + self.sensors.sigma() * z;
            let mut bit = self.convention.label(observation <= self.x_th);
            let mut path = Vec::with_capacity(self.channel.hops() + 1);
            path.push(bit);
            for &p in self.channel.hop_probs() {
                if rng.random_bool(p) {
                    bit = !bit;
                }
                path.push(bit);
            }
            ones += bit as usize;
            draws.push(SensorDraw { observation, path });
        }
        for (rule, out) in self.rules.iter().zip(decisions.iter_mut()) {
            *out = decide_counts(*rule, ones, n).resolve(rng);
        }
        draws
    }
}

/// Error counts per rule, `[on S samples, on S̄ samples]`.
fn count_trial(
    pipeline: &Pipeline<'_>,
    streams: &StreamSource,
    signal: &SampledSignal,
    states: &StateSeries,
    trial: usize,
) -> Vec<[u64; 2]> {
    let mut counts = vec![[0u64; 2]; pipeline.rules.len()];
    let mut decisions = vec![false; pipeline.rules.len()];
    let s_label = states.convention().s_label();
    for (n, (&x, &theta)) in signal.values().iter().zip(states.theta()).enumerate() {
        let mut rng = streams.stream(trial, n);
        pipeline.run_sample(x, &mut rng, &mut decisions);
        let slot = if theta == s_label { 0 } else { 1 };
        for (c, &d) in counts.iter_mut().zip(&decisions) {
            if d != theta {
                c[slot] += 1;
            }
        }
    }
    counts
}

fn merge(mut a: Vec<[u64; 2]>, b: Vec<[u64; 2]>) -> Vec<[u64; 2]> {
    for (x, y) in a.iter_mut().zip(b) {
        x[0] += y[0];
        x[1] += y[1];
    }
    a
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::config(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

pub fn run_simulation(config: &TrialConfig) -> Result<SimulationResult> {
    config.validate()?;
    let signal = config.signal.sample();
    let states = quantize(&signal, config.x_th, config.convention);
    let streams = StreamSource::new(config.seed, signal.len());
    let pipeline = Pipeline::from_config(config);
    let zero = || vec![[0u64; 2]; config.rules.len()];

    let counts = in_pool(config.workers, || {
        (0..config.trials)
            .into_par_iter()
            .map(|t| count_trial(&pipeline, &streams, &signal, &states, t))
            .reduce(zero, merge)
    })?;

    let trials = config.trials as u64;
    let total = trials * signal.len() as u64;
    let n_s = trials * states.eta_s() as u64;
    let n_s_bar = trials * states.eta_s_bar() as u64;
    let rate = |errors: u64, of: u64| {
        if of == 0 {
            0.0
        } else {
            errors as f64 / of as f64
        }
    };
    let rules = config
        .rules
        .iter()
        .zip(counts)
        .map(|(&rule, [e_s, e_s_bar])| {
            let p_e = rate(e_s + e_s_bar, total);
            RuleEstimate {
                rule,
                p_e,
                std_err: (p_e * (1.0 - p_e) / total as f64).sqrt(),
                type_i: rate(e_s, n_s),
                type_ii: rate(e_s_bar, n_s_bar),
                errors_s: e_s,
                errors_s_bar: e_s_bar,
            }
        })
        .collect();
    Ok(SimulationResult {
        seed: config.seed,
        trials: config.trials,
        eta_s: states.eta_s(),
        eta_s_bar: states.eta_s_bar(),
        rules,
    })
}

/// Fraction of `trials` bits flipped end to end by the channel, with its
/// standard error.
pub fn empirical_flip_rate(channel: &ChannelSpec, trials: u64, seed: u64) -> (f64, f64) {
    const CHUNK: u64 = 1 << 16;
    let chunks = trials.div_ceil(CHUNK);
    let base = ChaCha8Rng::seed_from_u64(seed);
    let flips: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = base.clone();
            rng.set_stream(c);
            let len = CHUNK.min(trials - c * CHUNK);
            (0..len)
                .filter(|_| {
                    channel
                        .hop_probs()
                        .iter()
                        .fold(false, |bit, &p| bit ^ rng.random_bool(p))
                })
                .count() as u64
        })
        .sum();
    let rate = flips as f64 / trials as f64;
    (rate, (rate * (1.0 - rate) / trials as f64).sqrt())
}

/// Intermediate states `S_{i,j}[n]` of every sensor along its relay chain,
/// for a window of samples of the first trial.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTrace {
    pub window: Range<usize>,
    pub sensors: usize,
    pub hops: usize,
    pub rules: Vec<FusionRule>,
    /// `θ[n]` for each sample in the window.
    pub theta: Vec<bool>,
    /// `x_i(t_n)`, indexed `[n - start][i]`.
    pub observations: Vec<Vec<f64>>,
    /// Laid out as `[n - start][i][j]`.
    states: Vec<bool>,
    /// Fused decisions, indexed `[n - start][rule]`.
    pub decisions: Vec<Vec<bool>>,
}

impl ChannelTrace {
    /// `S_{i,j}[n]` with `i` 0-based and `j` in `0..=M`.
    pub fn state(&self, n: usize, i: usize, j: usize) -> bool {
        let row = n - self.window.start;
        self.states[(row * self.sensors + i) * (self.hops + 1) + j]
    }

    /// Bits `s_i[n] = S_{i,M}[n]` at the fusion center.
    pub fn received(&self, n: usize) -> Vec<bool> {
        (0..self.sensors)
            .map(|i| self.state(n, i, self.hops))
            .collect()
    }

    /// Whitespace-separated table `n i j S_ij`, sensors numbered from 1.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n i j S_ij")?;
        for n in self.window.clone() {
            for i in 0..self.sensors {
                for j in 0..=self.hops {
                    writeln!(out, "{n} {} {j} {}", i + 1, self.state(n, i, j) as u8)?;
                }
            }
        }
        Ok(())
    }
}

pub fn capture_trace(config: &TrialConfig, window: Range<usize>) -> Result<ChannelTrace> {
    config.validate()?;
    let signal = config.signal.sample();
    if window.start >= window.end || window.end > signal.len() {
        return Err(Error::config(format!(
            "trace window {}..{} is not within 0..{}",
            window.start,
            window.end,
            signal.len()
        )));
    }
    let sensors = config.sensors.sensors();
    let hops = config.channel.hops();
    let cells = window.len() * sensors * (hops + 1);
    if cells > MAX_TRACE_CELLS {
        return Err(Error::TraceTooLarge {
            cells,
            limit: MAX_TRACE_CELLS,
        });
    }
    let states = quantize(&signal, config.x_th, config.convention);
    let streams = StreamSource::new(config.seed, signal.len());
    let pipeline = Pipeline::from_config(config);

    let mut trace = ChannelTrace {
        window: window.clone(),
        sensors,
        hops,
        rules: config.rules.clone(),
        theta: states.theta()[window.clone()].to_vec(),
        observations: Vec::with_capacity(window.len()),
        states: Vec::with_capacity(cells),
        decisions: Vec::with_capacity(window.len()),
    };
    for n in window {
        let mut rng = streams.stream(0, n);
        let mut decisions = vec![false; config.rules.len()];
        let draws = pipeline.trace_sample(signal.values()[n], &mut rng, &mut decisions);
        trace
            .observations
            .push(draws.iter().map(|d| d.observation).collect());
        for d in draws {
            trace.states.extend(d.path);
        }
        trace.decisions.push(decisions);
    }
    Ok(trace)
}
