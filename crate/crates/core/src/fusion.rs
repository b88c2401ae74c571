//! Boolean fusion rules at the fusion center and the exact average decision
//! error probability they achieve.
//!
//! Each sensor's bit reaches the center differing from the true state with a
//! per-sample probability `q[n]` that combines the sensing and channel error
//! paths. Sensors are conditionally independent, so the number of wrong bits
//! at sample `n` is binomial, and every rule's error event is a condition on
//! that count:
//!
//! | rule          | `θ[n] = 0` errs when | `θ[n] = 1` errs when |
//! |---------------|----------------------|----------------------|
//! | OR            | ≥ 1 bit wrong        | all N bits wrong     |
//! | AND           | all N bits wrong     | ≥ 1 bit wrong        |
//! | K-OUT-OF-N    | ≥ K bits wrong       | ≥ K bits wrong       |
//! | MAJORITY      | ≥ ⌈N/2⌉ bits wrong   | ≥ ⌈N/2⌉ bits wrong   |
//!
//! With N even and K = N/2 the exact split is broken by a fair coin, so that
//! term counts with weight ½.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::ascending_sum;
use crate::sensing::SensingProbabilities;
use crate::signal::{average_over, QuantizationConvention, StateSeries};

/// Sensor counts up to this use exact integer binomial coefficients; above
/// it the coefficients come from log-gamma.
pub const EXACT_BINOMIAL_MAX_N: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FusionRule {
    Or,
    And,
    KOutOfN(usize),
    Majority,
}

impl FusionRule {
    /// Vote threshold K of the rule for `n` sensors, when it has one.
    pub fn threshold(self, n: usize) -> Option<usize> {
        match self {
            FusionRule::KOutOfN(k) => Some(k),
            FusionRule::Majority => Some(n.div_ceil(2)),
            FusionRule::Or | FusionRule::And => None,
        }
    }

    pub fn validate(self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::config("sensor count N must be at least 1"));
        }
        if let FusionRule::KOutOfN(k) = self {
            if k == 0 || k > n {
                return Err(Error::config(format!(
                    "K-out-of-N needs 1 <= K <= N, got K = {k}, N = {n}"
                )));
            }
        }
        Ok(())
    }

    /// Smallest number of wrong bits that produces a decision error when the
    /// true state is `theta`, plus whether the exact N/2 split is a coin toss.
    fn error_event(self, theta: bool, n: usize) -> (usize, bool) {
        match self {
            FusionRule::Or => (if theta { n } else { 1 }, false),
            FusionRule::And => (if theta { 1 } else { n }, false),
            FusionRule::KOutOfN(_) | FusionRule::Majority => {
                let k = self.threshold(n).unwrap_or(n);
                (k, n.is_multiple_of(2) && 2 * k == n)
            }
        }
    }

    pub fn label(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionRule::Or => write!(f, "OR"),
            FusionRule::And => write!(f, "AND"),
            FusionRule::KOutOfN(k) => write!(f, "{k}-OUT-OF-N"),
            FusionRule::Majority => write!(f, "MAJORITY"),
        }
    }
}

impl FromStr for FusionRule {
    type Err = Error;

    /// Accepts `or`, `and`, `majority` (or `maj`) and `kofn:K`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "or" => Ok(FusionRule::Or),
            "and" => Ok(FusionRule::And),
            "majority" | "maj" => Ok(FusionRule::Majority),
            other => {
                let k = other
                    .strip_prefix("kofn:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 1);
                k.map(FusionRule::KOutOfN).ok_or_else(|| Error::Parse {
                    key: "rules".into(),
                    value: s.into(),
                    reason: "expected or, and, majority or kofn:K with K >= 1".into(),
                })
            }
        }
    }
}

/// Bits `s_1[n], ..., s_N[n]` received by the fusion center at one sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceivedVector {
    bits: Vec<bool>,
}

impl ReceivedVector {
    pub fn new(bits: Vec<bool>) -> Self {
        ReceivedVector { bits }
    }

    pub fn from_u8(bits: &[u8]) -> Self {
        ReceivedVector::new(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Outcome of a rule before any tie is broken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Zero,
    One,
    /// Both values are supported equally; resolved by a fair coin.
    Tie,
}

impl Decision {
    pub fn resolve<R: Rng + ?Sized>(self, coin: &mut R) -> bool {
        match self {
            Decision::Zero => false,
            Decision::One => true,
            Decision::Tie => coin.random_bool(0.5),
        }
    }
}

/// Decision from the count of ones among `n` received bits.
///
/// K-out-of-N picks the value held by at least K sensors; when both values or
/// neither reach K the outcome is a tie. For K = ⌈N/2⌉ a tie only happens at
/// the exact N/2 split of an even N.
pub(crate) fn decide_counts(rule: FusionRule, ones: usize, n: usize) -> Decision {
    let zeros = n - ones;
    match rule {
        FusionRule::Or => {
            if ones > 0 {
                Decision::One
            } else {
                Decision::Zero
            }
        }
        FusionRule::And => {
            if ones == n {
                Decision::One
            } else {
                Decision::Zero
            }
        }
        FusionRule::KOutOfN(_) | FusionRule::Majority => {
            let k = rule.threshold(n).unwrap_or(n);
            match (ones >= k, zeros >= k) {
                (true, false) => Decision::One,
                (false, true) => Decision::Zero,
                _ => Decision::Tie,
            }
        }
    }
}

pub fn decide_outcome(rule: FusionRule, received: &ReceivedVector) -> Result<Decision> {
    rule.validate(received.len())?;
    Ok(decide_counts(rule, received.ones(), received.len()))
}

/// Fused estimate `θ̂[n]`; ties consume one fair bit from `coin`.
pub fn decide<R: Rng + ?Sized>(
    rule: FusionRule,
    received: &ReceivedVector,
    coin: &mut R,
) -> Result<bool> {
    Ok(decide_outcome(rule, received)?.resolve(coin))
}

/// Probability that one sensor's bit at the center differs from the true
/// state, split by the true state's partition.
///
/// `q_s[i]` belongs to sample `states.s_indices()[i]`, `q_s_bar[i]` to
/// `states.s_bar_indices()[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerSampleMismatch {
    q_s: Vec<f64>,
    q_s_bar: Vec<f64>,
}

impl PerSampleMismatch {
    pub fn q_s(&self) -> &[f64] {
        &self.q_s
    }

    pub fn q_s_bar(&self) -> &[f64] {
        &self.q_s_bar
    }

    /// Mismatch probability indexed by sample number.
    pub fn by_sample(&self, states: &StateSeries) -> Vec<f64> {
        let mut q = vec![0.0; states.len()];
        for (&n, &v) in states.s_indices().iter().zip(&self.q_s) {
            q[n] = v;
        }
        for (&n, &v) in states.s_bar_indices().iter().zip(&self.q_s_bar) {
            q[n] = v;
        }
        q
    }
}

/// Combines sensing and channel errors per sample:
/// a sensor is wrong at an `S` sample when it observes at-or-below and the
/// channel flips, or observes above and the channel keeps the bit.
pub fn per_sample_mismatch(
    sensing: &SensingProbabilities,
    channel_flip: f64,
    states: &StateSeries,
) -> Result<PerSampleMismatch> {
    if !(0.0..=1.0).contains(&channel_flip) {
        return Err(Error::config(format!(
            "channel flip probability {channel_flip} is outside [0, 1]"
        )));
    }
    if sensing.len() != states.len() {
        return Err(Error::Dimension(format!(
            "{} sensing probabilities for {} states",
            sensing.len(),
            states.len()
        )));
    }
    let keep = 1.0 - channel_flip;
    let below = sensing.p_below();
    let above = sensing.p_above();
    let q_s = states
        .s_indices()
        .iter()
        .map(|&n| below[n] * channel_flip + above[n] * keep)
        .collect();
    let q_s_bar = states
        .s_bar_indices()
        .iter()
        .map(|&n| above[n] * channel_flip + below[n] * keep)
        .collect();
    Ok(PerSampleMismatch { q_s, q_s_bar })
}

/// Binomial coefficients for one sensor count, exact or in log space.
struct BinomialRow {
    n: usize,
    exact: Option<Vec<f64>>,
    ln: Vec<f64>,
}

impl BinomialRow {
    fn new(n: usize) -> Self {
        if n <= EXACT_BINOMIAL_MAX_N {
            let mut row = Vec::with_capacity(n + 1);
            let mut c: u64 = 1;
            for k in 0..=n as u64 {
                row.push(c as f64);
                // C(n, k+1) = C(n, k) (n − k) / (k + 1), exact in u128
                c = ((c as u128 * (n as u128 - k as u128)) / (k as u128 + 1)) as u64;
            }
            BinomialRow {
                n,
                exact: Some(row),
                ln: Vec::new(),
            }
        } else {
            let ln_n = libm::lgamma(n as f64 + 1.0);
            let ln = (0..=n)
                .map(|k| ln_n - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0))
                .collect();
            BinomialRow { n, exact: None, ln }
        }
    }

    fn pmf(&self, q: f64, k: usize) -> f64 {
        let n = self.n;
        if q <= 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if q >= 1.0 {
            return if k == n { 1.0 } else { 0.0 };
        }
        match &self.exact {
            Some(row) => row[k] * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32),
            None => (self.ln[k] + k as f64 * q.ln() + (n - k) as f64 * (-q).ln_1p()).exp(),
        }
    }

    /// `Σ_{k=from}^{n} pmf(k)`, smallest terms first.
    fn upper_tail(&self, q: f64, from: usize) -> f64 {
        if from > self.n {
            return 0.0;
        }
        ascending_sum((from..=self.n).map(|k| self.pmf(q, k)).collect())
    }
}

/// Probability that exactly `k` of `n` sensors are wrong when each is wrong
/// independently with probability `q`.
pub fn prob_k_of_n_errors(q: f64, k: usize, n: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    BinomialRow::new(n).pmf(q, k)
}

/// Decision error probability at one sample with true state `theta`.
fn sample_error(row: &BinomialRow, rule: FusionRule, theta: bool, q: f64) -> f64 {
    let n = row.n;
    let (k_min, split_tie) = rule.error_event(theta, n);
    if split_tie {
        row.upper_tail(q, k_min + 1) + 0.5 * row.pmf(q, k_min)
    } else {
        row.upper_tail(q, k_min)
    }
}

/// Per-sample decision error probabilities `Pr[θ̂[n] ≠ θ[n]]`, indexed by
/// sample number.
pub fn per_sample_error(
    rule: FusionRule,
    mismatch: &PerSampleMismatch,
    states: &StateSeries,
    n: usize,
) -> Result<Vec<f64>> {
    rule.validate(n)?;
    if mismatch.q_s.len() != states.eta_s() || mismatch.q_s_bar.len() != states.eta_s_bar() {
        return Err(Error::Dimension(format!(
            "mismatch lists ({}, {}) do not match state partition ({}, {})",
            mismatch.q_s.len(),
            mismatch.q_s_bar.len(),
            states.eta_s(),
            states.eta_s_bar()
        )));
    }
    let row = BinomialRow::new(n);
    let conv = states.convention();
    let mut out = vec![0.0; states.len()];
    for (&idx, &q) in states.s_indices().iter().zip(&mismatch.q_s) {
        out[idx] = sample_error(&row, rule, conv.s_label(), q);
    }
    for (&idx, &q) in states.s_bar_indices().iter().zip(&mismatch.q_s_bar) {
        out[idx] = sample_error(&row, rule, conv.complement_label(), q);
    }
    Ok(out)
}

/// Average decision error probability of one rule with its split into the
/// error rate on at-or-below-threshold samples (`type_i`, deciding the
/// exceedance event when it did not happen) and on exceedance samples
/// (`type_ii`, missing the event).
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub rule: FusionRule,
    pub sensors: usize,
    pub p_e: f64,
    pub type_i: f64,
    pub type_ii: f64,
    pub f0: f64,
    pub f1: f64,
    pub convention: QuantizationConvention,
}

impl ErrorReport {
    /// Frequency of the at-or-below state `S`.
    pub fn f_s(&self) -> f64 {
        if self.convention.s_label() {
            self.f1
        } else {
            self.f0
        }
    }

    pub fn f_s_bar(&self) -> f64 {
        1.0 - self.f_s()
    }
}

pub fn error_probability(
    rule: FusionRule,
    mismatch: &PerSampleMismatch,
    states: &StateSeries,
    n: usize,
) -> Result<ErrorReport> {
    if states.is_empty() {
        return Err(Error::config("no samples to average over"));
    }
    let per_sample = per_sample_error(rule, mismatch, states, n)?;
    let type_i = average_over(&per_sample, states.s_indices())?;
    let type_ii = average_over(&per_sample, states.s_bar_indices())?;
    let p_e = states.f_s() * type_i + states.f_s_bar() * type_ii;
    let (f0, f1) = states.frequencies();
    Ok(ErrorReport {
        rule,
        sensors: n,
        p_e,
        type_i,
        type_ii,
        f0,
        f1,
        convention: states.convention(),
    })
}

/// How K scales as N grows, needed for the K-out-of-N limit.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum GrowthPolicy {
    #[default]
    Unspecified,
    /// K stays fixed, so it eventually falls below ⌈N/2⌉.
    FixedK,
    /// K = ⌈αN⌉ for the given α in (0, 1].
    Proportional(f64),
}

/// Limit of the average error probability as the number of sensors grows,
/// assuming every per-sample mismatch probability stays below ½.
pub fn asymptotic_limit(
    rule: FusionRule,
    f0: f64,
    f1: f64,
    convention: QuantizationConvention,
    policy: GrowthPolicy,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&f0) || !(0.0..=1.0).contains(&f1) || (f0 + f1 - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!(
            "state frequencies must sum to 1, got {f0} + {f1}"
        )));
    }
    // OR drifts to always deciding 1, AND to always deciding 0.
    let (or_limit, and_limit) = if convention.s_label() {
        (f1, f0)
    } else {
        (f0, f1)
    };
    match rule {
        FusionRule::Or => Ok(or_limit),
        FusionRule::And => Ok(and_limit),
        FusionRule::Majority => Ok(0.0),
        FusionRule::KOutOfN(_) => match policy {
            GrowthPolicy::Unspecified => Err(Error::AmbiguousGrowth),
            GrowthPolicy::FixedK => Ok(1.0),
            GrowthPolicy::Proportional(alpha) if alpha > 0.0 && alpha <= 1.0 => {
                Ok(if alpha < 0.5 { 1.0 } else { 0.0 })
            }
            GrowthPolicy::Proportional(alpha) => Err(Error::config(format!(
                "growth ratio alpha must be in (0, 1], got {alpha}"
            ))),
        },
    }
}
