//! The monitored input signal: sampling, threshold quantization into system
//! states, and the per-state averaging operator.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Signal families the sampler knows how to evaluate.
#[derive(Clone, Debug, PartialEq)]
pub enum SignalKind {
    /// `sin(12πt/η) + cos(20πt/η) + sin(26πt/η) + 3`, bounded in [0, 6].
    ThreeHarmonic,
    /// Values supplied by the caller, one per sample.
    Tabulated(Vec<f64>),
}

/// A deterministic signal together with its sample grid `t_n = nτ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalSpec {
    kind: SignalKind,
    eta: usize,
    tau: f64,
}

impl SignalSpec {
    pub fn three_harmonic(eta: usize) -> Result<Self> {
        if eta == 0 {
            return Err(Error::config("sample count eta must be at least 1"));
        }
        Ok(SignalSpec {
            kind: SignalKind::ThreeHarmonic,
            eta,
            tau: 1.0,
        })
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("tabulated signal has no samples"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "tabulated signal sample {pos} is not finite"
            )));
        }
        Ok(SignalSpec {
            eta: values.len(),
            kind: SignalKind::Tabulated(values),
            tau: 1.0,
        })
    }

    /// Reads a tabulated signal: one real per line, blank lines and `#`
    /// comments ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::Parse {
                    key: format!("{}:{}", path.display(), lineno + 1),
                    value: line.to_string(),
                    reason: e.to_string(),
                })?;
            values.push(v);
        }
        Self::tabulated(values)
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::config(format!(
                "sampling period tau must be positive, got {tau}"
            )));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn kind(&self) -> &SignalKind {
        &self.kind
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Value of the signal at continuous time `t`. Tabulated signals are
    /// looked up at the nearest grid index.
    pub fn value_at(&self, t: f64) -> f64 {
        match &self.kind {
            SignalKind::ThreeHarmonic => {
                let eta = self.eta as f64;
                (12.0 * PI * t / eta).sin()
                    + (20.0 * PI * t / eta).cos()
                    + (26.0 * PI * t / eta).sin()
                    + 3.0
            }
            SignalKind::Tabulated(values) => {
                let idx = (t / self.tau).round().clamp(0.0, (values.len() - 1) as f64);
                values[idx as usize]
            }
        }
    }

    pub fn sample(&self) -> SampledSignal {
        sample_signal(self)
    }
}

/// Samples `x(t_0), ..., x(t_{η-1})` of a signal.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    values: Vec<f64>,
    grid: SignalSpec,
}

impl SampledSignal {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &SignalSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn sample_signal(spec: &SignalSpec) -> SampledSignal {
    let values = match &spec.kind {
        SignalKind::Tabulated(values) => values.clone(),
        SignalKind::ThreeHarmonic => (0..spec.eta)
            .map(|n| spec.value_at(n as f64 * spec.tau))
            .collect(),
    };
    SampledSignal {
        values,
        grid: spec.clone(),
    }
}

/// Which bit labels the event `x(t_n) <= x_th`. The exceedance event gets
/// the complement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct QuantizationConvention {
    s_label: bool,
}

impl QuantizationConvention {
    /// `x(t_n) <= x_th` is state 0.
    pub const S0: Self = QuantizationConvention { s_label: false };
    /// `x(t_n) <= x_th` is state 1.
    pub const S1: Self = QuantizationConvention { s_label: true };

    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            0 => Ok(Self::S0),
            1 => Ok(Self::S1),
            other => Err(Error::config(format!(
                "quantization label must be 0 or 1, got {other}"
            ))),
        }
    }

    /// Bit assigned to samples at or below the threshold.
    pub fn s_label(self) -> bool {
        self.s_label
    }

    /// Bit assigned to samples above the threshold.
    pub fn complement_label(self) -> bool {
        !self.s_label
    }

    pub fn swapped(self) -> Self {
        QuantizationConvention {
            s_label: !self.s_label,
        }
    }

    /// Maps a below-threshold flag to the state bit.
    pub fn label(self, below: bool) -> bool {
        if below {
            self.s_label
        } else {
            !self.s_label
        }
    }

    pub fn as_u8(self) -> u8 {
        self.s_label as u8
    }
}

/// True system states `θ[n]` with the partition of sample indices into the
/// at-or-below set `𝒮_S` and the exceedance set `𝒮_S̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSeries {
    theta: Vec<bool>,
    below: Vec<usize>,
    above: Vec<usize>,
    convention: QuantizationConvention,
}

impl StateSeries {
    pub fn theta(&self) -> &[bool] {
        &self.theta
    }

    pub fn convention(&self) -> QuantizationConvention {
        self.convention
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Indices with `x(t_n) <= x_th`, i.e. `θ[n] = S`.
    pub fn s_indices(&self) -> &[usize] {
        &self.below
    }

    /// Indices with `x(t_n) > x_th`, i.e. `θ[n] = S̄`.
    pub fn s_bar_indices(&self) -> &[usize] {
        &self.above
    }

    pub fn eta_s(&self) -> usize {
        self.below.len()
    }

    pub fn eta_s_bar(&self) -> usize {
        self.above.len()
    }

    pub fn f_s(&self) -> f64 {
        self.eta_s() as f64 / self.len() as f64
    }

    pub fn f_s_bar(&self) -> f64 {
        self.eta_s_bar() as f64 / self.len() as f64
    }

    /// Number of samples whose state is bit `b`.
    pub fn count_of(&self, b: bool) -> usize {
        if b == self.convention.s_label() {
            self.eta_s()
        } else {
            self.eta_s_bar()
        }
    }

    /// `(η_0, η_1)`.
    pub fn counts(&self) -> (usize, usize) {
        (self.count_of(false), self.count_of(true))
    }

    /// `(f_0, f_1)`.
    pub fn frequencies(&self) -> (f64, f64) {
        let (n0, n1) = self.counts();
        let eta = self.len() as f64;
        (n0 as f64 / eta, n1 as f64 / eta)
    }
}

/// Assigns `θ[n] = S` when `x(t_n) <= x_th` (ties included) and `S̄` otherwise.
pub fn quantize(
    signal: &SampledSignal,
    x_th: f64,
    convention: QuantizationConvention,
) -> StateSeries {
    let mut below = Vec::new();
    let mut above = Vec::new();
    let theta = signal
        .values
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let is_below = x <= x_th;
            if is_below {
                below.push(n);
            } else {
                above.push(n);
            }
            convention.label(is_below)
        })
        .collect();
    StateSeries {
        theta,
        below,
        above,
        convention,
    }
}

/// Arithmetic mean of `values` restricted to `index_set`. The mean over an
/// empty set is 0, which pairs with its zero frequency weight.
pub fn average_over(values: &[f64], index_set: &[usize]) -> Result<f64> {
    if let Some(&bad) = index_set.iter().find(|&&i| i >= values.len()) {
        return Err(Error::Dimension(format!(
            "index {bad} out of range for {} values",
            values.len()
        )));
    }
    if index_set.is_empty() {
        return Ok(0.0);
    }
    let sum = compensated_sum(index_set.iter().map(|&i| values[i]));
    Ok(sum / index_set.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_harmonic_at_integer_multiples_of_pi() {
        let s = SignalSpec::three_harmonic(300).unwrap().sample();
        assert_eq!(s.len(), 300);
        assert!((s.values()[0] - 4.0).abs() < 1e-12);
        assert!((s.values()[150] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn three_harmonic_is_bounded() {
        let s = SignalSpec::three_harmonic(10_000).unwrap().sample();
        let min = s.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = s.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(min >= 0.0 && max <= 6.0, "range [{min}, {max}]");
    }

    #[test]
    fn tau_shifts_the_grid() {
        let spec = SignalSpec::three_harmonic(100)
            .unwrap()
            .with_tau(0.5)
            .unwrap();
        let s = spec.sample();
        assert_eq!(s.values()[2], spec.value_at(1.0));
    }

    #[test]
    fn invalid_grid_is_rejected() {
        assert!(SignalSpec::three_harmonic(0).is_err());
        let spec = SignalSpec::three_harmonic(10).unwrap();
        assert!(spec.clone().with_tau(0.0).is_err());
        assert!(spec.with_tau(f64::NAN).is_err());
        assert!(SignalSpec::tabulated(vec![]).is_err());
        assert!(SignalSpec::tabulated(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn frequency_counts_for_reference_thresholds() {
        let s = SignalSpec::three_harmonic(10_000).unwrap().sample();
        let st = quantize(&s, 4.5, QuantizationConvention::S0);
        assert_eq!(st.counts(), (8747, 1253));
        let st = quantize(&s, 3.0, QuantizationConvention::S0);
        assert_eq!(st.counts(), (4992, 5008));
    }

    #[test]
    fn threshold_above_max_puts_everything_in_s() {
        let s = SignalSpec::tabulated(vec![0.5, 1.0, 2.0]).unwrap().sample();
        let st = quantize(&s, 1e9, QuantizationConvention::S0);
        assert_eq!(st.frequencies(), (1.0, 0.0));
        assert!(st.s_bar_indices().is_empty());
    }

    #[test]
    fn ties_go_to_s() {
        let s = SignalSpec::tabulated(vec![1.0, 2.0, 3.0]).unwrap().sample();
        let st = quantize(&s, 2.0, QuantizationConvention::S0);
        assert_eq!(st.theta(), &[false, false, true]);
    }

    #[test]
    fn average_operator() {
        assert!((average_over(&[0.1, 0.2, 0.3], &[0, 2]).unwrap() - 0.2).abs() < 1e-15);
        assert!((average_over(&[0.7; 5], &[1, 3, 4]).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(average_over(&[1.0], &[]).unwrap(), 0.0);
        assert!(average_over(&[1.0], &[1]).is_err());
    }

    #[test]
    fn reads_signal_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.txt");
        std::fs::write(&path, "# header\n1.5\n\n2.5  # trailing\n-0.25\n").unwrap();
        let spec = SignalSpec::from_file(&path).unwrap();
        assert_eq!(spec.sample().values(), &[1.5, 2.5, -0.25]);

        std::fs::write(&path, "1.0\nabc\n").unwrap();
        let err = SignalSpec::from_file(&path).unwrap_err();
        assert!(err.to_string().contains("abc"));
    }

    proptest! {
        #[test]
        fn partition_and_frequencies(values in prop::collection::vec(-10.0f64..10.0, 1..200),
                                     x_th in -12.0f64..12.0) {
            let s = SignalSpec::tabulated(values).unwrap().sample();
            let st = quantize(&s, x_th, QuantizationConvention::S0);
            prop_assert_eq!(st.eta_s() + st.eta_s_bar(), s.len());
            let mut all: Vec<usize> = st.s_indices().iter().chain(st.s_bar_indices()).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..s.len()).collect::<Vec<_>>());
            let (f0, f1) = st.frequencies();
            prop_assert!((0.0..=1.0).contains(&f0) && (0.0..=1.0).contains(&f1));
            prop_assert!((f0 + f1 - 1.0).abs() < 1e-12);
        }

        #[test]
        fn swapped_convention_complements(values in prop::collection::vec(-10.0f64..10.0, 1..100),
                                          x_th in -10.0f64..10.0) {
            let s = SignalSpec::tabulated(values).unwrap().sample();
            let a = quantize(&s, x_th, QuantizationConvention::S0);
            let b = quantize(&s, x_th, QuantizationConvention::S1);
            for (x, y) in a.theta().iter().zip(b.theta()) {
                prop_assert_eq!(*x, !*y);
            }
            prop_assert_eq!(a.counts(), (b.counts().1, b.counts().0));
        }

        #[test]
        fn raising_threshold_never_shrinks_s(values in prop::collection::vec(-10.0f64..10.0, 1..100),
                                             lo in -10.0f64..10.0, delta in 0.0f64..5.0) {
            let s = SignalSpec::tabulated(values).unwrap().sample();
            let a = quantize(&s, lo, QuantizationConvention::S0);
            let b = quantize(&s, lo + delta, QuantizationConvention::S0);
            prop_assert!(b.eta_s() >= a.eta_s());
        }
    }
}
