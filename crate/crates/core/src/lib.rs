//! Average decision error probability of a wireless sensor network whose
//! sensors observe a deterministic signal through Gaussian noise, forward one
//! bit each over a cascade of binary symmetric channels, and are fused at a
//! center with OR, AND, K-out-of-N or MAJORITY voting.
//!
//! The crate computes the error probability in closed form ([`fusion`]) and
//! by seeded Monte Carlo simulation of the full bit pipeline ([`montecarlo`]),
//! and drives parameter sweeps that write CSV tables ([`experiment`]).
//!
//! ```
//! use wsn_fusion::prelude::*;
//!
//! let signal = SignalSpec::three_harmonic(300).unwrap().sample();
//! let states = quantize(&signal, 4.5, QuantizationConvention::default());
//! let sensors = SensorModel::new(3, 0.0, 1.0).unwrap();
//! let profile = sensing_profile(&signal, 4.5, &sensors);
//! let flip = ChannelSpec::new(vec![0.1]).unwrap().flip_probability();
//! let mismatch = per_sample_mismatch(&profile, flip, &states).unwrap();
//! let report = error_probability(FusionRule::And, &mismatch, &states, 3).unwrap();
//! assert!((report.p_e - 0.101).abs() < 0.002);
//! ```

pub mod channel;
pub mod error;
pub mod experiment;
pub mod fusion;
pub mod montecarlo;
pub mod sensing;
pub mod signal;

mod numeric;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::channel::{
        enumerate_odd_subsets, flip_probability_equal, ChannelSpec, OddSubsetFamily,
    };
    pub use crate::error::{Error, Result};
    pub use crate::fusion::{
        asymptotic_limit, decide, decide_outcome, error_probability, per_sample_mismatch,
        prob_k_of_n_errors, Decision, ErrorReport, FusionRule, GrowthPolicy, PerSampleMismatch,
        ReceivedVector,
    };
    pub use crate::montecarlo::{capture_trace, run_simulation, SimulationResult, TrialConfig};
    pub use crate::sensing::{
        observe_probability_below, sensing_profile, SensingProbabilities, SensorModel,
    };
    pub use crate::signal::{
        average_over, quantize, QuantizationConvention, SampledSignal, SignalKind, SignalSpec,
        StateSeries,
    };
}
