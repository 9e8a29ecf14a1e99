//! Uplink rate analysis for eMBB and URLLC traffic sharing a cloud RAN with
//! capacity-limited fronthaul.
//!
//! The cell layout is a symmetric circulant Wyner model. Four access schemes
//! are covered: orthogonal minislot allocation ([`Scheme::Oma`]) and
//! non-orthogonal sharing where the edge node punctures URLLC minislots,
//! treats URLLC as noise, or decodes and cancels it.
//!
//! ```
//! use cran_coexist::{validate, urllc_perf, Scheme, SystemParams};
//!
//! let params = validate(SystemParams::default()).unwrap();
//! let oma = urllc_perf(&params, Scheme::Oma).unwrap();
//! let noma = urllc_perf(&params, Scheme::NomaPuncturing).unwrap();
//! assert!(noma.access_latency < oma.access_latency);
//! ```

pub mod cli;
pub mod embb;
pub mod error;
pub mod experiments;
pub mod fronthaul;
pub mod linops;
pub mod oracle;
pub mod params;
pub mod specialfn;
pub mod urllc;

pub use embb::{embb_rate, embb_rate_infinite, EmbbMethod, EmbbRateResult, McConfig};
pub use error::{Error, Result};
pub use experiments::{emit, evaluate, preset, run_sweep, Format, SweepResult, SweepSpec};
pub use fronthaul::{sigma_q2_for, QuantizationNoise};
pub use params::{validate, ParamOverrides, Params, Scheme, SystemParams};
pub use urllc::{urllc_perf, UrllcPerf};
