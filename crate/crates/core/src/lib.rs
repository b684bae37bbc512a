//! Contactless teeth-grinding recognition from FMCW millimeter-wave radar.
//!
//! The crate covers the whole chain: synthetic recordings of a face at a
//! fixed range ([`sim`]), the canonical raw IQ format ([`iq`]), range-domain
//! preprocessing down to a phase-difference series ([`range`]), eleven
//! temporal and spectral features ([`features`]), a random forest
//! ([`forest`]) and stratified cross-validation ([`eval`]).
//!
//! ```no_run
//! use bruxsense::{features, range, sim};
//!
//! let cfg = sim::RadarConfig::default();
//! let scenario = sim::ScenarioRanges::default().draw(1, 0);
//! let frame = sim::synthesize(&scenario, &cfg).unwrap();
//! let diff = range::process_recording(&frame, cfg.bandwidth, 0.3, 0.8).unwrap();
//! let fv = features::extract_features(&diff).unwrap();
//! println!("{:?}", fv.band_energy_5_10);
//! ```

pub mod config;
pub mod eval;
pub mod features;
pub mod forest;
pub mod iq;
pub mod label;
pub mod manifest;
pub mod range;
pub mod seed;
pub mod sim;
pub mod table;
pub mod workflow;

pub use label::Label;
