//! Distributed space-time block codes for two-hop amplify-and-forward relay
//! networks, built from training-embedded orthogonal designs.
//!
//! The crate covers the full chain:
//!
//! * symbolic construction of complex orthogonal designs, training embedding,
//!   coordinate interleaving, and the block-diagonal relay designs built from
//!   them ([`design`]);
//! * extraction of the per-relay linear dispersion matrices and the source
//!   precoders ([`design`]);
//! * QAM/PSK constellations, rotation, and source power allocation
//!   ([`constellation`]);
//! * the two-phase relay protocol: source broadcast, relay conjugate-augment
//!   and forward, destination reception ([`channel`]);
//! * maximum-likelihood decoding, both brute-force joint search and the fast
//!   single-symbol decoder ([`decoder`]);
//! * algebraic verification: dispersion-sum identities, symbolic Gram
//!   matrices, single-symbol decodability, and full-diversity checks
//!   ([`verify`]);
//! * rate/overhead bookkeeping ([`metrics`]) and deterministic Monte Carlo
//!   symbol-error-rate sweeps ([`experiment`]).
//!
//! # Example
//!
//! ```
//! use dstbc_core::design::{build_teciod, extract_dispersion};
//! use dstbc_core::verify::verify_relay_sums;
//!
//! let design = build_teciod(3).unwrap();
//! assert_eq!(design.rows, 8);
//! let lin = extract_dispersion(&design).unwrap();
//! assert!(verify_relay_sums(&lin).ok);
//! ```

pub mod channel;
pub mod constellation;
pub mod decoder;
pub mod design;
mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod system;
pub mod verify;

pub use channel::{ChannelRealization, NetworkConfig, PhaseOneResult};
pub use constellation::{Constellation, TrainingConst};
pub use decoder::MlMetricContext;
pub use design::{Atom, DesignExpr, LinearDesign, PrecoderPair, Scheme, SchemeCounts};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, SerPoint, SweepResult};
pub use system::CodeSystem;
