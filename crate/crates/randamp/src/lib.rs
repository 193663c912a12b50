//! Randomness and privacy amplification at desk scale.
//!
//! The crate wires together a simulated three-party Bell device, certification
//! of device-independent entropy from Mermin-inequality statistics (including
//! signalling corrections for devices that cannot close the locality
//! loophole), and quasi-linear-time quantum-proof randomness extractors built
//! on an exact number-theoretic transform. A protocol engine orchestrates the
//! whole flow and emits auditable, recomputable certificates.
//!
//! The layers, bottom up:
//!
//! * [`bitstore`] — packed bit strings, round records, bit-exact file formats;
//! * [`ntt`] — primality testing, Artin-prime search, and exact GF(2) cyclic
//!   convolution over a 64-bit prime field;
//! * [`extractors`] — the two-source and seeded extractors plus the
//!   Raz-style parameter analysis;
//! * [`entropy`] — guessing probabilities, entropy accumulation, rate solvers
//!   and protocol efficiency;
//! * [`bell`] — behaviour estimation, the Mermin value, signalling
//!   quantification, assumption-based certification;
//! * [`sim`] — the analytic noisy-GHZ device and imperfect-RNG models;
//! * [`protocol`] / [`certificate`] — the end-to-end engine and its
//!   recomputable certificates.

pub mod bell;
pub mod bitstore;
pub mod certificate;
pub mod entropy;
pub mod error;
pub mod extractors;
pub mod ntt;
pub mod oracles;
pub mod protocol;
pub mod sim;
#[cfg(feature = "testutil")]
pub mod testutil;

pub use bitstore::{BitString, RoundLog, RoundRecord};
pub use error::{Error, Result};
