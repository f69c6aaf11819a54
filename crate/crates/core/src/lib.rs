//! A secret-sharing group key establishment protocol, the attacks that
//! break it, and a deterministic harness for running both.
//!
//! - [`group_math`]: Schnorr group arithmetic and Lagrange interpolation.
//! - [`pki`]: a simulated certificate authority.
//! - [`protocol`]: broadcast construction and processing.
//! - [`adversary`]: replay forgery, insider impersonation, and discrete-log
//!   key recovery.
//! - [`harness`]: community setup, scenarios, and JSON-lines transcripts.

pub mod adversary;
pub mod group_math;
pub mod harness;
pub mod pki;
pub mod protocol;

#[cfg(test)]
mod testutil;
