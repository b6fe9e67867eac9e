//! Recursive noiseless-subsystem encoders for qudits under collective noise.
//!
//! A collective error `W^{⊗n}` acting on `d+1` qudits leaves `d` copies of the
//! fundamental representation, and the encoder `U_E` maps a protected qudit
//! onto the multiplicity index of those copies. Chaining `U_E` over
//! overlapping windows protects `k` qudits with `n = kd + 1` physical qudits.
//!
//! - [`young`]: exact Young-diagram combinatorics (multiplicities, dimensions).
//! - [`matrixcore`]: dense complex linear algebra, sampling, partial trace.
//! - [`schur`]: construction and verification of the encoder `U_E`.
//! - [`channel`]: recursive encode / collective noise / decode simulation.
//! - [`io`]: JSON and CSV artifact formats.

pub mod channel;
pub mod error;
pub mod io;
pub mod matrixcore;
pub mod schur;
pub mod young;

pub use error::{Error, Result};
