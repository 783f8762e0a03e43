// SPDX-License-Identifier: Apache-2.0

//! Floquet simulator and pulse-shape optimizer for strongly driven two-level
//! systems.
//!
//! All energies and times are dimensionless, in units of the fundamental
//! drive frequency (`omega = 1`, period `T = 2 pi`).

pub mod bessel;
pub mod drive;
pub mod error;
pub mod floquet;
pub mod optimizer;
pub mod oracle;
pub mod scan;
pub mod system;

pub use drive::{complex_coefficients, triangle_drive, ComplexDriveCoefficients, FourierDrive};
pub use error::{Error, Result};
pub use system::{field_free_basis, FieldFreeBasis, SystemPoint};
