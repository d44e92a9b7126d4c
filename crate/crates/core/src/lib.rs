//! Polynomial optimization toolkit: local optimality audits, Lasserre
//! sum-of-squares / moment relaxations solved by an embedded interior-point
//! SDP solver, and independently checkable global optimality certificates.

pub mod certify;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod gallery;
pub mod hierarchy;
pub mod instance;
pub mod localopt;
pub mod polyring;
pub mod relaxation;
pub mod sdp;

pub use error::{Error, Result};
pub use instance::{InstanceFile, InstanceMetadata, PopInstance};
pub use polyring::{Monomial, MonomialBasis, Polynomial};
