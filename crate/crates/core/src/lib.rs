//! Capacity bounds and rate regions for channels whose transmitters know the
//! channel state non-causally.
//!
//! Information measures are in bits throughout. The crate is organised
//! bottom-up:
//!
//! * [`prob`]: pmfs, conditional pmfs and named joint tables with entropy and
//!   mutual-information queries.
//! * [`channels`]: single-user, multiple-access, broadcast and relay channels
//!   with state, plus structural classifiers.
//! * [`regions`] and [`optimizer`]: rate-region geometry and the search over
//!   auxiliary distributions.
//! * [`singleuser`], [`mac`], [`bc`], [`relay`]: capacity expressions and
//!   region bounds.
//! * [`binningsim`]: Monte-Carlo simulation of random binning.

pub mod bc;
pub mod binningsim;
pub mod channels;
pub mod error;
pub mod mac;
pub mod optimizer;
pub mod prob;
pub mod regions;
pub mod relay;
pub mod singleuser;
pub mod specfile;

pub use error::{Error, Result};
