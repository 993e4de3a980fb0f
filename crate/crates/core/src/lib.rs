//! Linear stability of the growing base state of a two-phase tumour model
//! in the limit of negligible drag and nutrient uptake.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod banded;
pub mod base_state;
pub mod constitutive;
pub mod error;
pub mod layer;
pub mod perturbation;

pub use base_state::{find_base_states, select_branch, BaseState, Linearization};
pub use constitutive::ModelParameters;
pub use error::{Error, Result};
