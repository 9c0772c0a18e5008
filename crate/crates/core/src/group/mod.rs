//! Base groups, HNN presentations and exact normal-form arithmetic.
//!
//! A presentation is loaded from a [`GroupSpec`] (the JSON schema used by the
//! CLI), validated, and then frozen. Everything downstream borrows it
//! immutably, so a single presentation can be shared by any number of worker
//! threads.

mod base;
pub mod catalog;
mod length;
pub mod moves;
mod normal_form;
mod presentation;

pub use base::{BaseGroup, Elem, FiniteGroup};
pub use length::{G0Weights, GrowthBound, LengthFunction};
pub use normal_form::{Letter, NormalForm, PushEffect, Sign, Syllable};
pub use presentation::{validate_presentation, BaseGroupSpec, GroupSpec, HnnPresentation};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("not a group table: {0}")]
    NotAGroupTable(String),
    #[error("not a subgroup: {0}")]
    NotASubgroup(String),
    #[error("not an isomorphism: {0}")]
    NotAnIsomorphism(String),
    #[error("the integers base group admits only the trivial subgroup {{0}} for A and B")]
    TrivialityViolation,
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("invalid length function: {0}")]
    InvalidLength(String),
}
