//! caseforge: a model-based assurance case engine.
//!
//! Stores modular GSN/SACM arguments with traceability to engineering
//! artifacts, evaluates them by running embedded constraint queries,
//! renders modules to a checkable formal notation, computes change impact,
//! and monitors the dynamic part of a case at runtime.

pub mod artifact_store;
pub mod backend_service;
pub mod case_model;
pub mod cli;
pub mod cql;
pub mod dsms;
pub mod evaluator;
pub mod formal;
pub mod impact;
pub mod lre;
