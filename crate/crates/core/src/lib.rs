//! Cost-sensitive feature selection over layered boolean circuits.
//!
//! A [`circuit::CostCircuit`] describes how features are computed from
//! measurements, tests and caregiver activities. [`dnf::reduce`] flattens it
//! into features, the alternative ways to obtain each one, and the cost-bearing
//! nodes each way needs; [`regularizer`] turns that into per-node group
//! penalties; [`solver`] fits penalized logistic regression models; and
//! [`evaluation`] scores them and sweeps the cost/accuracy trade-off.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod data;
pub mod dnf;
pub mod evaluation;
pub mod regularizer;
pub mod solver;
