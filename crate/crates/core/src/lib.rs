pub mod catalog;
pub mod dpp;
pub mod fairness;
pub mod game;
pub mod harness;
pub mod optim;
pub mod static_eq;
pub mod stochastic;
