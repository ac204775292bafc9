//! QAOA MaxCut simulation with parameter transfer and targeted-single-layer
//! regularized optimization.
//!
//! The library covers the full workflow: generate random graph families
//! ([`graphgen`]), simulate the depth-`p` QAOA ansatz exactly ([`simulator`]),
//! initialize parameters by TQA / random draws / transfer from a donor bank
//! ([`params`]), optimize with Adagrad or gradient-free methods under
//! configurable regularization ([`optimizers`]), and run the end-to-end
//! donor-training / transfer / layer-selection / refinement studies
//! ([`pipeline`]).

pub mod graphgen;
pub mod optimizers;
pub mod params;
pub mod pipeline;
pub mod seeds;
pub mod simulator;
