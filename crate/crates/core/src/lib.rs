//! Epoch-wise double descent in a linear teacher–student model.
//!
//! Three independent views of the same learning curve:
//!
//! * [`sim`]: iterative full-batch gradient descent,
//! * [`exact`]: the closed-form iterate in the eigenbasis of `XᵀX`,
//! * [`replica`]: zero-temperature replica predictions,
//!
//! all reporting [`MacroObservables`]. [`engine`] sweeps them into tables.

// `!(x > 0.0)` is used on purpose so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod exact;
pub mod model;
pub mod replica;
pub mod rng;
pub mod sim;
pub mod table;

pub use engine::{classify_curve, Axis, Classification, CurveShape, EngineKind, FixedParams, Scale, SweepSpec};
pub use error::{Error, Result};
pub use exact::{exact_curve, gd_iterate_closed_form, q_trace, r_trace, ridge_solution, SpectralCache};
pub use model::{
    gen_error_from_rq, generate_instance, measure_rq, monte_carlo_test_error, MacroObservables, ModelDims,
    ModulationSpec, ProblemInstance,
};
pub use replica::{
    bipartite_prediction, block_a, effective_ridge, saddle_oracle, single_block_prediction, theory_curve,
    ReplicaInputs, ReplicaParams, SaddleState,
};
pub use sim::{train, train_single, TrainConfig, TrajectoryStats};
pub use table::{Column, Table};
