//! Learning reduced bilinear surrogates from truncated path signatures.
//!
//! The truncated signature of the time-augmented control path is itself the
//! state of a nilpotent bilinear system. Fitting a linear readout on top of it
//! gives a learned surrogate, whose Gramians can be balanced and truncated.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below name the double-precision instantiations.

pub mod balancing;
pub mod bilinear;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod gramians;
pub mod grid;
pub mod integrate;
pub mod io;
pub mod learning;
pub mod linalg;
pub mod scalar;
pub mod signature;
pub mod trajectory;

pub use balancing::{balance, hankel_report, reduce, Balancing, HankelRow};
pub use bilinear::{BilinearSystem, Generator};
pub use control::ControlSignal;
pub use dynamics::{NonlinearSystem, ReactionDiffusion, TruthIntegrator};
pub use error::{Error, Result};
pub use gramians::{gramian_ode, gramian_series, GramianMethod, GramianPair};
pub use grid::TimeGrid;
pub use learning::{evaluate_pipeline, fit_c, ErrorReport, RegressionDataset};
pub use scalar::Scalar;
pub use signature::{compute_signature, SignatureSystem, SignatureVector};
pub use trajectory::Trajectory;

pub type TimeGridF64 = TimeGrid<f64>;
pub type ControlSignalF64 = ControlSignal<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type SignatureSystemF64 = SignatureSystem<f64>;
pub type BilinearSystemF64 = BilinearSystem<f64>;
pub type GramianPairF64 = GramianPair<f64>;
pub type BalancingF64 = Balancing<f64>;
pub type ReactionDiffusionF64 = ReactionDiffusion<f64>;
pub type RegressionDatasetF64 = RegressionDataset<f64>;

pub type TimeGridF32 = TimeGrid<f32>;
pub type BilinearSystemF32 = BilinearSystem<f32>;
