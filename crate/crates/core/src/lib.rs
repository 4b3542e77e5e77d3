//! Symplectic gyroceptrons: neural surrogates for nearly-periodic symplectic
//! maps that are exactly symplectic and exactly invertible for every value of
//! their weights, with a provable adiabatic invariant.
//!
//! The surrogate is the composition `I_ε ∘ ψ ∘ Φ_θ ∘ ψ⁻¹` where `ψ` is a
//! [`HenonNet`], `I_ε` a [`NearIdentityHenonNet`] and `Φ_θ` a [`CircleAction`].
//! The crate also ships the ground-truth benchmark systems used to generate
//! training data and the experiment protocols behind the `gyro` CLI.

pub mod circle;
pub mod error;
pub mod experiments;
pub mod gyroceptron;
pub mod henon;
pub mod io;
pub mod phase;
pub mod potential;
pub mod symplectic;
pub mod systems;
pub mod training;

pub use circle::{CircleAction, Mode};
pub use error::{Error, Result};
pub use gyroceptron::{Architecture, Rollout, SymplecticGyroceptron};
pub use henon::{HenonLayer, HenonNet, NearIdentityHenonNet};
pub use phase::PhaseState;
pub use potential::PotentialNet;
pub use symplectic::{jacobian_fd, symplectic_defect};
pub use training::{loss_gradient, mse_loss, train, TrainConfig, TrainReport, UpdatePair};
