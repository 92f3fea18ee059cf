//! Curvature kernel, bialternate product algebra and evolution integrators for
//! metric flows and waves driven by the Riemann tensor.
//!
//! The Riemann tensor throughout is oriented so that the round unit sphere has
//! `Riem = +G`, where `G_ijkl = g_ik g_jl − g_il g_jk`.

pub mod bialternate;
pub mod error;
pub mod evolve;
pub mod flow_engine;
pub mod linalg;
pub mod tensor_kernel;
pub mod tolerances;
pub mod variation_lab;
pub mod wave_engine;

pub use error::{Error, Result};
pub use tolerances::Tolerances;
