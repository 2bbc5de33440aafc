//! Magnetorquer detumbling laboratory.
//!
//! A 12-DOF orbit + attitude simulator with an IGRF geomagnetic field model,
//! realistic magnetometer/gyro sensor models, a family of detumbling control
//! laws (bang-bang, Lyapunov momentum, B-cross, B-dot and variants,
//! projection-based, and a predictive two-step controller), and a Monte-Carlo
//! campaign harness with deterministic seeding and CSV/JSON outputs.
//!
//! Start with the runnable examples (`cargo run --example single_run`) or the
//! `detumble` binary (`detumble mc --seeds 20`).

pub mod attmath;
pub mod geomag;
