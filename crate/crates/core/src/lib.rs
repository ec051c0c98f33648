//! Monitored brickwall Clifford circuits with an entangled reference qubit.
//!
//! The crate is organised bottom-up:
//!
//! * [`gf2`], [`pauli`], [`clifford`] and [`tableau`] implement a bit-packed
//!   stabilizer simulator with projective `Z` measurements.
//! * [`circuit`] builds seeded hybrid circuits (gate layout and measurement
//!   sites), scrambled initial states and narrow sub-circuits.
//! * [`trajectory`] and [`dataset`] run circuits into labelled outcome
//!   matrices and serialize them.
//! * [`decoder`] tracks stabilizer signs symbolically over GF(2) and returns
//!   the exact decoding function of the reference qubit.
//!
//! Everything random is derived from counter-based keys ([`rng`]) so that
//! results do not depend on scheduling; [`par`] switches between rayon and a
//! sequential fallback with the `parallel` feature.

pub mod circuit;
pub mod clifford;
pub mod dataset;
pub mod decoder;
pub mod error;
pub mod gf2;
pub mod par;
pub mod pauli;
pub mod rng;
pub mod tableau;
pub mod trajectory;

pub use circuit::{build_circuit, derive_subcircuit, Boundary, CircuitInstance, CircuitSpec, InitState, PlacedGate};
pub use clifford::CliffordGate;
pub use dataset::{generate_dataset, read_dataset, write_dataset, Dataset, Labels, Sample};
pub use decoder::{analyze_circuit, check_constraints, predict, predict_windowed, AffineSign, KeyMeasurementReport, Slot};
pub use error::{Error, Result};
pub use pauli::{Axis, PauliString};
pub use tableau::{RefStatus, StabilizerState, Tableau};
pub use trajectory::{lightcone_window, run_trajectory, simulate, LightCone, RunOptions, TrajectoryRecord, WindowSpec};
