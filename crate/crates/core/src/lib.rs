//! Numerical holonomy toolkit.
//!
//! Computes geometric phases and their relatives for parameterized Hermitian
//! families: Berry connection and curvature, degeneracy (monopole) censuses,
//! nonabelian Wilson loops, Aharonov–Anandan phase decompositions,
//! superadiabatic correction series, geometric transition amplitudes, Hannay
//! angles and kinematic reorientation, and lattice Chern numbers.
//!
//! The crate is `no_std`-compatible (it requires `alloc`); the default `std`
//! feature only toggles `std::error::Error` integration and is not needed by
//! any numerical kernel. All floating-point math is routed through `libm` so
//! results are identical with and without the standard library.
//!
//! Conventions used throughout (with ħ = 1):
//!
//! * Berry connection `A = Im⟨n|∇n⟩`, geometric phase `γ = −∮ A·dR`.
//! * Discrete loop phase: `γ = arg Π_k ⟨n(R_{k+1})|n(R_k)⟩`, the phase of the
//!   cyclically closed product of successive overlaps. For a spin-1/2 on a
//!   counterclockwise colatitude-θ₀ circle this yields `−π(1−cos θ₀)` for the
//!   upper level, i.e. −(solid angle)/2.
//! * Signed solid angles are positive for counterclockwise loops seen from
//!   outside the sphere.
//! * Phases are reported as principal values in `(−π, π]` together with
//!   unwrapped accumulations where meaningful.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod abelian;
pub mod classical;
pub mod cmat;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod fp;
pub mod lattice;
pub mod levels;
pub mod nonabelian;
pub mod rng;
pub mod spectral;
pub mod vec3;

pub use cmat::{CMat, C};
pub use error::{Error, Result};
pub use vec3::{Mat3, Vec3};
