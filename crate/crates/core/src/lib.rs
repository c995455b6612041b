// Copyright 2026 The diracsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Pseudo-spectral solver for the n-component Dirac equation together with a
//! numerical time-frequency analysis toolkit (short-time Fourier transform,
//! modulation and Wiener-amalgam norms, Weyl quantization) at desk scale.
//!
//! The crate is organized around a periodic lattice truncation of `R^d`:
//!
//! * [`clifford`] — Dirac matrix sets in arbitrary spatial dimension;
//! * [`lattice`] — lattice, discrete Fourier transform and weights;
//! * [`tfa`] — STFT, mixed norms, BUPU decomposition norms;
//! * [`propagator`] — the free Dirac propagator as an exact matrix multiplier;
//! * [`weyl`] — Wigner distribution and Weyl quantization;
//! * [`evolution`] — Volterra/Picard linear and nonlinear solvers;
//! * [`experiments`] — norm-growth fits, smoothing ratios, suite runner;
//! * [`io`] — binary field snapshots.

pub mod clifford;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod io;
pub mod lattice;
pub mod propagator;
pub mod tfa;
pub mod weyl;

pub use error::{Error, Result};
