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

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spatial dimension must be a positive integer, got {0}")]
    InvalidDimension(usize),

    #[error("points per axis must be a power of two, got {0}")]
    NonPowerOfTwo(usize),

    #[error("lattice period must be positive, got {0}")]
    InvalidPeriod(f64),

    #[error("fields live on different lattices")]
    LatticeMismatch,

    #[error("value layout mismatch: expected {expected} values per node, got {got}")]
    ValueKindMismatch { expected: usize, got: usize },

    #[error("window function is identically zero")]
    ZeroWindow,

    #[error("lattice too coarse for BUPU: {0}")]
    BupuLattice(String),

    #[error("size guard violated: {0}")]
    SizeGuard(String),

    #[error("degenerate frequency node for energy projectors: m=0 and xi=0")]
    DegenerateNode,

    #[error("iteration did not converge within {iterations} sweeps (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("contraction not achieved above the horizon floor {floor}")]
    NoContraction { floor: f64 },

    #[error("phase-space tail mass {fraction:.3e} exceeds threshold; lattice too small")]
    TailMass { fraction: f64 },

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
