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

//! The free Dirac propagator as an exact matrix-valued Fourier multiplier.
//!
//! The symbol of `U_0(t) = e^{-it D_m}` at frequency `xi` is
//!
//! ```text
//! mu_t(xi) = cos(2 pi t <xi>_m) I_n
//!          - i sin(2 pi t <xi>_m)/<xi>_m (m alpha_0 + sum_j xi_j alpha_j)
//! ```
//!
//! which is the closed form of `exp[-2 pi i t (m alpha_0 + sum_j xi_j alpha_j)]`.
//! The closed form is the primary evaluation path; the generic matrix
//! exponential (by Hermitian eigendecomposition) survives only as a test
//! oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::clifford::DiracMatrixSet;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, SpinorField};

type CMat = DMatrix<Complex64>;

/// `sin(z)/z` with a 4-term Taylor series below `|z| < 1e-4` to avoid
/// cancellation at the removable singularity.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0))
    } else {
        z.sin() / z
    }
}

/// Evaluate the propagator symbol `mu_t(xi)`.
pub fn multiplier(xi: &[f64], t: f64, set: &DiracMatrixSet) -> CMat {
    let br = set.bracket(xi);
    let z = 2.0 * PI * t * br;
    let cos = z.cos();
    // sin(z)/<xi>_m = 2 pi t sinc(z), continuous at <xi>_m = 0
    let s = 2.0 * PI * t * sinc(z);
    let gen = set.generator(xi);
    let mut out = gen.map(|v| v * Complex64::new(0.0, -s));
    for i in 0..set.n {
        out[(i, i)] += Complex64::new(cos, 0.0);
    }
    out
}

/// Per-lattice evaluation cache of the multiplier symbol.
#[derive(Debug, Clone)]
pub struct MultiplierTable {
    pub t: f64,
    pub mats: Vec<CMat>,
}

impl MultiplierTable {
    pub fn build(lattice: &Lattice, t: f64, set: &DiracMatrixSet) -> MultiplierTable {
        let d = lattice.d();
        let mut idx = vec![0usize; d];
        let mut xi = vec![0.0f64; d];
        let mats = (0..lattice.node_count())
            .map(|node| {
                lattice.unravel(node, &mut idx);
                lattice.xi_point(&idx, &mut xi);
                multiplier(&xi, t, set)
            })
            .collect();
        MultiplierTable { t, mats }
    }

    /// Apply the table to a frequency-domain spinor field in place.
    pub fn apply_spectrum(&self, values: &mut [Complex64], n: usize) {
        let mut tmp = vec![Complex64::default(); n];
        for (node, mat) in self.mats.iter().enumerate() {
            let v = &mut values[node * n..(node + 1) * n];
            for (i, slot) in tmp.iter_mut().enumerate() {
                let mut acc = Complex64::default();
                for j in 0..n {
                    acc += mat[(i, j)] * v[j];
                }
                *slot = acc;
            }
            v.copy_from_slice(&tmp);
        }
    }
}

/// `psi(t) = F^{-1}[ mu_t . F psi_0 ]`.
pub fn evolve_free(psi0: &SpinorField, t: f64) -> SpinorField {
    let table = MultiplierTable::build(&psi0.field.lattice, t, &psi0.dirac);
    evolve_free_with(psi0, &table)
}

/// Same as [`evolve_free`] but reusing a precomputed multiplier table.
pub fn evolve_free_with(psi0: &SpinorField, table: &MultiplierTable) -> SpinorField {
    let mut spec = psi0.field.forward_ft();
    table.apply_spectrum(&mut spec.values, psi0.n());
    SpinorField { field: spec.inverse_ft(), dirac: Arc::clone(&psi0.dirac) }
}

/// Projections onto the positive/negative energy subspaces at frequency `xi`:
/// `P_± = (I ± generator(xi)/<xi>_m)/2`.
pub fn energy_projectors(xi: &[f64], set: &DiracMatrixSet) -> Result<(CMat, CMat)> {
    let br = set.bracket(xi);
    if br == 0.0 {
        return Err(Error::DegenerateNode);
    }
    let gen = set.generator(xi);
    let half = Complex64::new(0.5, 0.0);
    let scaled = gen.map(|v| v * Complex64::new(0.5 / br, 0.0));
    let mut plus = scaled.clone();
    let mut minus = scaled.map(|v| -v);
    for i in 0..set.n {
        plus[(i, i)] += half;
        minus[(i, i)] += half;
    }
    Ok((plus, minus))
}

/// Per-mode Klein-Gordon dispersion residuals of the free evolution: the
/// Fourier coefficient at node `k` must be
/// `P_+ psi0_hat(k) e^{-2 pi i t <k>_m} + P_- psi0_hat(k) e^{+2 pi i t <k>_m}`.
pub fn dispersion_residuals(psi0: &SpinorField, t: f64) -> Vec<f64> {
    let lat = &psi0.field.lattice;
    let n = psi0.n();
    let spec0 = psi0.field.forward_ft();
    let psi_t = evolve_free(psi0, t);
    let spec_t = psi_t.field.forward_ft();
    let d = lat.d();
    let mut idx = vec![0usize; d];
    let mut xi = vec![0.0f64; d];
    let mut out = Vec::with_capacity(lat.node_count());
    for node in 0..lat.node_count() {
        lat.unravel(node, &mut idx);
        lat.xi_point(&idx, &mut xi);
        let br = psi0.dirac.bracket(&xi);
        let v0 = &spec0.values[node * n..(node + 1) * n];
        let vt = &spec_t.values[node * n..(node + 1) * n];
        let res = match energy_projectors(&xi, &psi0.dirac) {
            Ok((p, m)) => {
                let em = Complex64::from_polar(1.0, -2.0 * PI * t * br);
                let ep = Complex64::from_polar(1.0, 2.0 * PI * t * br);
                let mut r2 = 0.0f64;
                for i in 0..n {
                    let mut want = Complex64::default();
                    for j in 0..n {
                        want += (p[(i, j)] * em + m[(i, j)] * ep) * v0[j];
                    }
                    r2 += (vt[i] - want).norm_sqr();
                }
                r2.sqrt()
            }
            // degenerate node (m=0, xi=0): the symbol is the identity
            Err(_) => vt
                .iter()
                .zip(v0.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt(),
        };
        out.push(res);
    }
    out
}

/// Test oracle: `exp(-2 pi i t G)` by dense Hermitian eigendecomposition.
pub fn matrix_exponential_oracle(xi: &[f64], t: f64, set: &DiracMatrixSet) -> CMat {
    let gen = set.generator(xi);
    let eig = gen.symmetric_eigen();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&e| Complex64::from_polar(1.0, -2.0 * PI * t * e))
        .collect();
    let mut mid = CMat::zeros(set.n, set.n);
    for (i, p) in phases.iter().enumerate() {
        mid[(i, i)] = *p;
    }
    &eig.eigenvectors * mid * eig.eigenvectors.adjoint()
}
