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

//! Dirac matrix sets in arbitrary spatial dimension.
//!
//! A set consists of `d + 1` Hermitian `n x n` matrices `alpha_0, ..., alpha_d`
//! with `alpha_i alpha_j + alpha_j alpha_i = 2 delta_ij I_n`, where `alpha_0`
//! is the diagonal mass matrix `diag(I_{n/2}, -I_{n/2})`.
//!
//! The default construction is the recursive tensor-product scheme: Pauli
//! matrices for `d <= 2`, then Kronecker extension with a sigma_3 grading.
//! With the basis ordering used here the `d = 3` set is exactly the Pauli-block
//! Dirac representation and `alpha_0` always lands in the required diagonal
//! block form. The spinor dimension is `n = 2^ceil(d/2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

type CMat = DMatrix<Complex64>;

/// The `d + 1` Dirac matrices together with the mass parameter.
#[derive(Debug, Clone)]
pub struct DiracMatrixSet {
    /// Spatial dimension.
    pub d: usize,
    /// Spinor dimension (even; `2^ceil(d/2)` for the default construction).
    pub n: usize,
    /// `alphas[0]` is the mass matrix `alpha_0`; `alphas[j]` for `j >= 1` the
    /// spatial matrices.
    pub alphas: Vec<CMat>,
    /// Mass (non-negative).
    pub m: f64,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli() -> [CMat; 3] {
    let s1 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let s2 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let s3 = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    [s1, s2, s3]
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Ordered set of `2k + 1` Hermitian anticommuting involutions in dimension
/// `2^k`, with `sigma_3 (x) I` (the diagonal grading) last.
fn involution_set(k: usize) -> Vec<CMat> {
    let [s1, s2, s3] = pauli();
    if k == 0 {
        return vec![CMat::identity(1, 1)];
    }
    if k == 1 {
        return vec![s1, s2, s3];
    }
    let prev = involution_set(k - 1);
    let id = CMat::identity(prev[0].nrows(), prev[0].nrows());
    let mut out: Vec<CMat> = prev.iter().map(|t| kron(&s1, t)).collect();
    out.push(kron(&s2, &id));
    out.push(kron(&s3, &id));
    out
}

/// Build the default Dirac matrix set for spatial dimension `d` and mass `m`.
pub fn build_dirac_matrices(d: usize, m: f64) -> Result<DiracMatrixSet> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    let k = d.div_ceil(2);
    let set = involution_set(k);
    let n = 1usize << k;
    // alpha_0 = last element (sigma_3 grading), alpha_1..alpha_d the first d.
    let mut alphas = Vec::with_capacity(d + 1);
    alphas.push(set[2 * k].clone());
    for item in set.iter().take(d) {
        alphas.push(item.clone());
    }
    Ok(DiracMatrixSet { d, n, alphas, m })
}

impl DiracMatrixSet {
    /// `m alpha_0 + sum_j xi_j alpha_j`, the Hermitian symbol of the Dirac
    /// operator at frequency `xi`.
    pub fn generator(&self, xi: &[f64]) -> CMat {
        assert_eq!(xi.len(), self.d, "frequency dimension mismatch");
        let mut g = self.alphas[0].map(|v| v * c(self.m, 0.));
        for (j, &x) in xi.iter().enumerate() {
            g += self.alphas[j + 1].map(|v| v * c(x, 0.));
        }
        g
    }

    /// `<xi>_m = sqrt(m^2 + |xi|^2)`.
    pub fn bracket(&self, xi: &[f64]) -> f64 {
        let x2: f64 = xi.iter().map(|v| v * v).sum();
        (self.m * self.m + x2).sqrt()
    }
}

/// Verification report for the Clifford identities.
#[derive(Debug, Clone, Serialize)]
pub struct CliffordReport {
    pub ok: bool,
    pub tol: f64,
    /// Worst anticommutator residual `|| a_i a_j + a_j a_i - 2 delta_ij I ||_max`.
    pub max_anticommutator_residual: f64,
    /// The offending `(i, j)` pair for the residual above.
    pub worst_pair: (usize, usize),
    pub max_hermiticity_residual: f64,
    /// Index of the worst non-Hermitian matrix, if any violation was found.
    pub hermiticity_flagged: Option<usize>,
    /// Deviation of `alpha_0` from `diag(I_{n/2}, -I_{n/2})`.
    pub alpha0_form_residual: f64,
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Check all `DiracMatrixSet` invariants within `tol`.
pub fn verify_clifford(set: &DiracMatrixSet, tol: f64) -> CliffordReport {
    let n = set.n;
    let id = CMat::identity(n, n);

    let mut max_ac = 0.0;
    let mut worst = (0, 0);
    for i in 0..=set.d {
        for j in 0..=set.d {
            let target = if i == j {
                id.map(|v| v * c(2., 0.))
            } else {
                CMat::zeros(n, n)
            };
            let res = max_abs(&(&set.alphas[i] * &set.alphas[j] + &set.alphas[j] * &set.alphas[i] - target));
            if res > max_ac {
                max_ac = res;
                worst = (i, j);
            }
        }
    }

    let mut max_herm = 0.0;
    let mut herm_flag = None;
    for (i, a) in set.alphas.iter().enumerate() {
        let res = max_abs(&(a - a.adjoint()));
        if res > max_herm {
            max_herm = res;
        }
        if res > tol && herm_flag.is_none() {
            herm_flag = Some(i);
        }
    }

    let mut a0_res = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i != j {
                c(0., 0.)
            } else if i < n / 2 {
                c(1., 0.)
            } else {
                c(-1., 0.)
            };
            a0_res = a0_res.max((set.alphas[0][(i, j)] - want).norm());
        }
    }

    let ok = max_ac <= tol && max_herm <= tol && a0_res <= tol && set.n % 2 == 0;
    CliffordReport {
        ok,
        tol,
        max_anticommutator_residual: max_ac,
        worst_pair: worst,
        max_hermiticity_residual: max_herm,
        hermiticity_flagged: herm_flag,
        alpha0_form_residual: a0_res,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_zero_dimension() {
        assert!(build_dirac_matrices(0, 1.0).is_err());
    }

    #[test]
    fn d3_is_pauli_block_dirac_representation() {
        let set = build_dirac_matrices(3, 0.0).unwrap();
        assert_eq!(set.n, 4);
        let [s1, _, _] = pauli();
        // alpha_1 has sigma_1 in the off-diagonal 2x2 blocks.
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(set.alphas[1][(i, j)], c(0., 0.));
                assert_eq!(set.alphas[1][(i + 2, j + 2)], c(0., 0.));
                assert_eq!(set.alphas[1][(i, j + 2)], s1[(i, j)]);
                assert_eq!(set.alphas[1][(i + 2, j)], s1[(i, j)]);
            }
        }
        for i in 0..4 {
            let want = if i < 2 { 1.0 } else { -1.0 };
            assert_eq!(set.alphas[0][(i, i)], c(want, 0.));
        }
    }

    #[test]
    fn d1_products_brute_force() {
        // oracle: multiply out all index pairs directly
        let set = build_dirac_matrices(1, 1.0).unwrap();
        assert_eq!(set.n, 2);
        let [s1, _, s3] = pauli();
        assert_eq!(set.alphas[1], s1);
        assert_eq!(set.alphas[0], s3);
        for i in 0..=1 {
            for j in 0..=1 {
                let prod = &set.alphas[i] * &set.alphas[j] + &set.alphas[j] * &set.alphas[i];
                let want = if i == j { 2.0 } else { 0.0 };
                for a in 0..2 {
                    for b in 0..2 {
                        let target = if a == b { c(want, 0.) } else { c(0., 0.) };
                        assert!((prod[(a, b)] - target).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn squares_are_identity_all_dims() {
        for d in 1..=8 {
            let set = build_dirac_matrices(d, 0.5).unwrap();
            for a in &set.alphas {
                let sq = a * a;
                assert!(max_abs(&(sq - CMat::identity(set.n, set.n))) < 1e-14, "d={d}");
            }
        }
    }

    #[test]
    fn verify_accepts_valid_sets() {
        for d in 1..=6 {
            let set = build_dirac_matrices(d, 1.0).unwrap();
            let rep = verify_clifford(&set, 1e-12);
            assert!(rep.ok, "d={d}: {rep:?}");
        }
    }

    #[test]
    fn verify_flags_perturbed_entry() {
        let mut set = build_dirac_matrices(3, 0.0).unwrap();
        set.alphas[1][(0, 2)] += c(1e-3, 0.);
        set.alphas[1][(2, 0)] += c(1e-3, 0.); // keep Hermitian
        let rep = verify_clifford(&set, 1e-12);
        assert!(!rep.ok);
        // residual of the perturbed anticommutator, computed directly
        assert!((rep.max_anticommutator_residual - 2e-3).abs() < 1e-4, "{rep:?}");
    }

    #[test]
    fn verify_flags_non_hermitian() {
        let mut set = build_dirac_matrices(3, 0.0).unwrap();
        set.alphas[2][(0, 1)] += c(0., 1e-2);
        let rep = verify_clifford(&set, 1e-12);
        assert!(!rep.ok);
        assert_eq!(rep.hermiticity_flagged, Some(2));
    }

    #[test]
    fn generator_eigenvalues_are_plus_minus_bracket() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=5 {
            let set = build_dirac_matrices(d, 1.3).unwrap();
            for _ in 0..20 {
                let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let g = set.generator(&xi);
                let br = set.bracket(&xi);
                let mut eigs = g.symmetric_eigen().eigenvalues.as_slice().to_vec();
                eigs.sort_by(f64::total_cmp);
                for (i, e) in eigs.iter().enumerate() {
                    let want = if i < set.n / 2 { -br } else { br };
                    assert!((e - want).abs() < 1e-10, "d={d} eig {e} vs {want}");
                }
            }
        }
    }

    #[test]
    fn dimension_doubles_even_to_odd() {
        for d in (2..8).step_by(2) {
            let even = build_dirac_matrices(d, 0.0).unwrap();
            let odd = build_dirac_matrices(d + 1, 0.0).unwrap();
            assert_eq!(odd.n, 2 * even.n);
            assert_eq!(even.n, 1usize << d.div_ceil(2));
        }
    }
}
