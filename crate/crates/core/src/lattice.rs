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

//! Periodic spatial lattice, frequency lattice and the discrete Fourier
//! transform shared by all numerics.
//!
//! Conventions (the single source of truth for all modules):
//!
//! * `R^d` is truncated to a torus; axis `a` has `N_a` nodes (power of two)
//!   and period `L_a`. Spatial nodes are `x_k = -L/2 + k L/N`.
//! * The transform approximates `F f(xi) = int e^{-2 pi i x xi} f(x) dx`
//!   (the 2 pi-in-exponent normalization), so frequency nodes are
//!   `xi_u = (u - N/2)/L`, stored in centered order spanning
//!   `[-N/(2L), N/(2L))`.
//! * Node-measure factors are folded into norm computations, not into field
//!   values: the spatial measure is `prod L_a/N_a`, the frequency measure
//!   `prod 1/L_a`. `forward_ft` produces samples of the continuous transform
//!   (the `dx` factor is part of the quadrature, hence of the returned
//!   values); `inverse_ft(forward_ft(f)) = f` exactly up to roundoff.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::clifford::DiracMatrixSet;
use crate::error::{Error, Result};

/// One lattice axis: node count (power of two) and period.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub n: usize,
    pub period: f64,
}

impl Axis {
    pub fn x_step(&self) -> f64 {
        self.period / self.n as f64
    }
    pub fn xi_step(&self) -> f64 {
        1.0 / self.period
    }
    pub fn x_coord(&self, k: usize) -> f64 {
        -self.period / 2.0 + k as f64 * self.x_step()
    }
    pub fn xi_coord(&self, u: usize) -> f64 {
        (u as f64 - self.n as f64 / 2.0) / self.period
    }
}

/// Periodic lattice with per-axis node counts and periods.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    axes: Vec<Axis>,
}

impl Lattice {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        for ax in &axes {
            if ax.n < 2 || !ax.n.is_power_of_two() {
                return Err(Error::NonPowerOfTwo(ax.n));
            }
            if !(ax.period > 0.0) {
                return Err(Error::InvalidPeriod(ax.period));
            }
        }
        Ok(Lattice { axes })
    }

    /// Same node count and period on every axis.
    pub fn uniform(d: usize, n: usize, period: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Lattice::new(vec![Axis { n, period }; d])
    }

    pub fn d(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    /// Spatial node measure `prod L_a/N_a`.
    pub fn x_measure(&self) -> f64 {
        self.axes.iter().map(|a| a.x_step()).product()
    }

    /// Frequency node measure `prod 1/L_a`.
    pub fn xi_measure(&self) -> f64 {
        self.axes.iter().map(|a| a.xi_step()).product()
    }

    pub fn x_nodes(&self, axis: usize) -> Vec<f64> {
        (0..self.axes[axis].n).map(|k| self.axes[axis].x_coord(k)).collect()
    }

    pub fn xi_nodes(&self, axis: usize) -> Vec<f64> {
        (0..self.axes[axis].n).map(|u| self.axes[axis].xi_coord(u)).collect()
    }

    /// Decompose a flat node index (row-major over axes) into per-axis indices.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.axes.len()).rev() {
            out[a] = flat % self.axes[a].n;
            flat /= self.axes[a].n;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (a, &i) in idx.iter().enumerate() {
            flat = flat * self.axes[a].n + i;
        }
        flat
    }

    pub fn x_point(&self, idx: &[usize], out: &mut [f64]) {
        for (a, &i) in idx.iter().enumerate() {
            out[a] = self.axes[a].x_coord(i);
        }
    }

    pub fn xi_point(&self, idx: &[usize], out: &mut [f64]) {
        for (a, &i) in idx.iter().enumerate() {
            out[a] = self.axes[a].xi_coord(i);
        }
    }
}

/// `<z>_m^s = (m^2 + |z|^2)^{s/2}`; `m = 1` gives the Japanese bracket used
/// by all weighted norms.
pub fn bracket_weight(z: &[f64], s: f64, m: f64) -> f64 {
    let z2: f64 = z.iter().map(|v| v * v).sum();
    (m * m + z2).powf(s / 2.0)
}

/// How the complex values attached to a node are interpreted when taking the
/// pointwise `E`-norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Scalar,
    /// `C^n` with the Euclidean norm.
    Vector(usize),
    /// `n x n` matrices (row-major) with the operator norm.
    Matrix(usize),
}

impl ValueKind {
    pub fn dims(&self) -> usize {
        match *self {
            ValueKind::Scalar => 1,
            ValueKind::Vector(n) => n,
            ValueKind::Matrix(n) => n * n,
        }
    }

    /// Pointwise norm of one node value.
    pub fn value_norm(&self, v: &[Complex64]) -> f64 {
        match *self {
            ValueKind::Scalar => v[0].norm(),
            ValueKind::Vector(_) => v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            ValueKind::Matrix(n) => matrix_operator_norm(v, n),
        }
    }
}

/// Spectral norm via the largest eigenvalue of `A^H A`.
pub fn matrix_operator_norm(v: &[Complex64], n: usize) -> f64 {
    use nalgebra::DMatrix;
    let a = DMatrix::from_row_slice(n, n, v);
    let h = a.adjoint() * &a;
    let eigs = h.symmetric_eigen().eigenvalues;
    eigs.iter().fold(0.0f64, |m, &e| m.max(e)).max(0.0).sqrt()
}

/// Which set of nodes the sample values refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Space,
    Frequency,
}

/// Complex samples on a lattice, `kind.dims()` values per node, node-major
/// row-major layout.
#[derive(Debug, Clone)]
pub struct Field {
    pub lattice: Lattice,
    pub kind: ValueKind,
    pub domain: Domain,
    pub values: Vec<Complex64>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, dir))
}

/// In-place DFT of every lane along `axis`. `vd` values per node.
fn dft_axis(values: &mut [Complex64], shape: &[usize], vd: usize, axis: usize, dir: FftDirection) {
    let n = shape[axis];
    let mut stride = vd;
    for s in shape[axis + 1..].iter() {
        stride *= s;
    }
    let fft = plan(n, dir);
    let mut lane = vec![Complex64::default(); n];
    let total = values.len();
    let block = stride * n; // contiguous block spanned by one axis sweep
    for base in (0..total).step_by(block) {
        for off in 0..stride {
            let start = base + off;
            for (k, slot) in lane.iter_mut().enumerate() {
                *slot = values[start + k * stride];
            }
            fft.process(&mut lane);
            for (k, &v) in lane.iter().enumerate() {
                values[start + k * stride] = v;
            }
        }
    }
}

fn phase_sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Multiply every value whose index along `axis` is `k` by `f(k)`.
fn scale_axis(values: &mut [Complex64], shape: &[usize], vd: usize, axis: usize, f: impl Fn(usize) -> f64) {
    let n = shape[axis];
    let mut stride = vd;
    for s in shape[axis + 1..].iter() {
        stride *= s;
    }
    let factors: Vec<f64> = (0..n).map(f).collect();
    let block = stride * n;
    for base in (0..values.len()).step_by(block) {
        for (k, &fac) in factors.iter().enumerate() {
            let start = base + k * stride;
            for v in values[start..start + stride].iter_mut() {
                *v *= fac;
            }
        }
    }
}

impl Field {
    pub fn zeros(lattice: Lattice, kind: ValueKind) -> Field {
        let len = lattice.node_count() * kind.dims();
        Field { lattice, kind, domain: Domain::Space, values: vec![Complex64::default(); len] }
    }

    /// Sample a function of the spatial node coordinates; `fill` writes the
    /// node value into `out`.
    pub fn from_fn(lattice: Lattice, kind: ValueKind, mut fill: impl FnMut(&[f64], &mut [Complex64])) -> Field {
        let d = lattice.d();
        let vd = kind.dims();
        let mut f = Field::zeros(lattice, kind);
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0f64; d];
        for node in 0..f.lattice.node_count() {
            f.lattice.unravel(node, &mut idx);
            f.lattice.x_point(&idx, &mut x);
            let start = node * vd;
            fill(&x, &mut f.values[start..start + vd]);
        }
        f
    }

    pub fn scalar_from_fn(lattice: Lattice, mut f: impl FnMut(&[f64]) -> Complex64) -> Field {
        Field::from_fn(lattice, ValueKind::Scalar, |x, out| out[0] = f(x))
    }

    pub fn vd(&self) -> usize {
        self.kind.dims()
    }

    pub fn node_values(&self, node: usize) -> &[Complex64] {
        let vd = self.vd();
        &self.values[node * vd..(node + 1) * vd]
    }

    /// Discrete approximation of the continuous Fourier transform; values on
    /// the centered frequency lattice.
    pub fn forward_ft(&self) -> Field {
        assert_eq!(self.domain, Domain::Space, "forward_ft expects a space-domain field");
        let mut out = self.clone();
        let shape = self.lattice.shape();
        let vd = self.vd();
        for axis in 0..self.lattice.d() {
            let n = shape[axis];
            let dx = self.lattice.axes()[axis].x_step();
            scale_axis(&mut out.values, &shape, vd, axis, phase_sign);
            dft_axis(&mut out.values, &shape, vd, axis, FftDirection::Forward);
            scale_axis(&mut out.values, &shape, vd, axis, |u| dx * phase_sign(u + n / 2));
        }
        out.domain = Domain::Frequency;
        out
    }

    /// Exact inverse of [`Field::forward_ft`].
    pub fn inverse_ft(&self) -> Field {
        assert_eq!(self.domain, Domain::Frequency, "inverse_ft expects a frequency-domain field");
        let mut out = self.clone();
        let shape = self.lattice.shape();
        let vd = self.vd();
        for axis in (0..self.lattice.d()).rev() {
            let n = shape[axis];
            let dx = self.lattice.axes()[axis].x_step();
            scale_axis(&mut out.values, &shape, vd, axis, |u| phase_sign(u + n / 2) / (dx * n as f64));
            dft_axis(&mut out.values, &shape, vd, axis, FftDirection::Inverse);
            scale_axis(&mut out.values, &shape, vd, axis, phase_sign);
        }
        out.domain = Domain::Space;
        out
    }

    fn measure(&self) -> f64 {
        match self.domain {
            Domain::Space => self.lattice.x_measure(),
            Domain::Frequency => self.lattice.xi_measure(),
        }
    }

    /// Lattice-weighted L^2 norm (node measure included).
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.measure()).sqrt()
    }

    /// `<f, g> = int f conj(g)`, summing over value components.
    pub fn inner(&self, other: &Field) -> Complex64 {
        assert_eq!(self.values.len(), other.values.len());
        let s: Complex64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.measure()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in self.values.iter_mut() {
            *v *= c;
        }
    }

    pub fn add_scaled(&mut self, other: &Field, c: Complex64) {
        assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += b * c;
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.add_scaled(other, Complex64::new(-1.0, 0.0));
        out
    }

    /// Direct (slow) evaluation of the continuous-transform quadrature at
    /// arbitrary frequency points; oracle-grade helper.
    pub fn ft_at(&self, freqs: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
        assert_eq!(self.domain, Domain::Space);
        let d = self.lattice.d();
        let vd = self.vd();
        let dx = self.lattice.x_measure();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0f64; d];
        let mut out = vec![vec![Complex64::default(); vd]; freqs.len()];
        for node in 0..self.lattice.node_count() {
            self.lattice.unravel(node, &mut idx);
            self.lattice.x_point(&idx, &mut x);
            for (fi, xi) in freqs.iter().enumerate() {
                let phase: f64 = x.iter().zip(xi.iter()).map(|(a, b)| a * b).sum();
                let w = Complex64::from_polar(dx, -2.0 * std::f64::consts::PI * phase);
                for c in 0..vd {
                    out[fi][c] += w * self.values[node * vd + c];
                }
            }
        }
        out
    }
}

/// `C^n`-valued wavefunction attached to a Dirac matrix set.
#[derive(Debug, Clone)]
pub struct SpinorField {
    pub field: Field,
    pub dirac: Arc<DiracMatrixSet>,
}

impl SpinorField {
    pub fn new(field: Field, dirac: Arc<DiracMatrixSet>) -> Result<SpinorField> {
        let expected = dirac.n;
        match field.kind {
            ValueKind::Vector(n) if n == expected => Ok(SpinorField { field, dirac }),
            k => Err(Error::ValueKindMismatch { expected, got: k.dims() }),
        }
    }

    pub fn from_fn(
        lattice: Lattice,
        dirac: Arc<DiracMatrixSet>,
        fill: impl FnMut(&[f64], &mut [Complex64]),
    ) -> SpinorField {
        let n = dirac.n;
        let field = Field::from_fn(lattice, ValueKind::Vector(n), fill);
        SpinorField { field, dirac }
    }

    pub fn n(&self) -> usize {
        self.dirac.n
    }

    pub fn l2_norm(&self) -> f64 {
        self.field.l2_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn gauss_field(lat: &Lattice) -> Field {
        Field::scalar_from_fn(lat.clone(), |x| {
            let x2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-PI * x2).exp(), 0.0)
        })
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(Lattice::uniform(1, 100, 8.0).is_err());
        assert!(Lattice::uniform(1, 64, 0.0).is_err());
        assert!(Lattice::uniform(0, 64, 8.0).is_err());
    }

    #[test]
    fn gaussian_is_self_dual() {
        // the 2 pi convention makes e^{-pi x^2} its own transform
        let lat = Lattice::uniform(1, 256, 16.0).unwrap();
        let f = gauss_field(&lat);
        let fh = f.forward_ft();
        let xi = lat.xi_nodes(0);
        for (u, &x) in xi.iter().enumerate() {
            let want = (-PI * x * x).exp();
            assert!((fh.values[u] - Complex64::new(want, 0.0)).norm() < 1e-10, "u={u}");
        }
    }

    #[test]
    fn gaussian_self_dual_2d() {
        let lat = Lattice::uniform(2, 128, 16.0).unwrap();
        let f = gauss_field(&lat);
        let fh = f.forward_ft();
        let mut idx = [0usize; 2];
        let mut xi = [0.0f64; 2];
        for node in 0..lat.node_count() {
            lat.unravel(node, &mut idx);
            lat.xi_point(&idx, &mut xi);
            let want = (-PI * (xi[0] * xi[0] + xi[1] * xi[1])).exp();
            assert!((fh.values[node] - Complex64::new(want, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_field_concentrates_at_zero() {
        let lat = Lattice::uniform(1, 64, 8.0).unwrap();
        let f = Field::scalar_from_fn(lat.clone(), |_| Complex64::new(1.0, 0.0));
        let fh = f.forward_ft();
        for (u, v) in fh.values.iter().enumerate() {
            if u == 32 {
                assert_abs_diff_eq!(v.re, 8.0, epsilon = 1e-12); // integral of 1 over the period
            } else {
                assert!(v.norm() < 1e-12, "u={u} {v}");
            }
        }
    }

    #[test]
    fn round_trip_and_parseval_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for lat in [
            Lattice::uniform(1, 128, 8.0).unwrap(),
            Lattice::uniform(2, 32, 4.0).unwrap(),
            Lattice::new(vec![Axis { n: 32, period: 4.0 }, Axis { n: 16, period: 2.0 }]).unwrap(),
        ] {
            let mut f = Field::zeros(lat, ValueKind::Vector(2));
            for v in f.values.iter_mut() {
                *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let fh = f.forward_ft();
            let back = fh.inverse_ft();
            let rel = back.sub(&f).l2_norm() / f.l2_norm();
            assert!(rel < 1e-13, "round trip rel err {rel}");
            let rel_p = (fh.l2_norm() - f.l2_norm()).abs() / f.l2_norm();
            assert!(rel_p < 1e-13, "parseval rel err {rel_p}");
        }
    }

    #[test]
    fn translation_modulation_exchange() {
        // T_shift in x becomes modulation in frequency and vice versa
        let lat = Lattice::uniform(1, 128, 16.0).unwrap();
        let f = gauss_field(&lat);
        let fh = f.forward_ft();
        let shift = 9usize; // integer node translation
        let mut tf = f.clone();
        let n = 128;
        for k in 0..n {
            tf.values[k] = f.values[(k + n - shift) % n];
        }
        let tfh = tf.forward_ft();
        let dx = lat.axes()[0].x_step();
        let xs = shift as f64 * dx;
        for (u, &xi) in lat.xi_nodes(0).iter().enumerate() {
            let want = fh.values[u] * Complex64::from_polar(1.0, -2.0 * PI * xs * xi);
            assert!((tfh.values[u] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn periodization_error_small_for_wide_lattice() {
        // documents when the torus truncation of R^d is faithful
        let lat = Lattice::uniform(1, 256, 16.0).unwrap();
        let f = gauss_field(&lat);
        let fh = f.forward_ft();
        let mut worst = 0.0f64;
        for (u, &x) in lat.xi_nodes(0).iter().enumerate() {
            worst = worst.max((fh.values[u] - Complex64::new((-PI * x * x).exp(), 0.0)).norm());
        }
        assert!(worst < 1e-12, "periodization error {worst}");
    }

    #[test]
    fn bracket_weight_values() {
        assert_abs_diff_eq!(bracket_weight(&[0.0], 2.0, 1.0), 1.0);
        assert_abs_diff_eq!(bracket_weight(&[3.0f64.sqrt()], 1.0, 1.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bracket_weight(&[3.0, 4.0], -1.0, 0.0), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn operator_norm_matches_known_matrix() {
        let i = Complex64::new(0.0, 1.0);
        let v = [Complex64::new(1.0, 0.0), -i, i, Complex64::new(-1.0, 0.0)];
        assert_abs_diff_eq!(matrix_operator_norm(&v, 2), 2.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn spinor_field_checks_component_count() {
        let lat = Lattice::uniform(1, 16, 4.0).unwrap();
        let dirac = Arc::new(crate::clifford::build_dirac_matrices(1, 1.0).unwrap());
        let f = Field::zeros(lat, ValueKind::Vector(3));
        assert!(SpinorField::new(f, dirac).is_err());
    }
}
