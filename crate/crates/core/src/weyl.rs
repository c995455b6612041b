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

//! Wigner transforms, Weyl quantization on refined phase-space grids, the
//! Sjostrand-class norm of a symbol, symplectic covariance under the Fourier
//! rotation, and smooth low/high frequency symbol splitting.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{Axis, Field, Lattice, ValueKind};
use crate::tfa::{self, AxisNodes, NormResult, PhaseSpaceArray};

/// Hard ceiling on `N` for dense quantization kernels.
pub const QUANTIZE_MAX_N: usize = 256;

/// Ceiling on phase-space nodes for the (streamed) Sjostrand STFT.
pub const SJOSTRAND_NODE_LIMIT: usize = 1 << 14;

/// A Weyl symbol sampled on the refined phase-space grid of a 1-d lattice:
/// `2N` spatial nodes at half the lattice step (so midpoints `(x_k + y_j)/2`
/// are grid points) and `2N` frequency nodes at spacing `1/(2L)`.
///
/// Layout: x-major, then xi node, then value component.
#[derive(Debug, Clone)]
pub struct WeylSymbol {
    pub base: Lattice,
    pub kind: ValueKind,
    pub x_nodes: Vec<f64>,
    pub xi_nodes: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl WeylSymbol {
    pub fn refined_nodes(base: &Lattice) -> Result<(Vec<f64>, Vec<f64>)> {
        if base.d() != 1 {
            return Err(Error::SizeGuard("Weyl symbols require a 1-d lattice".into()));
        }
        let ax = &base.axes()[0];
        let n = ax.n;
        let l = ax.period;
        let hx = ax.x_step() / 2.0;
        let hxi = 1.0 / (2.0 * l);
        let x = (0..2 * n).map(|p| -l / 2.0 + p as f64 * hx).collect();
        let xi = (0..2 * n).map(|q| (q as f64 - n as f64) * hxi).collect();
        Ok((x, xi))
    }

    pub fn from_fn(
        base: &Lattice,
        kind: ValueKind,
        mut fill: impl FnMut(f64, f64, &mut [Complex64]),
    ) -> Result<WeylSymbol> {
        let (x_nodes, xi_nodes) = WeylSymbol::refined_nodes(base)?;
        let vd = kind.dims();
        let m = x_nodes.len();
        let mut values = vec![Complex64::default(); m * m * vd];
        for (p, &x) in x_nodes.iter().enumerate() {
            for (q, &xi) in xi_nodes.iter().enumerate() {
                fill(x, xi, &mut values[(p * m + q) * vd..(p * m + q + 1) * vd]);
            }
        }
        Ok(WeylSymbol { base: base.clone(), kind, x_nodes, xi_nodes, values })
    }

    pub fn scalar_from_fn(base: &Lattice, mut f: impl FnMut(f64, f64) -> Complex64) -> Result<WeylSymbol> {
        WeylSymbol::from_fn(base, ValueKind::Scalar, |x, xi, out| out[0] = f(x, xi))
    }

    fn grid_len(&self) -> usize {
        self.x_nodes.len()
    }

    /// True when the refined spatial and frequency grids coincide (`N = L^2`).
    pub fn self_dual(&self) -> bool {
        let ax = &self.base.axes()[0];
        ((ax.n as f64) - ax.period * ax.period).abs() < 1e-9
    }
}

// ---------------------------------------------------------------------------
// Wigner transform
// ---------------------------------------------------------------------------

/// `W(f, g)(x, t) = 2^d F_y[f(x + y) conj(g(x - y))](2 xi)`, evaluated at the
/// lattice spatial nodes and the half-density frequency grid (spacing
/// `1/(2L)` per axis). Vector inputs produce the matrix of pairwise Wigner
/// transforms, `W(f, g)_{ab} = W(f_a, g_b)`.
pub fn wigner(f: &Field, g: &Field) -> Result<PhaseSpaceArray> {
    if f.lattice != g.lattice {
        return Err(Error::LatticeMismatch);
    }
    if f.kind != g.kind {
        return Err(Error::ValueKindMismatch { expected: f.vd(), got: g.vd() });
    }
    let lat = &f.lattice;
    let d = lat.d();
    let shape = lat.shape();
    let nodes = lat.node_count();
    let (in_vd, out_kind) = match f.kind {
        ValueKind::Scalar => (1usize, ValueKind::Scalar),
        ValueKind::Vector(n) => (n, ValueKind::Matrix(n)),
        ValueKind::Matrix(_) => {
            return Err(Error::SizeGuard("Wigner transform of matrix fields is not defined".into()))
        }
    };
    let out_vd = out_kind.dims();
    let scale = Complex64::new((1u64 << d) as f64, 0.0);

    let mut values = vec![Complex64::default(); nodes * nodes * out_vd];
    let mut kidx = vec![0usize; d];
    let mut jidx = vec![0usize; d];
    let mut plus = vec![0usize; d];
    let mut minus = vec![0usize; d];
    for k in 0..nodes {
        lat.unravel(k, &mut kidx);
        let mut prod = Field::zeros(lat.clone(), out_kind);
        for j in 0..nodes {
            lat.unravel(j, &mut jidx);
            for a in 0..d {
                let n = shape[a];
                // y offset j - N/2, periodic wrap
                plus[a] = (kidx[a] + jidx[a] + n - n / 2) % n;
                minus[a] = (kidx[a] + n + n / 2 - jidx[a]) % n;
            }
            let fp = f.node_values(lat.ravel(&plus));
            let gm = g.node_values(lat.ravel(&minus));
            let dst = &mut prod.values[j * out_vd..(j + 1) * out_vd];
            match f.kind {
                ValueKind::Scalar => dst[0] = fp[0] * gm[0].conj(),
                ValueKind::Vector(n) => {
                    for a in 0..n {
                        for b in 0..n {
                            dst[a * n + b] = fp[a] * gm[b].conj();
                        }
                    }
                }
                ValueKind::Matrix(_) => unreachable!(),
            }
        }
        let mut spec = prod.forward_ft();
        spec.scale(scale);
        values[k * nodes * out_vd..(k + 1) * nodes * out_vd].copy_from_slice(&spec.values);
    }

    let _ = in_vd;
    let x_axes = (0..d)
        .map(|a| AxisNodes { nodes: lat.x_nodes(a), step: lat.axes()[a].x_step() })
        .collect();
    let xi_axes = (0..d)
        .map(|a| {
            let ax = &lat.axes()[a];
            let h = 1.0 / (2.0 * ax.period);
            AxisNodes {
                nodes: (0..ax.n).map(|u| (u as f64 - (ax.n / 2) as f64) * h).collect(),
                step: h,
            }
        })
        .collect();
    Ok(PhaseSpaceArray { x_axes, xi_axes, kind: out_kind, values })
}

// ---------------------------------------------------------------------------
// Weyl quantization
// ---------------------------------------------------------------------------

struct KernelTable {
    n: usize,
    vd: usize,
    /// c[p][delta + N - 1] = sum_q sigma[p][q] e^{i pi delta (q - N)/N} / (2L)
    c: Vec<Complex64>,
}

fn kernel_table(symbol: &WeylSymbol) -> Result<KernelTable> {
    let ax = &symbol.base.axes()[0];
    let n = ax.n;
    if n > QUANTIZE_MAX_N {
        return Err(Error::SizeGuard(format!("quantize limited to N <= {QUANTIZE_MAX_N}, got {n}")));
    }
    let vd = symbol.kind.dims();
    let m = symbol.grid_len(); // 2N
    let dxi = 1.0 / (2.0 * ax.period);
    let deltas = 2 * n - 1;
    let mut c = vec![Complex64::default(); m * deltas * vd];
    for p in 0..m {
        for (di, delta) in (-(n as i64 - 1)..=(n as i64 - 1)).enumerate() {
            let dst = p * deltas + di;
            for q in 0..m {
                let phase = Complex64::from_polar(
                    1.0,
                    PI * delta as f64 * (q as f64 - n as f64) / n as f64,
                );
                for comp in 0..vd {
                    c[dst * vd + comp] += symbol.values[(p * m + q) * vd + comp] * phase * dxi;
                }
            }
        }
    }
    Ok(KernelTable { n, vd, c })
}

fn apply_table(table: &KernelTable, symbol_kind: ValueKind, f: &Field) -> Field {
    let n = table.n;
    let dx = f.lattice.axes()[0].x_step();
    let fvd = f.vd();
    let deltas = 2 * n - 1;
    let mut out = Field::zeros(f.lattice.clone(), f.kind);
    out.domain = f.domain;
    for k in 0..n {
        let dst = &mut out.values[k * fvd..(k + 1) * fvd];
        for j in 0..n {
            let p = k + j;
            let di = (k as i64 - j as i64 + n as i64 - 1) as usize;
            let cv = &table.c[(p * deltas + di) * table.vd..(p * deltas + di + 1) * table.vd];
            let src = &f.values[j * fvd..(j + 1) * fvd];
            match symbol_kind {
                ValueKind::Scalar => {
                    for comp in 0..fvd {
                        dst[comp] += cv[0] * src[comp] * dx;
                    }
                }
                ValueKind::Matrix(nn) => {
                    for a in 0..nn {
                        let mut acc = Complex64::default();
                        for b in 0..nn {
                            acc += cv[a * nn + b] * src[b];
                        }
                        dst[a] += acc * dx;
                    }
                }
                ValueKind::Vector(_) => unreachable!(),
            }
        }
    }
    out
}

fn check_quantize_kinds(symbol: &WeylSymbol, f: &Field) -> Result<()> {
    if f.lattice != symbol.base {
        return Err(Error::LatticeMismatch);
    }
    match (symbol.kind, f.kind) {
        (ValueKind::Scalar, _) => Ok(()),
        (ValueKind::Matrix(n), ValueKind::Vector(m)) if n == m => Ok(()),
        _ => Err(Error::ValueKindMismatch { expected: symbol.kind.dims(), got: f.vd() }),
    }
}

/// Apply the Weyl operator `sigma^w` with midpoint kernel
/// `K(x, y) = sum_xi e^{2 pi i (x - y) xi} sigma((x + y)/2, xi) dxi`
/// over the refined frequency grid. 1-d only, `N <= 256`.
pub fn quantize(symbol: &WeylSymbol, f: &Field) -> Result<Field> {
    check_quantize_kinds(symbol, f)?;
    let table = kernel_table(symbol)?;
    Ok(apply_table(&table, symbol.kind, f))
}

/// Dense matrix of a scalar-symbol Weyl operator on the lattice nodes.
pub fn dense_operator(symbol: &WeylSymbol) -> Result<Vec<Vec<Complex64>>> {
    if symbol.kind != ValueKind::Scalar {
        return Err(Error::ValueKindMismatch { expected: 1, got: symbol.kind.dims() });
    }
    let table = kernel_table(symbol)?;
    let n = table.n;
    let dx = symbol.base.axes()[0].x_step();
    let deltas = 2 * n - 1;
    let mut a = vec![vec![Complex64::default(); n]; n];
    for k in 0..n {
        for j in 0..n {
            let p = k + j;
            let di = (k as i64 - j as i64 + n as i64 - 1) as usize;
            a[k][j] = table.c[p * deltas + di] * dx;
        }
    }
    Ok(a)
}

// ---------------------------------------------------------------------------
// Sjostrand norm
// ---------------------------------------------------------------------------

/// Interpret the symbol samples as a field on the 2-axis phase-space lattice
/// (axes `(2N, L)` and `(2N, N/L)`), so the refined steps `dx/2` and
/// `1/(2L)` are its node spacings.
pub fn symbol_as_field(symbol: &WeylSymbol) -> Result<Field> {
    let ax = &symbol.base.axes()[0];
    let lat = Lattice::new(vec![
        Axis { n: 2 * ax.n, period: ax.period },
        Axis { n: 2 * ax.n, period: ax.n as f64 / ax.period },
    ])?;
    let mut field = Field::zeros(lat, symbol.kind);
    field.values.copy_from_slice(&symbol.values);
    Ok(field)
}

/// `M^{inf,1}` norm of the symbol over the phase-space plane: the Sjostrand
/// class witness controlling `L^2` boundedness of `sigma^w`. The STFT rows
/// are streamed, so only `O(nodes)` memory is used.
pub fn sjostrand_norm(symbol: &WeylSymbol) -> Result<NormResult> {
    let field = symbol_as_field(symbol)?;
    let lat = field.lattice.clone();
    let nodes = lat.node_count();
    if nodes > SJOSTRAND_NODE_LIMIT {
        return Err(Error::SizeGuard(format!(
            "Sjostrand STFT over {nodes} phase-space nodes; limit is {SJOSTRAND_NODE_LIMIT}"
        )));
    }
    let window = tfa::Window::gaussian(&lat);
    let d = lat.d();
    let mut idx = vec![0usize; d];
    let mut pt = vec![0.0; d];
    let in_shell = |pt: &[f64], halves: &[f64]| {
        pt.iter().zip(halves.iter()).any(|(&c, &h)| h > 0.0 && c.abs() >= 0.9 * h)
    };
    let x_half: Vec<f64> = lat.axes().iter().map(|a| a.period / 2.0).collect();
    let xi_half: Vec<f64> =
        lat.axes().iter().map(|a| a.n as f64 / (2.0 * a.period)).collect();
    let x_shell: Vec<bool> = (0..nodes)
        .map(|k| {
            lat.unravel(k, &mut idx);
            lat.x_point(&idx, &mut pt);
            in_shell(&pt, &x_half)
        })
        .collect();
    let xi_shell: Vec<bool> = (0..nodes)
        .map(|u| {
            lat.unravel(u, &mut idx);
            lat.xi_point(&idx, &mut pt);
            in_shell(&pt, &xi_half)
        })
        .collect();

    let kind = field.kind;
    let mut sup = vec![0.0f64; nodes];
    let mut total = 0.0;
    let mut shell = 0.0;
    tfa::stft_rows(&field, &window, |xflat, row| {
        for u in 0..nodes {
            let a = kind.value_norm(row.node_values(u));
            if a > sup[u] {
                sup[u] = a;
            }
            let a2 = a * a;
            total += a2;
            if x_shell[xflat] || xi_shell[u] {
                shell += a2;
            }
        }
    })?;
    let value: f64 = sup.iter().sum::<f64>() * lat.xi_measure();
    let tail = if total == 0.0 { 0.0 } else { shell / total };
    Ok(NormResult { value, tail_fraction: tail, flagged: tail > tfa::TAIL_THRESHOLD })
}

// ---------------------------------------------------------------------------
// Symplectic covariance
// ---------------------------------------------------------------------------

/// Linear phase-space maps under which Weyl quantization is covariant here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymplecticMap {
    Identity,
    /// `J^{-1}: (x, xi) -> (xi, -x)`; the pullback is
    /// `sigma_rot(x, xi) = sigma(-xi, x)` and the intertwiner is the Fourier
    /// transform.
    InverseRotation,
}

impl SymplecticMap {
    /// Pull the symbol back along the map. Needs the self-dual refined grid
    /// (`N = L^2`) so rotated samples land on grid nodes.
    pub fn apply(&self, symbol: &WeylSymbol) -> Result<WeylSymbol> {
        match self {
            SymplecticMap::Identity => Ok(symbol.clone()),
            SymplecticMap::InverseRotation => {
                if !symbol.self_dual() {
                    return Err(Error::SizeGuard(
                        "Fourier rotation needs a self-dual lattice (N = L^2)".into(),
                    ));
                }
                let m = symbol.grid_len();
                let vd = symbol.kind.dims();
                let mut out = symbol.clone();
                // both node lists are -L/2 + i h with equal h; the value
                // sigma(-xi_q, x_p) sits at source indices ((2N - q) mod 2N, p)
                for p in 0..m {
                    for q in 0..m {
                        let sp = (m - q) % m;
                        let sq = p;
                        let src = (sp * m + sq) * vd;
                        let dst = (p * m + q) * vd;
                        out.values[dst..dst + vd]
                            .copy_from_slice(&symbol.values[src..src + vd].to_vec());
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Relative Frobenius residual of `F sigma^w - (sigma o J^{-1})^w F` on the
/// lattice nodes; small residuals certify symplectic covariance.
pub fn symplectic_covariance_check(symbol: &WeylSymbol) -> Result<f64> {
    let a = dense_operator(symbol)?;
    let rot = SymplecticMap::InverseRotation.apply(symbol)?;
    let b = dense_operator(&rot)?;
    let ax = &symbol.base.axes()[0];
    let n = ax.n;
    let dx = ax.x_step();
    // centered DFT matrix matching Field::forward_ft
    let f: Vec<Vec<Complex64>> = (0..n)
        .map(|u| {
            (0..n)
                .map(|j| {
                    let ph = -2.0 * PI * (j as f64 - (n / 2) as f64) * (u as f64 - (n / 2) as f64)
                        / n as f64;
                    Complex64::from_polar(dx, ph)
                })
                .collect()
        })
        .collect();
    let matmul = |x: &Vec<Vec<Complex64>>, y: &Vec<Vec<Complex64>>| -> Vec<Vec<Complex64>> {
        let mut z = vec![vec![Complex64::default(); n]; n];
        for i in 0..n {
            for k in 0..n {
                let xv = x[i][k];
                for j in 0..n {
                    z[i][j] += xv * y[k][j];
                }
            }
        }
        z
    };
    let fa = matmul(&f, &a);
    let bf = matmul(&b, &f);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in 0..n {
            num += (fa[i][j] - bf[i][j]).norm_sqr();
            den += fa[i][j].norm_sqr();
        }
    }
    Ok((num / den.max(1e-300)).sqrt())
}

// ---------------------------------------------------------------------------
// Frequency splitting
// ---------------------------------------------------------------------------

fn radial_cutoff(t: f64) -> f64 {
    // 1 for t <= 1, 0 for t >= 2, smooth in between
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let sig = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
        let u = 2.0 - t;
        sig(u) / (sig(u) + sig(1.0 - u))
    }
}

/// Split the symbol into a low part supported in `|xi| <= 2^{k+1}` and the
/// remainder; `chi(|xi| / 2^k)` with the smooth radial cutoff.
pub fn split(symbol: &WeylSymbol, k: i32) -> (WeylSymbol, WeylSymbol) {
    let scale = 2.0f64.powi(k);
    let vd = symbol.kind.dims();
    let m = symbol.grid_len();
    let mut low = symbol.clone();
    let mut high = symbol.clone();
    for p in 0..m {
        for (q, &xi) in symbol.xi_nodes.iter().enumerate() {
            let chi = radial_cutoff(xi.abs() / scale);
            for c in 0..vd {
                let idx = (p * m + q) * vd + c;
                low.values[idx] = symbol.values[idx] * chi;
                high.values[idx] = symbol.values[idx] * (1.0 - chi);
            }
        }
    }
    (low, high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfa::Window;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn inner_ps(a: &PhaseSpaceArray, b: &PhaseSpaceArray) -> Complex64 {
        let meas = a.x_measure() * a.xi_measure();
        a.values
            .iter()
            .zip(b.values.iter())
            .map(|(&x, &y)| x * y.conj())
            .sum::<Complex64>()
            * meas
    }

    #[test]
    fn wigner_gaussian_closed_form() {
        // W(g0, g0) = 2^d e^{-2 pi (x^2 + xi^2)} for the normalized Gaussian.
        // The lattice Wigner is the L/2-periodization in x, so the closed
        // form is checked away from the image bumps at |x| = L/2.
        let lat = Lattice::uniform(1, 128, 12.0).unwrap();
        let g0 = Window::gaussian(&lat).field;
        let w = wigner(&g0, &g0).unwrap();
        let mut worst = 0.0f64;
        for (ix, &x) in w.x_axes[0].nodes.iter().enumerate() {
            if x.abs() > 3.5 {
                continue;
            }
            for (iu, &xi) in w.xi_axes[0].nodes.iter().enumerate() {
                let want = 2.0 * (-2.0 * PI * (x * x + xi * xi)).exp();
                let got = w.values[ix * 128 + iu];
                worst = worst.max((got - Complex64::new(want, 0.0)).norm());
            }
        }
        assert!(worst < 1e-9, "closed-form deviation {worst}");
    }

    #[test]
    fn wigner_is_real_for_equal_arguments() {
        let lat = Lattice::uniform(1, 64, 8.0).unwrap();
        let f = &tfa::random_corpus(&lat, ValueKind::Scalar, 1, 7)[0];
        let w = wigner(f, f).unwrap();
        let worst = w.values.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max);
        assert!(worst < 1e-10, "imaginary part {worst}");
    }

    #[test]
    fn wigner_marginals() {
        let lat = Lattice::uniform(1, 128, 8.0).unwrap();
        let n = 128usize;
        let f = Window::gaussian(&lat).field;
        let w = wigner(&f, &f).unwrap();
        // frequency marginal: sum_u W dxi = |f(x)|^2, exact identity
        for ix in 0..n {
            let s: Complex64 = (0..n).map(|iu| w.values[ix * n + iu]).sum();
            let got = s * w.xi_measure();
            let want = f.values[ix].norm_sqr();
            assert!((got - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
        // space marginal at shared nodes: integrating the L/2-periodization
        // over the full period counts each image twice, so the sum is
        // 2 |f_hat(xi)|^2
        let fh = f.forward_ft();
        let xis = lat.xi_nodes(0);
        for iu in (0..n).step_by(2) {
            let xi = w.xi_axes[0].nodes[iu];
            let coarse = xis.iter().position(|&v| (v - xi).abs() < 1e-12);
            if let Some(cu) = coarse {
                let s: Complex64 = (0..n).map(|k| w.values[k * n + iu]).sum();
                let got = s * w.x_measure();
                let want = 2.0 * fh.values[cu].norm_sqr();
                assert!(
                    (got - Complex64::new(want, 0.0)).norm() < 1e-9,
                    "xi={xi}: got {got} want {want}"
                );
            }
        }
    }

    #[test]
    fn wigner_moyal_identity() {
        let lat = Lattice::uniform(1, 128, 16.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mk = |rng: &mut ChaCha8Rng| {
            let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            Field::scalar_from_fn(lat.clone(), |x| {
                Complex64::from_polar((-PI * (x[0] - a).powi(2)).exp(), 2.0 * PI * b * x[0])
            })
        };
        let (f1, g1, f2, g2) = (mk(&mut rng), mk(&mut rng), mk(&mut rng), mk(&mut rng));
        let w1 = wigner(&f1, &g1).unwrap();
        let w2 = wigner(&f2, &g2).unwrap();
        let lhs = inner_ps(&w1, &w2);
        // both periodization images contribute to the torus quadrature
        let rhs = 2.0 * f1.inner(&f2) * g1.inner(&g2).conj();
        assert!((lhs - rhs).norm() < 1e-8, "moyal deviation {}", (lhs - rhs).norm());
    }

    #[test]
    fn quantize_multiplication_symbol_is_exact() {
        let lat = Lattice::uniform(1, 64, 8.0).unwrap();
        let sym = WeylSymbol::scalar_from_fn(&lat, |x, _| Complex64::new((x * 0.3).sin(), 0.1 * x))
            .unwrap();
        let f = &tfa::random_corpus(&lat, ValueKind::Scalar, 1, 11)[0];
        let out = quantize(&sym, f).unwrap();
        for (k, &x) in lat.x_nodes(0).iter().enumerate() {
            let want = Complex64::new((x * 0.3).sin(), 0.1 * x) * f.values[k];
            assert!((out.values[k] - want).norm() < 1e-11);
        }
    }

    #[test]
    fn quantize_identity_symbol() {
        let lat = Lattice::uniform(1, 64, 8.0).unwrap();
        let sym = WeylSymbol::scalar_from_fn(&lat, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let f = &tfa::random_corpus(&lat, ValueKind::Scalar, 1, 13)[0];
        let out = quantize(&sym, f).unwrap();
        assert!(out.sub(f).l2_norm() < 1e-12);
    }

    #[test]
    fn quantize_fourier_multiplier_matches_direct() {
        let lat = Lattice::uniform(1, 64, 8.0).unwrap();
        let b = |xi: f64| Complex64::new((-0.5 * xi * xi).exp(), 0.0);
        let sym = WeylSymbol::scalar_from_fn(&lat, |_, xi| b(xi)).unwrap();
        let f = Window::gaussian(&lat).field;
        let out = quantize(&sym, &f).unwrap();
        let mut spec = f.forward_ft();
        for (u, &xi) in lat.xi_nodes(0).iter().enumerate() {
            spec.values[u] *= b(xi);
        }
        let want = spec.inverse_ft();
        let err = out.sub(&want).l2_norm();
        assert!(err < 1e-8, "multiplier deviation {err}");
    }

    #[test]
    fn trace_pairing_against_wigner() {
        // <sigma^w f, g> = <sigma, W(g, f)> with the Wigner-grid quadrature
        let lat = Lattice::uniform(1, 128, 8.0).unwrap();
        let n = 128usize;
        // sigma decays fast enough to suppress the x-periodization images
        let sigma = |x: f64, xi: f64| {
            Complex64::new(
                (-PI * (x * x + xi * xi)).exp(),
                0.2 * (-PI * 1.2 * (x * x + xi * xi)).exp(),
            )
        };
        let sym = WeylSymbol::scalar_from_fn(&lat, sigma).unwrap();
        let f = Field::scalar_from_fn(lat.clone(), |x| {
            Complex64::from_polar((-PI * (x[0] - 0.4).powi(2)).exp(), 1.1 * x[0])
        });
        let g = Field::scalar_from_fn(lat.clone(), |x| {
            Complex64::from_polar((-PI * (x[0] + 0.2).powi(2)).exp(), -0.7 * x[0])
        });
        let lhs = quantize(&sym, &f).unwrap().inner(&g);
        let w = wigner(&g, &f).unwrap();
        let mut rhs = Complex64::default();
        for (ix, &x) in w.x_axes[0].nodes.iter().enumerate() {
            for (iu, &xi) in w.xi_axes[0].nodes.iter().enumerate() {
                rhs += sigma(x, xi) * w.values[ix * n + iu].conj();
            }
        }
        rhs *= w.x_measure() * w.xi_measure();
        assert!((lhs - rhs).norm() < 1e-8, "pairing deviation {}", (lhs - rhs).norm());
    }

    #[test]
    fn hermitian_symbol_gives_hermitian_operator() {
        let lat = Lattice::uniform(1, 32, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut re = vec![];
        let mut im = vec![];
        for _ in 0..8 {
            re.push(rng.gen_range(-1.0..1.0));
            im.push(rng.gen_range(-1.0..1.0));
        }
        let sym = WeylSymbol::from_fn(&lat, ValueKind::Matrix(2), |x, xi, out| {
            let a = (-0.2 * (x * x + xi * xi)).exp();
            let (b, c) = (re[0] * a, im[0] * a * xi);
            // [[b, c + i c], [c - i c, -b]] is Hermitian at every node
            out[0] = Complex64::new(b, 0.0);
            out[1] = Complex64::new(c, c);
            out[2] = Complex64::new(c, -c);
            out[3] = Complex64::new(-b, 0.0);
        })
        .unwrap();
        let fs = tfa::random_corpus(&lat, ValueKind::Vector(2), 2, 29);
        let af = quantize(&sym, &fs[0]).unwrap();
        let ag = quantize(&sym, &fs[1]).unwrap();
        let lhs = af.inner(&fs[1]);
        let rhs = fs[0].inner(&ag);
        assert!((lhs - rhs).norm() < 1e-10, "hermiticity deviation {}", (lhs - rhs).norm());
    }

    #[test]
    fn quantize_guards() {
        let lat2 = Lattice::uniform(2, 16, 4.0).unwrap();
        assert!(WeylSymbol::scalar_from_fn(&lat2, |_, _| Complex64::default()).is_err());
        let big = Lattice::uniform(1, 512, 8.0).unwrap();
        let sym = WeylSymbol::scalar_from_fn(&big, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let f = Field::zeros(big, ValueKind::Scalar);
        assert!(matches!(quantize(&sym, &f), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn sjostrand_norm_scaling_and_guard() {
        let lat = Lattice::uniform(1, 16, 4.0).unwrap();
        let sym = WeylSymbol::scalar_from_fn(&lat, |x, xi| {
            Complex64::new((-0.3 * (x * x + xi * xi)).exp(), 0.0)
        })
        .unwrap();
        let n1 = sjostrand_norm(&sym).unwrap().value;
        assert!(n1 > 0.0);
        let mut scaled = sym.clone();
        for v in &mut scaled.values {
            *v *= 3.0;
        }
        let n3 = sjostrand_norm(&scaled).unwrap().value;
        assert!((n3 - 3.0 * n1).abs() < 1e-9 * n1);
        let big = Lattice::uniform(1, 256, 16.0).unwrap();
        let symb = WeylSymbol::scalar_from_fn(&big, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(sjostrand_norm(&symb), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn boundedness_witness_on_corpus() {
        // ||sigma^w f||_2 <= C ||sigma||_sj ||f||_2 across random symbols
        let lat = Lattice::uniform(1, 16, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let coef: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sym = WeylSymbol::scalar_from_fn(&lat, |x, xi| {
                let env = (-0.4 * (x * x + xi * xi)).exp();
                Complex64::new(
                    env * (coef[0] + coef[1] * (x + coef[2] * xi).cos()),
                    env * (coef[3] + coef[4] * (xi + coef[5] * x).sin()),
                )
            })
            .unwrap();
            let sj = sjostrand_norm(&sym).unwrap().value;
            for f in tfa::random_corpus(&lat, ValueKind::Scalar, 3, 41) {
                let r = quantize(&sym, &f).unwrap().l2_norm() / (sj * f.l2_norm());
                worst = worst.max(r);
            }
        }
        assert!(worst < 1.0, "operator/Sjostrand ratio {worst}");
    }

    #[test]
    fn symplectic_covariance_on_self_dual_lattice() {
        let lat = Lattice::uniform(1, 64, 8.0).unwrap();
        let sym = WeylSymbol::scalar_from_fn(&lat, |x, xi| {
            Complex64::new(
                (-PI * 0.4 * (x * x + xi * xi)).exp() * (1.0 + 0.3 * (x * xi * 0.5).cos()),
                0.0,
            )
        })
        .unwrap();
        let res = symplectic_covariance_check(&sym).unwrap();
        assert!(res < 1e-8, "covariance residual {res}");
        // non self-dual lattices are rejected
        let lat2 = Lattice::uniform(1, 64, 4.0).unwrap();
        let sym2 = WeylSymbol::scalar_from_fn(&lat2, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert!(SymplecticMap::InverseRotation.apply(&sym2).is_err());
    }

    #[test]
    fn split_reconstructs_and_localizes() {
        let lat = Lattice::uniform(1, 64, 8.0).unwrap();
        let sym = WeylSymbol::scalar_from_fn(&lat, |x, xi| {
            Complex64::new((x * 0.2).cos() + xi * 0.1, (xi * 0.3).sin())
        })
        .unwrap();
        for k in [-1, 0, 1] {
            let (low, high) = split(&sym, k);
            let scale = 2.0f64.powi(k);
            let m = sym.grid_len();
            for p in 0..m {
                for (q, &xi) in sym.xi_nodes.iter().enumerate() {
                    let idx = p * m + q;
                    let sum = low.values[idx] + high.values[idx];
                    assert!((sum - sym.values[idx]).norm() < 1e-14);
                    if xi.abs() >= 2.0 * scale {
                        assert_eq!(low.values[idx], Complex64::default());
                    }
                    if xi.abs() <= scale {
                        assert_eq!(high.values[idx], Complex64::default());
                    }
                }
            }
        }
    }
}
