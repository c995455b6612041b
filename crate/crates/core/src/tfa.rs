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

//! Short-time Fourier transform, weighted modulation / Wiener-amalgam norms
//! (direct and BUPU-discretized) and the Bernstein-type multiplier bound.
//!
//! Norm conventions: for kind `M` the inner `L^p` runs over `x` with weight
//! `<x>^r` and the outer `L^q` over `xi` with weight `<xi>^s`; for kind `W`
//! the inner `L^p` runs over `xi` with weight `<xi>^r` and the outer `L^q`
//! over `x` with weight `<x>^s`. Infinite exponents are exact maxima over
//! nodes. All brackets use `m = 1`.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{bracket_weight, Domain, Field, Lattice, ValueKind};

/// Fraction of phase-space mass allowed in the outermost 10% shell before a
/// norm result is flagged as lattice-truncated.
pub const TAIL_THRESHOLD: f64 = 1e-8;

/// Scalar window function on a lattice.
#[derive(Debug, Clone)]
pub struct Window {
    pub field: Field,
    pub l2: f64,
}

impl Window {
    pub fn new(field: Field) -> Result<Window> {
        assert_eq!(field.kind, ValueKind::Scalar, "window must be scalar");
        let l2 = field.l2_norm();
        if l2 == 0.0 {
            return Err(Error::ZeroWindow);
        }
        Ok(Window { field, l2 })
    }

    /// The default window: the L^2-normalized Gaussian `2^{d/4} e^{-pi x^2}`.
    pub fn gaussian(lattice: &Lattice) -> Window {
        Window::dilated_gaussian(lattice, 1.0)
    }

    /// L^2-normalized `e^{-pi a x^2}`.
    pub fn dilated_gaussian(lattice: &Lattice, a: f64) -> Window {
        let d = lattice.d() as f64;
        let norm = (2.0 * a).powf(d / 4.0);
        let field = Field::scalar_from_fn(lattice.clone(), |x| {
            let x2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new(norm * (-PI * a * x2).exp(), 0.0)
        });
        Window::new(field).expect("gaussian window is nonzero")
    }
}

/// Nodes of one phase-space axis.
#[derive(Debug, Clone)]
pub struct AxisNodes {
    pub nodes: Vec<f64>,
    pub step: f64,
}

/// Complex samples on a `(x, xi)` lattice; houses `V_g f`, `W(f, g)` and
/// Weyl symbols. Layout: x-node-major, then xi node, then value component.
#[derive(Debug, Clone)]
pub struct PhaseSpaceArray {
    pub x_axes: Vec<AxisNodes>,
    pub xi_axes: Vec<AxisNodes>,
    pub kind: ValueKind,
    pub values: Vec<Complex64>,
}

impl PhaseSpaceArray {
    pub fn x_count(&self) -> usize {
        self.x_axes.iter().map(|a| a.nodes.len()).product()
    }
    pub fn xi_count(&self) -> usize {
        self.xi_axes.iter().map(|a| a.nodes.len()).product()
    }
    pub fn x_measure(&self) -> f64 {
        self.x_axes.iter().map(|a| a.step).product()
    }
    pub fn xi_measure(&self) -> f64 {
        self.xi_axes.iter().map(|a| a.step).product()
    }

    fn point(axes: &[AxisNodes], mut flat: usize, out: &mut [f64]) {
        for a in (0..axes.len()).rev() {
            let n = axes[a].nodes.len();
            out[a] = axes[a].nodes[flat % n];
            flat /= n;
        }
    }

    pub fn x_point(&self, flat: usize, out: &mut [f64]) {
        Self::point(&self.x_axes, flat, out);
    }
    pub fn xi_point(&self, flat: usize, out: &mut [f64]) {
        Self::point(&self.xi_axes, flat, out);
    }

    /// Pointwise `E`-norm array, x-major.
    pub fn amplitudes(&self) -> Vec<f64> {
        let vd = self.kind.dims();
        self.values.chunks_exact(vd).map(|v| self.kind.value_norm(v)).collect()
    }
}

/// Row-wise STFT: computes `F(f . conj(T_x g))` for each x node and hands
/// the frequency-domain row to `visit` without materializing the full array.
pub fn stft_rows(f: &Field, g: &Window, mut visit: impl FnMut(usize, &Field)) -> Result<()> {
    if f.lattice != g.field.lattice {
        return Err(Error::LatticeMismatch);
    }
    assert_eq!(f.domain, Domain::Space, "stft expects a space-domain field");
    let lat = &f.lattice;
    let d = lat.d();
    let vd = f.vd();
    let nodes = lat.node_count();
    let shape = lat.shape();

    let mut shift_idx = vec![0usize; d];
    let mut prod_idx = vec![0usize; d];
    let mut src_idx = vec![0usize; d];
    for xflat in 0..nodes {
        lat.unravel(xflat, &mut shift_idx);
        let mut prod = Field::zeros(lat.clone(), f.kind);
        for j in 0..nodes {
            lat.unravel(j, &mut prod_idx);
            for a in 0..d {
                let n = shape[a];
                // T_{x_k} g sampled at node j is g at index j - k + N/2 (mod N)
                src_idx[a] = (prod_idx[a] + n + n / 2 - shift_idx[a]) % n;
            }
            let w = g.field.values[lat.ravel(&src_idx)].conj();
            for c in 0..vd {
                prod.values[j * vd + c] = f.values[j * vd + c] * w;
            }
        }
        let spec = prod.forward_ft();
        visit(xflat, &spec);
    }
    Ok(())
}

/// `V_g f(x, xi) = F(f . conj(T_x g))(xi)` for every x node; componentwise
/// for vector or matrix values.
pub fn stft(f: &Field, g: &Window) -> Result<PhaseSpaceArray> {
    let lat = &f.lattice;
    let d = lat.d();
    let vd = f.vd();
    let nodes = lat.node_count();
    let mut values = vec![Complex64::default(); nodes * nodes * vd];
    stft_rows(f, g, |xflat, spec| {
        values[xflat * nodes * vd..(xflat + 1) * nodes * vd].copy_from_slice(&spec.values);
    })?;

    let x_axes = (0..d)
        .map(|a| AxisNodes { nodes: lat.x_nodes(a), step: lat.axes()[a].x_step() })
        .collect();
    let xi_axes = (0..d)
        .map(|a| AxisNodes { nodes: lat.xi_nodes(a), step: lat.axes()[a].xi_step() })
        .collect();
    Ok(PhaseSpaceArray { x_axes, xi_axes, kind: f.kind, values })
}

/// Which mixed-norm family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpaceKind {
    /// Modulation space `M^{p,q}_{r,s}`.
    Modulation,
    /// Wiener amalgam space `W^{p,q}_{r,s}`.
    Amalgam,
}

/// `(kind, p, q, r, s)`; `p`, `q` in `[1, inf]` with `f64::INFINITY` for sup.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormSpec {
    pub kind: SpaceKind,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl NormSpec {
    pub fn new(kind: SpaceKind, p: f64, q: f64, r: f64, s: f64) -> NormSpec {
        assert!(p >= 1.0 && q >= 1.0, "exponents must lie in [1, inf]");
        NormSpec { kind, p, q, r, s }
    }

    pub fn modulation(p: f64, q: f64, r: f64, s: f64) -> NormSpec {
        NormSpec::new(SpaceKind::Modulation, p, q, r, s)
    }

    pub fn amalgam(p: f64, q: f64, r: f64, s: f64) -> NormSpec {
        NormSpec::new(SpaceKind::Amalgam, p, q, r, s)
    }

    /// Parse `M:p:q:r:s` / `W:p:q:r:s` with `inf` accepted for exponents.
    pub fn parse(text: &str) -> Result<NormSpec> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 5 {
            return Err(Error::ConfigParse(format!("norm spec `{text}`: want kind:p:q:r:s")));
        }
        let kind = match parts[0] {
            "M" | "m" => SpaceKind::Modulation,
            "W" | "w" => SpaceKind::Amalgam,
            other => return Err(Error::ConfigParse(format!("unknown space kind `{other}`"))),
        };
        let num = |s: &str| -> Result<f64> {
            if s.eq_ignore_ascii_case("inf") {
                Ok(f64::INFINITY)
            } else {
                s.parse().map_err(|_| Error::ConfigParse(format!("bad number `{s}`")))
            }
        };
        let (p, q, r, s) = (num(parts[1])?, num(parts[2])?, num(parts[3])?, num(parts[4])?);
        if p < 1.0 || q < 1.0 {
            return Err(Error::ConfigParse("exponents must lie in [1, inf]".into()));
        }
        Ok(NormSpec { kind, p, q, r, s })
    }
}

/// Norm value plus the lattice-truncation diagnostic.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormResult {
    pub value: f64,
    pub tail_fraction: f64,
    pub flagged: bool,
}

struct LpAccum {
    p: f64,
    sum: f64,
    max: f64,
}

impl LpAccum {
    fn new(p: f64) -> LpAccum {
        LpAccum { p, sum: 0.0, max: 0.0 }
    }
    fn push(&mut self, v: f64, measure: f64) {
        if self.p.is_infinite() {
            self.max = self.max.max(v);
        } else {
            self.sum += v.powf(self.p) * measure;
        }
    }
    fn finish(&self) -> f64 {
        if self.p.is_infinite() {
            self.max
        } else {
            self.sum.powf(1.0 / self.p)
        }
    }
}

fn shell_fraction(v: &PhaseSpaceArray, amps: &[f64]) -> f64 {
    let nx = v.x_count();
    let nxi = v.xi_count();
    let dx = v.x_axes.len();
    let dxi = v.xi_axes.len();
    let mut xp = vec![0.0; dx];
    let mut xip = vec![0.0; dxi];
    let in_shell_axis = |axes: &[AxisNodes], p: &[f64]| {
        axes.iter().zip(p.iter()).any(|(ax, &c)| {
            let half = ax.nodes.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            half > 0.0 && c.abs() >= 0.9 * half
        })
    };
    let mut total = 0.0;
    let mut shell = 0.0;
    for ix in 0..nx {
        v.x_point(ix, &mut xp);
        let xs = in_shell_axis(&v.x_axes, &xp);
        for iu in 0..nxi {
            let a2 = amps[ix * nxi + iu];
            let a2 = a2 * a2;
            total += a2;
            if xs || {
                v.xi_point(iu, &mut xip);
                in_shell_axis(&v.xi_axes, &xip)
            } {
                shell += a2;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        shell / total
    }
}

/// Weighted mixed quadrature of `|V|_E` per `spec`.
pub fn mixed_norm(v: &PhaseSpaceArray, spec: &NormSpec) -> NormResult {
    let amps = v.amplitudes();
    let tail = shell_fraction(v, &amps);
    let nx = v.x_count();
    let nxi = v.xi_count();
    let dx = v.x_axes.len();
    let dxi = v.xi_axes.len();
    let mut xp = vec![0.0; dx];
    let mut xip = vec![0.0; dxi];

    let wx: Vec<f64> = (0..nx)
        .map(|ix| {
            v.x_point(ix, &mut xp);
            bracket_weight(&xp, 1.0, 1.0)
        })
        .collect();
    let wxi: Vec<f64> = (0..nxi)
        .map(|iu| {
            v.xi_point(iu, &mut xip);
            bracket_weight(&xip, 1.0, 1.0)
        })
        .collect();

    let value = match spec.kind {
        SpaceKind::Modulation => {
            // inner over x (weight r, measure dx), outer over xi (weight s, dxi)
            let mut outer = LpAccum::new(spec.q);
            for iu in 0..nxi {
                let mut inner = LpAccum::new(spec.p);
                for ix in 0..nx {
                    inner.push(amps[ix * nxi + iu] * wx[ix].powf(spec.r), v.x_measure());
                }
                outer.push(inner.finish() * wxi[iu].powf(spec.s), v.xi_measure());
            }
            outer.finish()
        }
        SpaceKind::Amalgam => {
            // inner over xi (weight r, measure dxi), outer over x (weight s, dx)
            let mut outer = LpAccum::new(spec.q);
            for ix in 0..nx {
                let mut inner = LpAccum::new(spec.p);
                for iu in 0..nxi {
                    inner.push(amps[ix * nxi + iu] * wxi[iu].powf(spec.r), v.xi_measure());
                }
                outer.push(inner.finish() * wx[ix].powf(spec.s), v.x_measure());
            }
            outer.finish()
        }
    };

    NormResult { value, tail_fraction: tail, flagged: tail > TAIL_THRESHOLD }
}

/// Convenience: STFT against the default Gaussian window, then [`mixed_norm`].
pub fn field_norm(f: &Field, spec: &NormSpec) -> Result<NormResult> {
    let g = Window::gaussian(&f.lattice);
    Ok(mixed_norm(&stft(f, &g)?, spec))
}

// ---------------------------------------------------------------------------
// BUPU and uniform-decomposition norms
// ---------------------------------------------------------------------------

/// 1-d bump equal to 1 on `[0, 1]`, 0 outside `[-1, 2]`, glued with the
/// standard `e^{-1/t}` smoothed step on the transitions.
fn smooth_step(u: f64) -> f64 {
    // 0 at u<=0, 1 at u>=1, C^inf monotone in between
    let sig = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let a = sig(u);
    let b = sig(1.0 - u);
    a / (a + b)
}

pub fn bump_profile(t: f64) -> f64 {
    if t <= -1.0 || t >= 2.0 {
        0.0
    } else if t < 0.0 {
        smooth_step(t + 1.0)
    } else if t <= 1.0 {
        1.0
    } else {
        smooth_step(2.0 - t)
    }
}

fn bump_nd(t: &[f64]) -> f64 {
    t.iter().map(|&v| bump_profile(v)).product()
}

/// Sum over integer translates of the 1-d bump; at most 3 contribute.
fn bump_denom_1d(t: f64) -> f64 {
    let lo = (t - 2.0).ceil() as i64;
    let hi = (t + 1.0).floor() as i64;
    (lo..=hi).map(|k| bump_profile(t - k as f64)).sum()
}

fn bump_denom_nd(t: &[f64]) -> f64 {
    t.iter().map(|&v| bump_denom_1d(v)).product()
}

/// Bounded uniform partition of unity over integer translates on the lattice.
#[derive(Debug, Clone)]
pub struct Bupu {
    pub lattice: Lattice,
    /// Integer translation nodes along each axis (periodic, `-L/2 .. L/2-1`).
    pub x_cells: Vec<Vec<i64>>,
}

/// Build the BUPU for spatial decompositions on `lattice`.
pub fn build_bupu(lattice: &Lattice) -> Result<Bupu> {
    for ax in lattice.axes() {
        let l = ax.period;
        if (l - l.round()).abs() > 1e-12 || l.round() < 4.0 {
            return Err(Error::BupuLattice(format!("axis period {l} is not an integer >= 4")));
        }
        if (ax.n as f64) / l < 8.0 {
            return Err(Error::BupuLattice(format!(
                "only {} nodes per unit cell (need >= 8)",
                ax.n as f64 / l
            )));
        }
    }
    let x_cells = lattice
        .axes()
        .iter()
        .map(|ax| {
            let half = (ax.period.round() as i64) / 2;
            (-half..half).collect()
        })
        .collect();
    Ok(Bupu { lattice: lattice.clone(), x_cells })
}

impl Bupu {
    /// `psi_k` sampled at the spatial nodes, with periodic wrap.
    pub fn psi_at_x_nodes(&self, cell: &[i64]) -> Vec<f64> {
        let lat = &self.lattice;
        let d = lat.d();
        let mut idx = vec![0usize; d];
        let mut out = Vec::with_capacity(lat.node_count());
        for node in 0..lat.node_count() {
            lat.unravel(node, &mut idx);
            let mut num = 1.0;
            let mut den = 1.0;
            for a in 0..d {
                let l = lat.axes()[a].period;
                let x = lat.axes()[a].x_coord(idx[a]);
                // wrap the translate nearest to x
                let mut t = x - cell[a] as f64;
                t -= (t / l).round() * l;
                num *= bump_profile(t);
                den *= periodic_denom(x, l);
            }
            out.push(num / den);
        }
        out
    }

    /// Unwrapped `psi_k` evaluated at arbitrary points (used on the frequency
    /// lattice, which is a plain box rather than a torus).
    pub fn psi_unwrapped(cell: &[i64], point: &[f64]) -> f64 {
        let t: Vec<f64> = point.iter().zip(cell.iter()).map(|(&x, &k)| x - k as f64).collect();
        bump_nd(&t) / bump_denom_nd(&t)
    }

    /// Integer cells whose bump touches the box `[lo_a, hi_a]` per axis.
    pub fn cells_for_box(lo: &[f64], hi: &[f64]) -> Vec<Vec<i64>> {
        let ranges: Vec<Vec<i64>> = lo
            .iter()
            .zip(hi.iter())
            .map(|(&a, &b)| (((a - 2.0).ceil() as i64)..=((b + 1.0).floor() as i64)).collect())
            .collect();
        let mut out = vec![vec![]];
        for r in &ranges {
            let mut next = Vec::with_capacity(out.len() * r.len());
            for head in &out {
                for &k in r {
                    let mut h = head.clone();
                    h.push(k);
                    next.push(h);
                }
            }
            out = next;
        }
        out
    }
}

fn periodic_denom(x: f64, period: f64) -> f64 {
    // periodization of the 1-d bump over integer translates mod period
    let l = period.round() as i64;
    (0..l)
        .map(|k| {
            let mut t = x - (k - l / 2) as f64;
            t -= (t / period).round() * period;
            bump_profile(t)
        })
        .sum()
}

/// Weighted `L^p_r` norm of a field over its own nodes (E-norm per node).
fn lp_weighted(f: &Field, p: f64, r: f64) -> f64 {
    let _vd = f.vd();
    let lat = &f.lattice;
    let d = lat.d();
    let measure = match f.domain {
        Domain::Space => lat.x_measure(),
        Domain::Frequency => lat.xi_measure(),
    };
    let mut idx = vec![0usize; d];
    let mut pt = vec![0.0; d];
    let mut acc = LpAccum::new(p);
    for node in 0..lat.node_count() {
        lat.unravel(node, &mut idx);
        match f.domain {
            Domain::Space => lat.x_point(&idx, &mut pt),
            Domain::Frequency => lat.xi_point(&idx, &mut pt),
        }
        let a = f.kind.value_norm(f.node_values(node)) * bracket_weight(&pt, r, 1.0);
        acc.push(a, measure);
    }
    acc.finish()
}

/// Discrete equivalent norm via the frequency-uniform decomposition (kind M)
/// or BUPU-localized Fourier-Lebesgue pieces (kind W).
pub fn uniform_decomposition_norm(f: &Field, spec: &NormSpec, bupu: &Bupu) -> Result<NormResult> {
    if f.lattice != bupu.lattice {
        return Err(Error::LatticeMismatch);
    }
    let lat = &f.lattice;
    let d = lat.d();
    let vd = f.vd();
    let spectrum = f.forward_ft();

    // tail diagnostic from the field itself (x shell) and its spectrum (xi shell)
    let tail = {
        let frac = |g: &Field| {
            let mut idx = vec![0usize; d];
            let mut pt = vec![0.0; d];
            let mut total = 0.0;
            let mut shell = 0.0;
            for node in 0..lat.node_count() {
                lat.unravel(node, &mut idx);
                match g.domain {
                    Domain::Space => lat.x_point(&idx, &mut pt),
                    Domain::Frequency => lat.xi_point(&idx, &mut pt),
                }
                let half: Vec<f64> = (0..d)
                    .map(|a| match g.domain {
                        Domain::Space => lat.axes()[a].period / 2.0,
                        Domain::Frequency => lat.axes()[a].n as f64 / (2.0 * lat.axes()[a].period),
                    })
                    .collect();
                let a2: f64 = g.node_values(node).iter().map(|v| v.norm_sqr()).sum();
                total += a2;
                if pt.iter().zip(half.iter()).any(|(&c, &h)| c.abs() >= 0.9 * h) {
                    shell += a2;
                }
            }
            if total == 0.0 {
                0.0
            } else {
                shell / total
            }
        };
        frac(f).max(frac(&spectrum))
    };

    let value = match spec.kind {
        SpaceKind::Modulation => {
            // box_k f = F^{-1}(psi_k . F f), outer l^q_s over integer k
            let lo: Vec<f64> = (0..d).map(|a| lat.xi_nodes(a)[0]).collect();
            let hi: Vec<f64> = (0..d).map(|a| *lat.xi_nodes(a).last().unwrap()).collect();
            let cells = Bupu::cells_for_box(&lo, &hi);
            let mut idx = vec![0usize; d];
            let mut pt = vec![0.0; d];
            let mut outer = LpAccum::new(spec.q);
            for cell in &cells {
                let mut piece = spectrum.clone();
                let mut nonzero = false;
                for node in 0..lat.node_count() {
                    lat.unravel(node, &mut idx);
                    lat.xi_point(&idx, &mut pt);
                    let w = Bupu::psi_unwrapped(cell, &pt);
                    if w != 0.0 {
                        nonzero = true;
                    }
                    for c in 0..vd {
                        piece.values[node * vd + c] *= w;
                    }
                }
                if !nonzero {
                    continue;
                }
                let block = piece.inverse_ft();
                let kf: Vec<f64> = cell.iter().map(|&k| k as f64).collect();
                outer.push(lp_weighted(&block, spec.p, spec.r) * bracket_weight(&kf, spec.s, 1.0), 1.0);
            }
            outer.finish()
        }
        SpaceKind::Amalgam => {
            // || f psi_k ||_{FL^p_r} pieces, outer l^q_s over spatial cells
            let mut outer = LpAccum::new(spec.q);
            let cells: Vec<Vec<i64>> = {
                let mut out = vec![vec![]];
                for r in &bupu.x_cells {
                    let mut next = Vec::new();
                    for head in &out {
                        for &k in r {
                            let mut h = head.clone();
                            h.push(k);
                            next.push(h);
                        }
                    }
                    out = next;
                }
                out
            };
            for cell in &cells {
                let psi = bupu.psi_at_x_nodes(cell);
                let mut piece = f.clone();
                for (node, &w) in psi.iter().enumerate() {
                    for c in 0..vd {
                        piece.values[node * vd + c] *= w;
                    }
                }
                let spec_piece = piece.forward_ft();
                let kf: Vec<f64> = cell.iter().map(|&k| k as f64).collect();
                outer.push(
                    lp_weighted(&spec_piece, spec.p, spec.r) * bracket_weight(&kf, spec.s, 1.0),
                    1.0,
                );
            }
            outer.finish()
        }
    };

    Ok(NormResult { value, tail_fraction: tail, flagged: tail > TAIL_THRESHOLD })
}

// ---------------------------------------------------------------------------
// Bernstein-type bound
// ---------------------------------------------------------------------------

/// Both sides of the Bernstein multiplier estimate with `N = ceil(d/2) + 1`:
/// returns `(||f||_{FL^1}, ||f||_{L^2}^{1-d/2N} (sum_j ||d_j^N f||_{L^2})^{d/2N})`.
pub fn bernstein_bound_check(f: &Field) -> (f64, f64) {
    let lat = &f.lattice;
    let d = lat.d();
    let vd = f.vd();
    let n_der = d.div_ceil(2) + 1;
    let spectrum = f.forward_ft();

    let lhs = {
        let mut s = 0.0;
        for node in 0..lat.node_count() {
            s += f.kind.value_norm(spectrum.node_values(node));
        }
        s * lat.xi_measure()
    };

    let l2 = f.l2_norm();
    if l2 == 0.0 {
        return (0.0, 0.0);
    }
    let mut dsum = 0.0;
    let mut idx = vec![0usize; d];
    let mut xi = vec![0.0; d];
    for j in 0..d {
        let mut der = spectrum.clone();
        for node in 0..lat.node_count() {
            lat.unravel(node, &mut idx);
            lat.xi_point(&idx, &mut xi);
            let factor = Complex64::new(0.0, 2.0 * PI * xi[j]).powu(n_der as u32);
            for c in 0..vd {
                der.values[node * vd + c] *= factor;
            }
        }
        dsum += der.l2_norm(); // Parseval: equals || d_j^N f ||_{L^2}
    }
    let theta = d as f64 / (2.0 * n_der as f64);
    (lhs, l2.powf(1.0 - theta) * dsum.powf(theta))
}

// ---------------------------------------------------------------------------
// Deterministic random corpora (shared by property tests and calibration)
// ---------------------------------------------------------------------------

/// Random band-limited fields: Gaussian-envelope random spectra, fixed seed.
pub fn random_corpus(lattice: &Lattice, kind: ValueKind, count: usize, seed: u64) -> Vec<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = lattice.d();
    let vd = kind.dims();
    (0..count)
        .map(|_| {
            let mut spec = Field::zeros(lattice.clone(), kind);
            spec.domain = Domain::Frequency;
            let mut idx = vec![0usize; d];
            let mut xi = vec![0.0; d];
            let width = rng.gen_range(0.6..1.6);
            for node in 0..lattice.node_count() {
                lattice.unravel(node, &mut idx);
                lattice.xi_point(&idx, &mut xi);
                let x2: f64 = xi.iter().map(|v| v * v).sum();
                let env = (-x2 / (2.0 * width * width)).exp();
                for c in 0..vd {
                    spec.values[node * vd + c] = Complex64::new(
                        env * rng.gen_range(-1.0..1.0),
                        env * rng.gen_range(-1.0..1.0),
                    );
                }
            }
            spec.inverse_ft()
        })
        .collect()
}
