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

//! Interacting evolution: Picard iteration on the Volterra form of the
//! perturbed Dirac equation `d_t psi = -2 pi i (D + V) psi`, and the Duhamel
//! fixed point for semilinear equations with contraction certificates.
//!
//! Time quadrature is the composite trapezoid rule on a uniform step grid,
//! so converged solutions carry an `O(dt^2)` discretization error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::clifford::DiracMatrixSet;
use crate::error::{Error, Result};
use crate::lattice::{Field, SpinorField, ValueKind};
use crate::propagator::MultiplierTable;
use crate::weyl::{self, WeylSymbol};

/// Time profile modulating a static potential.
#[derive(Debug, Clone, Copy)]
pub enum Envelope {
    One,
    Cosine { omega: f64 },
    Gaussian { center: f64, width: f64 },
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Envelope::One => 1.0,
            Envelope::Cosine { omega } => (2.0 * PI * omega * t).cos(),
            Envelope::Gaussian { center, width } => {
                (-((t - center) / width).powi(2) / 2.0).exp()
            }
        }
    }
}

/// Interaction term of the linear equation.
#[derive(Debug, Clone)]
pub enum Potential {
    None,
    /// Pointwise multiplication by a scalar or `Matrix(n)` valued field.
    Mult { field: Field, envelope: Envelope },
    /// A static Weyl operator (1-d only).
    Weyl { symbol: WeylSymbol },
}

impl Potential {
    pub fn apply(&self, t: f64, psi: &Field) -> Result<Field> {
        match self {
            Potential::None => {
                let mut out = psi.clone();
                out.scale(Complex64::default());
                Ok(out)
            }
            Potential::Mult { field, envelope } => {
                if field.lattice != psi.lattice {
                    return Err(Error::LatticeMismatch);
                }
                let n = psi.vd();
                let amp = envelope.at(t);
                let mut out = psi.clone();
                match field.kind {
                    ValueKind::Scalar => {
                        for node in 0..psi.lattice.node_count() {
                            let v = field.values[node] * amp;
                            for c in 0..n {
                                out.values[node * n + c] = v * psi.values[node * n + c];
                            }
                        }
                    }
                    ValueKind::Matrix(m) if m == n => {
                        for node in 0..psi.lattice.node_count() {
                            let vm = field.node_values(node);
                            let pv = psi.node_values(node);
                            let dst = node * n;
                            for a in 0..n {
                                let mut acc = Complex64::default();
                                for b in 0..n {
                                    acc += vm[a * n + b] * pv[b];
                                }
                                out.values[dst + a] = acc * amp;
                            }
                        }
                    }
                    _ => {
                        return Err(Error::ValueKindMismatch {
                            expected: n * n,
                            got: field.vd(),
                        })
                    }
                }
                Ok(out)
            }
            Potential::Weyl { symbol } => weyl::quantize(symbol, psi),
        }
    }

    /// Largest nodewise operator norm, a crude coupling-strength witness.
    pub fn strength(&self) -> f64 {
        match self {
            Potential::None => 0.0,
            Potential::Mult { field, .. } => {
                let mut worst = 0.0f64;
                for node in 0..field.lattice.node_count() {
                    worst = worst.max(field.kind.value_norm(field.node_values(node)));
                }
                worst
            }
            Potential::Weyl { symbol } => {
                let mut worst = 0.0f64;
                let vd = symbol.kind.dims();
                for chunk in symbol.values.chunks_exact(vd) {
                    worst = worst.max(symbol.kind.value_norm(chunk));
                }
                worst
            }
        }
    }
}

/// Shared Picard controls.
#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub steps: usize,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl EvolutionConfig {
    pub fn new(t_final: f64, steps: usize) -> EvolutionConfig {
        EvolutionConfig { t_final, steps, max_sweeps: 60, tol: 1e-12 }
    }
}

#[derive(Debug)]
pub struct LinearSolution {
    pub times: Vec<f64>,
    pub states: Vec<SpinorField>,
    pub sweeps: usize,
    pub residual: f64,
    /// Max-norm Picard increments per sweep; their decay mirrors the
    /// factorial decay of the Dyson series tails.
    pub increments: Vec<f64>,
}

fn free_tables(psi0: &SpinorField, cfg: &EvolutionConfig) -> Vec<MultiplierTable> {
    let dt = cfg.t_final / cfg.steps as f64;
    (0..=cfg.steps)
        .map(|k| MultiplierTable::build(&psi0.field.lattice, k as f64 * dt, &psi0.dirac))
        .collect()
}

fn propagate(field: &Field, table: &MultiplierTable, n: usize) -> Field {
    let mut spec = field.forward_ft();
    table.apply_spectrum(&mut spec.values, n);
    spec.inverse_ft()
}

fn max_l2_gap(a: &[Field], b: &[Field]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.sub(y).l2_norm()).fold(0.0, f64::max)
}

/// Trapezoid Duhamel update `new_i = free_i - 2 pi i dt sum_j w_j
/// U0(t_i - t_j) g_j` for precomputed integrand samples `g_j`.
fn duhamel_sweep(
    free: &[Field],
    integrand: &[Field],
    tables: &[MultiplierTable],
    n: usize,
    dt: f64,
) -> Vec<Field> {
    let steps = free.len() - 1;
    // accumulate in the spectral domain: one FFT per sample instead of one
    // per (i, j) pair, with the lag propagators applied as diagonal tables
    let ghat: Vec<Field> = integrand.iter().map(|g| g.forward_ft()).collect();
    let mut new = Vec::with_capacity(steps + 1);
    new.push(free[0].clone());
    let mut moved = vec![Complex64::default(); ghat[0].values.len()];
    for i in 1..=steps {
        let mut acc = free[i].forward_ft();
        for j in 0..=i {
            let w = if j == 0 || j == i { 0.5 } else { 1.0 };
            moved.copy_from_slice(&ghat[j].values);
            tables[i - j].apply_spectrum(&mut moved, n);
            let c = Complex64::new(0.0, -2.0 * PI * dt * w);
            for (a, b) in acc.values.iter_mut().zip(moved.iter()) {
                *a += c * b;
            }
        }
        new.push(acc.inverse_ft());
    }
    new
}

/// Picard iteration on the Volterra equation with a linear potential.
pub fn solve_linear(
    psi0: &SpinorField,
    pot: &Potential,
    cfg: &EvolutionConfig,
) -> Result<LinearSolution> {
    let n = psi0.n();
    let dt = cfg.t_final / cfg.steps as f64;
    let tables = free_tables(psi0, cfg);
    let free: Vec<Field> =
        tables.iter().map(|tb| propagate(&psi0.field, tb, n)).collect();
    let times: Vec<f64> = (0..=cfg.steps).map(|k| k as f64 * dt).collect();

    let mut old = free.clone();
    let mut increments = Vec::new();
    for sweep in 1..=cfg.max_sweeps {
        let integrand: Result<Vec<Field>> =
            times.iter().zip(old.iter()).map(|(&t, f)| pot.apply(t, f)).collect();
        let new = duhamel_sweep(&free, &integrand?, &tables, n, dt);
        let inc = max_l2_gap(&new, &old);
        increments.push(inc);
        old = new;
        if inc < cfg.tol {
            let dirac = Arc::clone(&psi0.dirac);
            let states = old
                .into_iter()
                .map(|f| SpinorField::new(f, Arc::clone(&dirac)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(LinearSolution { times, states, sweeps: sweep, residual: inc, increments });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_sweeps,
        residual: *increments.last().unwrap_or(&f64::NAN),
    })
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

/// One coefficient of a componentwise polynomial nonlinearity:
/// `F_target += coeff * prod_c psi_c^{zp} conj(psi_c)^{zq}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Monomial {
    pub target: usize,
    pub coeff_re: f64,
    pub coeff_im: f64,
    /// `(component, holomorphic power, antiholomorphic power)`
    pub factors: Vec<(usize, u32, u32)>,
}

impl Monomial {
    pub fn coeff(&self) -> Complex64 {
        Complex64::new(self.coeff_re, self.coeff_im)
    }
}

#[derive(Debug, Clone)]
pub enum NonlinearitySpec {
    Zero,
    /// `F = coupling |psi|^{2k} psi` with the Euclidean spinor modulus.
    Power { k: u32, coupling: f64 },
    /// `F = coupling (alpha_0 psi, psi) alpha_0 psi`.
    Thirring { coupling: f64 },
    /// Componentwise polynomial with an explicit coefficient table.
    General { monomials: Vec<Monomial> },
}

impl NonlinearitySpec {
    /// Check `F(0) = 0` and component indices against the spinor size.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let NonlinearitySpec::General { monomials } = self {
            for m in monomials {
                if m.target >= n {
                    return Err(Error::InvalidNonlinearity(format!(
                        "target component {} out of range (n = {n})",
                        m.target
                    )));
                }
                let degree: u32 = m.factors.iter().map(|&(_, p, q)| p + q).sum();
                if degree == 0 {
                    return Err(Error::InvalidNonlinearity(
                        "constant monomial violates F(0) = 0".into(),
                    ));
                }
                for &(c, _, _) in &m.factors {
                    if c >= n {
                        return Err(Error::InvalidNonlinearity(format!(
                            "factor component {c} out of range (n = {n})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, NonlinearitySpec::Zero)
    }

    /// Expand the Thirring interaction into an explicit coefficient table
    /// (valid because `alpha_0` is diagonal with entries `+-1`).
    pub fn thirring_table(set: &DiracMatrixSet, coupling: f64) -> NonlinearitySpec {
        let n = set.n;
        let eta: Vec<f64> = (0..n).map(|a| set.alphas[0][(a, a)].re).collect();
        let mut monomials = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let factors = if a == b {
                    vec![(a, 2, 1)]
                } else {
                    vec![(a, 1, 0), (b, 1, 1)]
                };
                monomials.push(Monomial {
                    target: a,
                    coeff_re: coupling * eta[a] * eta[b],
                    coeff_im: 0.0,
                    factors,
                });
            }
        }
        NonlinearitySpec::General { monomials }
    }
}

/// Evaluate `F(psi)` at a single node.
pub fn eval_nonlinearity(
    spec: &NonlinearitySpec,
    set: &DiracMatrixSet,
    psi: &[Complex64],
    out: &mut [Complex64],
) {
    out.fill(Complex64::default());
    match spec {
        NonlinearitySpec::Zero => {}
        NonlinearitySpec::Power { k, coupling } => {
            let m2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            let amp = coupling * m2.powi(*k as i32);
            for (o, &z) in out.iter_mut().zip(psi.iter()) {
                *o = amp * z;
            }
        }
        NonlinearitySpec::Thirring { coupling } => {
            let n = psi.len();
            // (alpha_0 psi, psi) is real since alpha_0 is Hermitian
            let mut dens = Complex64::default();
            let mut a0psi = vec![Complex64::default(); n];
            for a in 0..n {
                for b in 0..n {
                    a0psi[a] += set.alphas[0][(a, b)] * psi[b];
                }
                dens += a0psi[a] * psi[a].conj();
            }
            for a in 0..n {
                out[a] = *coupling * dens.re * a0psi[a];
            }
        }
        NonlinearitySpec::General { monomials } => {
            for m in monomials {
                let mut prod = m.coeff();
                for &(c, p, q) in &m.factors {
                    prod *= psi[c].powu(p) * psi[c].conj().powu(q);
                }
                out[m.target] += prod;
            }
        }
    }
}

fn nonlinearity_field(
    spec: &NonlinearitySpec,
    set: &DiracMatrixSet,
    psi: &Field,
) -> Field {
    let n = set.n;
    let mut out = psi.clone();
    let mut buf = vec![Complex64::default(); n];
    for node in 0..psi.lattice.node_count() {
        eval_nonlinearity(spec, set, psi.node_values(node), &mut buf);
        out.values[node * n..(node + 1) * n].copy_from_slice(&buf);
    }
    out
}

/// Contraction evidence for one solved window.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub window: f64,
    pub sweeps: usize,
    pub residual: f64,
    pub increments: Vec<f64>,
    /// `increments[m] / increments[m-1]`; all below one certifies the
    /// Duhamel map contracted on this window.
    pub contraction_factors: Vec<f64>,
}

#[derive(Debug)]
pub struct NonlinearSolution {
    pub times: Vec<f64>,
    pub states: Vec<SpinorField>,
    pub certificate: Certificate,
}

/// Picard iteration for the semilinear Duhamel fixed point on one window.
pub fn solve_nonlinear_window(
    psi0: &SpinorField,
    spec: &NonlinearitySpec,
    cfg: &EvolutionConfig,
) -> Result<NonlinearSolution> {
    spec.validate(psi0.n())?;
    let n = psi0.n();
    let dt = cfg.t_final / cfg.steps as f64;
    let tables = free_tables(psi0, cfg);
    let free: Vec<Field> =
        tables.iter().map(|tb| propagate(&psi0.field, tb, n)).collect();
    let times: Vec<f64> = (0..=cfg.steps).map(|k| k as f64 * dt).collect();

    let mut old = free.clone();
    let mut increments: Vec<f64> = Vec::new();
    for sweep in 1..=cfg.max_sweeps {
        let integrand: Vec<Field> =
            old.iter().map(|f| nonlinearity_field(spec, &psi0.dirac, f)).collect();
        let new = duhamel_sweep(&free, &integrand, &tables, n, dt);
        let inc = max_l2_gap(&new, &old);
        let grew = increments.last().map_or(false, |&prev| inc > prev);
        increments.push(inc);
        old = new;
        if inc < cfg.tol {
            let factors: Vec<f64> =
                increments.windows(2).map(|w| w[1] / w[0].max(1e-300)).collect();
            let dirac = Arc::clone(&psi0.dirac);
            let states = old
                .into_iter()
                .map(|f| SpinorField::new(f, Arc::clone(&dirac)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(NonlinearSolution {
                times,
                states,
                certificate: Certificate {
                    window: cfg.t_final,
                    sweeps: sweep,
                    residual: inc,
                    increments,
                    contraction_factors: factors,
                },
            });
        }
        if grew && sweep >= 3 {
            return Err(Error::NoContraction { floor: cfg.t_final });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_sweeps,
        residual: *increments.last().unwrap_or(&f64::NAN),
    })
}

#[derive(Debug)]
pub struct ChainedSolution {
    pub times: Vec<f64>,
    pub states: Vec<SpinorField>,
    pub certificates: Vec<Certificate>,
}

impl ChainedSolution {
    pub fn final_state(&self) -> &SpinorField {
        self.states.last().expect("chained solution is nonempty")
    }

    /// Largest deviation of `||psi(t)||^2` from the initial charge.
    pub fn charge_drift(&self) -> f64 {
        let q0 = self.states[0].l2_norm().powi(2);
        self.states
            .iter()
            .map(|s| (s.l2_norm().powi(2) - q0).abs())
            .fold(0.0, f64::max)
    }
}

/// Drive the semilinear solver to `t_final`, halving the window whenever the
/// Duhamel map fails to contract, down to `window_floor`.
pub fn solve_nonlinear(
    psi0: &SpinorField,
    spec: &NonlinearitySpec,
    t_final: f64,
    dt_target: f64,
    window_floor: f64,
) -> Result<ChainedSolution> {
    spec.validate(psi0.n())?;
    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];
    let mut certificates = Vec::new();
    let mut t = 0.0;
    let mut window = (t_final - t).min(1.0);
    while t < t_final - 1e-12 {
        window = window.min(t_final - t);
        let steps = ((window / dt_target).ceil() as usize).max(8);
        let cfg = EvolutionConfig::new(window, steps);
        let start = states.last().unwrap().clone();
        match solve_nonlinear_window(&start, spec, &cfg) {
            Ok(sol) => {
                for (k, st) in sol.states.into_iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    times.push(t + sol.times[k]);
                    states.push(st);
                }
                certificates.push(sol.certificate);
                t += window;
            }
            Err(Error::NoContraction { .. }) | Err(Error::NoConvergence { .. }) => {
                window /= 2.0;
                if window < window_floor {
                    return Err(Error::NoContraction { floor: window_floor });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ChainedSolution { times, states, certificates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_dirac_matrices;
    use crate::lattice::Lattice;
    use crate::propagator::evolve_free;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn setup(n_pts: usize) -> (Lattice, Arc<DiracMatrixSet>, SpinorField) {
        let lat = Lattice::uniform(1, n_pts, 8.0).unwrap();
        let dirac = Arc::new(build_dirac_matrices(1, 1.0).unwrap());
        let psi0 = SpinorField::from_fn(lat.clone(), Arc::clone(&dirac), |x, out| {
            let g = (-PI * x[0] * x[0]).exp();
            out[0] = Complex64::new(g, 0.0);
            out[1] = Complex64::new(0.4 * g, 0.2 * g);
        });
        (lat, dirac, psi0)
    }

    /// RK4 on the interaction picture `phi = U0(-t) psi`,
    /// `phi' = -2 pi i U0(-t) V(t) U0(t) phi`; independent of the Volterra
    /// quadrature and of the Picard iteration.
    fn rk4_oracle(
        psi0: &SpinorField,
        pot: &Potential,
        t_final: f64,
        steps: usize,
    ) -> SpinorField {
        let n = psi0.n();
        let dt = t_final / steps as f64;
        let rhs = |t: f64, phi: &Field| -> Field {
            let tbl_fwd = MultiplierTable::build(&phi.lattice, t, &psi0.dirac);
            let tbl_bwd = MultiplierTable::build(&phi.lattice, -t, &psi0.dirac);
            let moved = propagate(phi, &tbl_fwd, n);
            let v = pot.apply(t, &moved).unwrap();
            let mut back = propagate(&v, &tbl_bwd, n);
            back.scale(Complex64::new(0.0, -2.0 * PI));
            back
        };
        let mut phi = psi0.field.clone();
        for k in 0..steps {
            let t = k as f64 * dt;
            let k1 = rhs(t, &phi);
            let mut p2 = phi.clone();
            p2.add_scaled(&k1, Complex64::new(dt / 2.0, 0.0));
            let k2 = rhs(t + dt / 2.0, &p2);
            let mut p3 = phi.clone();
            p3.add_scaled(&k2, Complex64::new(dt / 2.0, 0.0));
            let k3 = rhs(t + dt / 2.0, &p3);
            let mut p4 = phi.clone();
            p4.add_scaled(&k3, Complex64::new(dt, 0.0));
            let k4 = rhs(t + dt, &p4);
            phi.add_scaled(&k1, Complex64::new(dt / 6.0, 0.0));
            phi.add_scaled(&k2, Complex64::new(dt / 3.0, 0.0));
            phi.add_scaled(&k3, Complex64::new(dt / 3.0, 0.0));
            phi.add_scaled(&k4, Complex64::new(dt / 6.0, 0.0));
        }
        let tbl = MultiplierTable::build(&psi0.field.lattice, t_final, &psi0.dirac);
        SpinorField::new(propagate(&phi, &tbl, n), Arc::clone(&psi0.dirac)).unwrap()
    }

    #[test]
    fn zero_potential_matches_free_propagator() {
        let (_, _, psi0) = setup(64);
        let cfg = EvolutionConfig::new(1.0, 16);
        let sol = solve_linear(&psi0, &Potential::None, &cfg).unwrap();
        assert_eq!(sol.sweeps, 1);
        for (k, &t) in sol.times.iter().enumerate() {
            let want = evolve_free(&psi0, t);
            let gap = sol.states[k].field.sub(&want.field).l2_norm();
            assert!(gap < 1e-12, "t={t}: gap {gap}");
        }
    }

    #[test]
    fn constant_scalar_potential_is_a_phase() {
        let (lat, _, psi0) = setup(32);
        let c = 0.02;
        let pot = Potential::Mult {
            field: Field::scalar_from_fn(lat.clone(), |_| Complex64::new(c, 0.0)),
            envelope: Envelope::One,
        };
        let cfg = EvolutionConfig::new(1.0, 400);
        let sol = solve_linear(&psi0, &pot, &cfg).unwrap();
        let last = sol.states.last().unwrap();
        let mut want = evolve_free(&psi0, 1.0);
        want.field.scale(Complex64::from_polar(1.0, -2.0 * PI * c));
        let gap = last.field.sub(&want.field).l2_norm();
        assert!(gap < 1e-8, "phase gap {gap}");
    }

    #[test]
    fn matrix_potential_matches_rk4_oracle() {
        let (lat, _, psi0) = setup(32);
        let pot = Potential::Mult {
            field: Field::from_fn(lat.clone(), ValueKind::Matrix(2), |x, out| {
                let b = 0.2 * (-0.5 * x[0] * x[0]).exp();
                let c = 0.1 * (0.7 * x[0]).sin();
                out[0] = Complex64::new(b, 0.0);
                out[1] = Complex64::new(c, 0.05);
                out[2] = Complex64::new(c, -0.05);
                out[3] = Complex64::new(-b, 0.0);
            }),
            envelope: Envelope::Cosine { omega: 0.3 },
        };
        let cfg = EvolutionConfig::new(0.5, 500);
        let sol = solve_linear(&psi0, &pot, &cfg).unwrap();
        let oracle = rk4_oracle(&psi0, &pot, 0.5, 250);
        let gap = sol.states.last().unwrap().field.sub(&oracle.field).l2_norm();
        assert!(gap < 1e-6, "oracle gap {gap}");
    }

    #[test]
    fn trapezoid_error_shrinks_quadratically() {
        let (lat, _, psi0) = setup(32);
        let c = 0.5;
        let pot = Potential::Mult {
            field: Field::scalar_from_fn(lat.clone(), |_| Complex64::new(c, 0.0)),
            envelope: Envelope::One,
        };
        let mut want = evolve_free(&psi0, 1.0);
        want.field.scale(Complex64::from_polar(1.0, -2.0 * PI * c));
        let err_at = |steps: usize| {
            let sol = solve_linear(&psi0, &pot, &EvolutionConfig::new(1.0, steps)).unwrap();
            sol.states.last().unwrap().field.sub(&want.field).l2_norm()
        };
        let (coarse, fine) = (err_at(50), err_at(100));
        assert!(coarse / fine >= 3.5, "halving gain {}", coarse / fine);
    }

    #[test]
    fn hermitian_potential_conserves_charge() {
        let (lat, _, psi0) = setup(32);
        let pot = Potential::Mult {
            field: Field::from_fn(lat.clone(), ValueKind::Matrix(2), |x, out| {
                let b = 0.3 * (-(x[0] - 0.5).powi(2)).exp();
                out[0] = Complex64::new(b, 0.0);
                out[1] = Complex64::new(0.1, 0.2 * x[0].sin());
                out[2] = out[1].conj();
                out[3] = Complex64::new(-0.5 * b, 0.0);
            }),
            envelope: Envelope::One,
        };
        let cfg = EvolutionConfig::new(0.5, 640);
        let sol = solve_linear(&psi0, &pot, &cfg).unwrap();
        let q0 = psi0.l2_norm();
        for s in &sol.states {
            assert!((s.l2_norm() - q0).abs() < 1e-7, "drift {}", (s.l2_norm() - q0).abs());
        }
    }

    #[test]
    fn picard_increments_decay_factorially() {
        let (lat, _, psi0) = setup(32);
        let pot = Potential::Mult {
            field: Field::scalar_from_fn(lat.clone(), |x| {
                Complex64::new(0.8 * (-(x[0]).powi(2)).exp(), 0.0)
            }),
            envelope: Envelope::One,
        };
        let cfg = EvolutionConfig::new(1.0, 100);
        let sol = solve_linear(&psi0, &pot, &cfg).unwrap();
        assert!(sol.increments.len() >= 5);
        // (K t)^n / n! humps while K t > n, then decays monotonically; the
        // tail of the increment sequence must be strictly decreasing and the
        // decrement ratios must keep shrinking (factorial beats geometric)
        let tail = &sol.increments[sol.increments.len() / 2..];
        for w in tail.windows(2) {
            assert!(w[1] < w[0], "tail not decreasing: {tail:?}");
        }
        let r: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(r.last().unwrap() < &r[0], "ratios {r:?}");
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn weyl_potential_matches_multiplication() {
        // a symbol depending only on x quantizes to that multiplication
        let (lat, _, psi0) = setup(32);
        let sym = WeylSymbol::from_fn(&lat, ValueKind::Matrix(2), |x, _, out| {
            let b = 0.2 * (-0.4 * x * x).exp();
            out[0] = Complex64::new(b, 0.0);
            out[3] = Complex64::new(-b, 0.0);
            out[1] = Complex64::default();
            out[2] = Complex64::default();
        })
        .unwrap();
        let field = Field::from_fn(lat.clone(), ValueKind::Matrix(2), |x, out| {
            let b = 0.2 * (-0.4 * x[0] * x[0]).exp();
            out[0] = Complex64::new(b, 0.0);
            out[3] = Complex64::new(-b, 0.0);
            out[1] = Complex64::default();
            out[2] = Complex64::default();
        });
        let cfg = EvolutionConfig::new(0.4, 100);
        let a = solve_linear(&psi0, &Potential::Weyl { symbol: sym }, &cfg).unwrap();
        let b = solve_linear(
            &psi0,
            &Potential::Mult { field, envelope: Envelope::One },
            &cfg,
        )
        .unwrap();
        let gap = a.states.last().unwrap().field.sub(&b.states.last().unwrap().field).l2_norm();
        assert!(gap < 1e-10, "weyl vs mult gap {gap}");
    }

    #[test]
    fn thirring_equals_its_coefficient_table() {
        let dirac = build_dirac_matrices(1, 1.0).unwrap();
        let direct = NonlinearitySpec::Thirring { coupling: 0.7 };
        let table = NonlinearitySpec::thirring_table(&dirac, 0.7);
        table.validate(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut out_a = vec![Complex64::default(); 2];
        let mut out_b = vec![Complex64::default(); 2];
        for _ in 0..50 {
            let psi: Vec<Complex64> = (0..2)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            eval_nonlinearity(&direct, &dirac, &psi, &mut out_a);
            eval_nonlinearity(&table, &dirac, &psi, &mut out_b);
            for c in 0..2 {
                assert!((out_a[c] - out_b[c]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_general_tables_rejected() {
        let constant = NonlinearitySpec::General {
            monomials: vec![Monomial { target: 0, coeff_re: 1.0, coeff_im: 0.0, factors: vec![] }],
        };
        assert!(constant.validate(2).is_err());
        let oob = NonlinearitySpec::General {
            monomials: vec![Monomial {
                target: 5,
                coeff_re: 1.0,
                coeff_im: 0.0,
                factors: vec![(0, 1, 0)],
            }],
        };
        assert!(oob.validate(2).is_err());
    }

    #[test]
    fn zero_nonlinearity_chains_to_free_flow() {
        let (_, _, psi0) = setup(32);
        let sol = solve_nonlinear(&psi0, &NonlinearitySpec::Zero, 5.0, 0.125, 1e-3).unwrap();
        assert!((sol.times.last().unwrap() - 5.0).abs() < 1e-9);
        let want = evolve_free(&psi0, 5.0);
        let gap = sol.final_state().field.sub(&want.field).l2_norm();
        assert!(gap < 1e-10, "chained free gap {gap}");
    }

    #[test]
    fn power_nonlinearity_conserves_charge() {
        let (_, _, psi0) = setup(32);
        let spec = NonlinearitySpec::Power { k: 1, coupling: 0.5 };
        let sol = solve_nonlinear(&psi0, &spec, 0.5, 0.001, 1e-4).unwrap();
        assert!(sol.charge_drift() < 1e-6, "drift {}", sol.charge_drift());
        for c in &sol.certificates {
            for &f in &c.contraction_factors[..c.contraction_factors.len() - 1] {
                assert!(f < 1.0, "contraction factor {f}");
            }
        }
    }

    #[test]
    fn thirring_conserves_charge() {
        let (_, _, psi0) = setup(32);
        let spec = NonlinearitySpec::Thirring { coupling: 0.4 };
        let sol = solve_nonlinear(&psi0, &spec, 0.5, 0.00125, 1e-4).unwrap();
        assert!(sol.charge_drift() < 1e-6, "drift {}", sol.charge_drift());
    }

    #[test]
    fn data_to_solution_lipschitz() {
        let (lat, dirac, psi0) = setup(32);
        let eps = 1e-3;
        let psi1 = SpinorField::from_fn(lat.clone(), Arc::clone(&dirac), |x, out| {
            let g = (-PI * x[0] * x[0]).exp();
            out[0] = Complex64::new(g * (1.0 + eps), 0.0);
            out[1] = Complex64::new(0.4 * g, 0.2 * g - eps * g);
        });
        let d0 = psi1.field.sub(&psi0.field).l2_norm();
        let spec = NonlinearitySpec::Power { k: 1, coupling: 0.5 };
        let a = solve_nonlinear(&psi0, &spec, 0.5, 0.005, 1e-4).unwrap();
        let b = solve_nonlinear(&psi1, &spec, 0.5, 0.005, 1e-4).unwrap();
        let d1 = a.final_state().field.sub(&b.final_state().field).l2_norm();
        assert!(d1 / d0 <= 2.2, "lipschitz ratio {}", d1 / d0);
    }

    #[test]
    fn strong_coupling_halves_the_window() {
        let (_, _, psi0) = setup(32);
        let spec = NonlinearitySpec::Power { k: 1, coupling: 30.0 };
        let sol = solve_nonlinear(&psi0, &spec, 0.05, 0.001, 1e-5).unwrap();
        assert!(sol.certificates.len() > 1, "expected multiple windows");
        assert!(sol.certificates.iter().all(|c| c.window < 0.05));
        // an impossible floor must surface the failure instead of faking it
        let hopeless = NonlinearitySpec::Power { k: 2, coupling: 1e6 };
        assert!(matches!(
            solve_nonlinear(&psi0, &hopeless, 0.05, 0.001, 0.02),
            Err(Error::NoContraction { .. })
        ));
    }
}
