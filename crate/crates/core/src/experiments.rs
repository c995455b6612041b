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

//! Dispersive-estimate experiments: growth-exponent fits of phase-space
//! norms along the free flow, smoothing-ratio series, and a config-driven
//! suite runner with a doubled-resolution convergence sentinel.
//!
//! Config grammar: `[experiment-name]` section headers followed by
//! `key = value` lines; `#` starts a comment. Keys are experiment specific
//! and listed in the runner below.

use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::clifford::build_dirac_matrices;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, SpinorField};
use crate::propagator::evolve_free;
use crate::tfa::{field_norm, NormResult, NormSpec};
use num_complex::Complex64;

/// Least-squares fit of `log ||psi(t)||` against `log(1 + t)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub intercept: f64,
    pub max_tail_fraction: f64,
}

/// Fit the growth exponent from `(t, norm)` samples. Any tail-flagged sample
/// aborts the fit: the lattice no longer holds the evolved state.
pub fn fit_growth_exponent(samples: &[(f64, NormResult)]) -> Result<GrowthFit> {
    assert!(samples.len() >= 2, "need at least two samples to fit");
    let mut max_tail = 0.0f64;
    for (_, r) in samples {
        max_tail = max_tail.max(r.tail_fraction);
        if r.flagged {
            return Err(Error::TailMass { fraction: r.tail_fraction });
        }
    }
    let xs: Vec<f64> = samples.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, r)| r.value.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    Ok(GrowthFit { exponent, intercept: my - exponent * mx, max_tail_fraction: max_tail })
}

/// The standard experiment datum: a centered Gaussian in the first spinor
/// component.
pub fn gaussian_datum(lattice: &Lattice, d: usize, m: f64) -> Result<SpinorField> {
    let dirac = Arc::new(build_dirac_matrices(d, m)?);
    Ok(SpinorField::from_fn(lattice.clone(), dirac, |x, out| {
        let x2: f64 = x.iter().map(|v| v * v).sum();
        out[0] = Complex64::new((-PI * x2).exp(), 0.0);
    }))
}

/// Evolve freely and measure `spec` at each requested time.
pub fn free_norm_series(
    psi0: &SpinorField,
    spec: &NormSpec,
    times: &[f64],
) -> Result<Vec<(f64, NormResult)>> {
    times
        .iter()
        .map(|&t| {
            let psi = evolve_free(psi0, t);
            Ok((t, field_norm(&psi.field, spec)?))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingSeries {
    pub gamma: f64,
    pub degenerate: bool,
    /// `(t, ||psi(t)||_{M_{0,s}} / (||psi0||_{M_{0,s}} + t^gamma ||psi0||_{M_{0,s-gamma}}))`
    pub ratios: Vec<(f64, f64)>,
}

/// Ratio series probing the loss-of-derivatives smoothing bound with
/// `gamma = d |1/2 - 1/p|`; bounded ratios over `t > 1` are the assertable
/// property.
pub fn smoothing_ratio(
    psi0: &SpinorField,
    p: f64,
    q: f64,
    s: f64,
    times: &[f64],
) -> Result<SmoothingSeries> {
    let d = psi0.field.lattice.d() as f64;
    let gamma = d * (0.5 - if p.is_infinite() { 0.0 } else { 1.0 / p }).abs();
    if psi0.l2_norm() == 0.0 {
        return Ok(SmoothingSeries { gamma, degenerate: true, ratios: vec![] });
    }
    let spec_s = NormSpec::modulation(p, q, 0.0, s);
    let spec_lo = NormSpec::modulation(p, q, 0.0, s - gamma);
    let base_s = field_norm(&psi0.field, &spec_s)?;
    let base_lo = field_norm(&psi0.field, &spec_lo)?;
    if base_s.flagged || base_lo.flagged {
        return Err(Error::TailMass {
            fraction: base_s.tail_fraction.max(base_lo.tail_fraction),
        });
    }
    let mut ratios = Vec::with_capacity(times.len());
    for &t in times {
        assert!(t > 1.0, "smoothing ratios are defined for t > 1");
        let moved = evolve_free(psi0, t);
        let num = field_norm(&moved.field, &spec_s)?;
        if num.flagged {
            return Err(Error::TailMass { fraction: num.tail_fraction });
        }
        ratios.push((t, num.value / (base_s.value + t.powf(gamma) * base_lo.value)));
    }
    Ok(SmoothingSeries { gamma, degenerate: false, ratios })
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn get(&self, key: &str) -> Result<&str> {
        self.params
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::ConfigParse(format!("[{}] missing key `{key}`", self.name)))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let raw = self.get(key)?;
        if raw.eq_ignore_ascii_case("inf") {
            return Ok(f64::INFINITY);
        }
        raw.parse().map_err(|_| {
            Error::ConfigParse(format!("[{}] key `{key}`: bad number `{raw}`", self.name))
        })
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| {
            Error::ConfigParse(format!("[{}] key `{key}`: bad integer `{raw}`", self.name))
        })
    }
}

/// Parse the flat `[section]` / `key = value` config format.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    let mut out: Vec<ExperimentConfig> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            out.push(ExperimentConfig { name: name.trim().to_string(), params: BTreeMap::new() });
        } else if let Some((k, v)) = line.split_once('=') {
            let section = out.last_mut().ok_or_else(|| {
                Error::ConfigParse(format!("line {}: key outside a section", lineno + 1))
            })?;
            section.params.insert(k.trim().to_string(), v.trim().to_string());
        } else {
            return Err(Error::ConfigParse(format!("line {}: `{raw}` is not key = value", lineno + 1)));
        }
    }
    Ok(out)
}

/// Built-in suite definitions addressable by name.
pub fn builtin_suite(name: &str) -> Result<&'static str> {
    match name {
        "free-growth-d1" => Ok("[free-growth-d1]\n\
            kind = free-growth\n\
            d = 1\n\
            n = 1024\n\
            l = 64\n\
            m = 1\n\
            p = inf\n\
            q = inf\n\
            t_min = 1\n\
            t_max = 16\n\
            t_count = 12\n\
            expect_lo = -0.65\n\
            expect_hi = -0.35\n"),
        other => Err(Error::UnknownExperiment(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Suite runner
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub kind: String,
    pub measurements: BTreeMap<String, f64>,
    /// `t, norm, tail_fraction` rows of the primary series.
    pub csv: String,
    /// Relative change of the headline measurement when the experiment is
    /// re-run at doubled `(N, L)`.
    pub sentinel_drift: f64,
    pub sentinel_flagged: bool,
    pub pass: bool,
}

fn series_csv(samples: &[(f64, NormResult)]) -> String {
    let mut csv = String::from("t,norm,tail_fraction\n");
    for (t, r) in samples {
        let _ = writeln!(csv, "{t:.17e},{:.17e},{:.17e}", r.value, r.tail_fraction);
    }
    csv
}

fn time_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (count - 1) as f64)
        .collect()
}

fn run_free_growth(cfg: &ExperimentConfig, n: usize, l: f64) -> Result<(GrowthFit, String)> {
    let d = cfg.get_usize("d")?;
    let m = cfg.get_f64("m")?;
    let lattice = Lattice::uniform(d, n, l)?;
    let psi0 = gaussian_datum(&lattice, d, m)?;
    let spec = NormSpec::modulation(cfg.get_f64("p")?, cfg.get_f64("q")?, 0.0, 0.0);
    let times = time_grid(cfg.get_f64("t_min")?, cfg.get_f64("t_max")?, cfg.get_usize("t_count")?);
    let series = free_norm_series(&psi0, &spec, &times)?;
    let fit = fit_growth_exponent(&series)?;
    Ok((fit, series_csv(&series)))
}

fn run_smoothing(cfg: &ExperimentConfig, n: usize, l: f64) -> Result<(f64, String)> {
    let d = cfg.get_usize("d")?;
    let m = cfg.get_f64("m")?;
    let lattice = Lattice::uniform(d, n, l)?;
    let psi0 = gaussian_datum(&lattice, d, m)?;
    let times = time_grid(cfg.get_f64("t_min")?, cfg.get_f64("t_max")?, cfg.get_usize("t_count")?);
    let series = smoothing_ratio(&psi0, cfg.get_f64("p")?, cfg.get_f64("q")?, cfg.get_f64("s")?, &times)?;
    let max_ratio = series.ratios.iter().map(|&(_, r)| r).fold(0.0f64, f64::max);
    let mut csv = String::from("t,ratio\n");
    for (t, r) in &series.ratios {
        let _ = writeln!(csv, "{t:.17e},{r:.17e}");
    }
    Ok((max_ratio, csv))
}

/// Execute every experiment in the parsed config; deterministic, and each
/// run is repeated at doubled `(N, L)` as a convergence sentinel (> 2%
/// drift of the headline number is flagged).
pub fn run_suite(configs: &[ExperimentConfig]) -> Result<Vec<ExperimentReport>> {
    let mut reports = Vec::new();
    for cfg in configs {
        let kind = cfg.get("kind")?.to_string();
        let n = cfg.get_usize("n")?;
        let l = cfg.get_f64("l")?;
        let report = match kind.as_str() {
            "free-growth" => {
                let (fit, csv) = run_free_growth(cfg, n, l)?;
                let (fit2, _) = run_free_growth(cfg, 2 * n, 2.0 * l)?;
                let drift =
                    (fit2.exponent - fit.exponent).abs() / fit.exponent.abs().max(1e-12);
                let mut meas = BTreeMap::new();
                meas.insert("exponent".into(), fit.exponent);
                meas.insert("intercept".into(), fit.intercept);
                meas.insert("max_tail_fraction".into(), fit.max_tail_fraction);
                meas.insert("doubled_exponent".into(), fit2.exponent);
                let in_band = match (cfg.get_f64("expect_lo"), cfg.get_f64("expect_hi")) {
                    (Ok(lo), Ok(hi)) => fit.exponent >= lo && fit.exponent <= hi,
                    _ => true,
                };
                ExperimentReport {
                    name: cfg.name.clone(),
                    kind,
                    measurements: meas,
                    csv,
                    sentinel_drift: drift,
                    sentinel_flagged: drift > 0.02,
                    pass: in_band && drift <= 0.02,
                }
            }
            "smoothing" => {
                let (ratio, csv) = run_smoothing(cfg, n, l)?;
                let (ratio2, _) = run_smoothing(cfg, 2 * n, 2.0 * l)?;
                let drift = (ratio2 - ratio).abs() / ratio.abs().max(1e-12);
                let mut meas = BTreeMap::new();
                meas.insert("max_ratio".into(), ratio);
                meas.insert("doubled_max_ratio".into(), ratio2);
                let bound = cfg.get_f64("max_ratio_bound").unwrap_or(f64::INFINITY);
                ExperimentReport {
                    name: cfg.name.clone(),
                    kind,
                    measurements: meas,
                    csv,
                    sentinel_drift: drift,
                    sentinel_flagged: drift > 0.02,
                    pass: ratio <= bound && drift <= 0.02,
                }
            }
            other => return Err(Error::UnknownExperiment(other.to_string())),
        };
        reports.push(report);
    }
    Ok(reports)
}
