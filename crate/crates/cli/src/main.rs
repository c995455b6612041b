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

//! Command-line front end. Every subcommand prints JSON (or CSV where noted)
//! and exits 0 only when all declared tolerances are met.

use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use diracsim::clifford::{build_dirac_matrices, verify_clifford};
use diracsim::evolution::{
    solve_linear, solve_nonlinear, EvolutionConfig, Monomial, NonlinearitySpec, Potential,
    Envelope,
};
use diracsim::experiments::{
    builtin_suite, fit_growth_exponent, free_norm_series, gaussian_datum, parse_config,
    run_suite, smoothing_ratio,
};
use diracsim::io::{read_field, read_spinor, read_symbol, write_spinor, write_field};
use diracsim::lattice::{Lattice, SpinorField};
use diracsim::propagator::{dispersion_residuals, evolve_free};
use diracsim::tfa::{build_bupu, field_norm, uniform_decomposition_norm, NormSpec};
use diracsim::weyl::quantize;
use diracsim::{Error, Result};

#[derive(Parser)]
#[command(name = "diracsim", version, about = "Dirac solver and phase-space norm toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify the anticommutation identities of the dimension-d matrix set.
    CliffordCheck {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Apply the free propagator to a stored spinor state.
    Evolve {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Override the mass stored in the snapshot.
        #[arg(long)]
        mass: Option<f64>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Per-mode phase residuals of the free flow against the exact dispersion
    /// relation, as CSV.
    DispersionCheck {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 8.0)]
        l: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Weighted mixed norm of a stored field.
    Norm {
        /// Format `M:p:q:r:s` or `W:p:q:r:s`; `inf` is a valid exponent.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        input: PathBuf,
        /// `direct` (sampled STFT) or `bupu` (uniform decomposition).
        #[arg(long, default_value = "direct")]
        method: String,
    },
    /// Apply a stored Weyl symbol to a stored field.
    WeylApply {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve the interacting equation by Picard iteration on the Duhamel
    /// fixed point; writes the trajectory and a contraction certificate.
    Solve {
        /// `none`, `mult:field.bin`, or `weyl:symbol.bin`.
        #[arg(long, default_value = "none")]
        potential: String,
        /// `none`, `power:k[:coupling]`, `thirring[:coupling]`,
        /// or `general:monomials.json`.
        #[arg(long, default_value = "none")]
        nonlinearity: String,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the norm-growth exponent of the free flow from a Gaussian datum.
    FitGrowth {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 64.0)]
        l: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value = "inf")]
        p: String,
        #[arg(long, default_value = "inf")]
        q: String,
        #[arg(long, default_value_t = 1.0)]
        t_min: f64,
        #[arg(long, default_value_t = 16.0)]
        t_max: f64,
        #[arg(long, default_value_t = 12)]
        t_count: usize,
        /// Start from a stored spinor instead of the Gaussian datum.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Write the `(t, norm, tail_fraction)` series here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Ratio series for the loss-of-derivatives smoothing bound.
    SmoothingRatio {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 32.0)]
        l: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value = "inf")]
        p: String,
        #[arg(long, default_value = "inf")]
        q: String,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 1.5)]
        t_min: f64,
        #[arg(long, default_value_t = 8.0)]
        t_max: f64,
        #[arg(long, default_value_t = 8)]
        t_count: usize,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Fail (exit 1) if any ratio exceeds this bound.
        #[arg(long)]
        max_ratio: Option<f64>,
    },
    /// Run a config-driven experiment suite with convergence sentinels.
    RunSuite {
        /// Config file of `[name]` sections with `key = value` lines.
        #[arg(long, conflicts_with = "suite")]
        config: Option<PathBuf>,
        /// Name of a built-in suite, e.g. `free-growth-d1`.
        #[arg(long)]
        suite: Option<String>,
        /// Directory for per-experiment reports and raw CSV series.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialization")
}

fn parse_exp(text: &str) -> Result<f64> {
    if text.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    text.parse()
        .map_err(|_| Error::ConfigParse(format!("bad exponent `{text}`")))
}

fn time_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (count.max(2) - 1) as f64)
        .collect()
}

fn parse_potential(text: &str) -> Result<Potential> {
    if text == "none" {
        return Ok(Potential::None);
    }
    if let Some(path) = text.strip_prefix("mult:") {
        let (field, _) = read_field(path.as_ref())?;
        return Ok(Potential::Mult { field, envelope: Envelope::One });
    }
    if let Some(path) = text.strip_prefix("weyl:") {
        return Ok(Potential::Weyl { symbol: read_symbol(path.as_ref())? });
    }
    Err(Error::ConfigParse(format!("bad potential `{text}`")))
}

fn parse_nonlinearity(text: &str) -> Result<NonlinearitySpec> {
    if text == "none" {
        return Ok(NonlinearitySpec::Zero);
    }
    if let Some(rest) = text.strip_prefix("power:") {
        let mut parts = rest.split(':');
        let k: u32 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ConfigParse(format!("bad power spec `{text}`")))?;
        let coupling = match parts.next() {
            Some(c) => c
                .parse()
                .map_err(|_| Error::ConfigParse(format!("bad coupling in `{text}`")))?,
            None => 1.0,
        };
        return Ok(NonlinearitySpec::Power { k, coupling });
    }
    if text == "thirring" {
        return Ok(NonlinearitySpec::Thirring { coupling: 1.0 });
    }
    if let Some(c) = text.strip_prefix("thirring:") {
        let coupling = c
            .parse()
            .map_err(|_| Error::ConfigParse(format!("bad coupling in `{text}`")))?;
        return Ok(NonlinearitySpec::Thirring { coupling });
    }
    if let Some(path) = text.strip_prefix("general:") {
        let raw = std::fs::read_to_string(path)?;
        let monomials: Vec<Monomial> = serde_json::from_str(&raw)
            .map_err(|e| Error::ConfigParse(format!("{path}: {e}")))?;
        return Ok(NonlinearitySpec::General { monomials });
    }
    Err(Error::ConfigParse(format!("bad nonlinearity `{text}`")))
}

fn load_or_gaussian(
    input: &Option<PathBuf>,
    dim: usize,
    n: usize,
    l: f64,
    mass: f64,
) -> Result<SpinorField> {
    match input {
        Some(path) => read_spinor(path),
        None => {
            let lattice = Lattice::uniform(dim, n, l)?;
            gaussian_datum(&lattice, dim, mass)
        }
    }
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::CliffordCheck { dim, mass, tol } => {
            let set = build_dirac_matrices(dim, mass)?;
            let report = verify_clifford(&set, tol);
            println!("{}", to_json(&report));
            Ok(report.ok)
        }
        Cmd::Evolve { t, steps, mass, input, output } => {
            let mut psi = read_spinor(&input)?;
            if let Some(m) = mass {
                let d = psi.field.lattice.d();
                psi = SpinorField::new(psi.field, Arc::new(build_dirac_matrices(d, m)?))?;
            }
            let dt = t / steps.max(1) as f64;
            for _ in 0..steps.max(1) {
                psi = evolve_free(&psi, dt);
            }
            write_spinor(&output, &psi)?;
            println!(
                "{}",
                json!({ "t": t, "steps": steps, "l2_norm": psi.l2_norm() })
            );
            Ok(true)
        }
        Cmd::DispersionCheck { dim, mass, n, l, t, tol } => {
            let lattice = Lattice::uniform(dim, n, l)?;
            let psi0 = gaussian_datum(&lattice, dim, mass)?;
            let residuals = dispersion_residuals(&psi0, t);
            let header: Vec<String> = (1..=dim).map(|a| format!("k{a}")).collect();
            println!("{},residual", header.join(","));
            let mut idx = vec![0usize; dim];
            let mut xi = vec![0.0f64; dim];
            let mut worst = 0.0f64;
            for (node, r) in residuals.iter().enumerate() {
                lattice.unravel(node, &mut idx);
                lattice.xi_point(&idx, &mut xi);
                let coords: Vec<String> = xi.iter().map(|v| format!("{v:.6e}")).collect();
                println!("{},{r:.6e}", coords.join(","));
                worst = worst.max(*r);
            }
            eprintln!("max residual {worst:.3e} (tol {tol:.1e})");
            Ok(worst <= tol)
        }
        Cmd::Norm { spec, input, method } => {
            let spec = NormSpec::parse(&spec)?;
            let (field, _) = read_field(&input)?;
            let result = match method.as_str() {
                "direct" => field_norm(&field, &spec)?,
                "bupu" => {
                    let bupu = build_bupu(&field.lattice)?;
                    uniform_decomposition_norm(&field, &spec, &bupu)?
                }
                other => {
                    return Err(Error::ConfigParse(format!("unknown method `{other}`")))
                }
            };
            println!(
                "{}",
                json!({
                    "value": result.value,
                    "tail_fraction": result.tail_fraction,
                    "method": method,
                })
            );
            Ok(!result.flagged)
        }
        Cmd::WeylApply { symbol, input, output } => {
            let sym = read_symbol(&symbol)?;
            let (field, mass) = read_field(&input)?;
            let out = quantize(&sym, &field)?;
            if let Some(path) = &output {
                write_field(path, &out, mass)?;
            }
            println!(
                "{}",
                json!({ "input_l2": field.l2_norm(), "output_l2": out.l2_norm() })
            );
            Ok(true)
        }
        Cmd::Solve { potential, nonlinearity, t_final, dt, tol, input, out } => {
            let psi0 = read_spinor(&input)?;
            let pot = parse_potential(&potential)?;
            let nl = parse_nonlinearity(&nonlinearity)?;
            std::fs::create_dir_all(&out)?;
            let (times, states, cert) = if nl.is_zero() {
                let steps = ((t_final / dt).ceil() as usize).max(1);
                let mut cfg = EvolutionConfig::new(t_final, steps);
                cfg.tol = tol;
                let sol = solve_linear(&psi0, &pot, &cfg)?;
                let factors: Vec<f64> = sol
                    .increments
                    .windows(2)
                    .map(|w| w[1] / w[0].max(1e-300))
                    .collect();
                let cert = json!({
                    "horizon_used": t_final,
                    "residuals": [sol.residual],
                    "contraction_factors": factors,
                    "sweeps": sol.sweeps,
                });
                (sol.times, sol.states, cert)
            } else {
                if !matches!(pot, Potential::None) {
                    return Err(Error::ConfigParse(
                        "the nonlinear solver takes no linear potential".into(),
                    ));
                }
                let sol = solve_nonlinear(&psi0, &nl, t_final, dt, dt / 64.0)?;
                let cert = json!({
                    "horizon_used": t_final,
                    "residuals": sol.certificates.iter().map(|c| c.residual).collect::<Vec<_>>(),
                    "contraction_factors": sol.certificates.iter()
                        .map(|c| c.contraction_factors.clone()).collect::<Vec<_>>(),
                    "windows": sol.certificates.iter().map(|c| c.window).collect::<Vec<_>>(),
                    "charge_drift": sol.charge_drift(),
                });
                (sol.times, sol.states, cert)
            };
            for (k, st) in states.iter().enumerate() {
                write_spinor(&out.join(format!("state_{k:05}.bin")), st)?;
            }
            let times_csv: String = std::iter::once("k,t".to_string())
                .chain(times.iter().enumerate().map(|(k, t)| format!("{k},{t:.17e}")))
                .collect::<Vec<_>>()
                .join("\n");
            std::fs::write(out.join("times.csv"), times_csv + "\n")?;
            std::fs::write(
                out.join("certificate.json"),
                to_json(&cert),
            )?;
            println!("{}", to_json(&cert));
            Ok(true)
        }
        Cmd::FitGrowth {
            dim, n, l, mass, p, q, t_min, t_max, t_count, input, csv,
        } => {
            let psi0 = load_or_gaussian(&input, dim, n, l, mass)?;
            let spec = NormSpec::modulation(parse_exp(&p)?, parse_exp(&q)?, 0.0, 0.0);
            let series = free_norm_series(&psi0, &spec, &time_grid(t_min, t_max, t_count))?;
            if let Some(path) = &csv {
                let mut text = String::from("t,norm,tail_fraction\n");
                for (t, r) in &series {
                    text.push_str(&format!(
                        "{t:.17e},{:.17e},{:.17e}\n",
                        r.value, r.tail_fraction
                    ));
                }
                std::fs::write(path, text)?;
            }
            let fit = fit_growth_exponent(&series)?;
            println!("{}", to_json(&fit));
            Ok(true)
        }
        Cmd::SmoothingRatio {
            dim, n, l, mass, p, q, s, t_min, t_max, t_count, input, max_ratio,
        } => {
            let psi0 = load_or_gaussian(&input, dim, n, l, mass)?;
            let series = smoothing_ratio(
                &psi0,
                parse_exp(&p)?,
                parse_exp(&q)?,
                s,
                &time_grid(t_min, t_max, t_count),
            )?;
            println!("{}", to_json(&series));
            let peak = series.ratios.iter().map(|&(_, r)| r).fold(0.0f64, f64::max);
            Ok(max_ratio.map_or(true, |bound| peak <= bound))
        }
        Cmd::RunSuite { config, suite, out } => {
            let text = match (&config, &suite) {
                (Some(path), None) => std::fs::read_to_string(path)?,
                (None, Some(name)) => builtin_suite(name)?.to_string(),
                _ => {
                    return Err(Error::ConfigParse(
                        "pass exactly one of --config or --suite".into(),
                    ))
                }
            };
            let reports = run_suite(&parse_config(&text)?)?;
            let mut all_pass = true;
            for report in &reports {
                all_pass &= report.pass;
                if let Some(dir) = &out {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(
                        dir.join(format!("{}.json", report.name)),
                        to_json(report),
                    )?;
                    std::fs::write(dir.join(format!("{}.csv", report.name)), &report.csv)?;
                }
                println!(
                    "{} [{}]: {} (sentinel drift {:.3e}{})",
                    report.name,
                    report.kind,
                    if report.pass { "pass" } else { "FAIL" },
                    report.sentinel_drift,
                    if report.sentinel_flagged { ", flagged" } else { "" },
                );
            }
            Ok(all_pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
