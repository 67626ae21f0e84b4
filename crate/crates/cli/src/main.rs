//! Command-line driver for the restless-bandit pipeline.
//!
//! Subcommands: `index` (Whittle indices), `analyze` (mean-field fixed
//! point and attractor), `simulate` (finite-N Monte-Carlo), `exact`
//! (small-N baselines), `channel` (two-class fading-channel model), `scan`
//! (random-instance statistics), `fit` (decay-rate fitting) and `sweep`
//! (normalized-performance grids).

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use restless_core::channels::{
    build_channel_model, channel_fixed_point, ChannelClass, ChannelInstance,
};
use restless_core::exact::{action_difference_map, relaxed_bound, solve_exact, wip_value_exact};
use restless_core::experiments::{fit_rate, scan, sweep_alpha};
use restless_core::meanfield::{
    build_map, detect_attractor, fixed_point, iterate, reward_rate,
};
use restless_core::model::{uniformize, validate, LoadedModel, ModelFile};
use restless_core::simulate::{estimate_wip_async, estimate_wip_sync, ActivationMode};
use restless_core::whittle::{async_indices, compute_indices, default_nu_grid, oracle_indices};
use restless_core::{BanditModel, Configuration, Instance};

#[derive(Parser)]
#[command(
    name = "restless",
    about = "Whittle index policies for restless bandits",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArg {
    /// Path to a model JSON file.
    model: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Whittle indices and the indexability verdict.
    Index {
        #[command(flatten)]
        model: ModelArg,
        /// Cross-check the indices against the subsidy-grid oracle.
        #[arg(long)]
        grid_check: bool,
        /// Index tie tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Fixed point, stability and attractor of the mean-field dynamics.
    Analyze {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        alpha: Option<f64>,
        /// Random starts for the attractor probe.
        #[arg(long, default_value_t = 1000)]
        starts: usize,
        /// Iteration horizon per start.
        #[arg(long, default_value_t = 10_000)]
        tmax: usize,
        /// Target ball radius for the attractor probe.
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Emit a CSV trajectory (t, m_1..m_d, rho) from this start file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Steps for the --trace trajectory.
        #[arg(long, default_value_t = 200)]
        trace_steps: usize,
        /// Proceed on non-strict indices, breaking ties by state id.
        #[arg(long)]
        break_ties: bool,
    },
    /// Monte-Carlo estimate of the index policy's average reward.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        alpha: Option<f64>,
        /// Comma-separated list of system sizes.
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[arg(long, default_value_t = 1000)]
        burnin: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Event-driven simulation of an asynchronous model file.
        #[arg(long = "async")]
        asynchronous: bool,
        /// JSON array with the starting fractions in the model file's
        /// state order; defaults to uniform. Class-structured models
        /// conserve class masses, so the start pins them.
        #[arg(long)]
        start: Option<PathBuf>,
        #[arg(long)]
        break_ties: bool,
    },
    /// Exact optimal and index-policy values at small N.
    Exact {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Write the per-configuration action-difference map to a CSV file.
        #[arg(long)]
        diff_map: Option<PathBuf>,
        #[arg(long)]
        break_ties: bool,
    },
    /// Build and analyze the two-class fading-channel model.
    Channel {
        #[arg(long, default_value_t = 0.75)]
        p1: f64,
        #[arg(long, default_value_t = 0.2)]
        r1: f64,
        #[arg(long, default_value_t = 0.8)]
        p2: f64,
        #[arg(long, default_value_t = 0.3)]
        r2: f64,
        #[arg(long, default_value_t = 0.6)]
        beta: f64,
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        #[arg(long, default_value_t = 40)]
        tstar: usize,
        /// Write the product model (sorted by index) to a JSON file.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Random-instance statistics: indexability and piece stability.
    Scan {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Fit exponential and power decays to (N, subgap) points.
    Fit {
        /// CSV file with a header and rows `N,subgap`.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Normalized performance over an (alpha, N) grid.
    Sweep {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// System sizes, either comma-separated or `start:stop:step`.
        #[arg(long = "N")]
        n: String,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[arg(long, default_value_t = 1000)]
        burnin: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "exact")]
        mode: String,
        /// CSV output path.
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        #[arg(long)]
        break_ties: bool,
    },
}

fn load_sync(path: &PathBuf) -> Result<(BanditModel, Option<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
    let (model, alpha) = ModelFile::parse(&text)?;
    match model {
        LoadedModel::Sync(m) => Ok((m, alpha)),
        LoadedModel::Async(a) => {
            let (m, _tau) = uniformize(&a)?;
            Ok((m, alpha))
        }
    }
}

fn require_alpha(file_alpha: Option<f64>, flag: Option<f64>) -> Result<f64> {
    flag.or(file_alpha)
        .ok_or_else(|| anyhow!("no alpha: pass --alpha or put it in the model file"))
}

/// Sorts the model by decreasing index; refuses non-strict instances
/// unless ties may be broken by state id. Multichain models (for which
/// the greedy cannot certify an order, e.g. emitted multi-class product
/// models) are trusted to be pre-sorted.
fn sorted_instance(
    model: &BanditModel,
    alpha: f64,
    break_ties: bool,
) -> Result<(Instance, Vec<usize>)> {
    let rep = validate(model);
    if !rep.is_valid() {
        bail!("invalid model: {}", rep.violations.join("; "));
    }
    let multichain = !rep.warnings.is_empty();
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    match compute_indices(model, 1e-9) {
        Ok(idx) => {
            if !idx.indexable {
                bail!(
                    "model is not indexable: {}",
                    idx.diagnosis.unwrap_or_default()
                );
            }
            if !idx.strict && !break_ties {
                bail!(
                    "indices are not strictly ordered; pass --break-ties to order ties by state id"
                );
            }
            let sorted = model.permuted(&idx.order);
            Ok((Instance::new(sorted, alpha)?, idx.order))
        }
        Err(restless_core::Error::SingularSystem(_)) if multichain => {
            eprintln!("warning: cannot verify the priority order on a multichain model; trusting the file order");
            Ok((Instance::new(model.clone(), alpha)?, (0..model.d).collect()))
        }
        Err(e) => Err(e.into()),
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Index {
            model,
            grid_check,
            tol,
        } => {
            let text = fs::read_to_string(&model.model)?;
            let (loaded, _) = ModelFile::parse(&text)?;
            let idx = match &loaded {
                LoadedModel::Sync(m) => compute_indices(m, tol)?,
                LoadedModel::Async(a) => async_indices(a, tol)?,
            };
            let mut out = json!({
                "indexable": idx.indexable,
                "indices": idx.indices,
                "order": idx.order.iter().map(|&i| i + 1).collect::<Vec<_>>(),
                "strict": idx.strict,
            });
            if let Some(d) = &idx.diagnosis {
                out["diagnosis"] = json!(d);
            }
            if grid_check {
                let sync = match loaded {
                    LoadedModel::Sync(m) => m,
                    LoadedModel::Async(a) => uniformize(&a)?.0,
                };
                let rep = oracle_indices(&sync, &default_nu_grid(&sync))?;
                out["grid_check"] = json!({
                    "indexable": rep.indexable,
                    "brackets": rep
                        .brackets
                        .iter()
                        .map(|b| json!([b.lower, b.upper]))
                        .collect::<Vec<_>>(),
                });
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Analyze {
            model,
            alpha,
            starts,
            tmax,
            eps,
            seed,
            trace,
            trace_steps,
            break_ties,
        } => {
            let (m, file_alpha) = load_sync(&model.model)?;
            let alpha = require_alpha(file_alpha, alpha)?;
            let (inst, order) = sorted_instance(&m, alpha, break_ties)?;
            let map = build_map(&inst)?;
            let mut fp = fixed_point(&map)?;
            let verdict = detect_attractor(&map, &fp.m_star, starts, tmax, eps, seed);
            fp.attractor = Some(verdict);
            let mut out = serde_json::to_value(&fp)?;
            out["state_order"] = json!(order.iter().map(|&i| i + 1).collect::<Vec<_>>());
            out["zone"] = json!(fp.zone + 1);
            out["lipschitz_bound"] = json!(map.lipschitz_bound());
            out["attractor_note"] = json!("fixed-point verdicts are empirical, not certified");
            println!("{}", serde_json::to_string_pretty(&out)?);
            if let Some(start_file) = trace {
                let m0: Vec<f64> = serde_json::from_str(&fs::read_to_string(&start_file)?)?;
                let m0 = Configuration::new(m0)?;
                let orbit = iterate(&map, &m0, trace_steps);
                let d = inst.model.d;
                let mut w = String::from("t");
                for i in 1..=d {
                    w.push_str(&format!(",m_{i}"));
                }
                w.push_str(",rho\n");
                for (t, p) in orbit.iter().enumerate() {
                    w.push_str(&format!("{t}"));
                    for i in 0..d {
                        w.push_str(&format!(",{}", p[i]));
                    }
                    w.push_str(&format!(",{}\n", reward_rate(&inst, p.as_slice())));
                }
                print!("{w}");
            }
        }
        Command::Simulate {
            model,
            alpha,
            n,
            horizon,
            burnin,
            seed,
            mode,
            asynchronous,
            start,
            break_ties,
        } => {
            let mode: ActivationMode = mode.parse()?;
            let text = fs::read_to_string(&model.model)?;
            let (loaded, file_alpha) = ModelFile::parse(&text)?;
            let alpha = require_alpha(file_alpha, alpha)?;
            println!("N,mode,mean,half_width,seed");
            match (&loaded, asynchronous) {
                (LoadedModel::Async(a), true) => {
                    let idx = async_indices(a, 1e-9)?;
                    if !idx.indexable {
                        bail!("model is not indexable");
                    }
                    let perm = |q: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
                        idx.order
                            .iter()
                            .map(|&i| idx.order.iter().map(|&j| q[i][j]).collect())
                            .collect()
                    };
                    let sorted = restless_core::AsyncBanditModel {
                        d: a.d,
                        q0: perm(&a.q0),
                        q1: perm(&a.q1),
                        r0: idx.order.iter().map(|&i| a.r0[i]).collect(),
                        r1: idx.order.iter().map(|&i| a.r1[i]).collect(),
                    };
                    for &nn in &n {
                        let est = estimate_wip_async(
                            &sorted,
                            alpha,
                            nn,
                            horizon as f64,
                            burnin as f64,
                            seed,
                        )?;
                        println!("{nn},async,{},{},{}", est.mean, est.half_width, est.seed);
                    }
                }
                (_, true) => bail!("--async needs an async model file"),
                (_, false) => {
                    let (m, _) = load_sync(&model.model)?;
                    let (inst, order) = sorted_instance(&m, alpha, break_ties)?;
                    let start_fracs: Option<Vec<f64>> = match &start {
                        Some(path) => {
                            let raw: Vec<f64> =
                                serde_json::from_str(&fs::read_to_string(path)?)?;
                            if raw.len() != inst.model.d {
                                bail!("start vector has {} entries, model has {}", raw.len(), inst.model.d);
                            }
                            // Reorder the user's fractions into the sorted
                            // state order.
                            Some(order.iter().map(|&i| raw[i]).collect())
                        }
                        None => None,
                    };
                    for &nn in &n {
                        let est = match &start_fracs {
                            Some(fr) => {
                                let x0 = restless_core::simulate::CountConfiguration::round_fractions(fr, nn);
                                restless_core::simulate::estimate_wip_sync_from(
                                    &inst, x0, horizon, burnin, seed, mode,
                                )?
                            }
                            None => estimate_wip_sync(&inst, nn, horizon, burnin, seed, mode)?,
                        };
                        println!(
                            "{nn},{},{},{},{}",
                            est.mode, est.mean, est.half_width, est.seed
                        );
                    }
                }
            }
        }
        Command::Exact {
            model,
            alpha,
            n,
            mode,
            diff_map,
            break_ties,
        } => {
            let mode: ActivationMode = mode.parse()?;
            let (m, file_alpha) = load_sync(&model.model)?;
            let alpha = require_alpha(file_alpha, alpha)?;
            let (inst, _) = sorted_instance(&m, alpha, break_ties)?;
            let rel = relaxed_bound(&inst)?;
            let sol = solve_exact(&inst, n, mode)?;
            let wip = wip_value_exact(&inst, n, mode)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "gain_opt": sol.gain / n as f64,
                    "gain_wip": wip / n as f64,
                    "rel1": rel.rel1,
                }))?
            );
            if let Some(path) = diff_map {
                let diffs = action_difference_map(&inst, n, mode)?;
                let mut f = fs::File::create(&path)?;
                let d = inst.model.d;
                let header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
                writeln!(f, "{},distance", header.join(","))?;
                for (x, dist) in diffs {
                    let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                    writeln!(f, "{},{dist}", xs.join(","))?;
                }
            }
        }
        Command::Channel {
            p1,
            r1,
            p2,
            r2,
            beta,
            alpha,
            tstar,
            emit,
        } => {
            let inst = ChannelInstance::new(
                vec![ChannelClass::new(p1, r1)?, ChannelClass::new(p2, r2)?],
                beta,
                alpha,
                tstar,
            )?;
            let fp = channel_fixed_point(&inst)?;
            let out = json!({
                "marginal_state": {
                    "class": fp.marginal.class + 1,
                    "observed": fp.marginal.s,
                    "age": fp.marginal.t,
                },
                "fraction_activated": fp.fraction,
                "singular": fp.singular,
                "boundary_gap": fp.boundary_gap,
                "rel1": fp.rel1,
                "class_cuts": fp.cuts,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            if let Some(path) = emit {
                let cm = build_channel_model(&inst)?;
                let file = ModelFile::from_sync(&cm.model, Some(alpha));
                fs::write(&path, serde_json::to_string_pretty(&file)?)?;
                eprintln!("wrote product model ({} states) to {path:?}", cm.model.d);
            }
        }
        Command::Scan { d, n, seed } => {
            let report = scan(d, n, seed);
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Fit { input } => {
            let text = fs::read_to_string(&input)?;
            let mut pts = Vec::new();
            for (ln, line) in text.lines().enumerate() {
                if ln == 0 || line.trim().is_empty() {
                    continue;
                }
                let mut cols = line.split(',');
                let n: f64 = cols
                    .next()
                    .ok_or_else(|| anyhow!("line {ln}: missing N"))?
                    .trim()
                    .parse()?;
                let s: f64 = cols
                    .next()
                    .ok_or_else(|| anyhow!("line {ln}: missing subgap"))?
                    .trim()
                    .parse()?;
                pts.push((n, s));
            }
            let fit = fit_rate(&pts)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
        }
        Command::Sweep {
            model,
            alphas,
            n,
            horizon,
            burnin,
            seed,
            mode,
            out,
            break_ties,
        } => {
            let mode: ActivationMode = mode.parse()?;
            let (m, _) = load_sync(&model.model)?;
            let n_list: Vec<u64> = if n.contains(':') {
                let parts: Vec<u64> = n.split(':').map(|p| p.parse()).collect::<Result<_, _>>()?;
                if parts.len() != 3 || parts[2] == 0 {
                    bail!("size range must be start:stop:step");
                }
                (parts[0]..=parts[1]).step_by(parts[2] as usize).collect()
            } else {
                n.split(',').map(|p| p.parse()).collect::<Result<_, _>>()?
            };
            let (inst, _) = sorted_instance(&m, alphas[0], break_ties)?;
            let rows = sweep_alpha(&inst.model, &alphas, &n_list, horizon, burnin, seed, mode)?;
            let mut f = fs::File::create(&out)?;
            writeln!(f, "alpha,N,mode,mean,half_width,rel1,normalized,seed")?;
            for r in &rows {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{}",
                    r.alpha, r.n, r.mode, r.mean, r.half_width, r.rel1, r.normalized, r.seed
                )?;
            }
            let worst = rows
                .iter()
                .min_by(|a, b| a.normalized.partial_cmp(&b.normalized).unwrap());
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "rows": rows.len(),
                    "out": out,
                    "worst_normalized": worst.map(|r| json!({
                        "alpha": r.alpha, "N": r.n, "normalized": r.normalized
                    })),
                }))?
            );
        }
    }
    Ok(())
}
