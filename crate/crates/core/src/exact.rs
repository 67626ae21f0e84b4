//! Exact small-N baselines on the exchangeable configuration space.
//!
//! Arms are interchangeable, so the N-arm process is lossless on integer
//! count configurations; `C(N+d-1, d-1)` of them instead of `d^N` states.
//! Within that quotient this module computes the optimal average reward by
//! relative value iteration over all feasible activation splits, the exact
//! value of the index policy's induced chain, per-configuration action
//! distances between the two, and the relaxed upper bound `rel1` (computed
//! twice: occupation-measure LP and reward at the mean-field fixed point).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp;
use crate::meanfield::{build_map, fixed_point, reward_rate};
use crate::model::Instance;
use crate::simulate::{priority_split, ActivationMode};

/// Guard on the configuration count.
pub const CONFIG_GUARD: u64 = 200_000;
const VI_TOL: f64 = 1e-8;
const MAX_VI_SWEEPS: usize = 100_000;
/// Transition probabilities below this are dropped (rows renormalized).
const PMF_PRUNE: f64 = 1e-15;

/// Enumeration of all `d`-part compositions of `N` with both index maps.
pub struct ConfigSpace {
    pub n: u64,
    pub d: usize,
    pub configs: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
}

impl ConfigSpace {
    pub fn new(n: u64, d: usize) -> Result<Self> {
        let count = compositions_count(n, d);
        if count > CONFIG_GUARD {
            return Err(Error::GuardExceeded {
                required: count,
                bound: CONFIG_GUARD,
            });
        }
        let mut configs = Vec::with_capacity(count as usize);
        let mut cur = vec![0u16; d];
        enumerate_compositions(n as u16, d, 0, &mut cur, &mut configs);
        let index = configs
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        Ok(Self {
            n,
            d,
            configs,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn rank(&self, config: &[u16]) -> Option<usize> {
        self.index.get(config).copied()
    }
}

pub fn compositions_count(n: u64, d: usize) -> u64 {
    // C(n + d - 1, d - 1) without overflow for the sizes we accept.
    let mut num = 1u128;
    let mut den = 1u128;
    for k in 1..d as u128 {
        num *= n as u128 + k;
        den *= k;
    }
    (num / den) as u64
}

fn enumerate_compositions(
    left: u16,
    d: usize,
    pos: usize,
    cur: &mut Vec<u16>,
    out: &mut Vec<Vec<u16>>,
) {
    if pos == d - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for v in 0..=left {
        cur[pos] = v;
        enumerate_compositions(left - v, d, pos + 1, cur, out);
    }
}

/// All integer activation splits `0 <= a_i <= x_i`, `sum a_i = budget`.
fn action_splits(x: &[u16], budget: u16) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let mut cur = vec![0u16; x.len()];
    fn rec(x: &[u16], pos: usize, left: u16, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if pos == x.len() - 1 {
            if left <= x[pos] {
                cur[pos] = left;
                out.push(cur.clone());
            }
            return;
        }
        let tail: u16 = x[pos + 1..].iter().sum();
        let lo = left.saturating_sub(tail);
        let hi = x[pos].min(left);
        for v in lo..=hi {
            cur[pos] = v;
            rec(x, pos + 1, left - v, cur, out);
        }
    }
    rec(x, 0, budget, &mut cur, &mut out);
    out
}

/// Multinomial pmf over compositions of `n` with probability row `p`,
/// built from conditional binomials, pruned below `1e-15` and renormalized.
fn group_pmf(n: u16, p: &[f64]) -> Vec<(Vec<u16>, f64)> {
    fn rec(
        left: u16,
        pos: usize,
        prob: f64,
        mass_left: f64,
        p: &[f64],
        cur: &mut Vec<u16>,
        out: &mut Vec<(Vec<u16>, f64)>,
    ) {
        let d = p.len();
        if pos == d - 1 {
            cur[pos] = left;
            if prob > PMF_PRUNE {
                out.push((cur.clone(), prob));
            }
            cur[pos] = 0;
            return;
        }
        let q = (p[pos] / mass_left).clamp(0.0, 1.0);
        let rest_mass = (mass_left - p[pos]).max(0.0);
        if left == 0 || q <= 0.0 {
            cur[pos] = 0;
            rec(left, pos + 1, prob, rest_mass.max(f64::MIN_POSITIVE), p, cur, out);
            return;
        }
        if q >= 1.0 {
            cur[pos] = left;
            rec(0, pos + 1, prob, rest_mass.max(f64::MIN_POSITIVE), p, cur, out);
            cur[pos] = 0;
            return;
        }
        let pmf = binomial_pmf(left as u64, q);
        for (k, &pk) in pmf.iter().enumerate() {
            let branch = prob * pk;
            if branch > PMF_PRUNE {
                cur[pos] = k as u16;
                rec(
                    left - k as u16,
                    pos + 1,
                    branch,
                    rest_mass.max(f64::MIN_POSITIVE),
                    p,
                    cur,
                    out,
                );
            }
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0u16; p.len()];
    rec(n, 0, 1.0, 1.0, p, &mut cur, &mut out);
    let total: f64 = out.iter().map(|e| e.1).sum();
    if total > 0.0 {
        out.iter_mut().for_each(|e| e.1 /= total);
    }
    out
}

type GroupKey = (usize, u8, u16);

struct RowBuilder<'a> {
    instance: &'a Instance,
    space: &'a ConfigSpace,
    pmfs: HashMap<GroupKey, Vec<(Vec<u16>, f64)>>,
}

impl<'a> RowBuilder<'a> {
    fn new(instance: &'a Instance, space: &'a ConfigSpace) -> Self {
        Self {
            instance,
            space,
            pmfs: HashMap::new(),
        }
    }

    fn pmf(&mut self, state: usize, action: u8, count: u16) -> &Vec<(Vec<u16>, f64)> {
        let model = &self.instance.model;
        self.pmfs.entry((state, action, count)).or_insert_with(|| {
            let row = if action == 1 {
                &model.p1[state]
            } else {
                &model.p0[state]
            };
            group_pmf(count, row)
        })
    }

    /// Sparse transition row of configuration `x` under split `act`:
    /// convolution of the per-(state, action) multinomials.
    fn row(&mut self, x: &[u16], act: &[u16]) -> Vec<(u32, f64)> {
        let d = x.len();
        let mut dist: HashMap<Vec<u16>, f64> = HashMap::new();
        dist.insert(vec![0u16; d], 1.0);
        for i in 0..d {
            for (count, action) in [(act[i], 1u8), (x[i] - act[i], 0u8)] {
                if count == 0 {
                    continue;
                }
                let pmf = self.pmf(i, action, count).clone();
                let mut next: HashMap<Vec<u16>, f64> =
                    HashMap::with_capacity(dist.len() * 2);
                for (partial, pp) in &dist {
                    for (delta, dp) in &pmf {
                        let w = pp * dp;
                        if w < PMF_PRUNE {
                            continue;
                        }
                        let mut key = partial.clone();
                        for (k, dv) in key.iter_mut().zip(delta) {
                            *k += dv;
                        }
                        *next.entry(key).or_insert(0.0) += w;
                    }
                }
                dist = next;
            }
        }
        let mut row: Vec<(u32, f64)> = dist
            .into_iter()
            .map(|(cfg, p)| (self.space.rank(&cfg).expect("count conserved") as u32, p))
            .collect();
        let total: f64 = row.iter().map(|e| e.1).sum();
        row.iter_mut().for_each(|e| e.1 /= total);
        row.sort_by_key(|e| e.0);
        row
    }
}

fn split_reward(instance: &Instance, x: &[u16], act: &[u16]) -> f64 {
    let model = &instance.model;
    x.iter()
        .zip(act)
        .enumerate()
        .map(|(i, (&xi, &ai))| {
            ai as f64 * model.r1[i] + (xi - ai) as f64 * model.r0[i]
        })
        .sum()
}

fn resolve_budget_exact(alpha: f64, n: u64, mode: ActivationMode) -> Result<u16> {
    let target = alpha * n as f64;
    let frac = target - target.floor();
    match mode {
        ActivationMode::Exact => {
            if frac.min(1.0 - frac) > 1e-9 {
                return Err(Error::BadParameter(format!(
                    "alpha N = {target} is not an integer under mode=exact"
                )));
            }
            Ok(target.round() as u16)
        }
        ActivationMode::Floor => Ok(target.floor() as u16),
        ActivationMode::Ceil => Ok(target.ceil() as u16),
        ActivationMode::Continue => Err(Error::BadParameter(
            "mode=continue yields a randomized-action MDP; exact solves support floor/ceil"
                .into(),
        )),
    }
}

/// Optimal average reward and policy of the N-arm problem.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    /// Optimal per-step total reward.
    pub gain: f64,
    /// Relative values per configuration.
    pub bias: Vec<f64>,
    /// Optimal activation split per configuration.
    pub policy: Vec<Vec<u16>>,
}

/// Relative value iteration over configurations with aperiodicity damping.
pub fn solve_exact(instance: &Instance, n: u64, mode: ActivationMode) -> Result<ExactSolution> {
    let space = ConfigSpace::new(n, instance.model.d)?;
    let budget = resolve_budget_exact(instance.alpha, n, mode)?;
    let nc = space.len();

    // Feasible splits and their rewards, per configuration.
    let mut builder = RowBuilder::new(instance, &space);
    let mut actions: Vec<Vec<Vec<u16>>> = Vec::with_capacity(nc);
    let mut rewards: Vec<Vec<f64>> = Vec::with_capacity(nc);
    for x in &space.configs {
        let splits = action_splits(x, budget);
        if splits.is_empty() {
            return Err(Error::BadParameter(format!(
                "budget {budget} exceeds N = {n}"
            )));
        }
        rewards.push(splits.iter().map(|a| split_reward(instance, x, a)).collect());
        actions.push(splits);
    }

    // Cache rows when the pair count is modest, otherwise rebuild each
    // sweep in parallel.
    type SparseRow = Vec<(u32, f64)>;
    let n_pairs: usize = actions.iter().map(|a| a.len()).sum();
    let cached: Option<Vec<Vec<SparseRow>>> = if n_pairs <= 60_000 {
        Some(
            space
                .configs
                .iter()
                .enumerate()
                .map(|(xi, x)| {
                    actions[xi]
                        .iter()
                        .map(|a| builder.row(x, a))
                        .collect::<Vec<_>>()
                })
                .collect(),
        )
    } else {
        None
    };

    let mut h = vec![0.0f64; nc];
    let mut choice = vec![0usize; nc];
    for sweep in 0..MAX_VI_SWEEPS {
        let results: Vec<(f64, usize)> = match &cached {
            Some(rows) => (0..nc)
                .into_par_iter()
                .map(|xi| {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_a = 0usize;
                    for (ai, _) in actions[xi].iter().enumerate() {
                        let expect: f64 =
                            rows[xi][ai].iter().map(|&(j, p)| p * h[j as usize]).sum();
                        let v = rewards[xi][ai] + 0.5 * h[xi] + 0.5 * expect;
                        if v > best {
                            best = v;
                            best_a = ai;
                        }
                    }
                    (best, best_a)
                })
                .collect(),
            None => {
                // Row rebuild path: thread-local builders.
                space
                    .configs
                    .par_iter()
                    .enumerate()
                    .map_init(
                        || RowBuilder::new(instance, &space),
                        |b, (xi, x)| {
                            let mut best = f64::NEG_INFINITY;
                            let mut best_a = 0usize;
                            for (ai, a) in actions[xi].iter().enumerate() {
                                let row = b.row(x, a);
                                let expect: f64 =
                                    row.iter().map(|&(j, p)| p * h[j as usize]).sum();
                                let v = rewards[xi][ai] + 0.5 * h[xi] + 0.5 * expect;
                                if v > best {
                                    best = v;
                                    best_a = ai;
                                }
                            }
                            (best, best_a)
                        },
                    )
                    .collect()
            }
        };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (xi, (v, a)) in results.iter().enumerate() {
            let diff = v - h[xi];
            lo = lo.min(diff);
            hi = hi.max(diff);
            choice[xi] = *a;
        }
        if hi - lo < VI_TOL {
            let gain = 0.5 * (hi + lo);
            let shift = results[nc - 1].0;
            let bias: Vec<f64> = results.iter().map(|(v, _)| v - shift).collect();
            let policy: Vec<Vec<u16>> = choice
                .iter()
                .enumerate()
                .map(|(xi, &ai)| actions[xi][ai].clone())
                .collect();
            return Ok(ExactSolution { gain, bias, policy });
        }
        let shift = results[nc - 1].0;
        for (xi, (v, _)) in results.iter().enumerate() {
            h[xi] = v - shift;
        }
        if sweep + 1 == MAX_VI_SWEEPS {
            break;
        }
    }
    Err(Error::NoConvergence(MAX_VI_SWEEPS))
}

/// Exact average reward of the index policy's induced chain over
/// configurations (damped power iteration on the stationary equation).
pub fn wip_value_exact(instance: &Instance, n: u64, mode: ActivationMode) -> Result<f64> {
    let space = ConfigSpace::new(n, instance.model.d)?;
    let budget = resolve_budget_exact(instance.alpha, n, mode)?;
    let nc = space.len();
    let mut builder = RowBuilder::new(instance, &space);
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(nc);
    let mut rewards = Vec::with_capacity(nc);
    for x in &space.configs {
        let act64 = priority_split(
            &x.iter().map(|&v| v as u64).collect::<Vec<_>>(),
            budget as u64,
        );
        let act: Vec<u16> = act64.iter().map(|&v| v as u16).collect();
        rewards.push(split_reward(instance, x, &act));
        rows.push(builder.row(x, &act));
    }
    let mut pi = vec![1.0 / nc as f64; nc];
    let mut next = vec![0.0f64; nc];
    for _ in 0..1_000_000 {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (xi, row) in rows.iter().enumerate() {
            let w = pi[xi];
            if w == 0.0 {
                continue;
            }
            for &(j, p) in row {
                next[j as usize] += w * p;
            }
        }
        let mut delta = 0.0;
        for xi in 0..nc {
            let blended = 0.5 * pi[xi] + 0.5 * next[xi];
            delta += (blended - pi[xi]).abs();
            pi[xi] = blended;
        }
        if delta < 1e-13 {
            break;
        }
    }
    Ok(pi.iter().zip(&rewards).map(|(p, r)| p * r).sum())
}

/// Per-configuration half-L1 distance between the optimal activation split
/// and the index policy's split.
pub fn action_difference_map(
    instance: &Instance,
    n: u64,
    mode: ActivationMode,
) -> Result<Vec<(Vec<u16>, u32)>> {
    let solution = solve_exact(instance, n, mode)?;
    let space = ConfigSpace::new(n, instance.model.d)?;
    let budget = resolve_budget_exact(instance.alpha, n, mode)?;
    Ok(space
        .configs
        .iter()
        .enumerate()
        .map(|(xi, x)| {
            let wip64 = priority_split(
                &x.iter().map(|&v| v as u64).collect::<Vec<_>>(),
                budget as u64,
            );
            let dist: u32 = solution.policy[xi]
                .iter()
                .zip(&wip64)
                .map(|(&a, &w)| (a as i64 - w as i64).unsigned_abs() as u32)
                .sum::<u32>()
                / 2;
            (x.clone(), dist)
        })
        .collect())
}

/// Relaxed per-arm bound and optimizing state-action frequencies.
#[derive(Debug, Clone, Serialize)]
pub struct RelaxedBound {
    pub rel1: f64,
    /// `occupation[i] = [x_{i,passive}, x_{i,active}]`.
    pub occupation: Vec<[f64; 2]>,
}

/// Value of the time-averaged activation relaxation, computed through the
/// occupation-measure LP and cross-checked against the reward of the
/// mean-field fixed point; the two must agree within `1e-6`.
pub fn relaxed_bound(instance: &Instance) -> Result<RelaxedBound> {
    let d = instance.model.d;
    let model = &instance.model;
    // Variables x[i,a]: a-major layout [x_{0,0}..x_{d-1,0}, x_{0,1}..].
    let nv = 2 * d;
    let mut objective = vec![0.0; nv];
    objective[..d].copy_from_slice(&model.r0);
    objective[d..].copy_from_slice(&model.r1);
    let mut a_eq: Vec<Vec<f64>> = Vec::new();
    let mut b_eq: Vec<f64> = Vec::new();
    a_eq.push(vec![1.0; nv]);
    b_eq.push(1.0);
    let mut act_row = vec![0.0; nv];
    act_row[d..].iter_mut().for_each(|v| *v = 1.0);
    a_eq.push(act_row);
    b_eq.push(instance.alpha);
    for j in 0..d - 1 {
        let mut row = vec![0.0; nv];
        for i in 0..d {
            row[i] += model.p0[i][j];
            row[d + i] += model.p1[i][j];
        }
        row[j] -= 1.0;
        row[d + j] -= 1.0;
        a_eq.push(row);
        b_eq.push(0.0);
    }
    let sol = lp::solve_max(&objective, &a_eq, &b_eq)?;

    let map = build_map(instance)?;
    let fp = fixed_point(&map)?;
    let rho = reward_rate(instance, fp.m_star.as_slice());
    if (sol.value - rho).abs() > 1e-6 {
        return Err(Error::RelaxationMismatch {
            lp: sol.value,
            rho,
        });
    }
    let occupation: Vec<[f64; 2]> = (0..d).map(|i| [sol.x[i], sol.x[d + i]]).collect();
    Ok(RelaxedBound {
        rel1: sol.value,
        occupation,
    })
}

/// Probability mass function of Binomial(n, p), full support.
pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0f64; n as usize + 1];
    // Start at the mode with a normalized recurrence to avoid overflow.
    let mode = ((n as f64 + 1.0) * p).floor().min(n as f64) as usize;
    pmf[mode] = 1.0;
    for k in mode..n as usize {
        pmf[k + 1] = pmf[k] * ((n as usize - k) as f64 / (k + 1) as f64) * (p / (1.0 - p));
    }
    for k in (1..=mode).rev() {
        pmf[k - 1] = pmf[k] * (k as f64 / (n as usize - k + 1) as f64) * ((1.0 - p) / p);
    }
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|v| *v /= total);
    pmf
}

/// `E[min(X, cap)]` for `X ~ Binomial(n, p)`.
pub fn binomial_min_mean(n: u64, p: f64, cap: f64) -> f64 {
    binomial_pmf(n, p)
        .iter()
        .enumerate()
        .map(|(k, q)| q * (k as f64).min(cap))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::simulate::estimate_wip_sync;

    fn symmetric(alpha: f64) -> Instance {
        Instance::new(fixtures::two_state_symmetric(), alpha).unwrap()
    }

    #[test]
    fn config_space_counts_and_ranks() {
        let s = ConfigSpace::new(10, 3).unwrap();
        assert_eq!(s.len() as u64, compositions_count(10, 3));
        assert_eq!(s.len(), 66);
        for (i, c) in s.configs.iter().enumerate() {
            assert_eq!(s.rank(c), Some(i));
            assert_eq!(c.iter().map(|&v| v as u64).sum::<u64>(), 10);
        }
        assert!(ConfigSpace::new(5000, 4).is_err());
    }

    #[test]
    fn relaxed_bound_on_symmetric_model() {
        let r = relaxed_bound(&symmetric(0.5)).unwrap();
        assert!((r.rel1 - 0.5).abs() < 1e-9);
        let r = relaxed_bound(&symmetric(0.3)).unwrap();
        assert!((r.rel1 - 0.3).abs() < 1e-9);
        // Occupation activates only state 0 mass at alpha = 0.3.
        assert!((r.occupation[0][1] - 0.3).abs() < 1e-9);
        assert!(r.occupation[1][1].abs() < 1e-9);
    }

    #[test]
    fn occupation_matches_fixed_point_split() {
        let inst = Instance::new(fixtures::three_state_attracting(), 0.5).unwrap();
        let r = relaxed_bound(&inst).unwrap();
        let act: f64 = r.occupation.iter().map(|o| o[1]).sum();
        assert!((act - 0.5).abs() < 1e-9);
        let total: f64 = r.occupation.iter().map(|o| o[0] + o[1]).sum();
        assert!((total - 1.0).abs() < 1e-9);
        // State marginals reproduce the fixed point and its split.
        let map = build_map(&inst).unwrap();
        let fp = fixed_point(&map).unwrap();
        let s = crate::model::zone_of(fp.m_star.as_slice(), 0.5);
        let before: f64 = fp.m_star.as_slice()[..s].iter().sum();
        for i in 0..3 {
            let m_i = r.occupation[i][0] + r.occupation[i][1];
            assert!((m_i - fp.m_star[i]).abs() < 1e-7);
            let expected_active = if i < s {
                fp.m_star[i]
            } else if i == s {
                inst.alpha - before
            } else {
                0.0
            };
            assert!((r.occupation[i][1] - expected_active).abs() < 1e-7);
        }
    }

    #[test]
    fn exact_solution_on_tiny_symmetric_system() {
        let inst = symmetric(0.5);
        let sol = solve_exact(&inst, 2, ActivationMode::Exact).unwrap();
        assert!((sol.gain / 2.0 - 0.375).abs() < 1e-8);
        // The optimal policy is the index policy everywhere.
        let diffs = action_difference_map(&inst, 2, ActivationMode::Exact).unwrap();
        assert!(diffs.iter().all(|(_, d)| *d == 0));
        let wip = wip_value_exact(&inst, 2, ActivationMode::Exact).unwrap();
        assert!((wip / 2.0 - 0.375).abs() < 1e-10);
    }

    #[test]
    fn wip_value_matches_binomial_oracle_at_n_100() {
        let inst = symmetric(0.5);
        let wip = wip_value_exact(&inst, 100, ActivationMode::Exact).unwrap();
        let oracle = binomial_min_mean(100, 0.5, 50.0);
        assert!((wip - oracle).abs() < 1e-9, "{wip} vs {oracle}");
    }

    #[test]
    fn optimal_gain_bounded_by_relaxation() {
        for (model, alpha, n) in [
            (fixtures::two_state_symmetric(), 0.5, 6u64),
            (fixtures::three_state_attracting(), 0.4, 10),
            (fixtures::three_state_cycling_a(), 0.4, 10),
        ] {
            let inst = Instance::new(model, alpha).unwrap();
            let rel = relaxed_bound(&inst).unwrap().rel1;
            let sol = solve_exact(&inst, n, ActivationMode::Exact).unwrap();
            let wip = wip_value_exact(&inst, n, ActivationMode::Exact).unwrap();
            assert!(wip <= sol.gain + 1e-8);
            assert!(sol.gain / n as f64 <= rel + 1e-8);
        }
    }

    #[test]
    fn cycling_model_leaves_an_optimality_gap() {
        let inst = Instance::new(fixtures::three_state_cycling_a(), 0.4).unwrap();
        let sol = solve_exact(&inst, 10, ActivationMode::Exact).unwrap();
        let wip = wip_value_exact(&inst, 10, ActivationMode::Exact).unwrap();
        assert!(sol.gain - wip > 1e-4, "gap = {}", sol.gain - wip);
    }

    #[test]
    fn exact_wip_value_agrees_with_simulation() {
        let inst = Instance::new(fixtures::three_state_attracting(), 0.5).unwrap();
        let exact = wip_value_exact(&inst, 20, ActivationMode::Exact).unwrap() / 20.0;
        let est = estimate_wip_sync(&inst, 20, 400_000, 5_000, 41, ActivationMode::Exact).unwrap();
        assert!(
            (est.mean - exact).abs() <= est.half_width.max(5e-4),
            "sim {} vs exact {exact} (hw {})",
            est.mean,
            est.half_width
        );
    }

    #[test]
    fn binomial_pmf_is_exact() {
        let pmf = binomial_pmf(4, 0.5);
        let expect = [1.0, 4.0, 6.0, 4.0, 1.0].map(|v| v / 16.0);
        for (a, b) in pmf.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((binomial_min_mean(2, 0.5, 1.0) - 0.75).abs() < 1e-12);
    }
}
