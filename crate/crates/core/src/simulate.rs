//! Monte-Carlo estimation of the index policy's average reward at finite N.
//!
//! Arms are exchangeable, so the simulators operate on state counts rather
//! than per-arm vectors: one synchronous step activates full states in
//! priority order until the budget is spent, splits the marginal state, and
//! draws, for every (state, action) group, a multinomial transition of the
//! group via sequential conditional binomials. The asynchronous simulator is
//! event-driven with exponential holding times.
//!
//! Estimates carry a 95% confidence half-width from 20 batch means, since
//! per-step rewards are autocorrelated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AsyncBanditModel, Instance};

/// 97.5% quantile of Student's t with 19 degrees of freedom.
const T_QUANTILE_19: f64 = 2.0930240544083096;
const N_BATCHES: usize = 20;

/// Integer state counts of an N-arm system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountConfiguration {
    pub counts: Vec<u64>,
    pub n: u64,
}

impl CountConfiguration {
    pub fn new(counts: Vec<u64>) -> Self {
        let n = counts.iter().sum();
        Self { counts, n }
    }

    /// Fractions `counts / N`.
    pub fn fractions(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.n as f64)
            .collect()
    }

    /// Closest integer counts to `n * m` (largest-remainder rounding).
    pub fn round_fractions(m: &[f64], n: u64) -> Self {
        let mut counts: Vec<u64> = m.iter().map(|&v| (v * n as f64).floor() as u64).collect();
        let mut short = n - counts.iter().sum::<u64>();
        let mut rema: Vec<(f64, usize)> = m
            .iter()
            .enumerate()
            .map(|(i, &v)| (v * n as f64 - (v * n as f64).floor(), i))
            .collect();
        rema.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        for (_, i) in rema {
            if short == 0 {
                break;
            }
            counts[i] += 1;
            short -= 1;
        }
        Self::new(counts)
    }
}

/// How the activation budget is resolved when `alpha N` is not an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationMode {
    /// Requires `alpha N` integral.
    Exact,
    Floor,
    Ceil,
    /// `floor(alpha N)`, plus one more with probability `frac(alpha N)`.
    Continue,
}

impl std::str::FromStr for ActivationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "floor" => Ok(Self::Floor),
            "ceil" => Ok(Self::Ceil),
            "continue" => Ok(Self::Continue),
            other => Err(Error::BadParameter(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for ActivationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Exact => "exact",
            Self::Floor => "floor",
            Self::Ceil => "ceil",
            Self::Continue => "continue",
        };
        write!(f, "{s}")
    }
}

/// Draws this step's activation budget.
pub fn resolve_budget<R: Rng>(
    alpha: f64,
    n: u64,
    mode: ActivationMode,
    rng: &mut R,
) -> Result<u64> {
    let target = alpha * n as f64;
    let floor = target.floor();
    let frac = target - floor;
    let budget = match mode {
        ActivationMode::Exact => {
            if frac.min(1.0 - frac) > 1e-9 {
                return Err(Error::BadParameter(format!(
                    "alpha N = {target} is not an integer; pick floor/ceil/continue"
                )));
            }
            target.round() as u64
        }
        ActivationMode::Floor => floor as u64,
        ActivationMode::Ceil => target.ceil() as u64,
        ActivationMode::Continue => floor as u64 + u64::from(rng.gen::<f64>() < frac),
    };
    if budget > n {
        return Err(Error::BadParameter(format!("budget {budget} > N = {n}")));
    }
    Ok(budget)
}

/// Priority activation: fill states in index order until the budget runs
/// out. Returns per-state activation counts.
pub fn priority_split(counts: &[u64], budget: u64) -> Vec<u64> {
    let mut left = budget;
    counts
        .iter()
        .map(|&c| {
            let a = c.min(left);
            left -= a;
            a
        })
        .collect()
}

/// Multinomial draw of `n` trials over `probs` via sequential conditional
/// binomials: exact distribution, O(d) per group.
fn multinomial<R: Rng>(n: u64, probs: &[f64], rng: &mut R, out: &mut [u64]) {
    let mut left = n;
    let mut mass = 1.0;
    let d = probs.len();
    for j in 0..d {
        if left == 0 {
            out[j] += 0;
            continue;
        }
        if j == d - 1 {
            out[j] += left;
            break;
        }
        let p = (probs[j] / mass).clamp(0.0, 1.0);
        let draw = if p >= 1.0 {
            left
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(left, p).expect("valid binomial").sample(rng)
        };
        out[j] += draw;
        left -= draw;
        mass = (mass - probs[j]).max(0.0);
    }
}

/// One synchronous step under the index policy. The model must be sorted by
/// decreasing index. Returns the next counts and the total step reward.
pub fn step_sync<R: Rng>(
    instance: &Instance,
    x: &CountConfiguration,
    mode: ActivationMode,
    rng: &mut R,
) -> Result<(CountConfiguration, f64)> {
    let model = &instance.model;
    let d = model.d;
    let budget = resolve_budget(instance.alpha, x.n, mode, rng)?;
    let act = priority_split(&x.counts, budget);
    let mut next = vec![0u64; d];
    let mut reward = 0.0;
    for i in 0..d {
        let active = act[i];
        let passive = x.counts[i] - active;
        reward += active as f64 * model.r1[i] + passive as f64 * model.r0[i];
        if active > 0 {
            multinomial(active, &model.p1[i], rng, &mut next);
        }
        if passive > 0 {
            multinomial(passive, &model.p0[i], rng, &mut next);
        }
    }
    Ok((CountConfiguration::new(next), reward))
}

/// Monte-Carlo estimate with confidence half-width and seed provenance.
#[derive(Debug, Clone, Serialize)]
pub struct SimEstimate {
    /// Per-arm average reward (per step for sync, per unit time for async).
    pub mean: f64,
    /// 95% half-width from 20 batch means.
    pub half_width: f64,
    pub n_steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub mode: ActivationMode,
}

fn batch_ci(batches: &[f64]) -> (f64, f64) {
    let k = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / k;
    let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, T_QUANTILE_19 * (var / k).sqrt())
}

/// Long-run per-arm reward of the index policy by synchronous simulation,
/// starting from the uniform-rounded configuration.
pub fn estimate_wip_sync(
    instance: &Instance,
    n: u64,
    horizon: u64,
    burn_in: u64,
    seed: u64,
    mode: ActivationMode,
) -> Result<SimEstimate> {
    let d = instance.model.d;
    let x0 = CountConfiguration::round_fractions(&vec![1.0 / d as f64; d], n);
    estimate_wip_sync_from(instance, x0, horizon, burn_in, seed, mode)
}

/// Synchronous estimate from an explicit starting configuration; needed by
/// multi-class models whose class masses are conserved and must be pinned
/// by the start. Discards `burn_in` steps and averages the rest in 20
/// batches. Deterministic for a fixed seed.
pub fn estimate_wip_sync_from(
    instance: &Instance,
    x0: CountConfiguration,
    horizon: u64,
    burn_in: u64,
    seed: u64,
    mode: ActivationMode,
) -> Result<SimEstimate> {
    if horizon <= burn_in {
        return Err(Error::BadParameter(
            "horizon must exceed burn-in".to_string(),
        ));
    }
    let n = x0.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0;
    for _ in 0..burn_in {
        let (next, _) = step_sync(instance, &x, mode, &mut rng)?;
        x = next;
    }
    let steps = horizon - burn_in;
    let batch_len = (steps / N_BATCHES as u64).max(1);
    let used = batch_len * N_BATCHES as u64;
    let mut batches = Vec::with_capacity(N_BATCHES);
    let mut acc = 0.0;
    let mut in_batch = 0u64;
    for _ in 0..used {
        let (next, r) = step_sync(instance, &x, mode, &mut rng)?;
        x = next;
        acc += r;
        in_batch += 1;
        if in_batch == batch_len {
            batches.push(acc / (batch_len * n) as f64);
            acc = 0.0;
            in_batch = 0;
        }
    }
    let (mean, half_width) = batch_ci(&batches);
    Ok(SimEstimate {
        mean,
        half_width,
        n_steps: used,
        burn_in,
        seed,
        mode,
    })
}

/// Per-transition jump rates of the asynchronous N-arm system in counts
/// form: active arms jump by `Q1`, passive arms by `Q0`, with the marginal
/// state split by the exact integer budget.
pub fn async_rates(model: &AsyncBanditModel, counts: &[u64], act: &[u64]) -> Vec<(usize, usize, f64)> {
    let d = model.d;
    let mut rates = Vec::new();
    for i in 0..d {
        let a = act[i] as f64;
        let p = (counts[i] - act[i]) as f64;
        for j in 0..d {
            if i == j {
                continue;
            }
            let r = a * model.q1[i][j] + p * model.q0[i][j];
            if r > 0.0 {
                rates.push((i, j, r));
            }
        }
    }
    rates
}

/// Event-driven estimate of the asynchronous index policy's reward rate per
/// arm. `alpha n` must be an integer; activation is re-resolved after every
/// jump. Averages are time-weighted over 20 equal time batches after the
/// burn-in period.
pub fn estimate_wip_async(
    model: &AsyncBanditModel,
    alpha: f64,
    n: u64,
    t_end: f64,
    burn_in: f64,
    seed: u64,
) -> Result<SimEstimate> {
    let target = alpha * n as f64;
    if (target - target.round()).abs() > 1e-9 {
        return Err(Error::BadParameter(format!(
            "async activation needs integral alpha N, got {target}"
        )));
    }
    if t_end <= burn_in {
        return Err(Error::BadParameter("t_end must exceed burn-in".into()));
    }
    let budget = target.round() as u64;
    let d = model.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = vec![1.0 / d as f64; d];
    let mut x = CountConfiguration::round_fractions(&uniform, n);
    let batch_len = (t_end - burn_in) / N_BATCHES as f64;
    let mut batches = vec![0.0f64; N_BATCHES];
    let mut t = 0.0;
    let mut events = 0u64;
    while t < t_end {
        let act = priority_split(&x.counts, budget);
        let reward_rate: f64 = (0..d)
            .map(|i| {
                act[i] as f64 * model.r1[i] + (x.counts[i] - act[i]) as f64 * model.r0[i]
            })
            .sum();
        let rates = async_rates(model, &x.counts, &act);
        let total: f64 = rates.iter().map(|r| r.2).sum();
        if total <= 0.0 {
            return Err(Error::DegenerateRates);
        }
        let dt = -rng.gen::<f64>().max(1e-300).ln() / total;
        let t_next = (t + dt).min(t_end);
        // Accumulate the reward rate over [t, t_next) into the overlapped
        // batches.
        let mut seg_lo = t.max(burn_in);
        while seg_lo < t_next {
            let b = (((seg_lo - burn_in) / batch_len) as usize).min(N_BATCHES - 1);
            let b_hi = burn_in + (b + 1) as f64 * batch_len;
            let seg_hi = t_next.min(b_hi);
            batches[b] += reward_rate * (seg_hi - seg_lo);
            seg_lo = seg_hi;
        }
        t += dt;
        events += 1;
        if t >= t_end {
            break;
        }
        // Pick the transition proportionally to its rate.
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = rates.len() - 1;
        for (k, r) in rates.iter().enumerate() {
            if u < r.2 {
                chosen = k;
                break;
            }
            u -= r.2;
        }
        let (i, j, _) = rates[chosen];
        x.counts[i] -= 1;
        x.counts[j] += 1;
    }
    let per_arm: Vec<f64> = batches
        .iter()
        .map(|b| b / (batch_len * n as f64))
        .collect();
    let (mean, half_width) = batch_ci(&per_arm);
    Ok(SimEstimate {
        mean,
        half_width,
        n_steps: events,
        burn_in: burn_in as u64,
        seed,
        mode: ActivationMode::Exact,
    })
}

/// Empirical check of the one-step concentration bound
/// `P(||M(1) - phi(M(0))|| >= delta) <= exp(-2 N delta^2)`.
#[derive(Debug, Clone, Serialize)]
pub struct HoeffdingReport {
    pub empirical: f64,
    pub bound: f64,
    /// Monte-Carlo standard error of the empirical frequency.
    pub std_error: f64,
    pub n_trials: u64,
}

/// Runs `n_trials` one-step transitions from the integer rounding of
/// `m_star` and reports the exceedance frequency of the sup-norm deviation
/// from the map's image of that starting point.
pub fn hoeffding_diagnostic(
    instance: &Instance,
    map: &crate::meanfield::PiecewiseMap,
    m_star: &[f64],
    n: u64,
    delta: f64,
    n_trials: u64,
    seed: u64,
) -> Result<HoeffdingReport> {
    let target = instance.alpha * n as f64;
    if (target - target.round()).abs() > 1e-9 {
        return Err(Error::BadParameter(
            "alpha N must be an integer for the diagnostic".into(),
        ));
    }
    let x0 = CountConfiguration::round_fractions(m_star, n);
    let center = map.apply(&x0.fractions());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = 0u64;
    for _ in 0..n_trials {
        let (x1, _) = step_sync(instance, &x0, ActivationMode::Exact, &mut rng)?;
        let dev = x1
            .fractions()
            .iter()
            .zip(&center)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if dev >= delta {
            exceed += 1;
        }
    }
    let p = exceed as f64 / n_trials as f64;
    Ok(HoeffdingReport {
        empirical: p,
        bound: (-2.0 * n as f64 * delta * delta).exp(),
        std_error: (p * (1.0 - p) / n_trials as f64).sqrt().max(1.0 / n_trials as f64),
        n_trials,
    })
}
