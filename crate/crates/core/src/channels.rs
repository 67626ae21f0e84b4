//! Two-class Gilbert-Elliott channel scheduling as a belief-state bandit.
//!
//! A channel is a two-state Markov chain (good/bad) observed only when
//! activated. The decision-relevant state is the belief `b_{s,t}`: the
//! probability of being good given the last observation was `s`, `t` steps
//! ago. Beliefs admit closed forms, the Whittle indices admit closed forms,
//! and the arm built over the truncated belief space has deterministic
//! passive dynamics (the belief simply ages) and an active transition that
//! resolves the observation.
//!
//! Because a channel never changes class, the product arm is multichain by
//! construction; the mean-field fixed point is computed with the class
//! masses pinned, by sweeping states in decreasing index order and
//! accumulating each class's stationary activated mass until the budget is
//! met. Within a class the activated mass of the policy "observe again at
//! belief age `t_m` (with probability `chi`)" has a closed form: writing
//! `B = E[belief at reactivation] / (1 - p)` and `w` for the class mass,
//! the observed-good state holds `q = B u`, each aged state holds `u`, and
//! `u (B + t_m + 1 - chi) = w`, giving activated mass `(B + 1) u`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::BanditModel;

/// One channel class: `p` = good-to-good, `r` = bad-to-good probability.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChannelClass {
    pub p: f64,
    pub r: f64,
}

impl ChannelClass {
    pub fn new(p: f64, r: f64) -> Result<Self> {
        if !(0.0 < r && r < p && p < 1.0) {
            return Err(Error::BadParameter(format!(
                "need 0 < r < p < 1 (positively correlated), got p={p}, r={r}"
            )));
        }
        Ok(Self { p, r })
    }
}

/// Belief-state label: class, last observation, age of the observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChannelState {
    pub class: usize,
    /// Last observed channel state (0 = bad, 1 = good).
    pub s: u8,
    /// Steps since the observation (>= 1).
    pub t: usize,
}

/// Two-class instance with truncation depth `t_star`.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelInstance {
    pub classes: Vec<ChannelClass>,
    /// Fraction of channels in the first class.
    pub beta: f64,
    pub alpha: f64,
    pub t_star: usize,
}

impl ChannelInstance {
    pub fn new(classes: Vec<ChannelClass>, beta: f64, alpha: f64, t_star: usize) -> Result<Self> {
        if classes.len() != 2 {
            return Err(Error::BadParameter(
                "the channel model is built for exactly two classes".into(),
            ));
        }
        if !(0.0 < beta && beta < 1.0) {
            return Err(Error::BadParameter(format!("beta = {beta} outside (0,1)")));
        }
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::BadParameter(format!("alpha = {alpha} outside (0,1)")));
        }
        if t_star < 1 {
            return Err(Error::BadParameter("t_star must be >= 1".into()));
        }
        Ok(Self {
            classes,
            beta,
            alpha,
            t_star,
        })
    }

    pub fn class_mass(&self, k: usize) -> f64 {
        if k == 0 {
            self.beta
        } else {
            1.0 - self.beta
        }
    }
}

/// Probability that a class-`c` channel is good, `t >= 1` steps after
/// observing `s`.
pub fn belief(c: &ChannelClass, s: u8, t: usize) -> f64 {
    let (p, r) = (c.p, c.r);
    let decay = (p - r).powi(t as i32);
    if s == 0 {
        (r - decay * r) / (1.0 + r - p)
    } else {
        (r + (1.0 - p) * decay) / (1.0 + r - p)
    }
}

/// Closed-form Whittle index of the belief state `b_{s,t}`.
///
/// The observed-good branch is constant in `t`; the observed-bad branch is
/// increasing in `t` and tends to the good branch's value.
pub fn channel_index(c: &ChannelClass, s: u8, t: usize) -> f64 {
    let (p, r) = (c.p, c.r);
    if s == 1 {
        return r / ((1.0 - p) * (1.0 + r - p) + r);
    }
    let b0 = belief(c, 0, t);
    let b1 = belief(c, 0, t + 1);
    ((b0 - b1) * (t as f64 + 1.0) + b1) / (1.0 - p + (b0 - b1) * t as f64 + b1)
}

/// Product arm over all `(class, s, t <= t_star)` belief states, sorted by
/// decreasing index (ties broken by class, observation, age).
#[derive(Debug, Clone)]
pub struct ChannelModel {
    /// Product model with states in decreasing index order.
    pub model: BanditModel,
    /// Index of each product state, decreasing.
    pub indices: Vec<f64>,
    /// Label of each product state.
    pub states: Vec<ChannelState>,
    /// Mass of each class, `(beta, 1 - beta)`.
    pub class_mass: Vec<f64>,
}

/// Builds the truncated product arm: passive transitions age the belief
/// (absorbing at `t_star`), active transitions resolve the observation
/// (`(k,1,1)` with probability equal to the belief, `(k,0,1)` otherwise),
/// active reward equals the belief, passive reward is zero.
pub fn build_channel_model(inst: &ChannelInstance) -> Result<ChannelModel> {
    let t_star = inst.t_star;
    let mut states = Vec::new();
    for (k, _) in inst.classes.iter().enumerate() {
        for s in [1u8, 0u8] {
            for t in 1..=t_star {
                states.push(ChannelState { class: k, s, t });
            }
        }
    }
    // Sort by decreasing index; the natural order above is the stable
    // tie-break (all (1, t) states of one class share an index).
    let key = |st: &ChannelState| channel_index(&inst.classes[st.class], st.s, st.t);
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| key(&states[b]).partial_cmp(&key(&states[a])).unwrap());
    let states: Vec<ChannelState> = order.iter().map(|&i| states[i]).collect();
    let indices: Vec<f64> = states.iter().map(key).collect();

    let d = states.len();
    let pos = |target: ChannelState| -> usize {
        states
            .iter()
            .position(|s| *s == target)
            .expect("state present")
    };
    let mut p0 = vec![vec![0.0; d]; d];
    let mut p1 = vec![vec![0.0; d]; d];
    let mut r1 = vec![0.0; d];
    for (i, st) in states.iter().enumerate() {
        let b = belief(&inst.classes[st.class], st.s, st.t);
        r1[i] = b;
        let aged = ChannelState {
            class: st.class,
            s: st.s,
            t: (st.t + 1).min(t_star),
        };
        p0[i][pos(aged)] = 1.0;
        let good = ChannelState {
            class: st.class,
            s: 1,
            t: 1,
        };
        let bad = ChannelState {
            class: st.class,
            s: 0,
            t: 1,
        };
        p1[i][pos(good)] = b;
        p1[i][pos(bad)] = 1.0 - b;
    }
    Ok(ChannelModel {
        model: BanditModel {
            d,
            p0,
            p1,
            r0: vec![0.0; d],
            r1,
        },
        indices,
        states,
        class_mass: vec![inst.beta, 1.0 - inst.beta],
    })
}

/// Per-class reactivation policy at the fixed point: observe again at
/// belief age `t_m`, with probability `chi` there (and surely one step
/// later).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassCut {
    /// Age of the fractionally activated bad-belief state; `None` when the
    /// class is never activated.
    pub t_m: Option<usize>,
    pub chi: f64,
    /// Stationary activated mass contributed by the class.
    pub activated: f64,
}

/// Mean-field fixed point of the channel system with pinned class masses.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelFixedPoint {
    /// Marginally activated product state.
    pub marginal: ChannelState,
    /// Fraction of that state's arms activated each step.
    pub fraction: f64,
    pub cuts: Vec<ClassCut>,
    /// Stationary mass per product state (same order as the model).
    pub masses: Vec<f64>,
    /// Activated fraction per product state (1 above the marginal, 0
    /// below).
    pub activation: Vec<f64>,
    /// Distance of the nearest cumulative mass to `alpha`.
    pub boundary_gap: f64,
    pub singular: bool,
    /// Per-arm reward at the fixed point (the relaxed bound for this
    /// instance).
    pub rel1: f64,
}

/// Stationary activated mass of a class under the cut `(t_m, chi)`.
///
/// `chi = 1` means the age-`t_m` state is fully observed; `t_m = t_star`
/// hits the truncation boundary where the un-observed remainder pools in
/// the absorbing aged state.
fn class_activated(c: &ChannelClass, w: f64, t_star: usize, t_m: usize, chi: f64) -> f64 {
    let one_minus_p = 1.0 - c.p;
    if t_m == t_star {
        if chi <= 0.0 {
            return 0.0;
        }
        let b_star = belief(c, 0, t_star) / one_minus_p;
        let u = w / (b_star + t_m as f64 - 1.0 + 1.0 / chi);
        return (b_star + 1.0) * u;
    }
    let b_mix =
        (chi * belief(c, 0, t_m) + (1.0 - chi) * belief(c, 0, t_m + 1)) / one_minus_p;
    let u = w / (b_mix + t_m as f64 + 1.0 - chi);
    (b_mix + 1.0) * u
}

/// Solves `class_activated(..., t_m, chi) = target` for `chi`.
fn solve_chi(c: &ChannelClass, w: f64, t_star: usize, t_m: usize, target: f64) -> f64 {
    let one_minus_p = 1.0 - c.p;
    if t_m == t_star {
        let b_star = belief(c, 0, t_star) / one_minus_p;
        let inv = (b_star + 1.0) * w / target - b_star - t_m as f64 + 1.0;
        return (1.0 / inv).clamp(0.0, 1.0);
    }
    let b0 = belief(c, 0, t_m + 1) / one_minus_p;
    let b1 = belief(c, 0, t_m) / one_minus_p;
    let db = b1 - b0;
    let num = target * (t_m as f64 + 1.0) - b0 * (w - target) - w;
    let den = db * (w - target) + target;
    (num / den).clamp(0.0, 1.0)
}

/// Fixed point of the index policy's mean-field dynamics on the channel
/// system, by the decreasing-index sweep.
pub fn channel_fixed_point(inst: &ChannelInstance) -> Result<ChannelFixedPoint> {
    let cm = build_channel_model(inst)?;
    let t_star = inst.t_star;
    // Candidate marginal states: bad-belief states in decreasing index
    // order, i.e. decreasing age per class, merged across classes.
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new(); // (index, class, t)
    for (k, c) in inst.classes.iter().enumerate() {
        for t in 1..=t_star {
            candidates.push((channel_index(c, 0, t), k, t));
        }
    }
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    // Walk candidates; cuts[k] = deepest activated age so far (full
    // observation there).
    let mut cuts: Vec<Option<usize>> = vec![None; 2];
    let activated_total = |cuts: &[Option<usize>], over: Option<(usize, usize, f64)>| -> f64 {
        (0..2)
            .map(|k| {
                let w = inst.class_mass(k);
                if let Some((ok, t, chi)) = over {
                    if ok == k {
                        return class_activated(&inst.classes[k], w, t_star, t, chi);
                    }
                }
                match cuts[k] {
                    Some(t) => class_activated(&inst.classes[k], w, t_star, t, 1.0),
                    None => 0.0,
                }
            })
            .sum()
    };

    let mut solution: Option<(usize, usize, f64)> = None;
    for &(_, k, t) in &candidates {
        let after = activated_total(&cuts, Some((k, t, 1.0)));
        if after >= inst.alpha {
            let others: f64 = (0..2)
                .filter(|&j| j != k)
                .map(|j| match cuts[j] {
                    Some(tj) => {
                        class_activated(&inst.classes[j], inst.class_mass(j), t_star, tj, 1.0)
                    }
                    None => 0.0,
                })
                .sum();
            let target = inst.alpha - others;
            let chi = if target <= 0.0 {
                0.0
            } else {
                solve_chi(&inst.classes[k], inst.class_mass(k), t_star, t, target)
            };
            solution = Some((k, t, chi));
            break;
        }
        cuts[k] = Some(t);
    }
    let Some((k_m, t_m, chi)) = solution else {
        return Err(Error::BadParameter(
            "activation budget exceeds the reachable activated mass".into(),
        ));
    };
    let mut final_cuts: Vec<ClassCut> = Vec::with_capacity(2);
    for k in 0..2 {
        let w = inst.class_mass(k);
        let (t, c) = if k == k_m {
            (Some(t_m), chi)
        } else {
            (cuts[k], 1.0)
        };
        let activated = match t {
            Some(tm) => class_activated(&inst.classes[k], w, t_star, tm, c),
            None => 0.0,
        };
        final_cuts.push(ClassCut {
            t_m: t,
            chi: c,
            activated,
        });
    }

    // Assemble per-state stationary masses in the sorted product order.
    let d = cm.model.d;
    let mut masses = vec![0.0; d];
    let at = |k: usize, s: u8, t: usize| -> usize {
        cm.states
            .iter()
            .position(|st| st.class == k && st.s == s && st.t == t)
            .unwrap()
    };
    for k in 0..2 {
        let w = inst.class_mass(k);
        let c = &inst.classes[k];
        let cut = final_cuts[k];
        match cut.t_m {
            None => masses[at(k, 0, t_star)] = w,
            Some(tm) => {
                let one_minus_p = 1.0 - c.p;
                if tm == t_star {
                    let b_star = belief(c, 0, t_star) / one_minus_p;
                    let u = w / (b_star + tm as f64 - 1.0 + 1.0 / cut.chi.max(1e-300));
                    masses[at(k, 1, 1)] = b_star * u;
                    for t in 1..t_star {
                        masses[at(k, 0, t)] = u;
                    }
                    masses[at(k, 0, t_star)] = u / cut.chi.max(1e-300);
                } else {
                    let b_mix = (cut.chi * belief(c, 0, tm)
                        + (1.0 - cut.chi) * belief(c, 0, tm + 1))
                        / one_minus_p;
                    let u = w / (b_mix + tm as f64 + 1.0 - cut.chi);
                    masses[at(k, 1, 1)] = b_mix * u;
                    for t in 1..=tm {
                        masses[at(k, 0, t)] = u;
                    }
                    masses[at(k, 0, tm + 1)] = (1.0 - cut.chi) * u;
                }
            }
        }
    }

    // Activation fractions along the index order and the boundary gap.
    let marg_pos = at(k_m, 0, t_m);
    let mut activation = vec![0.0; d];
    let mut cum = 0.0;
    let mut boundary_gap = f64::INFINITY;
    for i in 0..d {
        if i < marg_pos {
            activation[i] = 1.0;
        } else if i == marg_pos {
            activation[i] = chi;
        }
        cum += masses[i];
        if i + 1 < d {
            boundary_gap = boundary_gap.min((cum - inst.alpha).abs());
        }
    }
    let rel1: f64 = masses
        .iter()
        .zip(&activation)
        .zip(&cm.model.r1)
        .map(|((m, a), r)| m * a * r)
        .sum();

    Ok(ChannelFixedPoint {
        marginal: ChannelState {
            class: k_m,
            s: 0,
            t: t_m,
        },
        fraction: chi,
        cuts: final_cuts,
        masses,
        activation,
        boundary_gap,
        singular: boundary_gap < crate::meanfield::SINGULARITY_TOL,
        rel1,
    })
}
