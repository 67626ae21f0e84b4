//! Domain types for restless bandit arms and population configurations.
//!
//! A synchronous arm is a pair of row-stochastic matrices `P0` (passive) and
//! `P1` (active) with per-step reward vectors `R0`, `R1`. An asynchronous arm
//! carries rate matrices `Q0`, `Q1` and reward rates instead; it can be
//! reduced to a synchronous arm by uniformization. Population state is a
//! point of the probability simplex (fractions of arms per state).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for stochastic and rate matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Simplex sum tolerance for configurations.
pub const SIMPLEX_TOL: f64 = 1e-10;
/// Entries above this negative floor are clamped to zero.
pub const CLAMP_TOL: f64 = -1e-12;

/// One arm of a synchronous restless bandit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditModel {
    /// Number of states (>= 2).
    pub d: usize,
    /// Passive transition matrix, row-stochastic, row-major.
    pub p0: Vec<Vec<f64>>,
    /// Active transition matrix, row-stochastic, row-major.
    pub p1: Vec<Vec<f64>>,
    /// Passive per-step rewards.
    pub r0: Vec<f64>,
    /// Active per-step rewards.
    pub r1: Vec<f64>,
}

/// One arm of an asynchronous (continuous-time) restless bandit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsyncBanditModel {
    pub d: usize,
    /// Passive rate matrix: non-negative off-diagonal, rows sum to 0.
    pub q0: Vec<Vec<f64>>,
    /// Active rate matrix.
    pub q1: Vec<Vec<f64>>,
    /// Passive reward rates.
    pub r0: Vec<f64>,
    /// Active reward rates.
    pub r1: Vec<f64>,
}

/// A model together with its activation ratio `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub model: BanditModel,
    pub alpha: f64,
}

impl Instance {
    pub fn new(model: BanditModel, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::BadParameter(format!(
                "alpha must lie in (0,1), got {alpha}"
            )));
        }
        Ok(Self { model, alpha })
    }
}

/// A point of the simplex: fraction of arms in each state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    /// Builds a configuration, clamping entries in `[-1e-12, 0)` to zero.
    pub fn new(mut m: Vec<f64>) -> Result<Self> {
        for v in &mut m {
            if *v < 0.0 {
                if *v < CLAMP_TOL {
                    return Err(Error::BadParameter(format!(
                        "configuration entry {v} below clamp tolerance"
                    )));
                }
                *v = 0.0;
            }
        }
        let s: f64 = m.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::BadParameter(format!(
                "configuration sums to {s}, not 1"
            )));
        }
        Ok(Self(m))
    }

    /// Uniform configuration on `d` states.
    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Sup-norm distance to another configuration.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for Configuration {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Outcome of structural validation: hard violations plus soft warnings.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_stochastic(name: &str, p: &[Vec<f64>], d: usize, out: &mut Vec<String>) {
    if p.len() != d {
        out.push(format!("{name} has {} rows, expected {d}", p.len()));
        return;
    }
    for (i, row) in p.iter().enumerate() {
        if row.len() != d {
            out.push(format!("row {i} of {name} has {} entries", row.len()));
            continue;
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            out.push(format!("row {i} of {name} sums to {s}"));
        }
        for (j, &v) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{name}[{i}][{j}] = {v} outside [0,1]"));
            }
        }
    }
}

/// Structural validation of a synchronous model.
///
/// Hard violations: shape, row sums, entry ranges, non-finite rewards,
/// `d < 2`. A model whose mixed chain `0.5 (P0 + P1)` is reducible gets a
/// "possibly multichain" warning instead of a violation; two-class product
/// models violate irreducibility on purpose.
pub fn validate(model: &BanditModel) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if model.d < 2 {
        rep.violations.push(format!("d = {} < 2", model.d));
    }
    check_stochastic("P0", &model.p0, model.d, &mut rep.violations);
    check_stochastic("P1", &model.p1, model.d, &mut rep.violations);
    for (name, r) in [("R0", &model.r0), ("R1", &model.r1)] {
        if r.len() != model.d {
            rep.violations
                .push(format!("{name} has {} entries, expected {}", r.len(), model.d));
        }
        for (i, &v) in r.iter().enumerate() {
            if !v.is_finite() {
                rep.violations.push(format!("{name}[{i}] = {v} not finite"));
            }
        }
    }
    if rep.is_valid() && !mixed_chain_irreducible(model) {
        rep.warnings.push("possibly multichain".to_string());
    }
    rep
}

/// Reachability check on the support of `0.5 (P0 + P1)`.
fn mixed_chain_irreducible(model: &BanditModel) -> bool {
    let d = model.d;
    let adj: Vec<Vec<usize>> = (0..d)
        .map(|i| {
            (0..d)
                .filter(|&j| model.p0[i][j] + model.p1[i][j] > 0.0)
                .collect()
        })
        .collect();
    // Irreducible iff every state reaches every other.
    for start in 0..d {
        let mut seen = vec![false; d];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return false;
        }
    }
    true
}

/// Validation of an asynchronous model: off-diagonal rates non-negative and
/// rows summing to zero.
pub fn validate_async(model: &AsyncBanditModel) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if model.d < 2 {
        rep.violations.push(format!("d = {} < 2", model.d));
    }
    for (name, q) in [("Q0", &model.q0), ("Q1", &model.q1)] {
        if q.len() != model.d {
            rep.violations
                .push(format!("{name} has {} rows, expected {}", q.len(), model.d));
            continue;
        }
        for (i, row) in q.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if s.abs() > STOCHASTIC_TOL {
                rep.violations.push(format!("row {i} of {name} sums to {s}"));
            }
            for (j, &v) in row.iter().enumerate() {
                if i != j && v < 0.0 {
                    rep.violations
                        .push(format!("{name}[{i}][{j}] = {v} negative off-diagonal"));
                }
            }
        }
    }
    rep
}

/// Uniformization: converts a rate-matrix arm into a probability-matrix arm.
///
/// With `tau = max_i max_a |Q^a_ii|`, returns the synchronous arm
/// `P^a = I + Q^a / tau` with rewards scaled by `tau`, plus `tau` itself.
/// Per-step rewards of the returned arm equal `tau` times the reward rates,
/// so time-averaged values of the original arm are per-step values of the
/// returned arm divided by `tau`.
pub fn uniformize(model: &AsyncBanditModel) -> Result<(BanditModel, f64)> {
    let d = model.d;
    let tau = model
        .q0
        .iter()
        .chain(model.q1.iter())
        .enumerate()
        .map(|(i, row)| row[i % d].abs())
        .fold(0.0, f64::max);
    if tau == 0.0 {
        return Err(Error::ZeroRate);
    }
    let convert = |q: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..d)
            .map(|i| {
                let mut row: Vec<f64> = (0..d)
                    .map(|j| if i == j { 0.0 } else { (q[i][j] / tau).max(0.0) })
                    .collect();
                let off: f64 = row.iter().sum();
                row[i] = (1.0 - off).max(0.0);
                row
            })
            .collect()
    };
    let scale = |r: &[f64]| r.iter().map(|v| v * tau).collect();
    Ok((
        BanditModel {
            d,
            p0: convert(&model.q0),
            p1: convert(&model.q1),
            r0: scale(&model.r0),
            r1: scale(&model.r1),
        },
        tau,
    ))
}

/// Rank of the marginally activated state for configuration `m` (0-based).
///
/// Returns the unique `s` with `sum_{i<s} m_i <= alpha < sum_{i<=s} m_i`,
/// where the boundary case `alpha = sum_{i<s} m_i` belongs to zone `s`.
/// Partial sums are clamped to `[0, 1]` so that Monte-Carlo noise cannot
/// push the comparison off the simplex.
pub fn zone_of(m: &[f64], alpha: f64) -> usize {
    let d = m.len();
    let mut cum = 0.0;
    for s in 0..d {
        cum = (cum + m[s].max(0.0)).min(1.0);
        if alpha < cum {
            return s;
        }
    }
    d - 1
}

impl BanditModel {
    /// Relabels states by `order`: state `k` of the result is state
    /// `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> BanditModel {
        let pick = |p: &[Vec<f64>]| -> Vec<Vec<f64>> {
            order
                .iter()
                .map(|&i| order.iter().map(|&j| p[i][j]).collect())
                .collect()
        };
        BanditModel {
            d: self.d,
            p0: pick(&self.p0),
            p1: pick(&self.p1),
            r0: order.iter().map(|&i| self.r0[i]).collect(),
            r1: order.iter().map(|&i| self.r1[i]).collect(),
        }
    }

    /// Range of reward entries over both actions.
    pub fn reward_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in self.r0.iter().chain(self.r1.iter()) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        (lo, hi)
    }
}

/// On-disk model description.
///
/// `{"d": int, "P0": [[..]], "P1": [[..]], "R0": [..], "R1": [..],
///  "alpha": float?, "kind": "sync"|"async"}`; async files carry `Q0`/`Q1`
/// instead of `P0`/`P1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(rename = "P0", skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<Vec<f64>>>,
    #[serde(rename = "P1", skip_serializing_if = "Option::is_none")]
    pub p1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Q0", skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Q1", skip_serializing_if = "Option::is_none")]
    pub q1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R0")]
    pub r0: Vec<f64>,
    #[serde(rename = "R1")]
    pub r1: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn default_kind() -> String {
    "sync".to_string()
}

/// A model loaded from JSON, synchronous or asynchronous.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Sync(BanditModel),
    Async(AsyncBanditModel),
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<(LoadedModel, Option<f64>)> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::BadParameter(format!("model JSON: {e}")))?;
        file.into_model()
    }

    pub fn into_model(self) -> Result<(LoadedModel, Option<f64>)> {
        let alpha = self.alpha;
        match self.kind.as_str() {
            "sync" => {
                let p0 = self
                    .p0
                    .ok_or_else(|| Error::BadParameter("sync model missing P0".into()))?;
                let p1 = self
                    .p1
                    .ok_or_else(|| Error::BadParameter("sync model missing P1".into()))?;
                Ok((
                    LoadedModel::Sync(BanditModel {
                        d: self.d,
                        p0,
                        p1,
                        r0: self.r0,
                        r1: self.r1,
                    }),
                    alpha,
                ))
            }
            "async" => {
                let q0 = self
                    .q0
                    .ok_or_else(|| Error::BadParameter("async model missing Q0".into()))?;
                let q1 = self
                    .q1
                    .ok_or_else(|| Error::BadParameter("async model missing Q1".into()))?;
                Ok((
                    LoadedModel::Async(AsyncBanditModel {
                        d: self.d,
                        q0,
                        q1,
                        r0: self.r0,
                        r1: self.r1,
                    }),
                    alpha,
                ))
            }
            k => Err(Error::BadParameter(format!("unknown model kind {k:?}"))),
        }
    }

    pub fn from_sync(model: &BanditModel, alpha: Option<f64>) -> Self {
        ModelFile {
            d: model.d,
            kind: "sync".into(),
            p0: Some(model.p0.clone()),
            p1: Some(model.p1.clone()),
            q0: None,
            q1: None,
            r0: model.r0.clone(),
            r1: model.r1.clone(),
            alpha,
        }
    }
}
