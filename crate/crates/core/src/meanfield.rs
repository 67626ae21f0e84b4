//! Piecewise-affine mean-field dynamics of the index policy.
//!
//! With states sorted by decreasing index, the expected one-step update of
//! the population configuration is affine on each zone `Z_s` (the region
//! where the activation threshold falls in state `s`):
//!
//! ```text
//! phi(m) = m K_s + b_s,   b_s = alpha (P1_s - P0_s),
//! K_s rows:  P1_i - P1_s + P0_s  (i < s),   P0_s  (i = s),   P0_i  (i > s).
//! ```
//!
//! The map is continuous across zone boundaries, preserves the simplex and
//! has a unique fixed point; the fixed point is singular when it lies on a
//! zone boundary (some cumulative mass equals `alpha` exactly). Local
//! stability is read off the spectrum of `K` at the fixed point's zone, and
//! global attraction is probed empirically from random starts.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{zone_of, Configuration, Instance};
use crate::whittle::compute_indices;

/// Boundary gap below which a fixed point is classified singular.
pub const SINGULARITY_TOL: f64 = 1e-7;
/// Margin used for the local stability test on eigenvalue moduli.
const STABILITY_MARGIN: f64 = 1e-9;
/// Longest cycle period the detector reports before giving up.
const MAX_PERIOD: usize = 64;

/// The mean-field map as `d` affine pieces over the zones of the simplex.
#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    /// `kappa[s]` is the matrix of the piece on zone `s` (row-vector
    /// convention: the image is `m * kappa[s] + offset[s]`).
    pub kappa: Vec<DMatrix<f64>>,
    /// `offset[s] = alpha (P1_s - P0_s)`.
    pub offset: Vec<DVector<f64>>,
    pub alpha: f64,
    pub d: usize,
}

/// Builds the piecewise map of an instance whose model must be indexable
/// and already sorted by decreasing index (the identity priority order).
pub fn build_map(instance: &Instance) -> Result<PiecewiseMap> {
    let idx = compute_indices(&instance.model, 1e-9)?;
    if !idx.indexable {
        return Err(Error::NotIndexable(
            idx.diagnosis.unwrap_or_else(|| "greedy construction failed".into()),
        ));
    }
    if idx.order.iter().enumerate().any(|(k, &s)| k != s) {
        return Err(Error::UnsortedModel);
    }
    Ok(build_map_unchecked(instance))
}

/// Builds the pieces without the indexability/sortedness gate; used by
/// callers that already hold a priority certificate (and by tests that
/// construct degenerate maps on purpose).
pub fn build_map_unchecked(instance: &Instance) -> PiecewiseMap {
    let model = &instance.model;
    let d = model.d;
    let mut kappa = Vec::with_capacity(d);
    let mut offset = Vec::with_capacity(d);
    for s in 0..d {
        let mut k = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                k[(i, j)] = if i < s {
                    model.p1[i][j] - model.p1[s][j] + model.p0[s][j]
                } else if i == s {
                    model.p0[s][j]
                } else {
                    model.p0[i][j]
                };
            }
        }
        let b = DVector::from_iterator(
            d,
            (0..d).map(|j| instance.alpha * (model.p1[s][j] - model.p0[s][j])),
        );
        kappa.push(k);
        offset.push(b);
    }
    PiecewiseMap {
        kappa,
        offset,
        alpha: instance.alpha,
        d,
    }
}

impl PiecewiseMap {
    /// Image of `m` under the piece of its zone, as a raw vector. Works on
    /// affine extensions of simplex points (entries may be slightly
    /// negative); the zone is chosen on clamped partial sums.
    pub fn apply(&self, m: &[f64]) -> Vec<f64> {
        let s = zone_of(m, self.alpha);
        self.apply_piece(s, m)
    }

    /// Image of `m` under piece `s` regardless of `m`'s zone.
    pub fn apply_piece(&self, s: usize, m: &[f64]) -> Vec<f64> {
        let k = &self.kappa[s];
        let b = &self.offset[s];
        (0..self.d)
            .map(|j| (0..self.d).map(|i| m[i] * k[(i, j)]).sum::<f64>() + b[j])
            .collect()
    }

    /// Largest induced sup-norm over the pieces; a Lipschitz constant of
    /// the map.
    pub fn lipschitz_bound(&self) -> f64 {
        self.kappa
            .iter()
            .map(|k| {
                (0..self.d)
                    .map(|i| (0..self.d).map(|j| k[(i, j)].abs()).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// One application of the map to a valid configuration.
pub fn evaluate(map: &PiecewiseMap, m: &Configuration) -> Configuration {
    Configuration::new(map.apply(m.as_slice())).expect("map must preserve the simplex")
}

/// Long-run verdict of the deterministic iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AttractorVerdict {
    /// All probed orbits entered and stayed in the target ball; the hitting
    /// time bound is empirical, not certified.
    FixedPoint { empirical_t_eps: usize },
    Cycle {
        period: usize,
        points: Vec<Vec<f64>>,
    },
    Inconclusive,
}

/// Classification of the unique fixed point of the map.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub m_star: Configuration,
    /// Zone of the fixed point (0-based).
    pub zone: usize,
    pub singular: bool,
    /// Smallest distance of a cumulative mass to `alpha`.
    pub boundary_gap: f64,
    /// Spectrum of the zone's matrix as `(re, im)` pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    /// True when every eigenvalue except the structural unit one has
    /// modulus below `1 - 1e-9`.
    pub locally_stable: bool,
    /// Filled in by `detect_attractor`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attractor: Option<AttractorVerdict>,
}

/// Solves `m (I - K_s) = b_s` plus the simplex normalization for every
/// zone, keeps the self-consistent solutions and asserts uniqueness.
pub fn fixed_point(map: &PiecewiseMap) -> Result<FixedPointReport> {
    let d = map.d;
    let mut accepted: Vec<(usize, Vec<f64>)> = Vec::new();
    for s in 0..d {
        // Transposed system A m = rhs with one balance row replaced by the
        // normalization; I - K has rank d-1 because K has a unit eigenvalue.
        let mut a = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d - 1 {
                a[(j, i)] = (if i == j { 1.0 } else { 0.0 }) - map.kappa[s][(i, j)];
            }
            a[(d - 1, i)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(d);
        for j in 0..d - 1 {
            rhs[j] = map.offset[s][j];
        }
        rhs[d - 1] = 1.0;
        let Some(sol) = a.lu().solve(&rhs) else {
            continue;
        };
        let m: Vec<f64> = sol.iter().copied().collect();
        if m.iter().any(|v| !v.is_finite() || *v < -1e-9) {
            continue;
        }
        // Self-consistency: the solution must lie in the zone it was solved
        // for, with a small slack so boundary fixed points are not lost to
        // rounding.
        let mut cum = 0.0;
        let mut pre = 0.0;
        for (i, &v) in m.iter().enumerate() {
            if i < s {
                pre += v.max(0.0);
            }
            if i <= s {
                cum += v.max(0.0);
            }
        }
        if pre <= map.alpha + 1e-9 && map.alpha < cum + 1e-9 {
            accepted.push((s, m));
        }
    }
    // Boundary fixed points satisfy two adjacent zone systems; collapse
    // solutions that coincide.
    let mut distinct: Vec<(usize, Vec<f64>)> = Vec::new();
    for (s, m) in accepted {
        if !distinct
            .iter()
            .any(|(_, other)| sup_dist(&m, other) < 1e-8)
        {
            distinct.push((s, m));
        }
    }
    if distinct.len() != 1 {
        return Err(Error::FixedPointNotUnique(distinct.len()));
    }
    let (_, m) = distinct.pop().unwrap();
    let m_star = Configuration::new(m)?;
    let zone = zone_of(m_star.as_slice(), map.alpha);

    let mut cum = 0.0;
    let mut boundary_gap = f64::INFINITY;
    for i in 0..d - 1 {
        cum += m_star[i];
        boundary_gap = boundary_gap.min((cum - map.alpha).abs());
    }
    let singular = boundary_gap < SINGULARITY_TOL;

    let eig = map.kappa[zone].clone().complex_eigenvalues();
    let eigenvalues: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();
    let locally_stable = stability_from_spectrum(&eigenvalues);

    Ok(FixedPointReport {
        m_star,
        zone,
        singular,
        boundary_gap,
        eigenvalues,
        locally_stable,
        attractor: None,
    })
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// True when, after removing the eigenvalue closest to 1, all remaining
/// moduli are below `1 - 1e-9`.
pub fn stability_from_spectrum(eigenvalues: &[(f64, f64)]) -> bool {
    let unit = eigenvalues
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = Complex::new(a.0 - 1.0, a.1).norm();
            let db = Complex::new(b.0 - 1.0, b.1).norm();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    eigenvalues.iter().enumerate().all(|(i, &(re, im))| {
        i == unit || Complex::new(re, im).norm() < 1.0 - STABILITY_MARGIN
    })
}

/// Empirical attractor test from random simplex starts.
///
/// Every orbit is iterated up to `t_max` steps; if all of them enter the
/// `eps`-ball of `m_star` and stay there for 50 consecutive steps the
/// verdict is `FixedPoint` with the worst observed hitting time. Otherwise
/// the orbit tails are scanned for a period up to 64, and a verified cycle
/// is reported; anything else is `Inconclusive`.
pub fn detect_attractor(
    map: &PiecewiseMap,
    m_star: &Configuration,
    n_starts: usize,
    t_max: usize,
    eps: f64,
    seed: u64,
) -> AttractorVerdict {
    let outcomes: Vec<OrbitOutcome> = (0..n_starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E3779B97F4A7C15));
            let start = random_simplex_point(map.d, &mut rng);
            probe_orbit(map, m_star, &start, t_max, eps)
        })
        .collect();

    let mut worst_hit = 0usize;
    for (k, o) in outcomes.iter().enumerate() {
        match o {
            OrbitOutcome::Settled { hit } => worst_hit = worst_hit.max(*hit),
            OrbitOutcome::Cycle { period, points } => {
                // Deterministic: the first start (by index) that found a
                // cycle defines the report.
                let _ = k;
                return AttractorVerdict::Cycle {
                    period: *period,
                    points: points.clone(),
                };
            }
            OrbitOutcome::Lost => return AttractorVerdict::Inconclusive,
        }
    }
    AttractorVerdict::FixedPoint {
        empirical_t_eps: worst_hit,
    }
}

enum OrbitOutcome {
    Settled { hit: usize },
    Cycle { period: usize, points: Vec<Vec<f64>> },
    Lost,
}

fn probe_orbit(
    map: &PiecewiseMap,
    m_star: &Configuration,
    start: &[f64],
    t_max: usize,
    eps: f64,
) -> OrbitOutcome {
    let target = m_star.as_slice();
    let mut m = start.to_vec();
    let mut inside_since: Option<usize> = None;
    let mut tail: Vec<Vec<f64>> = Vec::new();
    let tail_keep = 3 * MAX_PERIOD;
    for t in 0..t_max {
        m = map.apply(&m);
        if sup_dist(&m, target) < eps {
            let hit = *inside_since.get_or_insert(t);
            if t - hit >= 50 {
                return OrbitOutcome::Settled { hit };
            }
        } else {
            inside_since = None;
        }
        if t + tail_keep >= t_max {
            tail.push(m.clone());
        }
    }
    if let Some(hit) = inside_since {
        // Still inside at the horizon; accept if it stayed a while.
        if t_max - hit >= 50 {
            return OrbitOutcome::Settled { hit };
        }
    }
    // Cycle scan on the recorded tail.
    let n = tail.len();
    if n > 2 * MAX_PERIOD {
        let last = &tail[n - 1];
        for p in 1..=MAX_PERIOD {
            if sup_dist(last, &tail[n - 1 - p]) < eps {
                // Verify periodicity across two more periods.
                let ok = (0..p).all(|k| {
                    sup_dist(&tail[n - 1 - k], &tail[n - 1 - k - p]) < 10.0 * eps
                        && sup_dist(&tail[n - 1 - k], &tail[n - 1 - k - 2 * p]) < 10.0 * eps
                });
                if ok {
                    if p == 1 {
                        // A period-1 "cycle" away from m* contradicts fixed
                        // point uniqueness; treat as lost.
                        return OrbitOutcome::Lost;
                    }
                    let points: Vec<Vec<f64>> =
                        (0..p).map(|k| tail[n - p + k].clone()).collect();
                    return OrbitOutcome::Cycle { period: p, points };
                }
            }
        }
    }
    OrbitOutcome::Lost
}

/// Uniform sample on the simplex by exponential spacings.
pub fn random_simplex_point<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d)
        .map(|_| -(rng.gen::<f64>().max(1e-300)).ln())
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Discrete orbit of the map (for traces and tests).
pub fn iterate(map: &PiecewiseMap, m0: &Configuration, steps: usize) -> Vec<Configuration> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(m0.clone());
    let mut m = m0.as_slice().to_vec();
    for _ in 0..steps {
        m = map.apply(&m);
        out.push(Configuration::new(m.clone()).expect("simplex preserved"));
    }
    out
}

/// A continuous or discrete trajectory of configurations.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub points: Vec<Configuration>,
    pub times: Vec<f64>,
}

/// Fixed-step fourth-order integration of the asynchronous drift
/// `dm/dt = tau (phi(m) - m)`.
///
/// Steps whose raw image leaves the simplex by more than `1e-6` are retried
/// with a halved step, up to 20 halvings; accepted points are clamped and
/// renormalized.
pub fn ode_trajectory(
    map: &PiecewiseMap,
    tau: f64,
    m0: &Configuration,
    t_end: f64,
    h0: f64,
) -> Result<Trajectory> {
    if h0 <= 0.0 {
        return Err(Error::BadParameter("step size must be positive".into()));
    }
    let drift = |m: &[f64]| -> Vec<f64> {
        let image = map.apply(m);
        image
            .iter()
            .zip(m)
            .map(|(phi, x)| tau * (phi - x))
            .collect()
    };
    let mut points = vec![m0.clone()];
    let mut times = vec![0.0];
    let mut m = m0.as_slice().to_vec();
    let mut t = 0.0;
    while t < t_end - 1e-12 {
        let mut h = h0.min(t_end - t);
        let mut halvings = 0;
        loop {
            let k1 = drift(&m);
            let y2: Vec<f64> = m.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
            let k2 = drift(&y2);
            let y3: Vec<f64> = m.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
            let k3 = drift(&y3);
            let y4: Vec<f64> = m.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
            let k4 = drift(&y4);
            let next: Vec<f64> = (0..map.d)
                .map(|i| m[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect();
            let worst = next.iter().cloned().fold(0.0_f64, |acc, v| acc.min(v));
            if worst < -1e-6 {
                halvings += 1;
                if halvings > 20 {
                    return Err(Error::NoConvergence(20));
                }
                h *= 0.5;
                continue;
            }
            let mut clamped: Vec<f64> = next.iter().map(|v| v.max(0.0)).collect();
            let s: f64 = clamped.iter().sum();
            clamped.iter_mut().for_each(|v| *v /= s);
            m = clamped;
            t += h;
            break;
        }
        points.push(Configuration::new(m.clone())?);
        times.push(t);
    }
    Ok(Trajectory { points, times })
}

/// Instantaneous per-arm reward of the index policy in configuration `m`:
/// active rewards below the threshold, passive above, and the split at the
/// marginal state.
pub fn reward_rate(instance: &Instance, m: &[f64]) -> f64 {
    let model = &instance.model;
    let s = zone_of(m, instance.alpha);
    let before: f64 = m[..s].iter().sum();
    let through = before + m[s];
    let mut rho = (instance.alpha - before) * model.r1[s] + (through - instance.alpha) * model.r0[s];
    for i in 0..s {
        rho += m[i] * model.r1[i];
    }
    for i in s + 1..model.d {
        rho += m[i] * model.r0[i];
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::validate;

    fn three_state(alpha: f64) -> Instance {
        Instance::new(fixtures::three_state_attracting(), alpha).unwrap()
    }

    #[test]
    fn symmetric_model_collapses_to_single_affine_piece() {
        let inst = Instance::new(fixtures::two_state_symmetric(), 0.5).unwrap();
        let map = build_map(&inst).unwrap();
        for s in 0..2 {
            assert!(map.offset[s].iter().all(|v| v.abs() < 1e-15));
            for i in 0..2 {
                for j in 0..2 {
                    assert!((map.kappa[s][(i, j)] - 0.5).abs() < 1e-15);
                }
            }
        }
        let img = evaluate(&map, &Configuration::new(vec![0.9, 0.1]).unwrap());
        assert!((img[0] - 0.5).abs() < 1e-12 && (img[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pieces_match_the_four_term_expression() {
        let inst = three_state(0.37);
        let map = build_map(&inst).unwrap();
        let model = &inst.model;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        for _ in 0..200 {
            let m = random_simplex_point(3, &mut rng);
            let s = zone_of(&m, inst.alpha);
            let before: f64 = m[..s].iter().sum();
            let through = before + m[s];
            let direct: Vec<f64> = (0..3)
                .map(|j| {
                    let mut v = (inst.alpha - before) * model.p1[s][j]
                        + (through - inst.alpha) * model.p0[s][j];
                    for i in 0..s {
                        v += m[i] * model.p1[i][j];
                    }
                    for i in s + 1..3 {
                        v += m[i] * model.p0[i][j];
                    }
                    v
                })
                .collect();
            let img = map.apply(&m);
            for j in 0..3 {
                assert!((img[j] - direct[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rows_sum_one_offsets_sum_zero_boundaries_agree() {
        let inst = three_state(0.4);
        let map = build_map(&inst).unwrap();
        for s in 0..3 {
            for i in 0..3 {
                let row: f64 = (0..3).map(|j| map.kappa[s][(i, j)]).sum();
                assert!((row - 1.0).abs() < 1e-10);
            }
            let b: f64 = map.offset[s].iter().sum();
            assert!(b.abs() < 1e-10);
        }
        // Point on the Z1/Z2 boundary: both pieces give the same image.
        let m = [0.4, 0.2, 0.4];
        let a = map.apply_piece(0, &m);
        let b = map.apply_piece(1, &m);
        for j in 0..3 {
            assert!((a[j] - b[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn zone_boundary_continuity_on_random_points() {
        let inst = three_state(0.4);
        let map = build_map(&inst).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
        let mut tested = 0;
        while tested < 1000 {
            // Random point on the boundary between zones s and s+1:
            // cumulative mass through s equals alpha.
            let s = tested % 2;
            let mut m = random_simplex_point(3, &mut rng);
            let head: f64 = m[..=s].iter().sum();
            if head <= 0.0 {
                continue;
            }
            let scale = inst.alpha / head;
            let tail_scale = (1.0 - inst.alpha) / (1.0 - head);
            if !(0.0..=5.0).contains(&scale) || tail_scale < 0.0 {
                continue;
            }
            for (i, v) in m.iter_mut().enumerate() {
                *v *= if i <= s { scale } else { tail_scale };
            }
            let a = map.apply_piece(s, &m);
            let b = map.apply_piece(s + 1, &m);
            for j in 0..3 {
                assert!((a[j] - b[j]).abs() < 1e-9);
            }
            tested += 1;
        }
    }

    #[test]
    fn simplex_preserved_on_random_points() {
        let inst = three_state(0.4);
        let map = build_map(&inst).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(13);
        for _ in 0..10_000 {
            let m = random_simplex_point(3, &mut rng);
            let img = map.apply(&m);
            let s: f64 = img.iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
            assert!(img.iter().all(|&v| v >= -1e-12));
        }
    }

    #[test]
    fn k2_spectrum_matches_reference_digits() {
        let inst = three_state(0.5);
        let map = build_map(&inst).unwrap();
        let mut eig: Vec<f64> = map.kappa[1]
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|c| c.re)
            .collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eig[2] - 1.0).abs() < 1e-9);
        assert!((eig[0] - -0.4).abs() < 0.05 && (eig[0] + 0.40726686).abs() < 1e-7);
        assert!((eig[1] - 0.08).abs() < 0.005 && (eig[1] - 0.07707837).abs() < 1e-7);
    }

    #[test]
    fn fixed_point_classification_by_alpha() {
        for (alpha, singular) in [(0.2, false), (0.3, false), (0.4, true), (0.5, false)] {
            let map = build_map(&three_state(alpha)).unwrap();
            let fp = fixed_point(&map).unwrap();
            assert_eq!(fp.singular, singular, "alpha = {alpha}");
            let img = map.apply(fp.m_star.as_slice());
            assert!(sup_dist(&img, fp.m_star.as_slice()) < 1e-9);
            if alpha == 0.5 {
                assert!(fp.locally_stable);
            }
        }
    }

    #[test]
    fn symmetric_fixed_point_is_singular() {
        let inst = Instance::new(fixtures::two_state_symmetric(), 0.5).unwrap();
        let fp = fixed_point(&build_map(&inst).unwrap()).unwrap();
        assert!((fp.m_star[0] - 0.5).abs() < 1e-12);
        assert!(fp.singular);
    }

    #[test]
    fn attractor_verdicts() {
        for alpha in [0.2, 0.3, 0.5] {
            let map = build_map(&three_state(alpha)).unwrap();
            let fp = fixed_point(&map).unwrap();
            let v = detect_attractor(&map, &fp.m_star, 200, 10_000, 1e-6, 99);
            assert!(
                matches!(v, AttractorVerdict::FixedPoint { .. }),
                "alpha = {alpha}: {v:?}"
            );
        }
        let inst = Instance::new(fixtures::three_state_cycling_a(), 0.4).unwrap();
        let map = build_map(&inst).unwrap();
        let fp = fixed_point(&map).unwrap();
        let v = detect_attractor(&map, &fp.m_star, 200, 10_000, 1e-6, 99);
        match v {
            AttractorVerdict::Cycle { period, ref points } => {
                assert_eq!(period, 2);
                assert_eq!(points.len(), 2);
            }
            other => panic!("expected period-2 cycle, got {other:?}"),
        }
    }

    #[test]
    fn identity_map_is_inconclusive() {
        // Every point is fixed; the validation pipeline already warns that
        // the model is multichain, and the index computation refuses it, so
        // the map is constructed without the gate.
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let model = crate::model::BanditModel {
            d: 2,
            p0: eye.clone(),
            p1: eye,
            r0: vec![0.0; 2],
            r1: vec![1.0, 0.0],
        };
        assert_eq!(validate(&model).warnings.len(), 1);
        let inst = Instance::new(model, 0.5).unwrap();
        assert!(build_map(&inst).is_err());
        let map = build_map_unchecked(&inst);
        let m_star = Configuration::new(vec![0.5, 0.5]).unwrap();
        let v = detect_attractor(&map, &m_star, 16, 2000, 1e-6, 3);
        assert_eq!(v, AttractorVerdict::Inconclusive);
    }

    #[test]
    fn ode_stays_at_fixed_point_and_conserves_mass() {
        let map = build_map(&three_state(0.5)).unwrap();
        let fp = fixed_point(&map).unwrap();
        let traj = ode_trajectory(&map, 1.0, &fp.m_star, 5.0, 0.05).unwrap();
        for p in &traj.points {
            assert!(p.sup_distance(&fp.m_star) < 1e-9);
        }
        // Drift components sum to zero along any trajectory.
        let m0 = Configuration::uniform(3);
        let traj = ode_trajectory(&map, 1.0, &m0, 3.0, 0.05).unwrap();
        for p in &traj.points {
            let img = map.apply(p.as_slice());
            let drift_sum: f64 = img
                .iter()
                .zip(p.as_slice())
                .map(|(phi, x)| phi - x)
                .sum();
            assert!(drift_sum.abs() < 1e-10);
        }
    }

    #[test]
    fn cycling_model_ode_converges_to_fixed_point() {
        // The discrete iteration cycles, the continuous-time counterpart
        // does not: tau (lambda - 1) has negative real part for the
        // eigenvalue below -1.
        let inst = Instance::new(fixtures::three_state_cycling_a(), 0.4).unwrap();
        let map = build_map(&inst).unwrap();
        let fp = fixed_point(&map).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(21);
        for _ in 0..5 {
            let m0 = Configuration::new(random_simplex_point(3, &mut rng)).unwrap();
            let traj = ode_trajectory(&map, 1.0, &m0, 200.0, 0.02).unwrap();
            let last = traj.points.last().unwrap();
            assert!(
                last.sup_distance(&fp.m_star) < 1e-6,
                "ended at {:?}",
                last.as_slice()
            );
        }
    }

    #[test]
    fn reward_rate_examples() {
        let inst = Instance::new(fixtures::two_state_symmetric(), 0.5).unwrap();
        assert!((reward_rate(&inst, &[0.6, 0.4]) - 0.5).abs() < 1e-12);
        let fp = fixed_point(&build_map(&inst).unwrap()).unwrap();
        assert!((reward_rate(&inst, fp.m_star.as_slice()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_unique_on_random_indexable_instances() {
        use crate::experiments::random_instance;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
        let mut count = 0;
        while count < 200 {
            let d = if count % 2 == 0 { 3 } else { 4 };
            let model = random_instance(d, &mut rng);
            let idx = compute_indices(&model, 1e-9).unwrap();
            if !idx.indexable || !idx.strict {
                continue;
            }
            let sorted = model.permuted(&idx.order);
            let alpha = 0.1 + 0.8 * ((count as f64 * 0.37) % 1.0);
            let inst = Instance::new(sorted, alpha).unwrap();
            let map = build_map(&inst).unwrap();
            let fp = fixed_point(&map).unwrap();
            let img = map.apply(fp.m_star.as_slice());
            assert!(sup_dist(&img, fp.m_star.as_slice()) < 1e-9);
            count += 1;
        }
    }
}
