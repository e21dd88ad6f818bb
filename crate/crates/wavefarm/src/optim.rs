//! Concurrent plant, control, and layout search: a penalized
//! differential-evolution (rand/1/bin) loop over the design vector
//! [R, D, K_pto per device, B_pto per device, (x, y) for devices 2..N],
//! with body 1 pinned at the origin.

use crate::error::{Error, Result};
use crate::farm::{farm_power, Efficiencies, FarmDesign, PtoParams, YearAggregation};
use crate::hydro::{safe_distance, WecGeometry};
use crate::surrogate::{assemble_farm, pair_geometry, SurrogateBundle};
use crate::waves::WaveClimate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Box bounds for every decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub r: (f64, f64),
    pub draft: (f64, f64),
    pub stiffness: (f64, f64),
    pub damping: (f64, f64),
    /// Farm box half-width; coordinates live in [-half_width, half_width].
    pub half_width: f64,
}

impl Bounds {
    /// Published problem bounds: R, D in [0.5, 10] m, K in +/-3e8 N/m,
    /// B in [0, 3e8] N s/m, and a farm box of half-width
    /// 0.5 sqrt(2 N 1e4) m.
    pub fn paper(n_wec: usize) -> Self {
        Self {
            r: (0.5, 10.0),
            draft: (0.5, 10.0),
            stiffness: (-3.0e8, 3.0e8),
            damping: (0.0, 3.0e8),
            half_width: 0.5 * (2.0 * n_wec as f64 * 1.0e4).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.r.0 <= self.r.1
            && self.draft.0 <= self.draft.1
            && self.stiffness.0 <= self.stiffness.1
            && self.damping.0 <= self.damping.1
            && self.damping.0 >= 0.0
            && self.r.0 > 0.0
            && self.half_width > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid bounds {self:?}")))
        }
    }
}

/// Decision-vector length for `n` devices: 2 plant + 2n control
/// + 2(n - 1) layout coordinates.
pub fn design_dim(n_wec: usize) -> usize {
    2 + 2 * n_wec + 2 * (n_wec - 1)
}

/// Decode a decision vector into a farm design.
pub fn decode_design(x: &[f64], n_wec: usize) -> Result<FarmDesign> {
    if x.len() != design_dim(n_wec) {
        return Err(Error::Domain(format!(
            "design vector length {} does not match {} devices (expected {})",
            x.len(),
            n_wec,
            design_dim(n_wec)
        )));
    }
    let geom = WecGeometry::new(x[0], x[1])?;
    let stiffness = x[2..2 + n_wec].to_vec();
    let damping = x[2 + n_wec..2 + 2 * n_wec].to_vec();
    let mut positions = vec![[0.0, 0.0]];
    for p in 1..n_wec {
        let base = 2 + 2 * n_wec + 2 * (p - 1);
        positions.push([x[base], x[base + 1]]);
    }
    FarmDesign::new(geom, PtoParams::new(stiffness, damping)?, positions)
}

/// Flatten a farm design back into the decision-vector layout.
pub fn encode_design(design: &FarmDesign) -> Vec<f64> {
    let n = design.n_wec();
    let mut x = Vec::with_capacity(design_dim(n));
    x.push(design.geom.r);
    x.push(design.geom.d);
    x.extend_from_slice(&design.pto.stiffness);
    x.extend_from_slice(&design.pto.damping);
    for p in 1..n {
        x.push(design.positions[p][0]);
        x.push(design.positions[p][1]);
    }
    x
}

/// Pairwise clearance residuals 2R + s_d - L_pq for p < q; feasible iff all
/// are <= 0.
pub fn distance_constraints(positions: &[[f64; 2]], r: f64) -> Vec<f64> {
    let min_dist = 2.0 * r + safe_distance(r);
    let n = positions.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for p in 0..n {
        for q in (p + 1)..n {
            let (dist, _) = pair_geometry(positions[p], positions[q]);
            out.push(min_dist - dist);
        }
    }
    out
}

/// Objective evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub eff: Efficiencies,
    pub year_agg: YearAggregation,
    /// Multiplies the squared constraint violations (scaled by the typical
    /// objective magnitude inside `optimize`).
    pub penalty_weight: f64,
    pub residual_tol: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            eff: Efficiencies::default(),
            year_agg: YearAggregation::default(),
            penalty_weight: 1.0e6,
            residual_tol: 1.0e-9,
        }
    }
}

/// Raw pieces of one evaluation, before penalty weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Power per volume when the pipeline ran to completion.
    pub p_v: Option<f64>,
    /// Sum of squared positive constraint residuals.
    pub violation_sq: f64,
    /// Worst constraint residual (negative when feasible).
    pub max_residual: f64,
    /// Assembly or transfer-matrix failure inside the feasible region.
    pub pipeline_failed: bool,
}

impl Evaluation {
    /// Penalized objective: -p_v plus weighted violations; pipeline
    /// failures score a full penalty unit so the search moves away.
    pub fn objective(&self, penalty: f64) -> f64 {
        let base = match self.p_v {
            Some(p_v) => -p_v,
            None => 0.0,
        };
        let fail = if self.pipeline_failed { penalty } else { 0.0 };
        base + penalty * self.violation_sq + fail
    }

    pub fn feasible(&self, tol: f64) -> bool {
        self.max_residual <= tol && self.p_v.is_some()
    }
}

/// Run the farm pipeline for one decision vector. Constraint violations and
/// pipeline failures (singular transfer matrix, out-of-range surrogate
/// queries) are folded into the evaluation instead of aborting.
pub fn evaluate(
    x: &[f64],
    n_wec: usize,
    bundle: &SurrogateBundle,
    climate: &WaveClimate,
    cfg: &EvalConfig,
) -> Result<Evaluation> {
    let design = decode_design(x, n_wec)?;
    let residuals = distance_constraints(&design.positions, design.geom.r);
    let violation_sq: f64 = residuals.iter().map(|&r| r.max(0.0).powi(2)).sum();
    let max_residual = residuals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if violation_sq > 0.0 {
        return Ok(Evaluation {
            p_v: None,
            violation_sq,
            max_residual,
            pipeline_failed: false,
        });
    }
    match assemble_farm(bundle, &design, &bundle.grid.clone()).and_then(|m| {
        farm_power(
            &m,
            &design,
            climate,
            bundle.rho,
            bundle.g,
            &cfg.eff,
            cfg.year_agg,
        )
    }) {
        Ok(power) => Ok(Evaluation {
            p_v: Some(power.p_v),
            violation_sq: 0.0,
            max_residual: if residuals.is_empty() {
                f64::NEG_INFINITY
            } else {
                max_residual
            },
            pipeline_failed: false,
        }),
        Err(Error::Singular { .. }) | Err(Error::OutOfRange(_)) | Err(Error::Infeasible(_)) => {
            Ok(Evaluation {
                p_v: None,
                violation_sq: 0.0,
                max_residual,
                pipeline_failed: true,
            })
        }
        Err(other) => Err(other),
    }
}

fn sub_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 step keeps member streams decorrelated
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample a bound-respecting design whose layout satisfies the distance
/// constraints, resampling the coordinates until they do.
pub fn random_feasible(
    n_wec: usize,
    bounds: &Bounds,
    seed: u64,
    max_tries: usize,
) -> Result<Vec<f64>> {
    bounds.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let r = rng.gen_range(bounds.r.0..=bounds.r.1);
    let d = rng.gen_range(bounds.draft.0..=bounds.draft.1);
    let mut x = vec![r, d];
    for _ in 0..n_wec {
        x.push(rng.gen_range(bounds.stiffness.0..=bounds.stiffness.1));
    }
    for _ in 0..n_wec {
        x.push(rng.gen_range(bounds.damping.0..=bounds.damping.1));
    }
    let w = bounds.half_width;
    for _ in 0..max_tries.max(1) {
        let mut positions = vec![[0.0, 0.0]];
        for _ in 1..n_wec {
            positions.push([rng.gen_range(-w..=w), rng.gen_range(-w..=w)]);
        }
        if distance_constraints(&positions, r).iter().all(|&c| c <= 0.0) {
            let mut out = x.clone();
            for p in positions.iter().skip(1) {
                out.push(p[0]);
                out.push(p[1]);
            }
            return Ok(out);
        }
    }
    Err(Error::Infeasible(format!(
        "no distance-feasible layout found in {max_tries} tries for R = {r:.2} m in a \
         +/-{w:.0} m box; reduce the radius or enlarge the box"
    )))
}

/// Evaluate `count` random feasible designs and return the best (lowest)
/// penalized objective along with its design vector.
pub fn random_search_baseline(
    n_wec: usize,
    bounds: &Bounds,
    bundle: &SurrogateBundle,
    climate: &WaveClimate,
    cfg: &EvalConfig,
    seed: u64,
    count: usize,
) -> Result<(f64, Vec<f64>)> {
    let mut best = (f64::INFINITY, Vec::new());
    for i in 0..count {
        let x = random_feasible(n_wec, bounds, sub_seed(seed, 7_000 + i as u64), 200)?;
        let eval = evaluate(&x, n_wec, bundle, climate, cfg)?;
        let obj = eval.objective(cfg.penalty_weight);
        if obj < best.0 {
            best = (obj, x);
        }
    }
    Ok(best)
}

/// Search settings: rand/1/bin differential evolution with penalties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub budget: usize,
    pub seed: u64,
    /// Population size; 15 + N when absent.
    pub pop_size: Option<usize>,
    pub diff_weight: f64,
    pub crossover: f64,
    pub eval: EvalConfig,
}

impl OptimConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            seed,
            pop_size: None,
            diff_weight: 0.7,
            crossover: 0.9,
            eval: EvalConfig::default(),
        }
    }
}

/// One point of the best-so-far trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub eval_index: usize,
    pub best_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub n_wec: usize,
    pub best_vector: Vec<f64>,
    pub best_objective: f64,
    /// Power per volume of the returned design, when its pipeline ran.
    pub p_v: Option<f64>,
    pub residuals: Vec<f64>,
    pub feasible: bool,
    pub n_evals: usize,
    pub seed: u64,
    pub trace: Vec<TracePoint>,
}

struct Member {
    x: Vec<f64>,
    eval: Evaluation,
    objective: f64,
}

/// Penalized global search. The budget counts objective evaluations exactly:
/// the initial population plus as many trial evaluations as fit. The penalty
/// scale is calibrated on the initial population's typical |p_v|.
pub fn optimize(
    n_wec: usize,
    bounds: &Bounds,
    bundle: &SurrogateBundle,
    climate: &WaveClimate,
    cfg: &OptimConfig,
) -> Result<OptimResult> {
    bounds.validate()?;
    if n_wec == 0 {
        return Err(Error::Domain("n_wec must be >= 1".into()));
    }
    let dim = design_dim(n_wec);
    let pop_size = cfg.pop_size.unwrap_or(15 + n_wec).max(4);
    if cfg.budget < pop_size {
        return Err(Error::Domain(format!(
            "budget {} is below the population size {pop_size}",
            cfg.budget
        )));
    }

    // initial population: distance-feasible seeds
    let initial: Vec<Vec<f64>> = (0..pop_size)
        .map(|i| random_feasible(n_wec, bounds, sub_seed(cfg.seed, i as u64), 200))
        .collect::<Result<_>>()?;
    let evals: Vec<Evaluation> = initial
        .par_iter()
        .map(|x| evaluate(x, n_wec, bundle, climate, &cfg.eval))
        .collect::<Result<_>>()?;

    // penalty scale from the typical feasible objective magnitude
    let mut magnitudes: Vec<f64> = evals
        .iter()
        .filter_map(|e| e.p_v)
        .map(|p| p.abs())
        .filter(|p| p.is_finite() && *p > 0.0)
        .collect();
    magnitudes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let typical = magnitudes
        .get(magnitudes.len() / 2)
        .copied()
        .unwrap_or(1.0);
    let penalty = cfg.eval.penalty_weight * typical;

    let mut pop: Vec<Member> = initial
        .into_iter()
        .zip(evals)
        .map(|(x, eval)| {
            let objective = eval.objective(penalty);
            Member { x, eval, objective }
        })
        .collect();

    let mut n_evals = pop_size;
    let mut trace = Vec::with_capacity(cfg.budget);
    let mut best_idx = 0;
    for (i, m) in pop.iter().enumerate() {
        if m.objective < pop[best_idx].objective {
            best_idx = i;
        }
    }
    {
        let mut best = f64::INFINITY;
        for (i, m) in pop.iter().enumerate() {
            best = best.min(m.objective);
            trace.push(TracePoint {
                eval_index: i + 1,
                best_objective: best,
            });
        }
    }

    let lo = |j: usize| -> f64 {
        match j {
            0 => bounds.r.0,
            1 => bounds.draft.0,
            j if j < 2 + n_wec => bounds.stiffness.0,
            j if j < 2 + 2 * n_wec => bounds.damping.0,
            _ => -bounds.half_width,
        }
    };
    let hi = |j: usize| -> f64 {
        match j {
            0 => bounds.r.1,
            1 => bounds.draft.1,
            j if j < 2 + n_wec => bounds.stiffness.1,
            j if j < 2 + 2 * n_wec => bounds.damping.1,
            _ => bounds.half_width,
        }
    };

    let mut rng = ChaCha12Rng::seed_from_u64(sub_seed(cfg.seed, 0xDE));
    while n_evals < cfg.budget {
        // build one generation of rand/1/bin trials
        let n_trials = (cfg.budget - n_evals).min(pop_size);
        let mut trials = Vec::with_capacity(n_trials);
        for i in 0..n_trials {
            let mut pick = || loop {
                let k = rng.gen_range(0..pop_size);
                if k != i {
                    return k;
                }
            };
            let (r1, r2, r3) = {
                let a = pick();
                let b = loop {
                    let k = pick();
                    if k != a {
                        break k;
                    }
                };
                let c = loop {
                    let k = pick();
                    if k != a && k != b {
                        break k;
                    }
                };
                (a, b, c)
            };
            let j_rand = rng.gen_range(0..dim);
            let mut trial = pop[i].x.clone();
            for j in 0..dim {
                if j == j_rand || rng.gen::<f64>() < cfg.crossover {
                    let v = pop[r1].x[j] + cfg.diff_weight * (pop[r2].x[j] - pop[r3].x[j]);
                    trial[j] = v.clamp(lo(j), hi(j));
                }
            }
            trials.push(trial);
        }
        let trial_evals: Vec<Evaluation> = trials
            .par_iter()
            .map(|x| evaluate(x, n_wec, bundle, climate, &cfg.eval))
            .collect::<Result<_>>()?;
        for (i, (x, eval)) in trials.into_iter().zip(trial_evals).enumerate() {
            let objective = eval.objective(penalty);
            n_evals += 1;
            if objective <= pop[i].objective {
                pop[i] = Member { x, eval, objective };
            }
            let best = pop.iter().map(|m| m.objective).fold(f64::INFINITY, f64::min);
            trace.push(TracePoint {
                eval_index: n_evals,
                best_objective: best,
            });
        }
    }

    // prefer the best feasible member; otherwise flag infeasibility
    let feasible_best = pop
        .iter()
        .filter(|m| m.eval.feasible(cfg.eval.residual_tol) && !m.eval.pipeline_failed)
        .min_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap());
    let (chosen, feasible) = match feasible_best {
        Some(m) => (m, true),
        None => (
            pop.iter()
                .min_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap())
                .unwrap(),
            false,
        ),
    };
    let design = decode_design(&chosen.x, n_wec)?;
    Ok(OptimResult {
        n_wec,
        best_vector: chosen.x.clone(),
        best_objective: chosen.objective,
        p_v: chosen.eval.p_v,
        residuals: distance_constraints(&design.positions, design.geom.r),
        feasible,
        n_evals,
        seed: cfg.seed,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{bypass_bundle, ReferenceMaxima};
    use crate::waves::{estimate_climate, BandwidthPolicy, ClimateBox, FrequencyGrid, WaveSample};

    fn test_bundle() -> SurrogateBundle {
        bypass_bundle(
            ReferenceMaxima {
                r_max: 20.0,
                d_max: 20.0,
                omega_max: 7.0,
                dist_max: 1000.0,
                theta_max: std::f64::consts::PI,
            },
            FrequencyGrid::even(0.2, 5.0, 8).unwrap(),
            50.0,
            1025.0,
            9.81,
        )
    }

    fn test_climate() -> WaveClimate {
        let mut samples = Vec::new();
        for y in 1..=2 {
            for k in 0..8 {
                samples.push(WaveSample {
                    year: y,
                    hs: 1.2 + 0.25 * k as f64,
                    tp: 6.0 + 0.6 * k as f64,
                });
            }
        }
        estimate_climate(&samples, 3, 2, ClimateBox::default(), BandwidthPolicy::Silverman).unwrap()
    }

    fn desk_bounds() -> Bounds {
        Bounds {
            r: (0.8, 1.2),
            draft: (4.0, 8.0),
            stiffness: (-1.0e6, 1.0e6),
            damping: (0.0, 1.0e6),
            half_width: 0.5 * (2.0 * 3.0 * 1.0e4f64).sqrt(),
        }
    }

    #[test]
    fn distance_constraint_values() {
        // R = 5: s_d = 50, minimum spacing 60
        let residuals = distance_constraints(&[[0.0, 0.0], [60.0, 0.0]], 5.0);
        assert_eq!(residuals.len(), 1);
        assert!(residuals[0].abs() < 1e-12);
        let tight = distance_constraints(&[[0.0, 0.0], [59.0, 0.0]], 5.0);
        assert!(tight[0] > 0.0);
        // single body: no pairs
        assert!(distance_constraints(&[[0.0, 0.0]], 5.0).is_empty());
    }

    #[test]
    fn design_vector_roundtrip() {
        let n = 3;
        assert_eq!(design_dim(n), 12);
        let x: Vec<f64> = vec![
            1.0, 5.0, // plant
            1.0e4, -2.0e4, 3.0e4, // stiffness
            5.0e4, 6.0e4, 7.0e4, // damping
            40.0, -30.0, -45.0, 25.0, // layout
        ];
        let design = decode_design(&x, n).unwrap();
        assert_eq!(design.positions[0], [0.0, 0.0]);
        assert_eq!(design.positions[2], [-45.0, 25.0]);
        assert_eq!(encode_design(&design), x);
    }

    #[test]
    fn evaluate_feasible_equals_negative_p_v() {
        let bundle = test_bundle();
        let climate = test_climate();
        let cfg = EvalConfig::default();
        let x = vec![
            1.0, 6.0, //
            1.0e4, 1.0e4, //
            8.0e4, 8.0e4, //
            30.0, 20.0,
        ];
        let eval = evaluate(&x, 2, &bundle, &climate, &cfg).unwrap();
        assert!(eval.feasible(cfg.residual_tol));
        let design = decode_design(&x, 2).unwrap();
        let m = assemble_farm(&bundle, &design, &bundle.grid.clone()).unwrap();
        let p = farm_power(
            &m,
            &design,
            &climate,
            bundle.rho,
            bundle.g,
            &cfg.eff,
            cfg.year_agg,
        )
        .unwrap();
        assert_eq!(eval.objective(1.0e6), -p.p_v);
        // determinism
        let again = evaluate(&x, 2, &bundle, &climate, &cfg).unwrap();
        assert_eq!(eval, again);
    }

    #[test]
    fn evaluate_overlap_is_penalized() {
        let bundle = test_bundle();
        let climate = test_climate();
        let x = vec![
            1.0, 6.0, //
            0.0, 0.0, //
            8.0e4, 8.0e4, //
            5.0, 0.0, // 5 m apart; minimum is 12R = 12
        ];
        let eval = evaluate(&x, 2, &bundle, &climate, &EvalConfig::default()).unwrap();
        assert!(!eval.feasible(1.0e-9));
        assert!(eval.objective(1.0e6) > 0.0);
    }

    #[test]
    fn random_feasible_respects_constraints() {
        let bounds = desk_bounds();
        for seed in 0..50 {
            let x = random_feasible(3, &bounds, seed, 100).unwrap();
            let d = decode_design(&x, 3).unwrap();
            assert!(distance_constraints(&d.positions, d.geom.r).iter().all(|&c| c <= 0.0));
            assert!(d.geom.r >= 0.8 && d.geom.r <= 1.2);
            for p in &d.positions[1..] {
                assert!(p[0].abs() <= bounds.half_width && p[1].abs() <= bounds.half_width);
            }
        }
        // determinism
        assert_eq!(
            random_feasible(3, &bounds, 9, 100).unwrap(),
            random_feasible(3, &bounds, 9, 100).unwrap()
        );
    }

    #[test]
    fn random_feasible_exhaustion_error() {
        let bounds = Bounds {
            r: (10.0, 10.0),
            draft: (4.0, 8.0),
            stiffness: (0.0, 1.0),
            damping: (0.0, 1.0),
            half_width: 10.0, // box far smaller than the 120 m spacing
        };
        let err = random_feasible(4, &bounds, 1, 50).unwrap_err();
        assert!(err.to_string().contains("reduce the radius"), "{err}");
    }

    #[test]
    fn optimizer_budget_accounting_and_trace() {
        let bundle = test_bundle();
        let climate = test_climate();
        let bounds = desk_bounds();
        let mut cfg = OptimConfig::new(60, 7);
        cfg.pop_size = Some(18);
        let result = optimize(3, &bounds, &bundle, &climate, &cfg).unwrap();
        assert_eq!(result.n_evals, 60);
        assert_eq!(result.trace.len(), 60);
        for w in result.trace.windows(2) {
            assert!(w[1].best_objective <= w[0].best_objective);
            assert_eq!(w[1].eval_index, w[0].eval_index + 1);
        }
        assert!(result.feasible);
        assert!(result.residuals.iter().all(|&r| r <= 1.0e-9));
        assert!(result.p_v.unwrap() > 0.0);

        // budget equal to the population size: only the initial generation
        let mut tiny = OptimConfig::new(18, 7);
        tiny.pop_size = Some(18);
        let r2 = optimize(3, &bounds, &bundle, &climate, &tiny).unwrap();
        assert_eq!(r2.n_evals, 18);
        // budget below the population size is rejected
        let mut bad = OptimConfig::new(10, 7);
        bad.pop_size = Some(18);
        assert!(optimize(3, &bounds, &bundle, &climate, &bad).is_err());
    }

    #[test]
    fn optimizer_deterministic() {
        let bundle = test_bundle();
        let climate = test_climate();
        let bounds = desk_bounds();
        let cfg = OptimConfig::new(40, 12);
        let a = optimize(3, &bounds, &bundle, &climate, &cfg).unwrap();
        let b = optimize(3, &bounds, &bundle, &climate, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn optimizer_beats_random_baseline() {
        let bundle = test_bundle();
        let climate = test_climate();
        let bounds = desk_bounds();
        let cfg = OptimConfig::new(120, 3);
        let result = optimize(3, &bounds, &bundle, &climate, &cfg).unwrap();
        let (baseline, _) = random_search_baseline(
            3,
            &bounds,
            &bundle,
            &climate,
            &cfg.eval,
            sub_seed(3, 999),
            20,
        )
        .unwrap();
        assert!(
            result.best_objective <= baseline,
            "DE {} vs baseline {}",
            result.best_objective,
            baseline
        );
    }

    #[test]
    fn constraints_ignore_control_scaling() {
        // layout feasibility is a function of plant and layout only
        let positions = [[0.0, 0.0], [40.0, 10.0], [-25.0, 30.0]];
        let r = 1.1;
        let base = distance_constraints(&positions, r);
        // the constraint function takes no control variables at all; the
        // design-vector decode keeps them orthogonal
        let x1 = vec![r, 5.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 40.0, 10.0, -25.0, 30.0];
        let x2 = vec![r, 5.0, 10.0, 10.0, 10.0, 20.0, 20.0, 20.0, 40.0, 10.0, -25.0, 30.0];
        let d1 = decode_design(&x1, 3).unwrap();
        let d2 = decode_design(&x2, 3).unwrap();
        assert_eq!(distance_constraints(&d1.positions, d1.geom.r), base);
        assert_eq!(distance_constraints(&d2.positions, d2.geom.r), base);
    }
}
