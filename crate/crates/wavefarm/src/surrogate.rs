//! The surrogate layer: input/output normalization, spike cleaning, the
//! 30-model bundle (10 shape networks plus 20 scaling networks), and
//! many-body-expansion assembly of farm-level matrices.
//!
//! Shape networks regress the per-record frequency profile after a linear
//! map onto [-1, 1]; two auxiliary networks per target recover the range and
//! offset of that map from the record's non-frequency inputs. Pairwise
//! additive effects are computed at query time from the trained direct
//! outputs. Radiation depends only on the pair distance, so radiation
//! networks receive a zeroed angle input both in training and at query time.

use crate::error::{Error, Result};
use crate::farm::{FarmDesign, FarmMatrices};
use crate::hydro::{
    pair_body, safe_distance, single_body, HydroDataset, PairCoeffs, PairConfig, Records,
    SingleCoeffs, WecGeometry,
};
use crate::neural::{mlp_forward, mlp_init, mlp_train, MlpModel, TrainConfig};
use crate::waves::{solve_dispersion, FrequencyGrid};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Reference maxima used as normalization denominators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMaxima {
    pub r_max: f64,
    pub d_max: f64,
    pub omega_max: f64,
    pub dist_max: f64,
    pub theta_max: f64,
}

/// Out-of-range handling for input normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangePolicy {
    /// Error on inputs outside the reference maxima.
    Strict,
    /// Clamp into range; the returned flag reports that clamping happened.
    Clamp,
}

const RANGE_SLACK: f64 = 1e-9;

fn normalize_scalar(value: f64, max: f64, what: &str, policy: RangePolicy) -> Result<(f64, bool)> {
    let v = value / max;
    if v > 1.0 + RANGE_SLACK || v < -RANGE_SLACK {
        match policy {
            RangePolicy::Strict => Err(Error::OutOfRange(format!(
                "{what} = {value} outside [0, {max}]"
            ))),
            RangePolicy::Clamp => Ok((v.clamp(0.0, 1.0), true)),
        }
    } else {
        Ok((v.clamp(0.0, 1.0), false))
    }
}

/// Normalized one-body input vector (R, D, omega over their maxima).
pub fn normalize_inputs_1(
    geom: &WecGeometry,
    omega: f64,
    maxima: &ReferenceMaxima,
    policy: RangePolicy,
) -> Result<([f64; 3], bool)> {
    let (r, c1) = normalize_scalar(geom.r, maxima.r_max, "radius", policy)?;
    let (d, c2) = normalize_scalar(geom.d, maxima.d_max, "draft", policy)?;
    let (w, c3) = normalize_scalar(omega, maxima.omega_max, "omega", policy)?;
    Ok(([r, d, w], c1 || c2 || c3))
}

/// Normalized two-body input vector (R, D, distance, angle, omega).
pub fn normalize_inputs_2(
    pair: &PairConfig,
    omega: f64,
    maxima: &ReferenceMaxima,
    policy: RangePolicy,
) -> Result<([f64; 5], bool)> {
    let ([r, d, w], c0) = normalize_inputs_1(&pair.geom, omega, maxima, policy)?;
    let (dist, c1) = normalize_scalar(pair.dist, maxima.dist_max, "pair distance", policy)?;
    let (theta, c2) = normalize_scalar(pair.theta, maxima.theta_max, "pair angle", policy)?;
    Ok(([r, d, dist, theta, w], c0 || c1 || c2))
}

/// Added-mass normalization A / (rho pi R^2 D).
pub fn normalize_added_mass(a: f64, geom: &WecGeometry, rho: f64) -> f64 {
    a / (rho * std::f64::consts::PI * geom.r * geom.r * geom.d)
}

pub fn denormalize_added_mass(a_tilde: f64, geom: &WecGeometry, rho: f64) -> f64 {
    a_tilde * rho * std::f64::consts::PI * geom.r * geom.r * geom.d
}

/// Damping normalization B / (omega rho pi R^2 D).
pub fn normalize_damping(b: f64, omega: f64, geom: &WecGeometry, rho: f64) -> f64 {
    b / (omega * rho * std::f64::consts::PI * geom.r * geom.r * geom.d)
}

pub fn denormalize_damping(b_tilde: f64, omega: f64, geom: &WecGeometry, rho: f64) -> f64 {
    b_tilde * omega * rho * std::f64::consts::PI * geom.r * geom.r * geom.d
}

/// Excitation normalization Fe / (rho g pi R^2 D).
pub fn normalize_excitation(fe: Complex64, geom: &WecGeometry, rho: f64, g: f64) -> Complex64 {
    fe / (rho * g * std::f64::consts::PI * geom.r * geom.r * geom.d)
}

pub fn denormalize_excitation(
    fe_tilde: Complex64,
    geom: &WecGeometry,
    rho: f64,
    g: f64,
) -> Complex64 {
    fe_tilde * (rho * g * std::f64::consts::PI * geom.r * geom.r * geom.d)
}

/// Replace isolated outliers by the mean of their immediate neighbors.
///
/// A point is an outlier when |x_i - median| > tau * MAD; endpoints use the
/// single adjacent neighbor. `window` is the neighborhood width including
/// the point itself (3 means one neighbor on each side).
pub fn clean_spikes(series: &[f64], window: usize, tau: f64) -> Vec<f64> {
    if series.len() < 3 {
        return series.to_vec();
    }
    let half = (window.max(3) - 1) / 2;
    let mut sorted: Vec<f64> = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let mut dev: Vec<f64> = series.iter().map(|x| (x - median).abs()).collect();
    dev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mad = dev[dev.len() / 2];
    let n = series.len();
    let mut out = series.to_vec();
    for i in 0..n {
        if (series[i] - median).abs() > tau * mad {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let mut acc = 0.0;
            let mut count = 0;
            for (j, &v) in series.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    acc += v;
                    count += 1;
                }
            }
            if count > 0 {
                out[i] = acc / count as f64;
            }
        }
    }
    out
}

/// Linear map of one frequency profile onto [-1, 1]:
/// scaled = (y - offset) / range with |range| = (max - min) / 2 and
/// offset = (max + min) / 2. The range sign is canonical (negative when the
/// profile's dominant extreme is negative), so an overall sign flip of the
/// profile moves into the range instead of mirroring the shape; the scaling
/// networks learn the flip as a smooth function of the inputs. A constant
/// profile is flagged and keeps range = 0 so reconstruction stays exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileScale {
    pub range: f64,
    pub offset: f64,
    pub constant: bool,
}

pub fn fit_profile_scale(series: &[f64]) -> ProfileScale {
    fit_profile_scale_with(series, false)
}

/// `signed` selects the canonical signed range used for excitation targets,
/// whose profiles flip sign with the pair angle: the flip moves into the
/// range (a smooth function of the inputs) instead of mirroring the shape.
/// Radiation profiles have no such flip and keep a positive range.
pub fn fit_profile_scale_with(series: &[f64], signed: bool) -> ProfileScale {
    let lo = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = 0.5 * (hi - lo);
    let offset = 0.5 * (hi + lo);
    if range <= 1e-14 * offset.abs().max(1.0) {
        ProfileScale {
            range: 0.0,
            offset,
            constant: true,
        }
    } else {
        let sign = if signed && hi + lo < 0.0 { -1.0 } else { 1.0 };
        ProfileScale {
            range: sign * range,
            offset,
            constant: false,
        }
    }
}

impl ProfileScale {
    pub fn scale(&self, y: f64) -> f64 {
        if self.constant {
            0.0
        } else {
            (y - self.offset) / self.range
        }
    }

    pub fn unscale(&self, s: f64) -> f64 {
        self.offset + self.range * s
    }
}

/// One-body target index order: a, b, Re fe, Im fe.
pub const TARGETS_1: [&str; 4] = ["a", "b", "fe_re", "fe_im"];
/// Two-body target index order: a11, a12, b11, b12, Re fe11, Im fe11.
pub const TARGETS_2: [&str; 6] = ["a11", "a12", "b11", "b12", "fe_re", "fe_im"];

/// Radiation targets ignore the pair angle; their angle input is zeroed.
fn target2_uses_theta(idx: usize) -> bool {
    idx >= 4
}

/// Range and offset predictors for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalePair {
    pub range: MlpModel,
    pub offset: MlpModel,
}

/// The trained networks: 4 + 6 shape nets and a scale pair per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkBundle {
    pub shape1: Vec<MlpModel>,
    pub shape2: Vec<MlpModel>,
    pub scale1: Vec<ScalePair>,
    pub scale2: Vec<ScalePair>,
}

/// Prediction backend: trained networks, or the analytical oracle routed
/// through the same interface (isolates assembly errors from fit errors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BundleMode {
    Network(NetworkBundle),
    Bypass,
}

/// A complete surrogate: backend, normalization maxima, frequency grid,
/// water depth, and fluid constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateBundle {
    pub format_version: u32,
    pub maxima: ReferenceMaxima,
    pub grid: FrequencyGrid,
    pub depth: f64,
    pub rho: f64,
    pub g: f64,
    pub backend: BundleMode,
}

/// Held-out quality of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetric {
    pub name: String,
    /// RMSE on the held-out split, in the model's own output space.
    pub test_rmse: f64,
    /// test_rmse over the RMS of all targets of that model.
    pub relative_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub models: Vec<ModelMetric>,
}

impl TrainMetrics {
    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    pub fn shape_metrics(&self) -> impl Iterator<Item = &ModelMetric> {
        self.models.iter().filter(|m| m.name.starts_with("f1_") || m.name.starts_with("f2_"))
    }
}

/// Bundle training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleTrainConfig {
    pub hidden_1body: usize,
    pub hidden_2body: usize,
    pub hidden_scale: usize,
    pub spike_tau: f64,
    pub net: TrainConfig,
}

impl Default for BundleTrainConfig {
    fn default() -> Self {
        Self {
            hidden_1body: 32,
            hidden_2body: 64,
            hidden_scale: 16,
            spike_tau: 5.0,
            net: TrainConfig::default(),
        }
    }
}

/// Relative RMSE with a zero guard: identically-zero target families
/// report zero instead of a meaningless ratio.
fn relative(rmse: f64, target_rms: f64) -> f64 {
    if target_rms < 1e-9 {
        0.0
    } else {
        rmse / target_rms
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for v in values {
        acc += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (acc / n as f64).sqrt()
    }
}

struct TrainedTarget {
    shape: MlpModel,
    scale: ScalePair,
    metrics: Vec<ModelMetric>,
}

/// Fit one target family: shape net over (inputs x omega) rows, plus range
/// and offset nets over per-record rows.
#[allow(clippy::too_many_arguments)]
fn train_target(
    name: &str,
    record_inputs: &[Vec<f64>],
    profiles: &[Vec<f64>],
    omegas_norm: &[f64],
    hidden_shape: usize,
    hidden_scale: usize,
    signed_range: bool,
    cfg: &BundleTrainConfig,
    seed: u64,
) -> Result<TrainedTarget> {
    let n_rec = record_inputs.len();
    let n_w = omegas_norm.len();
    let d_nf = record_inputs[0].len();

    // per-record cleaning and scaling
    let mut scales = Vec::with_capacity(n_rec);
    let mut scaled_profiles = Vec::with_capacity(n_rec);
    for profile in profiles {
        let cleaned = clean_spikes(profile, 3, cfg.spike_tau);
        let scale = fit_profile_scale_with(&cleaned, signed_range);
        let scaled: Vec<f64> = cleaned.iter().map(|&y| scale.scale(y)).collect();
        scales.push(scale);
        scaled_profiles.push(scaled);
    }

    // shape net rows: (record, omega) pairs
    let mut xs = DMatrix::zeros(n_rec * n_w, d_nf + 1);
    let mut ys = DMatrix::zeros(n_rec * n_w, 1);
    for (j, (inp, prof)) in record_inputs.iter().zip(&scaled_profiles).enumerate() {
        for i in 0..n_w {
            let row = j * n_w + i;
            for (c, v) in inp.iter().enumerate() {
                xs[(row, c)] = *v;
            }
            xs[(row, d_nf)] = omegas_norm[i];
            ys[(row, 0)] = prof[i];
        }
    }
    let shape_init = mlp_init(&[d_nf + 1, hidden_shape, 1], seed)?;
    let (shape, shape_report) = mlp_train(shape_init, &xs, &ys, &cfg.net)
        .map_err(|e| Error::TrainAbort {
            epoch: 0,
            msg: format!("target {name}: {e}"),
        })?;
    let mut metrics = vec![ModelMetric {
        name: format!("{name}"),
        test_rmse: shape_report.test_mse.sqrt(),
        relative_rmse: relative(shape_report.test_mse.sqrt(), rms(ys.iter().cloned())),
    }];

    // scaling nets: per-record rows
    let mut aux_x = DMatrix::zeros(n_rec, d_nf);
    let mut range_y = DMatrix::zeros(n_rec, 1);
    let mut offset_y = DMatrix::zeros(n_rec, 1);
    for (j, inp) in record_inputs.iter().enumerate() {
        for (c, v) in inp.iter().enumerate() {
            aux_x[(j, c)] = *v;
        }
        range_y[(j, 0)] = scales[j].range;
        offset_y[(j, 0)] = scales[j].offset;
    }
    let mut aux_cfg = cfg.net;
    aux_cfg.max_epochs = cfg.net.max_epochs.min(4000);
    aux_cfg.patience = aux_cfg.patience.min(aux_cfg.max_epochs);
    let range_init = mlp_init(&[d_nf, hidden_scale, 1], seed.wrapping_add(1))?;
    let (range_net, range_report) = mlp_train(range_init, &aux_x, &range_y, &aux_cfg)?;
    let offset_init = mlp_init(&[d_nf, hidden_scale, 1], seed.wrapping_add(2))?;
    let (offset_net, offset_report) = mlp_train(offset_init, &aux_x, &offset_y, &aux_cfg)?;
    metrics.push(ModelMetric {
        name: format!("{name}_range"),
        test_rmse: range_report.test_mse.sqrt(),
        relative_rmse: relative(range_report.test_mse.sqrt(), rms(range_y.iter().cloned())),
    });
    metrics.push(ModelMetric {
        name: format!("{name}_offset"),
        test_rmse: offset_report.test_mse.sqrt(),
        relative_rmse: relative(offset_report.test_mse.sqrt(), rms(offset_y.iter().cloned())),
    });

    Ok(TrainedTarget {
        shape,
        scale: ScalePair {
            range: range_net,
            offset: offset_net,
        },
        metrics,
    })
}

/// Train the 30-model bundle from one-body and two-body datasets.
pub fn train_bundle(
    ds1: &HydroDataset,
    ds2: &HydroDataset,
    rho: f64,
    g: f64,
    cfg: &BundleTrainConfig,
) -> Result<(SurrogateBundle, TrainMetrics)> {
    let one = match &ds1.records {
        Records::One(v) => v,
        Records::Two(_) => return Err(Error::Schema("ds1 must be a one-body dataset".into())),
    };
    let two = match &ds2.records {
        Records::Two(v) => v,
        Records::One(_) => return Err(Error::Schema("ds2 must be a two-body dataset".into())),
    };
    if ds1.grid != ds2.grid {
        return Err(Error::Schema("datasets use different frequency grids".into()));
    }
    if ds1.depth != ds2.depth {
        return Err(Error::Schema("datasets use different water depths".into()));
    }
    if one.is_empty() || two.is_empty() {
        return Err(Error::Schema("datasets must be nonempty".into()));
    }

    let maxima = ReferenceMaxima {
        r_max: one
            .iter()
            .map(|r| r.r)
            .chain(two.iter().map(|r| r.r))
            .fold(0.0, f64::max),
        d_max: one
            .iter()
            .map(|r| r.d)
            .chain(two.iter().map(|r| r.d))
            .fold(0.0, f64::max),
        omega_max: *ds1.grid.omegas().last().unwrap(),
        dist_max: two.iter().map(|r| r.dist).fold(0.0, f64::max),
        theta_max: std::f64::consts::PI,
    };
    let omegas_norm: Vec<f64> = ds1
        .grid
        .omegas()
        .iter()
        .map(|&w| w / maxima.omega_max)
        .collect();

    // describe all ten target families, then train them in parallel
    struct FamilyJob {
        name: String,
        inputs: Vec<Vec<f64>>,
        profiles: Vec<Vec<f64>>,
        hidden: usize,
        signed_range: bool,
        seed: u64,
    }
    let mut jobs = Vec::with_capacity(10);

    let inputs1: Vec<Vec<f64>> = one
        .iter()
        .map(|rec| vec![rec.r / maxima.r_max, rec.d / maxima.d_max])
        .collect();
    for (t, name) in TARGETS_1.iter().enumerate() {
        let profiles: Vec<Vec<f64>> = one
            .iter()
            .map(|rec| {
                let geom = WecGeometry { r: rec.r, d: rec.d };
                ds1.grid
                    .omegas()
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| match t {
                        0 => normalize_added_mass(rec.added_mass[i], &geom, rho),
                        // constant reference frequency: dividing by the
                        // per-sample omega would re-amplify reconstruction
                        // error by omega where the damping has died off
                        1 => {
                            let _ = w;
                            normalize_damping(rec.damping[i], maxima.omega_max, &geom, rho)
                        }
                        2 => normalize_excitation(Complex64::new(rec.fe_re[i], 0.0), &geom, rho, g).re,
                        _ => normalize_excitation(Complex64::new(rec.fe_im[i], 0.0), &geom, rho, g).re,
                    })
                    .collect()
            })
            .collect();
        jobs.push(FamilyJob {
            name: format!("f1_{name}"),
            inputs: inputs1.clone(),
            profiles,
            hidden: cfg.hidden_1body,
            signed_range: t >= 2,
            seed: cfg.net.seed.wrapping_mul(1000).wrapping_add(t as u64 * 10),
        });
    }

    // radiation rows carry a zeroed angle input
    for (t, name) in TARGETS_2.iter().enumerate() {
        let inputs2: Vec<Vec<f64>> = two
            .iter()
            .map(|rec| {
                vec![
                    rec.r / maxima.r_max,
                    rec.d / maxima.d_max,
                    rec.dist / maxima.dist_max,
                    if target2_uses_theta(t) {
                        rec.theta / maxima.theta_max
                    } else {
                        0.0
                    },
                ]
            })
            .collect();
        let profiles: Vec<Vec<f64>> = two
            .iter()
            .map(|rec| {
                let geom = WecGeometry { r: rec.r, d: rec.d };
                ds2.grid
                    .omegas()
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| match t {
                        0 => normalize_added_mass(rec.a11[i], &geom, rho),
                        1 => normalize_added_mass(rec.a12[i], &geom, rho),
                        2 => {
                            let _ = w;
                            normalize_damping(rec.b11[i], maxima.omega_max, &geom, rho)
                        }
                        3 => {
                            let _ = w;
                            normalize_damping(rec.b12[i], maxima.omega_max, &geom, rho)
                        }
                        4 => normalize_excitation(Complex64::new(rec.fe_re[i], 0.0), &geom, rho, g).re,
                        _ => normalize_excitation(Complex64::new(rec.fe_im[i], 0.0), &geom, rho, g).re,
                    })
                    .collect()
            })
            .collect();
        jobs.push(FamilyJob {
            name: format!("f2_{name}"),
            inputs: inputs2,
            profiles,
            hidden: cfg.hidden_2body,
            signed_range: target2_uses_theta(t),
            seed: cfg.net.seed.wrapping_mul(1000).wrapping_add(100 + t as u64 * 10),
        });
    }

    let trained: Vec<TrainedTarget> = jobs
        .par_iter()
        .map(|job| {
            train_target(
                &job.name,
                &job.inputs,
                &job.profiles,
                &omegas_norm,
                job.hidden,
                cfg.hidden_scale,
                job.signed_range,
                cfg,
                job.seed,
            )
        })
        .collect::<Result<_>>()?;

    let mut metrics = Vec::new();
    let mut shape1 = Vec::with_capacity(4);
    let mut scale1 = Vec::with_capacity(4);
    let mut shape2 = Vec::with_capacity(6);
    let mut scale2 = Vec::with_capacity(6);
    for (i, t) in trained.into_iter().enumerate() {
        metrics.extend(t.metrics);
        if i < 4 {
            shape1.push(t.shape);
            scale1.push(t.scale);
        } else {
            shape2.push(t.shape);
            scale2.push(t.scale);
        }
    }

    let bundle = SurrogateBundle {
        format_version: BUNDLE_FORMAT_VERSION,
        maxima,
        grid: ds1.grid.clone(),
        depth: ds1.depth,
        rho,
        g,
        backend: BundleMode::Network(NetworkBundle {
            shape1,
            shape2,
            scale1,
            scale2,
        }),
    };
    Ok((bundle, TrainMetrics { models: metrics }))
}

/// Oracle-backed bundle: every prediction routes to the analytical oracle.
pub fn bypass_bundle(
    maxima: ReferenceMaxima,
    grid: FrequencyGrid,
    depth: f64,
    rho: f64,
    g: f64,
) -> SurrogateBundle {
    SurrogateBundle {
        format_version: BUNDLE_FORMAT_VERSION,
        maxima,
        grid,
        depth,
        rho,
        g,
        backend: BundleMode::Bypass,
    }
}

/// Pairwise additive effects in normalized (tilde) space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditiveEffects {
    pub d_a11: f64,
    pub d_a12: f64,
    pub d_b11: f64,
    pub d_b12: f64,
    /// (fe_tilde_single - fe_tilde_pair) * exp(i k L).
    pub d_fe11: Complex64,
}

impl SurrogateBundle {
    /// 10 shape networks plus 20 scaling networks; zero in bypass mode.
    pub fn model_count(&self) -> usize {
        match &self.backend {
            BundleMode::Network(n) => {
                n.shape1.len() + n.shape2.len() + 2 * (n.scale1.len() + n.scale2.len())
            }
            BundleMode::Bypass => 0,
        }
    }

    pub fn is_bypass(&self) -> bool {
        matches!(self.backend, BundleMode::Bypass)
    }

    fn eval_target(shape: &MlpModel, scale: &ScalePair, nf: &[f64], omega_norm: f64) -> f64 {
        let mut full = nf.to_vec();
        full.push(omega_norm);
        let s = mlp_forward(shape, &full).expect("shape net input arity");
        let range = mlp_forward(&scale.range, nf).expect("range net input arity");
        let offset = mlp_forward(&scale.offset, nf).expect("offset net input arity");
        offset[0] + range[0] * s[0]
    }

    /// One-body prediction in physical units; position-independent.
    pub fn predict_1body(&self, geom: &WecGeometry, omega: f64) -> Result<SingleCoeffs> {
        match &self.backend {
            BundleMode::Bypass => single_body(*geom, omega, self.depth, self.g, self.rho),
            BundleMode::Network(nets) => {
                let ([r, d, w], _) =
                    normalize_inputs_1(geom, omega, &self.maxima, RangePolicy::Strict)?;
                let nf = [r, d];
                let a_t = Self::eval_target(&nets.shape1[0], &nets.scale1[0], &nf, w);
                let b_t = Self::eval_target(&nets.shape1[1], &nets.scale1[1], &nf, w);
                let fr = Self::eval_target(&nets.shape1[2], &nets.scale1[2], &nf, w);
                let fi = Self::eval_target(&nets.shape1[3], &nets.scale1[3], &nf, w);
                Ok(SingleCoeffs {
                    added_mass: denormalize_added_mass(a_t, geom, self.rho),
                    damping: denormalize_damping(b_t, self.maxima.omega_max, geom, self.rho),
                    excitation: denormalize_excitation(
                        Complex64::new(fr, fi),
                        geom,
                        self.rho,
                        self.g,
                    ),
                })
            }
        }
    }

    /// Two-body prediction in physical units, body 1 entries.
    pub fn predict_2body(&self, pair: &PairConfig, omega: f64) -> Result<PairCoeffs> {
        match &self.backend {
            BundleMode::Bypass => pair_body(pair, omega, self.depth, self.g, self.rho),
            BundleMode::Network(nets) => {
                let ([r, d, dist, theta, w], _) =
                    normalize_inputs_2(pair, omega, &self.maxima, RangePolicy::Strict)?;
                let geom = &pair.geom;
                let rad_nf = [r, d, dist, 0.0];
                let exc_nf = [r, d, dist, theta];
                let a11_t = Self::eval_target(&nets.shape2[0], &nets.scale2[0], &rad_nf, w);
                let a12_t = Self::eval_target(&nets.shape2[1], &nets.scale2[1], &rad_nf, w);
                let b11_t = Self::eval_target(&nets.shape2[2], &nets.scale2[2], &rad_nf, w);
                let b12_t = Self::eval_target(&nets.shape2[3], &nets.scale2[3], &rad_nf, w);
                let fr = Self::eval_target(&nets.shape2[4], &nets.scale2[4], &exc_nf, w);
                let fi = Self::eval_target(&nets.shape2[5], &nets.scale2[5], &exc_nf, w);
                Ok(PairCoeffs {
                    a11: denormalize_added_mass(a11_t, geom, self.rho),
                    a12: denormalize_added_mass(a12_t, geom, self.rho),
                    b11: denormalize_damping(b11_t, self.maxima.omega_max, geom, self.rho),
                    b12: denormalize_damping(b12_t, self.maxima.omega_max, geom, self.rho),
                    fe1: denormalize_excitation(Complex64::new(fr, fi), geom, self.rho, self.g),
                })
            }
        }
    }

    /// Additive two-body interaction effects in normalized space. `l_offset`
    /// is the x-offset of body 1 from the origin; the excitation delta is
    /// multiplied by exp(i k L).
    pub fn additive_effects(
        &self,
        pair: &PairConfig,
        omega: f64,
        l_offset: f64,
    ) -> Result<AdditiveEffects> {
        let single = self.predict_1body(&pair.geom, omega)?;
        let two = self.predict_2body(pair, omega)?;
        let geom = &pair.geom;
        let d_a11 = normalize_added_mass(two.a11 - single.added_mass, geom, self.rho);
        let d_a12 = normalize_added_mass(two.a12, geom, self.rho);
        let d_b11 = normalize_damping(two.b11 - single.damping, omega, geom, self.rho);
        let d_b12 = normalize_damping(two.b12, omega, geom, self.rho);
        let k = solve_dispersion(omega, self.depth, self.g)?;
        let phase = Complex64::new(0.0, k * l_offset).exp();
        let d_fe11 = (normalize_excitation(single.excitation, geom, self.rho, self.g)
            - normalize_excitation(two.fe1, geom, self.rho, self.g))
            * phase;
        Ok(AdditiveEffects {
            d_a11,
            d_a12,
            d_b11,
            d_b12,
            d_fe11,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let bundle: SurrogateBundle = serde_json::from_str(&text)?;
        if bundle.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported bundle format version {}",
                bundle.format_version
            )));
        }
        Ok(bundle)
    }
}

/// Center distance and wave-relative angle of the q-th body as seen from the
/// p-th, with the angle folded into [0, pi] (the excitation is symmetric
/// about the propagation axis).
pub fn pair_geometry(from: [f64; 2], to: [f64; 2]) -> (f64, f64) {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    let dist = (dx * dx + dy * dy).sqrt();
    let theta = dy.atan2(dx).rem_euclid(std::f64::consts::TAU);
    let folded = if theta > std::f64::consts::PI {
        std::f64::consts::TAU - theta
    } else {
        theta
    };
    (dist, folded)
}

/// Assemble farm-level A(omega), B(omega), and the excitation vector by
/// many-body expansion truncated at two-body clusters.
///
/// Diagonals take the one-body value plus the pairwise diagonal corrections
/// summed over partners; off-diagonals take the pairwise coupling; the
/// excitation per body applies the plane-wave phase exp(-i k x_p) to the
/// one-body force plus pairwise scattering corrections. With a network
/// backend, pairs beyond the trained distance range contribute zero
/// interaction (couplings decay with distance); the bypass backend has no
/// such cutoff.
pub fn assemble_farm(
    bundle: &SurrogateBundle,
    design: &FarmDesign,
    grid: &FrequencyGrid,
) -> Result<FarmMatrices> {
    let n = design.n_wec();
    let geom = design.geom;
    let min_dist = 2.0 * geom.r + safe_distance(geom.r);
    for p in 0..n {
        for q in (p + 1)..n {
            let (dist, _) = pair_geometry(design.positions[p], design.positions[q]);
            if dist < min_dist {
                return Err(Error::Infeasible(format!(
                    "bodies {p} and {q} are {dist:.3} m apart; minimum is {min_dist:.3} m"
                )));
            }
        }
    }

    let mut added_mass = Vec::with_capacity(grid.len());
    let mut damping = Vec::with_capacity(grid.len());
    let mut excitation = Vec::with_capacity(grid.len());
    for &omega in grid.omegas() {
        let single = bundle.predict_1body(&geom, omega)?;
        let k = solve_dispersion(omega, bundle.depth, bundle.g)?;
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DMatrix::<f64>::zeros(n, n);
        let mut fe = DVector::<Complex64>::from_element(n, single.excitation);
        for p in 0..n {
            a[(p, p)] = single.added_mass;
            b[(p, p)] = single.damping;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let (dist, theta_pq) = pair_geometry(design.positions[p], design.positions[q]);
                if !bundle.is_bypass() && dist > bundle.maxima.dist_max * (1.0 + RANGE_SLACK) {
                    continue;
                }
                let pair_pq = PairConfig {
                    geom,
                    dist,
                    theta: theta_pq,
                };
                let coeff_pq = bundle.predict_2body(&pair_pq, omega)?;
                // radiation is orientation-independent: place symmetrically
                a[(p, p)] += coeff_pq.a11 - single.added_mass;
                a[(q, q)] += coeff_pq.a11 - single.added_mass;
                b[(p, p)] += coeff_pq.b11 - single.damping;
                b[(q, q)] += coeff_pq.b11 - single.damping;
                a[(p, q)] = coeff_pq.a12;
                a[(q, p)] = coeff_pq.a12;
                b[(p, q)] = coeff_pq.b12;
                b[(q, p)] = coeff_pq.b12;
                // excitation needs both orientations
                fe[p] += coeff_pq.fe1 - single.excitation;
                let (_, theta_qp) = pair_geometry(design.positions[q], design.positions[p]);
                let pair_qp = PairConfig {
                    geom,
                    dist,
                    theta: theta_qp,
                };
                let coeff_qp = bundle.predict_2body(&pair_qp, omega)?;
                fe[q] += coeff_qp.fe1 - single.excitation;
            }
        }
        for p in 0..n {
            let phase = Complex64::new(0.0, -k * design.positions[p][0]).exp();
            fe[p] *= phase;
        }
        added_mass.push(a);
        damping.push(b);
        excitation.push(fe);
    }
    Ok(FarmMatrices {
        grid: grid.clone(),
        added_mass,
        damping,
        excitation,
    })
}
