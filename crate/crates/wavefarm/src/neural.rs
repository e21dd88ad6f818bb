//! Shallow feedforward networks: tanh hidden layers, identity output,
//! full-batch gradient descent with adaptive step halving, and
//! validation-based early stopping.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// A dense feedforward network. `weights[l]` maps layer `l` activations to
/// layer `l + 1` pre-activations (out_dim x in_dim); hidden layers apply
/// tanh, the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk form: row-major weight arrays plus explicit activation tags.
#[derive(Serialize, Deserialize)]
struct MlpModelFile {
    format_version: u32,
    layer_sizes: Vec<usize>,
    /// One flat row-major (out_dim x in_dim) array per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    /// "tanh" per hidden layer, "linear" for the output layer.
    activations: Vec<String>,
}

impl Serialize for MlpModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n_layers = self.weights.len();
        let file = MlpModelFile {
            format_version: MODEL_FORMAT_VERSION,
            layer_sizes: self.layer_sizes.clone(),
            weights: self
                .weights
                .iter()
                .map(|w| {
                    let mut flat = Vec::with_capacity(w.len());
                    for i in 0..w.nrows() {
                        for j in 0..w.ncols() {
                            flat.push(w[(i, j)]);
                        }
                    }
                    flat
                })
                .collect(),
            biases: self.biases.iter().map(|b| b.as_slice().to_vec()).collect(),
            activations: (0..n_layers)
                .map(|l| if l + 1 < n_layers { "tanh" } else { "linear" }.to_string())
                .collect(),
        };
        file.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MlpModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = MlpModelFile::deserialize(deserializer)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(D::Error::custom(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        let n_layers = file.layer_sizes.len().saturating_sub(1);
        if file.weights.len() != n_layers || file.biases.len() != n_layers {
            return Err(D::Error::custom("layer count mismatch"));
        }
        for (l, act) in file.activations.iter().enumerate() {
            let want = if l + 1 < n_layers { "tanh" } else { "linear" };
            if act != want {
                return Err(D::Error::custom(format!(
                    "layer {l}: unsupported activation {act:?} (expected {want:?})"
                )));
            }
        }
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (nin, nout) = (file.layer_sizes[l], file.layer_sizes[l + 1]);
            if file.weights[l].len() != nin * nout || file.biases[l].len() != nout {
                return Err(D::Error::custom(format!("layer {l}: shape mismatch")));
            }
            weights.push(DMatrix::from_row_slice(nout, nin, &file.weights[l]));
            biases.push(DVector::from_column_slice(&file.biases[l]));
        }
        Ok(MlpModel {
            layer_sizes: file.layer_sizes,
            weights,
            biases,
        })
    }
}

impl MlpModel {
    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

/// Seeded scaled-uniform fan-in initialization: weights ~ U(-s, s) with
/// s = 1/sqrt(fan_in), biases zero.
pub fn mlp_init(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
    if layer_sizes.len() < 3 {
        return Err(Error::Domain(format!(
            "network needs at least one hidden layer, got sizes {layer_sizes:?}"
        )));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::Domain(format!("zero-width layer in {layer_sizes:?}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
    let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
    for pair in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let s = 1.0 / (fan_in as f64).sqrt();
        let w = DMatrix::from_fn(fan_out, fan_in, |_, _| rng.gen_range(-s..s));
        weights.push(w);
        biases.push(DVector::zeros(fan_out));
    }
    Ok(MlpModel {
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
    })
}

/// Forward pass for a single input vector.
pub fn mlp_forward(model: &MlpModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.input_dim() {
        return Err(Error::Domain(format!(
            "input dimension {} does not match network input {}",
            x.len(),
            model.input_dim()
        )));
    }
    let mut a = DVector::from_column_slice(x);
    let last = model.weights.len() - 1;
    for (l, (w, b)) in model.weights.iter().zip(&model.biases).enumerate() {
        a = w * a + b;
        if l < last {
            a.apply(|v| *v = v.tanh());
        }
    }
    Ok(a.as_slice().to_vec())
}

/// Forward pass for a batch laid out as rows of `xs` (n_samples x input_dim).
pub fn mlp_forward_batch(model: &MlpModel, xs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if xs.ncols() != model.input_dim() {
        return Err(Error::Domain(format!(
            "batch input dimension {} does not match network input {}",
            xs.ncols(),
            model.input_dim()
        )));
    }
    let last = model.weights.len() - 1;
    let mut a = xs.clone();
    for (l, (w, b)) in model.weights.iter().zip(&model.biases).enumerate() {
        let mut z = &a * w.transpose();
        for mut row in z.row_iter_mut() {
            row += b.transpose();
        }
        if l < last {
            z.apply(|v| *v = v.tanh());
        }
        a = z;
    }
    Ok(a)
}

/// Mean squared error over all samples and outputs.
pub fn mse(pred: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    let diff = pred - target;
    diff.iter().map(|v| v * v).sum::<f64>() / diff.len() as f64
}

/// Full-batch loss and parameter gradient at the current weights.
fn loss_and_grad(
    model: &MlpModel,
    xs: &DMatrix<f64>,
    ys: &DMatrix<f64>,
) -> (f64, Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
    let n_layers = model.weights.len();
    // forward, keeping activations per layer (rows = samples)
    let mut acts: Vec<DMatrix<f64>> = Vec::with_capacity(n_layers + 1);
    acts.push(xs.clone());
    for l in 0..n_layers {
        let mut z = acts.last().unwrap() * model.weights[l].transpose();
        for mut row in z.row_iter_mut() {
            row += model.biases[l].transpose();
        }
        if l < n_layers - 1 {
            z.apply(|v| *v = v.tanh());
        }
        acts.push(z);
    }
    let pred = acts.last().unwrap();
    let loss = mse(pred, ys);

    let scale = 2.0 / pred.len() as f64;
    let mut delta = (pred - ys) * scale; // n x out
    let mut dw = vec![DMatrix::zeros(0, 0); n_layers];
    let mut db = vec![DVector::zeros(0); n_layers];
    for l in (0..n_layers).rev() {
        dw[l] = delta.transpose() * &acts[l];
        db[l] = delta.row_sum().transpose();
        if l > 0 {
            let mut back = delta * &model.weights[l];
            // tanh derivative through the stored activation
            back.zip_apply(&acts[l], |g, a| *g *= 1.0 - a * a);
            delta = back;
        }
    }
    (loss, dw, db)
}

/// Training configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Consecutive validation failures tolerated before stopping.
    pub patience: usize,
    /// Initial step size for the adaptive full-batch descent.
    pub lr0: f64,
    /// (train, validation, test) fractions; must sum to 1.
    pub split: (f64, f64, f64),
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let s = self.split.0 + self.split.1 + self.split.2;
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("split fractions sum to {s}, expected 1")));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Domain(format!(
                "patience {} exceeds max epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.lr0 > 0.0) {
            return Err(Error::Domain("lr0 must be positive".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 6000,
            patience: 800,
            lr0: 0.1,
            split: (0.7, 0.15, 0.15),
            seed: 0,
        }
    }
}

/// Per-run training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
    pub stopping_epoch: usize,
    pub test_mse: f64,
}

pub(crate) fn rows_of(data: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(idx.len(), data.ncols());
    for (i, &r) in idx.iter().enumerate() {
        out.set_row(i, &data.row(r));
    }
    out
}

/// Train with full-batch gradient descent and adaptive step control: a step
/// that increases the training loss is rejected and the step size halved,
/// an accepted step nudges it back up. Early stopping snapshots the
/// parameters with the best validation MSE; the split is a seeded shuffle
/// into train/validation/test fractions.
pub fn mlp_train(
    mut model: MlpModel,
    inputs: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    let n = inputs.nrows();
    if n < 10 {
        return Err(Error::Domain(format!("need at least 10 samples, got {n}")));
    }
    if targets.nrows() != n {
        return Err(Error::Domain("inputs/targets row mismatch".into()));
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("targets must be finite".into()));
    }

    // seeded shuffle, then train/validation/test partition
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let n_train = (((n as f64) * cfg.split.0).floor() as usize).max(1);
    let n_val = (((n as f64) * cfg.split.1).floor() as usize).max(1);
    let (train_idx, rest) = order.split_at(n_train.min(n - 2));
    let (val_idx, test_idx) = rest.split_at(n_val.min(rest.len() - 1));
    let (x_train, y_train) = (rows_of(inputs, train_idx), rows_of(targets, train_idx));
    let (x_val, y_val) = (rows_of(inputs, val_idx), rows_of(targets, val_idx));
    let (x_test, y_test) = (rows_of(inputs, test_idx), rows_of(targets, test_idx));

    let (mut loss, mut dw, mut db) = loss_and_grad(&model, &x_train, &y_train);
    if loss.is_nan() {
        return Err(Error::TrainAbort {
            epoch: 0,
            msg: "initial training loss is NaN (non-finite inputs?)".into(),
        });
    }
    // per-parameter step sizes, sign-based updates; a step that raises the
    // training loss is rejected and every step size is halved
    let step_cap = 1.0f64.max(cfg.lr0);
    let mut steps: Vec<(DMatrix<f64>, DVector<f64>)> = model
        .weights
        .iter()
        .zip(&model.biases)
        .map(|(w, b)| {
            (
                DMatrix::from_element(w.nrows(), w.ncols(), cfg.lr0),
                DVector::from_element(b.len(), cfg.lr0),
            )
        })
        .collect();
    let mut prev_dw = dw.clone();
    let mut prev_db = db.clone();
    let mut have_prev = false;
    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut failures = 0usize;
    let mut report = TrainReport {
        train_mse: Vec::new(),
        val_mse: Vec::new(),
        stopping_epoch: 0,
        test_mse: f64::NAN,
    };

    for epoch in 1..=cfg.max_epochs {
        let mut candidate = model.clone();
        for l in 0..candidate.weights.len() {
            candidate.weights[l].zip_zip_apply(&dw[l], &steps[l].0, |w, g, s| {
                *w -= g.signum() * s * (g != 0.0) as u8 as f64
            });
            candidate.biases[l].zip_zip_apply(&db[l], &steps[l].1, |w, g, s| {
                *w -= g.signum() * s * (g != 0.0) as u8 as f64
            });
        }
        let (new_loss, new_dw, new_db) = loss_and_grad(&candidate, &x_train, &y_train);
        if new_loss.is_nan() {
            return Err(Error::TrainAbort {
                epoch,
                msg: "training loss became NaN".into(),
            });
        }
        if new_loss > loss {
            let mut max_step = 0.0f64;
            for (sw, sb) in &mut steps {
                sw.apply(|s| *s *= 0.5);
                sb.apply(|s| *s *= 0.5);
                max_step = max_step.max(sw.max()).max(sb.max());
            }
            if max_step < 1e-16 {
                report.stopping_epoch = epoch;
                break;
            }
        } else {
            // grow step sizes where the gradient sign held, shrink on flips
            if have_prev {
                for l in 0..steps.len() {
                    let (sw, sb) = &mut steps[l];
                    sw.zip_zip_apply(&dw[l], &prev_dw[l], |s, g, gp| {
                        let prod = g * gp;
                        if prod > 0.0 {
                            *s = (*s * 1.2).min(step_cap);
                        } else if prod < 0.0 {
                            *s = (*s * 0.5).max(1e-16);
                        }
                    });
                    sb.zip_zip_apply(&db[l], &prev_db[l], |s, g, gp| {
                        let prod = g * gp;
                        if prod > 0.0 {
                            *s = (*s * 1.2).min(step_cap);
                        } else if prod < 0.0 {
                            *s = (*s * 0.5).max(1e-16);
                        }
                    });
                }
            }
            prev_dw = std::mem::replace(&mut dw, new_dw);
            prev_db = std::mem::replace(&mut db, new_db);
            have_prev = true;
            model = candidate;
            loss = new_loss;
        }
        let val = mse(&mlp_forward_batch(&model, &x_val)?, &y_val);
        if val.is_nan() {
            return Err(Error::TrainAbort {
                epoch,
                msg: "validation loss is NaN (non-finite inputs?)".into(),
            });
        }
        report.train_mse.push(loss);
        report.val_mse.push(val);
        report.stopping_epoch = epoch;
        if val < best_val {
            best_val = val;
            best = model.clone();
            failures = 0;
        } else {
            failures += 1;
            if failures > cfg.patience {
                break;
            }
        }
    }

    report.test_mse = mse(&mlp_forward_batch(&best, &x_test)?, &y_test);
    Ok((best, report))
}

fn flatten_params(model: &MlpModel) -> Vec<f64> {
    let mut out = Vec::with_capacity(model.n_params());
    for (w, b) in model.weights.iter().zip(&model.biases) {
        out.extend(w.iter());
        out.extend(b.iter());
    }
    out
}

fn unflatten_params(model: &mut MlpModel, flat: &[f64]) {
    let mut k = 0;
    for l in 0..model.weights.len() {
        for v in model.weights[l].iter_mut() {
            *v = flat[k];
            k += 1;
        }
        for v in model.biases[l].iter_mut() {
            *v = flat[k];
            k += 1;
        }
    }
}

/// Compare the back-propagated gradient against central finite differences
/// of the loss; returns the largest relative discrepancy over all parameters.
pub fn gradient_check(
    model: &MlpModel,
    xs: &DMatrix<f64>,
    ys: &DMatrix<f64>,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1e-3) {
        return Err(Error::Domain(format!("epsilon must be in (0, 1e-3], got {epsilon}")));
    }
    let (_, dw, db) = loss_and_grad(model, xs, ys);
    let mut analytic: Vec<f64> = Vec::new();
    for (w, b) in dw.iter().zip(&db) {
        analytic.extend(w.iter().copied());
        analytic.extend(b.iter().copied());
    }
    let flat = flatten_params(model);
    let mut probe = model.clone();
    let mut max_rel = 0.0f64;
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += epsilon;
        unflatten_params(&mut probe, &plus);
        let lp = mse(&mlp_forward_batch(&probe, xs)?, ys);
        let mut minus = flat.clone();
        minus[i] -= epsilon;
        unflatten_params(&mut probe, &minus);
        let lm = mse(&mlp_forward_batch(&probe, xs)?, ys);
        let numeric = (lp - lm) / (2.0 * epsilon);
        let rel = (analytic[i] - numeric).abs() / (analytic[i].abs() + numeric.abs() + 1e-8);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_deterministic_and_counted() {
        let a = mlp_init(&[3, 16, 1], 42).unwrap();
        let b = mlp_init(&[3, 16, 1], 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_params(), 3 * 16 + 16 + 16 + 1);
        let c = mlp_init(&[3, 16, 1], 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_rejects_bad_shapes() {
        assert!(mlp_init(&[3, 1], 0).is_err()); // no hidden layer
        assert!(mlp_init(&[3, 0, 1], 0).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut m = mlp_init(&[2, 4, 1], 0).unwrap();
        for w in &mut m.weights {
            w.fill(0.0);
        }
        assert_eq!(mlp_forward(&m, &[1.0, -2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn forward_rejects_dim_mismatch() {
        let m = mlp_init(&[2, 4, 1], 0).unwrap();
        assert!(mlp_forward(&m, &[1.0]).is_err());
    }

    #[test]
    fn batch_matches_per_sample() {
        let m = mlp_init(&[3, 8, 2], 5).unwrap();
        let xs = DMatrix::from_row_slice(
            4,
            3,
            &[
                0.1, -0.5, 0.9, //
                0.0, 0.0, 0.0, //
                1.0, 1.0, -1.0, //
                -0.3, 0.7, 0.2,
            ],
        );
        let batch = mlp_forward_batch(&m, &xs).unwrap();
        for i in 0..4 {
            let single = mlp_forward(&m, xs.row(i).transpose().as_slice()).unwrap();
            for j in 0..2 {
                assert_eq!(batch[(i, j)], single[j]);
            }
        }
    }

    fn column(vals: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(vals.len(), 1, vals)
    }

    #[test]
    fn fits_identity() {
        let n = 120;
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let inputs = column(&xs);
        let targets = inputs.clone();
        let model = mlp_init(&[1, 16, 1], 3).unwrap();
        let cfg = TrainConfig {
            max_epochs: 4000,
            patience: 4000,
            lr0: 0.5,
            ..Default::default()
        };
        let (_, report) = mlp_train(model, &inputs, &targets, &cfg).unwrap();
        let final_train = *report.train_mse.last().unwrap();
        assert!(final_train < 1e-4, "train MSE {final_train}");
    }

    #[test]
    fn fits_linear_map() {
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let model = mlp_init(&[1, 16, 1], 1).unwrap();
        let cfg = TrainConfig {
            max_epochs: 6000,
            patience: 6000,
            lr0: 0.5,
            ..Default::default()
        };
        let (_, report) = mlp_train(model, &column(&xs), &column(&ys), &cfg).unwrap();
        assert!(report.test_mse < 1e-5, "test MSE {}", report.test_mse);
    }

    #[test]
    fn zero_patience_stops_at_first_failure() {
        let n = 40;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (7.0 * x).sin()).collect();
        let model = mlp_init(&[1, 8, 1], 2).unwrap();
        let cfg = TrainConfig {
            max_epochs: 5000,
            patience: 0,
            lr0: 0.3,
            ..Default::default()
        };
        let (_, report) = mlp_train(model, &column(&xs), &column(&ys), &cfg).unwrap();
        let k = report.val_mse.len();
        assert!(k < 5000, "did not stop early");
        // every epoch before the last strictly improved the best validation MSE
        let mut best = f64::INFINITY;
        for (i, &v) in report.val_mse.iter().enumerate() {
            if i + 1 < k {
                assert!(v < best, "epoch {i} should have improved");
            } else {
                assert!(v >= best, "last epoch must be the first failure");
            }
            best = best.min(v);
        }
    }

    #[test]
    fn training_deterministic() {
        let n = 60;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let cfg = TrainConfig {
            max_epochs: 200,
            patience: 200,
            lr0: 0.2,
            seed: 9,
            ..Default::default()
        };
        let r1 =
            mlp_train(mlp_init(&[1, 8, 1], 4).unwrap(), &column(&xs), &column(&ys), &cfg).unwrap();
        let r2 =
            mlp_train(mlp_init(&[1, 8, 1], 4).unwrap(), &column(&xs), &column(&ys), &cfg).unwrap();
        assert_eq!(r1.1, r2.1);
        assert_eq!(r1.0, r2.0);
    }

    #[test]
    fn train_loss_non_increasing() {
        let n = 80;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).cos()).collect();
        let cfg = TrainConfig {
            max_epochs: 50,
            patience: 50,
            lr0: 0.2,
            ..Default::default()
        };
        let (_, report) =
            mlp_train(mlp_init(&[1, 8, 1], 6).unwrap(), &column(&xs), &column(&ys), &cfg).unwrap();
        for w in report.train_mse.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn returned_model_has_best_validation() {
        let n = 60;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (9.0 * x).sin()).collect();
        let cfg = TrainConfig {
            max_epochs: 400,
            patience: 400,
            lr0: 0.3,
            seed: 11,
            ..Default::default()
        };
        let inputs = column(&xs);
        let targets = column(&ys);
        let (best, report) =
            mlp_train(mlp_init(&[1, 8, 1], 7).unwrap(), &inputs, &targets, &cfg).unwrap();
        // recompute the validation split exactly as the trainer does
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let n_train = ((n as f64) * 0.7).floor() as usize;
        let n_val = ((n as f64) * 0.15).floor() as usize;
        let val_idx = &order[n_train..n_train + n_val];
        let xv = rows_of(&inputs, val_idx);
        let yv = rows_of(&targets, val_idx);
        let val = mse(&mlp_forward_batch(&best, &xv).unwrap(), &yv);
        for &v in &report.val_mse {
            assert!(val <= v + 1e-12);
        }
    }

    #[test]
    fn nan_loss_aborts_with_diagnostic() {
        let mut xs = vec![0.0; 20];
        xs[3] = f64::NAN;
        let ys: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let err = mlp_train(
            mlp_init(&[1, 4, 1], 0).unwrap(),
            &column(&xs),
            &column(&ys),
            &TrainConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("NaN"), "{err}");
    }

    #[test]
    fn gradient_check_small_epsilon() {
        for seed in 0..3 {
            let m = mlp_init(&[3, 8, 2], seed).unwrap();
            let xs = DMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
            let ys = DMatrix::from_fn(6, 2, |i, j| ((i * 2 + j) as f64 * 0.53).cos());
            let err = gradient_check(&m, &xs, &ys, 1e-6).unwrap();
            assert!(err < 1e-6, "seed {seed}: max rel err {err}");
        }
    }

    #[test]
    fn gradient_check_zero_network() {
        let mut m = mlp_init(&[2, 4, 1], 0).unwrap();
        for w in &mut m.weights {
            w.fill(0.0);
        }
        let xs = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, 0.25, 0.75]);
        let ys = DMatrix::zeros(2, 1);
        let (_, dw, db) = loss_and_grad(&m, &xs, &ys);
        for w in &dw {
            assert!(w.iter().all(|&v| v == 0.0));
        }
        for b in &db {
            assert!(b.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradient_check_truncation_grows_with_epsilon() {
        let m = mlp_init(&[2, 6, 1], 3).unwrap();
        let xs = DMatrix::from_fn(5, 2, |i, j| ((i + 2 * j) as f64 * 0.61).sin());
        let ys = DMatrix::from_fn(5, 1, |i, _| (i as f64 * 0.41).cos());
        let fine = gradient_check(&m, &xs, &ys, 1e-6).unwrap();
        let coarse = gradient_check(&m, &xs, &ys, 1e-3).unwrap();
        assert!(coarse > fine, "coarse {coarse} <= fine {fine}");
    }

    #[test]
    fn config_validation() {
        let bad_split = TrainConfig {
            split: (0.5, 0.1, 0.1),
            ..Default::default()
        };
        assert!(bad_split.validate().is_err());
        let bad_patience = TrainConfig {
            patience: 10_000_000,
            ..Default::default()
        };
        assert!(bad_patience.validate().is_err());
    }
}
