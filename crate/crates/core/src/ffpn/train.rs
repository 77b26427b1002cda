use super::adam::{adam_step, AdamConfig, TrainState};
use super::forward::{ffpn_forward, jfb_loss_and_gradient};
use crate::error::{check_len, Error, Result};
use crate::feasibility::{clamp_unit, DropOperator};
use crate::metrics::psnr;
use crate::numerics::Prng;
use crate::regularizer::{lipschitz_safeguard, NetworkWeights, SafeguardConfig};

/// Fixed-point tolerance used while training.
pub const TRAIN_DELTA: f64 = 1e-3;
/// Iteration cap used while training.
pub const TRAIN_MAX_ITER: usize = 50;
/// Fixed-point tolerance used for reported reconstructions.
pub const EVAL_DELTA: f64 = 1e-4;
/// Iteration cap used for reported reconstructions.
pub const EVAL_MAX_ITER: usize = 150;

const SPLIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;
const SAFEGUARD_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub delta: f64,
    pub max_iter: usize,
    /// Lipschitz target of the safeguard.
    pub gamma: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Share of the samples held out for the validation PSNR column.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            learning_rate: adam.learning_rate,
            batch_size: 15,
            epochs: 50,
            delta: TRAIN_DELTA,
            max_iter: TRAIN_MAX_ITER,
            gamma: 1.0,
            beta1: adam.beta1,
            beta2: adam.beta2,
            adam_eps: adam.eps,
            seed: 0,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }

    pub fn safeguard(&self) -> SafeguardConfig {
        SafeguardConfig {
            gamma: self.gamma,
            ..SafeguardConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        self.safeguard().validate()?;
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if !(self.delta > 0.0) || self.max_iter == 0 {
            return Err(Error::invalid("fixed-point tolerance and cap must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid("validation fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// A training pair: row-normalized measurements and the true image.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub data: Vec<f64>,
    pub truth: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of `mse(T_Θ(u_fixed), u*)` over the epoch's training samples.
    pub train_mse: f64,
    /// Mean PSNR of clipped reconstructions on the validation split (NaN when
    /// the split is empty).
    pub val_psnr: f64,
    pub mean_fp_iterations: f64,
    pub safeguard_triggered: bool,
    /// Largest `C₁ − γC₂` seen after the safeguard, over all batches.
    pub worst_check_margin: f64,
}

pub const LOG_HEADER: &str = "epoch,train_mse,val_psnr,mean_fp_iterations,safeguard_triggered\n";

impl EpochRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.10},{:.6},{:.3},{}\n",
            self.epoch,
            self.train_mse,
            self.val_psnr,
            self.mean_fp_iterations,
            u8::from(self.safeguard_triggered)
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: TrainState,
    /// One record per epoch, preceded by an epoch-0 record for the initial
    /// weights.
    pub log: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn weights(&self) -> &NetworkWeights {
        &self.state.weights
    }

    pub fn log_csv(&self) -> String {
        let mut out = String::from(LOG_HEADER);
        self.log.iter().for_each(|r| out.push_str(&r.csv_row()));
        out
    }
}

/// Deterministic split of `0..n` into training and validation indices.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    Prng::derive(seed, SPLIT_STREAM).shuffle(&mut idx);
    let n_val = if n < 2 { 0 } else { (n as f64 * fraction).floor() as usize };
    let val = idx.split_off(n - n_val);
    (idx, val)
}

struct Trainer<'a> {
    op: &'a DropOperator,
    shape: (usize, usize),
    samples: &'a [TrainSample],
    cfg: &'a TrainConfig,
}

impl Trainer<'_> {
    fn diverged(&self, epoch: usize, batch: usize, weights: &NetworkWeights) -> Error {
        Error::TrainingDiverged {
            epoch,
            batch,
            last_good: Box::new(weights.clone()),
        }
    }

    fn solve(&self, weights: &NetworkWeights, k: usize, epoch: usize, batch: usize) -> Result<(Vec<f64>, usize)> {
        let s = &self.samples[k];
        match ffpn_forward(weights, self.op, &s.data, self.shape, self.cfg.delta, self.cfg.max_iter) {
            Ok(rep) => Ok((rep.iterate, rep.iterations)),
            Err(e) if e.is_numerical() => Err(self.diverged(epoch, batch, weights)),
            Err(e) => Err(e),
        }
    }

    fn validation_psnr(&self, weights: &NetworkWeights, val: &[usize], epoch: usize) -> Result<f64> {
        if val.is_empty() {
            return Ok(f64::NAN);
        }
        let mut total = 0.0;
        for &k in val {
            let (mut u, _) = self.solve(weights, k, epoch, 0)?;
            clamp_unit(&mut u);
            total += psnr(&u, &self.samples[k].truth, 1.0)?;
        }
        Ok(total / val.len() as f64)
    }

    fn initial_record(&self, weights: &NetworkWeights, train: &[usize], val: &[usize]) -> Result<EpochRecord> {
        let (mut loss, mut iters) = (0.0, 0usize);
        for &k in train {
            let (u, n) = self.solve(weights, k, 0, 0)?;
            let s = &self.samples[k];
            loss += jfb_loss_and_gradient(weights, self.op, &s.data, self.shape, &u, &s.truth)?.0;
            iters += n;
        }
        let n = train.len().max(1) as f64;
        Ok(EpochRecord {
            epoch: 0,
            train_mse: loss / n,
            val_psnr: self.validation_psnr(weights, val, 0)?,
            mean_fp_iterations: iters as f64 / n,
            safeguard_triggered: false,
            worst_check_margin: f64::NEG_INFINITY,
        })
    }
}

/// JFB training with Adam and the Lipschitz safeguard after every batch.
///
/// Per batch: solve each sample's fixed point without gradient tracking,
/// take the batch-mean JFB gradient, apply one Adam step, then run the
/// safeguard on the batch's fixed points with the updated weights.
/// `observer` sees every epoch record (the initial one included) together
/// with the weights at that point.
pub fn train<F>(
    op: &DropOperator,
    shape: (usize, usize),
    samples: &[TrainSample],
    initial: NetworkWeights,
    cfg: &TrainConfig,
    mut observer: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&EpochRecord, &NetworkWeights) -> Result<()>,
{
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("training needs at least one sample"));
    }
    check_len("image shape", op.n_unknowns(), shape.0 * shape.1)?;
    for s in samples {
        check_len("training sinogram", op.n_equations(), s.data.len())?;
        check_len("training image", op.n_unknowns(), s.truth.len())?;
    }
    let trainer = Trainer {
        op,
        shape,
        samples,
        cfg,
    };
    let adam = cfg.adam();
    let sg_cfg = cfg.safeguard();
    let (mut order, val) = split_indices(samples.len(), cfg.validation_fraction, cfg.seed);
    let mut shuffle_rng = Prng::derive(cfg.seed, SHUFFLE_STREAM);
    let mut sg_rng = Prng::derive(cfg.seed, SAFEGUARD_STREAM);

    let mut state = TrainState::new(initial);
    let first = trainer.initial_record(&state.weights, &order, &val)?;
    observer(&first, &state.weights)?;
    let mut log = vec![first];

    for epoch in 1..=cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let (mut loss_sum, mut iter_sum) = (0.0, 0usize);
        let mut triggered = false;
        let mut worst = f64::NEG_INFINITY;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grad = state.weights.zero_gradient();
            let mut points = Vec::with_capacity(batch.len());
            let scale = 1.0 / batch.len() as f64;
            for &k in batch {
                let (u, n) = trainer.solve(&state.weights, k, epoch, b)?;
                let s = &samples[k];
                let (loss, g) =
                    jfb_loss_and_gradient(&state.weights, op, &s.data, shape, &u, &s.truth)?;
                if !loss.is_finite() || g.flatten().iter().any(|v| !v.is_finite()) {
                    return Err(trainer.diverged(epoch, b, &state.weights));
                }
                grad.add_scaled(&g, scale);
                loss_sum += loss;
                iter_sum += n;
                points.push(u);
            }
            let stepped = adam_step(&state, &grad, &adam)?;
            let outcome =
                lipschitz_safeguard(&stepped.weights, shape, &points, Some(op), &sg_cfg, &mut sg_rng)?;
            triggered |= outcome.triggered;
            worst = worst.max(outcome.after.c1 - sg_cfg.gamma * outcome.after.c2);
            state = TrainState {
                weights: outcome.weights,
                ..stepped
            };
        }
        let n = order.len() as f64;
        let record = EpochRecord {
            epoch,
            train_mse: loss_sum / n,
            val_psnr: trainer.validation_psnr(&state.weights, &val, epoch)?,
            mean_fp_iterations: iter_sum as f64 / n,
            safeguard_triggered: triggered,
            worst_check_margin: worst,
        };
        observer(&record, &state.weights)?;
        log.push(record);
    }
    Ok(TrainOutcome { state, log })
}
