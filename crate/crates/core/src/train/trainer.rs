use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Patch;
use crate::error::{Error, Result};
use crate::model::{
    init_params, model_backward, model_forward, model_logits, save_checkpoint, ModelConfig,
    ModelParams,
};

use super::{cross_entropy, lr_at_epoch, predict_label, AdamW, AdamWConfig, Dataset, TrainConfig};

/// Mean loss and learning rate of one finished epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
}

impl EpochStats {
    /// One tab-separated training log line: `epoch`, `loss`, `lr`.
    pub fn log_line(&self) -> String {
        format!("{}\t{:.6}\t{:.6e}", self.epoch, self.loss, self.lr)
    }
}

/// Summed gradients and loss over a slice of samples, in slice order.
fn accumulate(
    params: &ModelParams<f32>,
    config: &ModelConfig,
    samples: &[&Patch<f32>],
) -> Result<(ModelParams<f32>, f64)> {
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    for s in samples {
        let (logits, tape) = model_forward(&s.values, params, config)?;
        let (l, upstream) = cross_entropy(&logits, s.label)?;
        loss += l as f64;
        model_backward(&tape, params, config, &upstream, &mut grads, None)?;
    }
    Ok((grads, loss))
}

/// Mean gradient and mean loss of a mini-batch. With several threads the
/// batch splits into contiguous chunks whose partial sums are reduced in
/// chunk order, so results depend on the thread count but not on timing.
pub fn batch_gradients(
    params: &ModelParams<f32>,
    config: &ModelConfig,
    samples: &[&Patch<f32>],
    threads: usize,
) -> Result<(ModelParams<f32>, f64)> {
    let chunk = samples.len().div_ceil(threads.max(1)).max(1);
    let (mut grads, mut loss) = if threads <= 1 || samples.len() <= chunk {
        accumulate(params, config, samples)?
    } else {
        let parts: Vec<Result<(ModelParams<f32>, f64)>> = thread::scope(|scope| {
            let handles: Vec<_> = samples
                .chunks(chunk)
                .map(|part| scope.spawn(move || accumulate(params, config, part)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("gradient worker panicked"))
                .collect()
        });
        let mut parts = parts.into_iter();
        let (mut grads, mut loss) = parts.next().expect("at least one chunk")?;
        for part in parts {
            let (g, l) = part?;
            for (a, b) in grads.tensors_mut().into_iter().zip(g.tensors()) {
                a.add_assign(b);
            }
            loss += l;
        }
        (grads, loss)
    };
    let n = samples.len() as f64;
    for t in grads.tensors_mut() {
        t.scale((1.0 / n) as f32);
    }
    loss /= n;
    Ok((grads, loss))
}

/// Mini-batch AdamW training over a fixed set of patches.
pub struct Trainer {
    pub config: TrainConfig,
    params: ModelParams<f32>,
    optimizer: AdamW<f32>,
    samples: Vec<Patch<f32>>,
    order_rng: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig, samples: Vec<Patch<f32>>) -> Result<Self> {
        config.validate()?;
        if samples.is_empty() {
            return Err(Error::Config("no training samples".into()));
        }
        let expected = config.model.positions() * config.model.bands;
        if let Some(s) = samples.iter().find(|s| s.values.len() != expected) {
            return Err(Error::Config(format!(
                "training patch holds {} values, model expects {expected}",
                s.values.len()
            )));
        }
        let params = init_params::<f32>(&config.model, config.seed)?;
        let optimizer = AdamW::new(
            AdamWConfig {
                weight_decay: config.weight_decay,
                ..Default::default()
            },
            params.tensors(),
        );
        // Shuffling draws from its own stream of the seed.
        let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
        order_rng.set_stream(1);
        Ok(Self {
            config,
            params,
            optimizer,
            samples,
            order_rng,
            epoch: 0,
        })
    }

    pub fn params(&self) -> &ModelParams<f32> {
        &self.params
    }

    pub fn into_params(self) -> ModelParams<f32> {
        self.params
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Shuffles, then takes one AdamW step per mini-batch.
    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let lr = lr_at_epoch(self.epoch, self.config.lr0, self.config.lr_gamma);
        let mut order: Vec<usize> = (0..self.samples.len()).collect();
        order.shuffle(&mut self.order_rng);
        let mut total = 0.0;
        for (step, batch) in order.chunks(self.config.batch).enumerate() {
            let picked: Vec<&Patch<f32>> = batch.iter().map(|&i| &self.samples[i]).collect();
            let (grads, loss) = batch_gradients(
                &self.params,
                &self.config.model,
                &picked,
                self.config.threads,
            )?;
            if !loss.is_finite() {
                return Err(Error::Numeric {
                    context: format!("training loss in epoch {}", self.epoch),
                    step,
                });
            }
            total += loss * batch.len() as f64;
            self.optimizer
                .update(self.params.tensors_mut(), grads.tensors(), lr as f32);
        }
        let stats = EpochStats {
            epoch: self.epoch,
            loss: total / self.samples.len() as f64,
            lr,
        };
        self.epoch += 1;
        Ok(stats)
    }

    /// Fraction of the training patches the current parameters classify
    /// correctly.
    pub fn training_accuracy(&self) -> Result<f64> {
        let mut hits = 0;
        for s in &self.samples {
            let logits = model_logits(&s.values, &self.params, &self.config.model)?;
            hits += usize::from(predict_label(&logits) == s.label);
        }
        Ok(hits as f64 / self.samples.len() as f64)
    }
}

/// Where [`train`] wrote its outputs.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub history: Vec<EpochStats>,
    pub params: ModelParams<f32>,
}

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOG_FILE: &str = "train.log";

/// Trains on the dataset's training split for `config.epochs` epochs,
/// writing `train.log` as it goes and `model.ckpt` at the end into `out`.
pub fn train(config: &TrainConfig, dataset: &Dataset, out: &Path) -> Result<TrainOutcome> {
    config.validate()?;
    dataset.check_model(&config.model)?;
    std::fs::create_dir_all(out)?;
    let samples = dataset.patches(&dataset.split.train, config.model.patch)?;
    log::info!(
        "training on {} patches for {} epochs",
        samples.len(),
        config.epochs
    );
    let mut trainer = Trainer::new(config.clone(), samples)?;
    let log_path = out.join(LOG_FILE);
    let mut log_file = BufWriter::new(File::create(&log_path)?);
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let stats = trainer.run_epoch()?;
        writeln!(log_file, "{}", stats.log_line())?;
        log::debug!("{}", stats.log_line());
        history.push(stats);
    }
    log_file.flush()?;
    let checkpoint = out.join(CHECKPOINT_FILE);
    let params = trainer.into_params();
    save_checkpoint(&checkpoint, &config.model, &params)?;
    Ok(TrainOutcome {
        checkpoint,
        log: log_path,
        history,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::SyntheticScene;

    fn tiny_setup(threads: usize) -> (TrainConfig, Vec<Patch<f32>>) {
        let scene = SyntheticScene {
            height: 12,
            width: 12,
            bands: 8,
            classes: 3,
            noise: 0.1,
            unlabeled_fraction: 0.1,
            train_per_class: 4,
            seed: 1,
        };
        let (cube, manifest) = scene.generate();
        let ds = Dataset::from_parts(cube, manifest, 3).unwrap();
        let model = ModelConfig {
            classes: 3,
            ..ModelConfig::tiny()
        };
        let cfg = TrainConfig {
            lr0: 1e-2,
            epochs: 3,
            batch: 5,
            threads,
            model,
            ..Default::default()
        };
        let samples = ds.patches(&ds.split.train, 3).unwrap();
        (cfg, samples)
    }

    #[test]
    fn epochs_are_deterministic() {
        let run = || {
            let (cfg, samples) = tiny_setup(1);
            let mut t = Trainer::new(cfg, samples).unwrap();
            let stats: Vec<_> = (0..3).map(|_| t.run_epoch().unwrap()).collect();
            (stats, t.into_params())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn thread_count_changes_only_the_reduction_order() {
        let (cfg, samples) = tiny_setup(1);
        let batch: Vec<&Patch<f32>> = samples.iter().collect();
        let params = init_params::<f32>(&cfg.model, 0).unwrap();
        let (g1, l1) = batch_gradients(&params, &cfg.model, &batch, 1).unwrap();
        let (g3, l3) = batch_gradients(&params, &cfg.model, &batch, 3).unwrap();
        assert!((l1 - l3).abs() < 1e-9);
        for (a, b) in g1.tensors().iter().zip(g3.tensors()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()));
            }
        }
        assert_eq!(
            batch_gradients(&params, &cfg.model, &batch, 3).unwrap().0,
            g3
        );
    }

    #[test]
    fn initial_loss_is_near_uniform() {
        let (cfg, samples) = tiny_setup(1);
        let mut t = Trainer::new(cfg, samples).unwrap();
        let first = t.run_epoch().unwrap();
        let ln_c = 3f64.ln();
        assert!((first.loss - ln_c).abs() < 0.2 * ln_c, "{}", first.loss);
        assert_eq!(first.lr, 1e-2);
    }

    #[test]
    fn mismatched_samples_are_rejected() {
        let (mut cfg, samples) = tiny_setup(1);
        cfg.model.patch = 5;
        assert!(matches!(Trainer::new(cfg, samples), Err(Error::Config(_))));
    }

    #[test]
    fn log_line_format() {
        let s = EpochStats {
            epoch: 3,
            loss: 0.5,
            lr: 1e-4,
        };
        assert_eq!(s.log_line(), "3\t0.500000\t1.000000e-4");
    }
}
