//! Snippet-based training: augmented minibatch assembly, the epoch
//! loop with validation-based model selection, grid search, and
//! bootstrap confidence intervals over validation scores.

use alloc::format;
use alloc::vec::Vec;

use crate::duration::quantile_sorted;
use crate::error::{CoreError, Result};
use crate::frontend::{shift_pitch, LogFreqSpectrogram, SHIFT_MAX, SHIFT_MIN};
use crate::key::KeyLabel;
use crate::mirex;
use crate::model::{ArchitectureConfig, ArchitectureKind, Model, ModelState};
use crate::ops::{argmax_rows, softmax_xent};
use crate::optim::SgdState;
use crate::rng::RngStream;
use crate::tensor::Tensor;

/// 20 s of context at 5 frames per second.
pub const SNIPPET_FRAMES: usize = 100;
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

// Stream salts keep the independent random concerns on separate
// sequences derived from the one training seed.
const SALT_AUGMENT: u64 = 0x6175_676d;
const SALT_SHUFFLE: u64 = 0x6f72_6465;
const SALT_DROPOUT: u64 = 0x6472_6f70;
const SALT_BOOTSTRAP: u64 = 0x626f_6f74;

/// One training example: a cached full-piece spectrogram and its key.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainItem {
    pub spec: LogFreqSpectrogram,
    pub label: KeyLabel,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation weighted-score improvement before
    /// training stops.
    pub patience: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Epochs without improvement before the learning rate is halved.
    pub lr_stall_epochs: usize,
    pub snippet_frames: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            max_epochs: 500,
            patience: 20,
            learning_rate: 0.01,
            momentum: 0.9,
            lr_stall_epochs: 5,
            snippet_frames: SNIPPET_FRAMES,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(CoreError::Config("batch_size must be at least 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(CoreError::Config("max_epochs must be at least 1".into()));
        }
        if self.patience < 1 {
            return Err(CoreError::Config("patience must be at least 1".into()));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(CoreError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(CoreError::Config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.lr_stall_epochs < 1 {
            return Err(CoreError::Config("lr_stall_epochs must be at least 1".into()));
        }
        if self.snippet_frames < 1 {
            return Err(CoreError::Config("snippet_frames must be at least 1".into()));
        }
        Ok(())
    }
}

/// Cut a fixed-length excerpt with a uniformly drawn start; shorter
/// input is left-aligned and zero-padded to `snippet_frames`.
pub fn sample_snippet(
    spec: &LogFreqSpectrogram,
    snippet_frames: usize,
    rng: &mut RngStream,
) -> Result<LogFreqSpectrogram> {
    if snippet_frames < 1 {
        return Err(CoreError::Config("snippet_frames must be at least 1".into()));
    }
    let bins = spec.n_bins;
    if spec.n_frames >= snippet_frames {
        let start: usize = rng.range(0..=spec.n_frames - snippet_frames);
        let values = spec.values[start * bins..(start + snippet_frames) * bins].to_vec();
        LogFreqSpectrogram::from_values(values, snippet_frames, bins)
    } else {
        let mut values = alloc::vec![0.0f32; snippet_frames * bins];
        values[..spec.values.len()].copy_from_slice(&spec.values);
        LogFreqSpectrogram::from_values(values, snippet_frames, bins)
    }
}

/// One augmentation draw: a pitch shift uniform over the legal range,
/// the shifted snippet, and the transposed label.
pub fn augment_item(
    item: &TrainItem,
    snippet_frames: usize,
    stream: &mut RngStream,
) -> Result<(i32, LogFreqSpectrogram, KeyLabel)> {
    let shift: i32 = stream.range(SHIFT_MIN..=SHIFT_MAX);
    let shifted = shift_pitch(&item.spec, shift)?;
    let snippet = sample_snippet(&shifted, snippet_frames, stream)?;
    Ok((shift, snippet, item.label.transpose(shift)))
}

/// The rng stream that drives item `index`'s augmentation in `epoch`.
/// Keyed by (seed, epoch, index) so batches do not depend on how
/// assembly work is scheduled.
pub fn item_stream(seed: u64, epoch: usize, index: usize) -> RngStream {
    RngStream::new(seed).derive(&[SALT_AUGMENT, epoch as u64, index as u64])
}

/// The visiting order of one epoch: a seeded permutation of all items.
pub fn epoch_order(n_items: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_items).collect();
    RngStream::new(seed)
        .derive(&[SALT_SHUFFLE, epoch as u64])
        .shuffle(&mut order);
    order
}

/// Assemble the items at `indices` into a `[B, 1, bins, frames]` batch
/// of augmented snippets plus their class targets.
pub fn make_batch(
    items: &[TrainItem],
    indices: &[usize],
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<(Tensor<f32>, Vec<usize>)> {
    if indices.is_empty() {
        return Err(CoreError::Config("empty batch".into()));
    }
    let bins = items
        .first()
        .ok_or_else(|| CoreError::Config("no training items".into()))?
        .spec
        .n_bins;
    let frames = cfg.snippet_frames;
    let mut data = alloc::vec![0.0f32; indices.len() * bins * frames];
    let mut targets = Vec::with_capacity(indices.len());
    for (row, &index) in indices.iter().enumerate() {
        let item = items.get(index).ok_or_else(|| {
            CoreError::Config(format!("batch index {} out of range", index))
        })?;
        if item.spec.n_bins != bins {
            return Err(CoreError::Shape(format!(
                "item {} has {} bins, batch expects {}",
                index, item.spec.n_bins, bins
            )));
        }
        let mut stream = item_stream(cfg.seed, epoch, index);
        let (_, snippet, label) = augment_item(item, frames, &mut stream)?;
        let slab = &mut data[row * bins * frames..(row + 1) * bins * frames];
        slab.copy_from_slice(snippet.to_input_tensor().data());
        targets.push(label.class_index());
    }
    Ok((
        Tensor::from_vec(&[indices.len(), 1, bins, frames], data)?,
        targets,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Wait,
    Stop,
}

/// Patience bookkeeping against a score where higher is better.
#[derive(Debug, Clone)]
pub struct EarlyStop {
    patience: usize,
    best: Option<f64>,
    stalled: usize,
}

impl EarlyStop {
    pub fn new(patience: usize) -> Self {
        EarlyStop {
            patience,
            best: None,
            stalled: 0,
        }
    }

    /// Feed one epoch's score. `Stop` fires on the epoch that exhausts
    /// the patience budget: with patience 5 and scores that only fall,
    /// epoch 1 sets the best and epoch 6 stops.
    pub fn observe(&mut self, score: f64) -> StopDecision {
        match self.best {
            Some(best) if score <= best => {
                self.stalled += 1;
                if self.stalled >= self.patience {
                    StopDecision::Stop
                } else {
                    StopDecision::Wait
                }
            }
            _ => {
                self.best = Some(score);
                self.stalled = 0;
                StopDecision::Improved
            }
        }
    }

    pub fn stalled_epochs(&self) -> usize {
        self.stalled
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_weighted: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_weighted: f64,
    pub train_acc_at_best: f64,
    pub val_acc_at_best: f64,
    /// Validation accuracy over train accuracy at the best epoch; the
    /// generalisation diagnostic.
    pub overfit_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub report: FitReport,
    pub best_state: ModelState,
}

fn validation_scores(model: &Model, valid: &[TrainItem]) -> Result<(f64, f64)> {
    let mut pairs = Vec::with_capacity(valid.len());
    for item in valid {
        let pred = model.predict(&item.spec)?;
        pairs.push((pred.label, item.label));
    }
    let breakdown = mirex::score(&pairs)?;
    Ok((breakdown.weighted, breakdown.correct))
}

/// Train with augmented snippet batches, validate on full pieces after
/// every epoch, and keep the checkpoint with the best validation
/// weighted score. The model is left loaded with that checkpoint.
pub fn fit(
    model: &mut Model,
    train: &[TrainItem],
    valid: &[TrainItem],
    cfg: &TrainConfig,
) -> Result<FitOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(CoreError::Config("training set is empty".into()));
    }
    if valid.is_empty() {
        return Err(CoreError::Config("validation set is empty".into()));
    }
    if cfg.snippet_frames < model.min_frames() {
        return Err(CoreError::Config(format!(
            "snippet of {} frames is below the {} minimum of {}",
            cfg.snippet_frames,
            model.config().kind.name(),
            model.min_frames()
        )));
    }

    let mut sgd = SgdState::new(cfg.learning_rate, cfg.momentum)?;
    let mut dropout_rng = RngStream::new(cfg.seed).derive(&[SALT_DROPOUT]);
    let mut stopper = EarlyStop::new(cfg.patience);
    let mut lr_stalled = 0usize;
    let mut epochs = Vec::new();
    let mut best: Option<(usize, f64, f64, f64, ModelState)> = None;

    for epoch in 1..=cfg.max_epochs {
        let lr_in_effect = sgd.learning_rate;
        let order = epoch_order(train.len(), cfg.seed, epoch);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (input, targets) = make_batch(train, chunk, cfg, epoch)?;
            model.zero_grads();
            let logits = model.train_forward(&input, &mut dropout_rng)?;
            let (loss, grad) = softmax_xent(&logits, &targets)?;
            if !loss.is_finite() {
                model.clear_caches();
                return Err(CoreError::NonFiniteLoss {
                    epoch,
                    batch: batch_no + 1,
                    lr: sgd.learning_rate,
                });
            }
            model.backward(&grad)?;
            sgd.step(&mut model.params_mut())?;
            loss_sum += loss * targets.len() as f64;
            for (pred, target) in argmax_rows(&logits)?.iter().zip(&targets) {
                if pred == target {
                    correct += 1;
                }
            }
        }
        let train_loss = loss_sum / train.len() as f64;
        let train_acc = correct as f64 / train.len() as f64;
        let (val_weighted, val_acc) = validation_scores(model, valid)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_weighted,
            learning_rate: lr_in_effect,
        });
        match stopper.observe(val_weighted) {
            StopDecision::Improved => {
                lr_stalled = 0;
                best = Some((epoch, val_weighted, train_acc, val_acc, model.state()));
            }
            StopDecision::Wait => {
                lr_stalled += 1;
                if lr_stalled >= cfg.lr_stall_epochs {
                    sgd.learning_rate /= 2.0;
                    lr_stalled = 0;
                }
            }
            StopDecision::Stop => break,
        }
    }

    // The first epoch always improves on "no score yet", so best is set.
    let (best_epoch, best_val_weighted, train_acc_at_best, val_acc_at_best, best_state) =
        best.expect("at least one epoch ran");
    model.load_state(&best_state)?;
    let overfit_ratio = if train_acc_at_best > 0.0 {
        val_acc_at_best / train_acc_at_best
    } else {
        0.0
    };
    Ok(FitOutcome {
        report: FitReport {
            epochs,
            best_epoch,
            best_val_weighted,
            train_acc_at_best,
            val_acc_at_best,
            overfit_ratio,
        },
        best_state,
    })
}

/// Percentile bootstrap 95% interval of the mean. A single sample or a
/// constant sample collapses to a point.
pub fn bootstrap_ci(samples: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(CoreError::Config("bootstrap of an empty sample".into()));
    }
    if resamples < 1 {
        return Err(CoreError::Config("resamples must be at least 1".into()));
    }
    let n = samples.len();
    let mut stream = RngStream::new(seed).derive(&[SALT_BOOTSTRAP]);
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut sum = 0.0f64;
        for _ in 0..n {
            sum += samples[stream.range(0..n)];
        }
        means.push(sum / n as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((
        quantile_sorted(&means, 0.025),
        quantile_sorted(&means, 0.975),
    ))
}

pub fn default_feature_map_grid(kind: ArchitectureKind) -> &'static [usize] {
    match kind {
        ArchitectureKind::AllConv => &[2, 4, 8, 12, 16, 20, 24],
        ArchitectureKind::KeyNet => &[8, 16, 24, 32, 40],
    }
}

pub fn default_dropout_grid() -> &'static [f64] {
    &[0.0, 0.1, 0.2]
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridResult {
    pub n_feature_maps: usize,
    pub dropout_p: f64,
    /// Best validation weighted score of each seed's run.
    pub scores: Vec<f64>,
    pub mean_score: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Train every (N_f, dropout) cell once per seed and aggregate the
/// validation weighted scores. `grid` of `None` uses the default sets
/// for the architecture.
pub fn grid_search(
    kind: ArchitectureKind,
    n_bins: usize,
    train: &[TrainItem],
    valid: &[TrainItem],
    cfg: &TrainConfig,
    seeds: &[u64],
    grid: Option<&[(usize, f64)]>,
) -> Result<Vec<GridResult>> {
    if seeds.is_empty() {
        return Err(CoreError::Config("grid search needs at least one seed".into()));
    }
    let cells: Vec<(usize, f64)> = match grid {
        Some(cells) => cells.to_vec(),
        None => {
            let mut cells = Vec::new();
            for &nf in default_feature_map_grid(kind) {
                for &p in default_dropout_grid() {
                    cells.push((nf, p));
                }
            }
            cells
        }
    };
    let mut results = Vec::with_capacity(cells.len());
    for (nf, p) in cells {
        let arch = match kind {
            ArchitectureKind::KeyNet => ArchitectureConfig::keynet(nf, p, n_bins),
            ArchitectureKind::AllConv => ArchitectureConfig::allconv(nf, p, n_bins),
        };
        let mut scores = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let mut model = Model::build(&arch, seed)?;
            let mut run_cfg = cfg.clone();
            run_cfg.seed = seed;
            let outcome = fit(&mut model, train, valid, &run_cfg)?;
            scores.push(outcome.report.best_val_weighted);
        }
        let mean_score = scores.iter().sum::<f64>() / scores.len() as f64;
        let (ci_low, ci_high) = bootstrap_ci(&scores, BOOTSTRAP_RESAMPLES, cfg.seed)?;
        results.push(GridResult {
            n_feature_maps: nf,
            dropout_p: p,
            scores,
            mean_score,
            ci_low,
            ci_high,
        });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::Mode;
    use alloc::vec;

    /// Spectrogram whose row t carries a unique marker in every bin.
    fn marked_spec(frames: usize, bins: usize) -> LogFreqSpectrogram {
        let values = (0..frames * bins)
            .map(|i| {
                let (t, b) = (i / bins, i % bins);
                (t * 1000 + b) as f32
            })
            .collect();
        LogFreqSpectrogram::from_values(values, frames, bins).unwrap()
    }

    fn item(spec: LogFreqSpectrogram, tonic: u8, mode: Mode) -> TrainItem {
        TrainItem {
            spec,
            label: KeyLabel::new(tonic, mode).unwrap(),
        }
    }

    #[test]
    fn snippet_of_long_piece_is_a_contiguous_slice() {
        let spec = marked_spec(600, 4);
        let mut starts = Vec::new();
        for k in 0..300 {
            let mut rng = RngStream::new(77).derive(&[k]);
            let snip = sample_snippet(&spec, 100, &mut rng).unwrap();
            assert_eq!((snip.n_frames, snip.n_bins), (100, 4));
            let start = (snip.values[0] as usize) / 1000;
            assert!(start <= 500);
            let expected = &spec.values[start * 4..(start + 100) * 4];
            assert_eq!(&snip.values[..], expected);
            starts.push(start);
        }
        // Uniform draws must spread across the range.
        assert!(starts.iter().min().unwrap() < &40);
        assert!(starts.iter().max().unwrap() > &460);
    }

    #[test]
    fn snippet_of_exact_length_is_the_piece() {
        let spec = marked_spec(100, 3);
        let mut rng = RngStream::new(1);
        let snip = sample_snippet(&spec, 100, &mut rng).unwrap();
        assert_eq!(snip, spec);
    }

    #[test]
    fn short_piece_zero_padded_on_the_right() {
        let spec = marked_spec(40, 3);
        let mut rng = RngStream::new(1);
        let snip = sample_snippet(&spec, 100, &mut rng).unwrap();
        assert_eq!(snip.n_frames, 100);
        assert_eq!(&snip.values[..40 * 3], &spec.values[..]);
        assert!(snip.values[40 * 3..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn augmentation_draws_cover_range_and_relabel_by_shift() {
        let base = item(marked_spec(30, 30), 0, Mode::Major);
        let mut seen = [false; 12];
        for k in 0..200u64 {
            let mut stream = RngStream::new(5).derive(&[k]);
            let (shift, _, label) = augment_item(&base, 10, &mut stream).unwrap();
            assert!((SHIFT_MIN..=SHIFT_MAX).contains(&shift));
            seen[(shift - SHIFT_MIN) as usize] = true;
            assert_eq!(label, base.label.transpose(shift));
            if shift == 7 {
                // C major shifted up a fifth is G major.
                assert_eq!(label, KeyLabel::new(7, Mode::Major).unwrap());
            }
        }
        assert!(seen.iter().all(|s| *s), "shifts seen: {seen:?}");
    }

    #[test]
    fn batches_are_reproducible_and_epoch_sensitive() {
        // Bins must cover the widest pitch shift: 7 semitones = 14 bins.
        let items: Vec<TrainItem> = (0..3)
            .map(|i| item(marked_spec(20, 20), i as u8, Mode::Minor))
            .collect();
        let cfg = TrainConfig {
            snippet_frames: 10,
            seed: 9,
            ..TrainConfig::default()
        };
        let (a, ta) = make_batch(&items, &[0, 1, 2], &cfg, 1).unwrap();
        let (b, tb) = make_batch(&items, &[0, 1, 2], &cfg, 1).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(ta, tb);
        assert_eq!(a.shape(), &[3, 1, 20, 10]);
        let (c, _) = make_batch(&items, &[0, 1, 2], &cfg, 2).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn unshifted_exact_length_batch_row_is_the_spectrogram() {
        let items = vec![item(marked_spec(10, 4), 3, Mode::Major)];
        let cfg = TrainConfig {
            snippet_frames: 10,
            seed: 11,
            ..TrainConfig::default()
        };
        // Find an epoch whose stream draws shift 0 for item 0.
        let epoch = (1..500)
            .find(|&e| {
                let mut s = item_stream(cfg.seed, e, 0);
                s.range::<i32, _>(SHIFT_MIN..=SHIFT_MAX) == 0
            })
            .expect("some epoch draws shift 0");
        let (batch, targets) = make_batch(&items, &[0], &cfg, epoch).unwrap();
        assert_eq!(batch.data(), items[0].spec.to_input_tensor().data());
        assert_eq!(targets, vec![items[0].label.class_index()]);
    }

    #[test]
    fn epoch_order_is_a_seeded_permutation() {
        let a = epoch_order(32, 4, 1);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..32).collect::<Vec<_>>());
        assert_eq!(a, epoch_order(32, 4, 1));
        assert_ne!(a, epoch_order(32, 4, 2));
        assert_ne!(a, epoch_order(32, 5, 1));
    }

    #[test]
    fn early_stop_patience_example() {
        let mut stopper = EarlyStop::new(5);
        let mut decisions = Vec::new();
        for epoch in 1..=10 {
            let score = 1.0 - epoch as f64 * 0.1;
            let d = stopper.observe(score);
            decisions.push(d);
            if d == StopDecision::Stop {
                break;
            }
        }
        assert_eq!(decisions.len(), 6, "stops at epoch 6");
        assert_eq!(decisions[0], StopDecision::Improved);
        assert!(decisions[1..5].iter().all(|d| *d == StopDecision::Wait));
        assert_eq!(decisions[5], StopDecision::Stop);
    }

    #[test]
    fn early_stop_resets_on_improvement() {
        let mut stopper = EarlyStop::new(3);
        assert_eq!(stopper.observe(0.5), StopDecision::Improved);
        assert_eq!(stopper.observe(0.4), StopDecision::Wait);
        assert_eq!(stopper.observe(0.5), StopDecision::Wait); // ties don't improve
        assert_eq!(stopper.observe(0.6), StopDecision::Improved);
        assert_eq!(stopper.stalled_epochs(), 0);
    }

    /// Tiny separable corpus: each key marks a bin pair that moves two
    /// bins per semitone, so augmentation stays label-consistent.
    fn keyed_items(tonics: &[u8], frames: usize) -> Vec<TrainItem> {
        let bins = 40;
        tonics
            .iter()
            .map(|&t| {
                let mut values = vec![0.0f32; frames * bins];
                for frame in 0..frames {
                    values[frame * bins + 8 + 2 * t as usize] = 1.0;
                }
                item(
                    LogFreqSpectrogram::from_values(values, frames, bins).unwrap(),
                    t,
                    Mode::Major,
                )
            })
            .collect()
    }

    fn quick_cfg(seed: u64, max_epochs: usize) -> TrainConfig {
        TrainConfig {
            batch_size: 4,
            max_epochs,
            patience: 50,
            learning_rate: 0.02,
            momentum: 0.9,
            lr_stall_epochs: 5,
            snippet_frames: 8,
            seed,
        }
    }

    #[test]
    fn fit_is_deterministic_and_respects_invariants() {
        let train_items = keyed_items(&[0, 1, 2, 3, 4, 5, 6, 7], 12);
        let valid_items = keyed_items(&[0, 2, 4, 6], 12);
        let cfg = quick_cfg(3, 6);
        let arch = ArchitectureConfig::keynet(2, 0.0, 40);

        let mut model_a = Model::build(&arch, 1).unwrap();
        let out_a = fit(&mut model_a, &train_items, &valid_items, &cfg).unwrap();
        let mut model_b = Model::build(&arch, 1).unwrap();
        let out_b = fit(&mut model_b, &train_items, &valid_items, &cfg).unwrap();

        assert_eq!(out_a.report, out_b.report);
        assert_eq!(out_a.best_state, out_b.best_state);

        let report = &out_a.report;
        assert!(report.best_epoch <= report.epochs.len());
        assert!(report.epochs.len() <= cfg.max_epochs);
        assert!(report.overfit_ratio >= 0.0);
        for rec in &report.epochs {
            assert!(rec.train_loss.is_finite());
            assert!((0.0..=1.0).contains(&rec.train_acc));
            assert!((0.0..=1.0).contains(&rec.val_weighted));
        }
    }

    #[test]
    fn fit_leaves_model_at_the_recorded_best_checkpoint() {
        let train_items = keyed_items(&[0, 1, 2, 3, 4, 5], 12);
        let valid_items = keyed_items(&[1, 3, 5], 12);
        let cfg = quick_cfg(8, 5);
        let mut model = Model::build(&ArchitectureConfig::keynet(2, 0.1, 40), 2).unwrap();
        let outcome = fit(&mut model, &train_items, &valid_items, &cfg).unwrap();
        let (reeval, _) = validation_scores(&model, &valid_items).unwrap();
        assert!(
            (reeval - outcome.report.best_val_weighted).abs() < 1e-6,
            "recorded {} vs re-evaluated {}",
            outcome.report.best_val_weighted,
            reeval
        );
    }

    #[test]
    fn fit_reduces_loss_on_separable_data() {
        let train_items = keyed_items(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11], 12);
        let valid_items = keyed_items(&[0, 3, 6, 9], 12);
        let cfg = quick_cfg(1, 25);
        let mut model = Model::build(&ArchitectureConfig::keynet(2, 0.0, 40), 5).unwrap();
        let outcome = fit(&mut model, &train_items, &valid_items, &cfg).unwrap();
        let first = outcome.report.epochs.first().unwrap().train_loss;
        let last_best = outcome
            .report
            .epochs
            .iter()
            .map(|r| r.train_loss)
            .fold(f64::INFINITY, f64::min);
        assert!(
            last_best < first * 0.7,
            "loss went {first} -> best {last_best}"
        );
    }

    #[test]
    fn runaway_learning_rate_reports_nonfinite_loss() {
        let train_items = keyed_items(&[0, 1, 2, 3], 12);
        let valid_items = keyed_items(&[0, 1], 12);
        let mut cfg = quick_cfg(2, 40);
        // Large enough that the first update drives f32 logits to inf.
        cfg.learning_rate = 1e30;
        let mut model = Model::build(&ArchitectureConfig::keynet(2, 0.0, 40), 3).unwrap();
        match fit(&mut model, &train_items, &valid_items, &cfg) {
            Err(CoreError::NonFiniteLoss { epoch, batch, lr }) => {
                assert!(epoch >= 1);
                assert!(batch >= 1);
                assert!(lr > 0.0);
            }
            other => panic!("expected NonFiniteLoss, got {other:?}"),
        }
    }

    #[test]
    fn fit_rejects_bad_setups() {
        let items = keyed_items(&[0, 1], 12);
        let cfg = quick_cfg(1, 2);
        let mut model = Model::build(&ArchitectureConfig::keynet(2, 0.0, 40), 1).unwrap();
        assert!(fit(&mut model, &[], &items, &cfg).is_err());
        assert!(fit(&mut model, &items, &[], &cfg).is_err());

        let mut zero_batch = cfg.clone();
        zero_batch.batch_size = 0;
        assert!(fit(&mut model, &items, &items, &zero_batch).is_err());

        // AllConv needs 8 frames; a 4-frame snippet cannot feed it.
        let mut allconv = Model::build(&ArchitectureConfig::allconv(2, 0.0, 40), 1).unwrap();
        let mut short = cfg.clone();
        short.snippet_frames = 4;
        assert!(fit(&mut allconv, &items, &items, &short).is_err());
    }

    #[test]
    fn bootstrap_point_cases_collapse() {
        let (lo, hi) = bootstrap_ci(&[0.4], 2000, 1).unwrap();
        assert_eq!((lo, hi), (0.4, 0.4));
        // 0.75 is exact in binary, so resample means stay bit-equal.
        let (lo, hi) = bootstrap_ci(&[0.75, 0.75, 0.75], 2000, 1).unwrap();
        assert_eq!((lo, hi), (0.75, 0.75));
        assert!(bootstrap_ci(&[], 100, 1).is_err());
    }

    #[test]
    fn bootstrap_interval_brackets_the_mean() {
        let samples: Vec<f64> = (0..20).map(|i| i as f64 / 10.0).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let (lo, hi) = bootstrap_ci(&samples, 4000, 3).unwrap();
        assert!(lo < mean && mean < hi, "{lo} {mean} {hi}");
        assert!(lo >= 0.0 && hi <= 1.9);
        let again = bootstrap_ci(&samples, 4000, 3).unwrap();
        assert_eq!((lo, hi), again);
    }

    #[test]
    fn default_grids_match_published_sets() {
        let allconv: Vec<(usize, f64)> = default_feature_map_grid(ArchitectureKind::AllConv)
            .iter()
            .flat_map(|&nf| default_dropout_grid().iter().map(move |&p| (nf, p)))
            .collect();
        assert_eq!(allconv.len(), 21);
        let keynet_nf = default_feature_map_grid(ArchitectureKind::KeyNet);
        assert_eq!(keynet_nf, &[8, 16, 24, 32, 40]);
        assert_eq!(keynet_nf.len() * default_dropout_grid().len(), 15);
    }

    #[test]
    fn grid_search_aggregates_per_cell() {
        let train_items = keyed_items(&[0, 1, 2, 3], 12);
        let valid_items = keyed_items(&[0, 2], 12);
        let cfg = quick_cfg(1, 2);
        let rows = grid_search(
            ArchitectureKind::KeyNet,
            40,
            &train_items,
            &valid_items,
            &cfg,
            &[1, 2],
            Some(&[(2, 0.0), (2, 0.1)]),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.scores.len(), 2);
            let min = row.scores.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = row.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(row.ci_low >= min - 1e-12 && row.ci_high <= max + 1e-12);
            assert!(row.ci_low <= row.mean_score + 1e-12);
            assert!(row.mean_score <= row.ci_high + 1e-12);
        }
        assert!(grid_search(
            ArchitectureKind::KeyNet,
            40,
            &train_items,
            &valid_items,
            &cfg,
            &[],
            Some(&[(2, 0.0)])
        )
        .is_err());
    }
}
