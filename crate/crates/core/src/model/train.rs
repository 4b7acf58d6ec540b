use super::backward::backward;
use super::forward::{forward, mean_loss, Mode};
use super::optim::{optimizer_step, OptimizerState};
use super::{ParameterSet, TrainConfig};
use crate::error::{Error, Result};
use crate::features::FeaturizedExample;
use crate::rng::SplitMix64;

/// Batch size used for eval-mode passes. Eval outputs do not depend on it.
pub const EVAL_CHUNK: usize = 64;

const SHUFFLE_STREAM: u64 = 20;
const DROPOUT_STREAM: u64 = 21;

/// Called once at the end of every epoch with the current parameters.
pub trait EpochObserver {
    fn epoch_end(&mut self, params: &ParameterSet, epoch: usize) -> Result<()>;
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParameterSet,
    /// Example-weighted mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Minibatch training. Each epoch: seeded shuffle, one optimizer step per
/// batch, then the observer (if any). Same inputs, same bits.
pub fn train(
    mut params: ParameterSet,
    trainset: &[FeaturizedExample],
    config: &TrainConfig,
    mut observer: Option<&mut dyn EpochObserver>,
) -> Result<TrainOutcome> {
    config.validate()?;
    params.validate()?;
    if trainset.is_empty() {
        return Err(Error::data("training set is empty"));
    }
    let mut shuffle_rng = SplitMix64::derived(config.seed, SHUFFLE_STREAM);
    let mut dropout_rng = SplitMix64::derived(config.seed, DROPOUT_STREAM);
    let mut state = OptimizerState::new(&params);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..trainset.len()).collect();
        if config.shuffle {
            shuffle_rng.shuffle(&mut order);
        }
        let mut loss_sum = 0.0;
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&FeaturizedExample> = chunk.iter().map(|&i| &trainset[i]).collect();
            let gold: Vec<usize> = batch.iter().map(|e| e.gold).collect();
            let (logits, trace) = match forward(&params, &batch, Mode::Train, &mut dropout_rng) {
                Ok(out) => out,
                Err(Error::NonFinite(_)) => return Err(Error::Diverged { epoch, batch: bi }),
                Err(e) => return Err(e),
            };
            let loss = mean_loss(&logits, &gold);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: bi });
            }
            loss_sum += loss * batch.len() as f64;
            let grads = backward(&params, &trace, &gold)?;
            params.update_running_stats(&trace);
            optimizer_step(&mut params, &grads, &mut state, config);
        }
        epoch_losses.push(loss_sum / trainset.len() as f64);
        if let Some(obs) = observer.as_deref_mut() {
            obs.epoch_end(&params, epoch)?;
        }
    }
    Ok(TrainOutcome {
        params,
        epoch_losses,
    })
}

/// Eval-mode logits for every example, in input order.
pub fn predict_logits(
    params: &ParameterSet,
    examples: &[FeaturizedExample],
) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::with_capacity(examples.len());
    let mut unused = SplitMix64::new(0);
    for chunk in examples.chunks(EVAL_CHUNK) {
        let refs: Vec<&FeaturizedExample> = chunk.iter().collect();
        let (logits, _) = forward(params, &refs, Mode::Eval, &mut unused)?;
        out.extend(logits);
    }
    Ok(out)
}
