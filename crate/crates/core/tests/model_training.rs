mod common;

use cartograf::features::FeaturizedExample;
use cartograf::model::{
    backward, evaluate, forward, init_model, mean_loss, optimizer_step, train, Mode, ModelConfig,
    OptimizerKind, OptimizerState, ParameterSet, TrainConfig,
};
use cartograf::rng::SplitMix64;
use common::{random_batch, tiny_config};

const MASK_SEED: u64 = 99;

/// Train-mode loss with a dropout mask fixed by reseeding.
fn loss_at(params: &ParameterSet, batch: &[FeaturizedExample]) -> f64 {
    let refs: Vec<&FeaturizedExample> = batch.iter().collect();
    let gold: Vec<usize> = batch.iter().map(|e| e.gold).collect();
    let (logits, _) = forward(params, &refs, Mode::Train, &mut SplitMix64::new(MASK_SEED)).unwrap();
    mean_loss(&logits, &gold)
}

fn analytic(params: &ParameterSet, batch: &[FeaturizedExample]) -> Vec<Vec<f64>> {
    let refs: Vec<&FeaturizedExample> = batch.iter().collect();
    let gold: Vec<usize> = batch.iter().map(|e| e.gold).collect();
    let (_, trace) = forward(params, &refs, Mode::Train, &mut SplitMix64::new(MASK_SEED)).unwrap();
    backward(params, &trace, &gold).unwrap().tensors
}

/// Largest relative error between analytic and central-difference
/// gradients over every learnable scalar, with the offending name.
fn worst_gradient_error(seed: u64) -> (f64, String) {
    let config = tiny_config();
    let params = init_model(&config, seed).unwrap();
    let batch = random_batch(5, &config, seed + 1000);
    let grads = analytic(&params, &batch);
    let names = params.learnable_names();
    let h = 1e-4;
    let mut worst = (0.0, String::new());
    for (t, name) in names.iter().enumerate() {
        for (i, &a) in grads[t].iter().enumerate() {
            let mut plus = params.clone();
            plus.learnable_mut()[t][i] += h;
            let mut minus = params.clone();
            minus.learnable_mut()[t][i] -= h;
            let numeric = (loss_at(&plus, &batch) - loss_at(&minus, &batch)) / (2.0 * h);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            if err > worst.0 {
                worst = (
                    err,
                    format!("{name}[{i}]: analytic {a:e}, numeric {numeric:e}"),
                );
            }
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 1..=5 {
        let (err, at) = worst_gradient_error(seed);
        assert!(err <= 1e-4, "seed {seed}: relative error {err:e} at {at}");
    }
}

#[test]
fn duplicated_batch_leaves_gradients_unchanged() {
    let config = ModelConfig {
        dropout_rate: 0.0,
        ..tiny_config()
    };
    let params = init_model(&config, 3).unwrap();
    let batch = random_batch(4, &config, 17);
    let doubled: Vec<FeaturizedExample> = batch.iter().chain(&batch).cloned().collect();
    let g1 = analytic(&params, &batch);
    let g2 = analytic(&params, &doubled);
    for (a, b) in g1.iter().flatten().zip(g2.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }
}

#[test]
fn dead_hidden_unit_has_zero_gradient() {
    let config = tiny_config();
    let mut params = init_model(&config, 4).unwrap();
    params.dense[0].bias[1] = -1e6;
    let batch = random_batch(6, &config, 8);
    let grads = analytic(&params, &batch);
    let names = params.learnable_names();
    let w = names.iter().position(|n| n == "fc0.weight").unwrap();
    let in_dim = params.dense[0].in_dim;
    assert!(grads[w][in_dim..2 * in_dim].iter().all(|g| *g == 0.0));
    assert_eq!(grads[w + 1][1], 0.0);
    let next = names.iter().position(|n| n == "fc1.weight").unwrap();
    let hidden = params.dense[0].out_dim;
    for row in 0..params.dense[1].out_dim {
        assert_eq!(grads[next][row * hidden + 1], 0.0);
    }
}

#[test]
fn full_batch_sgd_does_not_increase_loss() {
    let config = tiny_config();
    let train_config = TrainConfig {
        learning_rate: 1e-3,
        optimizer: OptimizerKind::Sgd,
        ..TrainConfig::default()
    };
    let mut monotone = 0;
    for seed in 1..=5 {
        let mut params = init_model(&config, seed).unwrap();
        let batch = random_batch(8, &config, seed + 50);
        let mut state = OptimizerState::new(&params);
        let mut prev = loss_at(&params, &batch);
        let mut ok = true;
        for _ in 0..20 {
            let refs: Vec<&FeaturizedExample> = batch.iter().collect();
            let gold: Vec<usize> = batch.iter().map(|e| e.gold).collect();
            let (_, trace) =
                forward(&params, &refs, Mode::Train, &mut SplitMix64::new(MASK_SEED)).unwrap();
            let grads = backward(&params, &trace, &gold).unwrap();
            optimizer_step(&mut params, &grads, &mut state, &train_config);
            let loss = loss_at(&params, &batch);
            if loss > prev + 1e-12 {
                ok = false;
            }
            prev = loss;
        }
        monotone += ok as usize;
    }
    assert!(monotone >= 4, "only {monotone}/5 seeds were monotone");
}

#[test]
fn training_is_bitwise_deterministic() {
    let config = ModelConfig {
        max_len: 8,
        input_dim: 4,
        conv_channels: vec![4; 5],
        fc_dims: vec![8, 4, 2],
        ..tiny_config()
    };
    let data = random_batch(70, &config, 5);
    let train_config = TrainConfig {
        epochs: 2,
        batch_size: 16,
        seed: 11,
        ..TrainConfig::default()
    };
    let run = || {
        let params = init_model(&config, 11).unwrap();
        train(params, &data, &train_config, None).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.epoch_losses, b.epoch_losses);
    for (x, y) in a.params.learnable().iter().zip(b.params.learnable()) {
        assert!(x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn zero_epochs_rejected() {
    let config = tiny_config();
    let params = init_model(&config, 1).unwrap();
    let data = random_batch(4, &config, 1);
    let bad = TrainConfig {
        epochs: 0,
        ..TrainConfig::default()
    };
    assert!(train(params, &data, &bad, None).is_err());
}

/// Class 1 has +1 and class 0 has -1 in embedding channel 0 everywhere,
/// over Gaussian noise, so a linear rule separates the classes.
#[test]
fn learns_linearly_separable_fixture() {
    let config = ModelConfig {
        max_len: 8,
        input_dim: 4,
        ..ModelConfig::default()
    };
    let mut data = random_batch(200, &config, 21);
    for (i, e) in data.iter_mut().enumerate() {
        e.gold = i % 2;
        let sign = if e.gold == 1 { 1.0 } else { -1.0 };
        for t in 0..config.max_len {
            e.matrix[t * config.input_dim] = sign + 0.3 * e.matrix[t * config.input_dim];
        }
    }
    let train_config = TrainConfig {
        seed: 3,
        ..TrainConfig::default()
    };
    let params = init_model(&config, 3).unwrap();
    let outcome = train(params, &data, &train_config, None).unwrap();
    let metrics = evaluate(&outcome.params, &data).unwrap();
    assert!(metrics.accuracy >= 0.95, "accuracy {}", metrics.accuracy);
}
