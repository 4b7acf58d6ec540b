use super::{Gradients, OptimizerKind, ParameterSet, TrainConfig};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Adam moments (unused by SGD), one buffer per learnable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(params: &ParameterSet) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .learnable()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        Self {
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }
}

/// SGD: `p -= lr * g`. Adam: bias-corrected moments with
/// beta1 0.9, beta2 0.999, eps 1e-8.
pub fn optimizer_step(
    params: &mut ParameterSet,
    grads: &Gradients,
    state: &mut OptimizerState,
    config: &TrainConfig,
) {
    let lr = config.learning_rate;
    state.step += 1;
    let tensors = params.learnable_mut();
    debug_assert_eq!(tensors.len(), grads.tensors.len());
    match config.optimizer {
        OptimizerKind::Sgd => {
            for (p, g) in tensors.into_iter().zip(&grads.tensors) {
                for (pv, gv) in p.iter_mut().zip(g) {
                    *pv -= lr * gv;
                }
            }
        }
        OptimizerKind::Adam => {
            let t = state.step as i32;
            let c1 = 1.0 - BETA1.powi(t);
            let c2 = 1.0 - BETA2.powi(t);
            for (((p, g), m), v) in tensors
                .into_iter()
                .zip(&grads.tensors)
                .zip(&mut state.first_moment)
                .zip(&mut state.second_moment)
            {
                for i in 0..p.len() {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}
