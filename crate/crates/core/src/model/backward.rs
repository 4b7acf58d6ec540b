use super::forward::{softmax, Mode, Trace};
use super::gemm::{gemm, View};
use super::{Gradients, ParameterSet};
use crate::error::{Error, Result};

/// Exact gradients of the mean batch cross-entropy with respect to every
/// learnable tensor, reusing the dropout mask and pooling choices recorded in
/// a train-mode trace.
pub fn backward(params: &ParameterSet, trace: &Trace, gold: &[usize]) -> Result<Gradients> {
    if trace.mode != Mode::Train {
        return Err(Error::Shape("backward needs a train-mode trace".into()));
    }
    let b = trace.batch;
    if gold.len() != b {
        return Err(Error::Shape(format!(
            "{} gold labels for a batch of {b}",
            gold.len()
        )));
    }
    let cfg = &params.config;
    let len = cfg.max_len;
    let rows = b * len;

    // d(mean CE)/d(logits) = (softmax - onehot) / B
    let mut grad_out: Vec<f64> = Vec::with_capacity(b * 2);
    for (pair, &g) in trace.logits.chunks_exact(2).zip(gold) {
        let p = softmax([pair[0], pair[1]]);
        for (c, pc) in p.iter().enumerate() {
            let target = if c == g { 1.0 } else { 0.0 };
            grad_out.push((pc - target) / b as f64);
        }
    }

    let mut dense_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(params.dense.len());
    for (li, layer) in params.dense.iter().enumerate().rev() {
        let input = &trace.dense_inputs[li];
        let (n_in, n_out) = (layer.in_dim, layer.out_dim);
        let mut dw = vec![0.0; n_out * n_in];
        gemm(
            View::row_major(&grad_out, b, n_out).t(),
            View::row_major(input, b, n_in),
            0.0,
            &mut dw,
        );
        let mut db = vec![0.0; n_out];
        for r in grad_out.chunks_exact(n_out) {
            for (acc, v) in db.iter_mut().zip(r) {
                *acc += v;
            }
        }
        let mut grad_in = vec![0.0; b * n_in];
        gemm(
            View::row_major(&grad_out, b, n_out),
            View::row_major(&layer.weight, n_out, n_in),
            0.0,
            &mut grad_in,
        );
        if li > 0 {
            // The input of this layer is the ReLU output of the previous one.
            for (g, &x) in grad_in.iter_mut().zip(input) {
                if x <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        dense_grads.push((dw, db));
        grad_out = grad_in;
    }
    dense_grads.reverse();

    // Unpool: route each pooled gradient to its argmax position.
    let channels = params.conv.last().map(|c| c.out_ch).unwrap_or(0);
    let in0 = cfg.pooled_dim();
    let mut grad_act = vec![0.0; rows * channels];
    for bi in 0..b {
        for c in 0..channels {
            let t = trace.pool_argmax[bi * channels + c];
            grad_act[(bi * len + t) * channels + c] = grad_out[bi * in0 + c];
        }
    }
    if let Some(mask) = &trace.dropout_mask {
        for (g, m) in grad_act.iter_mut().zip(mask) {
            *g *= m;
        }
    }

    let mut conv_grads: Vec<[Vec<f64>; 4]> = Vec::with_capacity(params.conv.len());
    for (li, layer) in params.conv.iter().enumerate().rev() {
        let t = &trace.conv[li];
        let (ci, co, k) = (layer.in_ch, layer.out_ch, layer.kernel_size);

        // ReLU, then batch-norm affine.
        let mut dgain = vec![0.0; co];
        let mut dshift = vec![0.0; co];
        let mut dxhat = grad_act;
        for r in 0..rows {
            for c in 0..co {
                let idx = r * co + c;
                let g = if t.out[idx] > 0.0 { dxhat[idx] } else { 0.0 };
                dgain[c] += g * t.xhat[idx];
                dshift[c] += g;
                dxhat[idx] = g * layer.gain[c];
            }
        }

        // Batch-norm normalization with batch statistics.
        let n = rows as f64;
        let mut sum_d = vec![0.0; co];
        let mut sum_dx = vec![0.0; co];
        for r in 0..rows {
            for c in 0..co {
                let idx = r * co + c;
                sum_d[c] += dxhat[idx];
                sum_dx[c] += dxhat[idx] * t.xhat[idx];
            }
        }
        let mut dz = dxhat;
        for r in 0..rows {
            for c in 0..co {
                let idx = r * co + c;
                dz[idx] = t.inv_std[c] / n * (n * dz[idx] - sum_d[c] - t.xhat[idx] * sum_dx[c]);
            }
        }

        let mut dkernel = vec![0.0; co * ci * k];
        gemm(
            View::row_major(&dz, rows, co).t(),
            View::row_major(&t.col, rows, ci * k),
            0.0,
            &mut dkernel,
        );
        let mut dbias = vec![0.0; co];
        for r in dz.chunks_exact(co) {
            for (acc, v) in dbias.iter_mut().zip(r) {
                *acc += v;
            }
        }

        grad_act = if li > 0 {
            let mut dcol = vec![0.0; rows * ci * k];
            gemm(
                View::row_major(&dz, rows, co),
                View::row_major(&layer.kernel, co, ci * k),
                0.0,
                &mut dcol,
            );
            col2im(&dcol, b, len, ci, k)
        } else {
            Vec::new()
        };
        conv_grads.push([dkernel, dbias, dgain, dshift]);
    }
    conv_grads.reverse();

    let mut tensors = Vec::with_capacity(conv_grads.len() * 4 + dense_grads.len() * 2);
    for g in conv_grads {
        tensors.extend(g);
    }
    for (dw, db) in dense_grads {
        tensors.push(dw);
        tensors.push(db);
    }
    Ok(Gradients { tensors })
}

/// Adjoint of `im2col`: scatter-add column gradients back to positions.
fn col2im(dcol: &[f64], batch: usize, len: usize, ch: usize, k: usize) -> Vec<f64> {
    let pad = (k - 1) / 2;
    let width = ch * k;
    let mut dx = vec![0.0; batch * len * ch];
    for b in 0..batch {
        for t in 0..len {
            let row = &dcol[(b * len + t) * width..(b * len + t + 1) * width];
            for j in 0..k {
                let Some(src) = (t + j).checked_sub(pad).filter(|&s| s < len) else {
                    continue;
                };
                let dst = &mut dx[(b * len + src) * ch..(b * len + src + 1) * ch];
                for (i, d) in dst.iter_mut().enumerate() {
                    *d += row[i * k + j];
                }
            }
        }
    }
    dx
}
