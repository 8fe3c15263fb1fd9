use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use super::buffer::RolloutBuffer;
use super::PpoConfig;
use crate::env::OBS_DIM;
use crate::nn::{gaussian_entropy, log_prob_gradients, squashed_gaussian_log_prob, Adam, PolicyParameters};
use crate::{Error, Result};

/// Averages over all minibatches of an update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    /// Largest `|ρ − 1|` in the first minibatch of the first epoch.
    pub initial_ratio_deviation: f64,
    /// Mean gradient norm before clipping.
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// PPO objective term `min(ρ·Â, clip(ρ, 1−ε, 1+ε)·Â)` and its derivative
/// with respect to `ρ`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if unclipped <= clipped {
        (unclipped, advantage)
    } else {
        (clipped, 0.0)
    }
}

/// Zero mean, unit population variance. Left untouched for fewer than two
/// samples.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    for a in adv {
        *a = (*a - mean) / std;
    }
}

#[derive(Default)]
struct Partial {
    policy_loss: f64,
    value_loss: f64,
    clipped: usize,
    kl: f64,
    max_dev: f64,
}

/// Runs `epochs` passes of shuffled minibatch updates over a buffer whose
/// advantages have been computed.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut PolicyParameters,
    optimizer: &mut Adam,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    let n = buffer.len();
    if n == 0 || buffer.advantages.len() != n || buffer.returns.len() != n {
        return Err(Error::Usage("ppo_update needs a full buffer with advantages".into()));
    }
    let batch = config.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = UpdateStats::default();
    let mut flat = policy.to_flat();

    for epoch in 0..config.epochs {
        order.shuffle(rng);
        for (mb_index, idx) in order.chunks(batch).enumerate() {
            let mut adv: Vec<f64> = idx.iter().map(|&i| buffer.advantages[i]).collect();
            normalize_advantages(&mut adv);
            let m = idx.len() as f64;

            let (mut grads, part) = minibatch_gradients(policy, buffer, idx, &adv, config)?;
            let entropy = gaussian_entropy(&policy.log_std);
            for g in &mut grads.log_std {
                *g -= config.entropy_coefficient;
            }
            let loss = part.policy_loss + config.value_coefficient * part.value_loss
                - config.entropy_coefficient * entropy;
            if !loss.is_finite() {
                return Err(Error::NumericalDivergence {
                    reason: format!(
                        "non-finite PPO loss in epoch {epoch}, minibatch {mb_index} \
                         (policy {}, value {})",
                        part.policy_loss, part.value_loss
                    ),
                    state: None,
                });
            }

            let mut g = grads.to_flat();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::NumericalDivergence {
                    reason: format!("non-finite gradient in epoch {epoch}, minibatch {mb_index}"),
                    state: None,
                });
            }
            if norm > config.max_gradient_norm {
                let s = config.max_gradient_norm / (norm + 1e-6);
                g.iter_mut().for_each(|v| *v *= s);
            }
            optimizer.step(&mut flat, &g);
            policy.set_flat(&flat);
            policy.clamp_log_std();
            flat.copy_from_slice(&policy.to_flat()[..]);

            if epoch == 0 && mb_index == 0 {
                stats.initial_ratio_deviation = part.max_dev;
            }
            stats.policy_loss += part.policy_loss;
            stats.value_loss += part.value_loss;
            stats.entropy += entropy;
            stats.clip_fraction += part.clipped as f64 / m;
            stats.approx_kl += part.kl / m;
            stats.grad_norm += norm;
            stats.minibatches += 1;
        }
    }

    let k = stats.minibatches as f64;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    stats.clip_fraction /= k;
    stats.approx_kl /= k;
    stats.grad_norm /= k;
    Ok(stats)
}

/// Losses (averaged over the minibatch) and their gradients; the value
/// gradient includes the value coefficient.
fn minibatch_gradients(
    policy: &PolicyParameters,
    buffer: &RolloutBuffer,
    idx: &[usize],
    adv: &[f64],
    config: &PpoConfig,
) -> Result<(PolicyParameters, Partial)> {
    let m = idx.len() as f64;
    let obs = DMatrix::from_fn(OBS_DIM, idx.len(), |r, c| buffer.observations[idx[c]][r]);
    let mut grads = policy.zeros_like();
    let mut part = Partial::default();

    let cache = policy.actor.forward_batch(obs.clone())?;
    let means = cache.output();
    let mut out_grad = DMatrix::<f64>::zeros(means.nrows(), idx.len());
    for (c, (&i, &a)) in idx.iter().zip(adv).enumerate() {
        let mean: Vec<f64> = means.column(c).iter().copied().collect();
        let u = &buffer.pre_tanh[i];
        let log_prob = squashed_gaussian_log_prob(&mean, &policy.log_std, u);
        let log_ratio = log_prob - buffer.log_probs[i];
        let ratio = log_ratio.exp();
        let (surrogate, d_ratio) = clipped_surrogate(ratio, a, config.clip_range);
        part.policy_loss -= surrogate / m;
        part.max_dev = part.max_dev.max((ratio - 1.0).abs());
        if (ratio - 1.0).abs() > config.clip_range {
            part.clipped += 1;
        }
        part.kl += (ratio - 1.0) - log_ratio;

        // d(−surrogate/m)/d log π = −(∂surrogate/∂ρ)·ρ/m.
        let coef = -d_ratio * ratio / m;
        if coef != 0.0 {
            let (d_mean, d_log_std) = log_prob_gradients(&mean, &policy.log_std, u);
            for (r, g) in d_mean.iter().enumerate() {
                out_grad[(r, c)] = coef * g;
            }
            for (g, d) in grads.log_std.iter_mut().zip(d_log_std) {
                *g += coef * d;
            }
        }
    }
    policy.actor.backward_batch(&cache, out_grad, &mut grads.actor);

    let vcache = policy.critic.forward_batch(obs)?;
    let values = vcache.output();
    let mut vgrad = DMatrix::<f64>::zeros(1, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        let err = values[(0, c)] - buffer.returns[i];
        part.value_loss += err * err / m;
        vgrad[(0, c)] = config.value_coefficient * 2.0 * err / m;
    }
    policy.critic.backward_batch(&vcache, vgrad, &mut grads.critic);
    Ok((grads, part))
}


#[cfg(test)]
mod properties {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn normalized_advantages_have_zero_mean_unit_std(
            adv in prop::collection::vec(-100.0f64..100.0, 2..300)
                .prop_filter("not constant", |v| v.iter().any(|a| (a - v[0]).abs() > 1e-3)),
        ) {
            let mut a = adv.clone();
            normalize_advantages(&mut a);
            let n = a.len() as f64;
            let mean = a.iter().sum::<f64>() / n;
            let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((std - 1.0).abs() < 1e-6);
        }

        #[test]
        fn surrogate_never_exceeds_the_unclipped_objective(
            ratio in 0.0f64..3.0,
            adv in -5.0f64..5.0,
            clip in 0.01f64..0.9,
        ) {
            let (value, slope) = clipped_surrogate(ratio, adv, clip);
            prop_assert!(value <= ratio * adv + 1e-12);
            prop_assert!(slope == 0.0 || slope == adv);
        }
    }
}
