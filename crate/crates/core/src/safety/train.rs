use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Gradients, ModelParameters};
use super::{SafetyError, TrajectoryRecord};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Stop once an epoch's mean loss drops below this.
    pub target_loss: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch: 32,
            max_epochs: 200,
            seed: 0,
            target_loss: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: ModelParameters<T>,
    /// Mean loss seen during each epoch.
    pub loss_curve: Vec<f64>,
}

/// Adam state over the trainable arrays.
struct Adam<T> {
    m: Gradients<T>,
    v: Gradients<T>,
    t: i32,
    lr: T,
}

impl<T: Scalar> Adam<T> {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(heads: usize, lr: f64) -> Self {
        Adam {
            m: Gradients::zeros(heads),
            v: Gradients::zeros(heads),
            t: 0,
            lr: T::of(lr),
        }
    }

    fn step(&mut self, params: &mut ModelParameters<T>, g: &Gradients<T>) {
        self.t += 1;
        let (b1, b2, eps) = (T::of(Self::B1), T::of(Self::B2), T::of(Self::EPS));
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let ms = [
            &mut self.m.w_in,
            &mut self.m.w_rec,
            &mut self.m.bias,
            &mut self.m.head_w,
            &mut self.m.head_b,
        ];
        let vs = [
            &mut self.v.w_in,
            &mut self.v.w_rec,
            &mut self.v.bias,
            &mut self.v.head_w,
            &mut self.v.head_b,
        ];
        for (((p, g), m), v) in params
            .trainable_mut()
            .into_iter()
            .zip(g.slices())
            .zip(ms)
            .zip(vs)
        {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (T::one() - b1) * g[k];
                v[k] = b2 * v[k] + (T::one() - b2) * g[k] * g[k];
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                p[k] -= self.lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

/// Mean squared error over `data` and its gradient.
pub fn loss_and_gradient<T: Scalar>(
    params: &ModelParameters<T>,
    data: &[&TrajectoryRecord],
) -> Result<(T, Gradients<T>), SafetyError> {
    let mut g = Gradients::zeros(params.heads());
    let mut loss = T::zero();
    let n = T::of(data.len() as f64);
    for r in data {
        params.check_skill(r.skill)?;
        let cache = params.forward_encoded(params.encode(&r.views)?, r.skill);
        let err = cache.output - T::of(r.label);
        loss += err * err;
        params.backward(&cache, r.skill, T::of(2.0) * err / n, &mut g);
    }
    Ok((loss / n, g))
}

/// Mean squared error of `params` over `data`.
pub fn mse<T: Scalar>(
    params: &ModelParameters<T>,
    data: &[TrajectoryRecord],
) -> Result<f64, SafetyError> {
    let mut total = 0.0;
    for r in data {
        let y = params.forward(&r.views, r.skill)?.to_f64_lossy();
        total += (y - r.label).powi(2);
    }
    Ok(total / data.len().max(1) as f64)
}

/// Minibatch Adam on the trainable arrays; the encoder is never touched.
/// Shuffling is seeded, so equal inputs give bitwise-equal outputs.
pub fn train<T: Scalar>(
    params: &ModelParameters<T>,
    data: &[TrajectoryRecord],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>, SafetyError> {
    if data.is_empty() {
        return Err(SafetyError::EmptyDataset);
    }
    if let Some(i) = data.iter().position(|r| !r.label.is_finite()) {
        return Err(SafetyError::NonFiniteLabel(i));
    }
    let mut params = params.clone();
    // the encoder is frozen, so its outputs are computed once
    let embedded: Vec<Vec<Vec<T>>> = data
        .iter()
        .map(|r| {
            params.check_skill(r.skill)?;
            params.encode(&r.views)
        })
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(params.heads(), cfg.lr);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut curve = Vec::new();
    let batch = cfg.batch.max(1);

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut g = Gradients::zeros(params.heads());
            let n = T::of(chunk.len() as f64);
            for &k in chunk {
                let r = &data[k];
                let cache = params.forward_encoded(embedded[k].clone(), r.skill);
                let err = cache.output - T::of(r.label);
                epoch_loss += (err * err).to_f64_lossy();
                params.backward(&cache, r.skill, T::of(2.0) * err / n, &mut g);
            }
            adam.step(&mut params, &g);
        }
        epoch_loss /= data.len() as f64;
        if !epoch_loss.is_finite() || !params.is_finite() {
            return Err(SafetyError::Diverged {
                epoch,
                loss: epoch_loss,
            });
        }
        curve.push(epoch_loss);
        log::debug!("epoch {epoch}: loss {epoch_loss:.6}");
        if cfg.target_loss.is_some_and(|t| epoch_loss < t) {
            break;
        }
    }
    Ok(TrainOutcome {
        params,
        loss_curve: curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::safety::model::HeadInit;
    use crate::world::{VIEW_BINS, VIEW_COUNT};

    fn record(skill: usize, label: f64, k: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            scene_ref: "t".into(),
            skill,
            object: "o".into(),
            views: (0..VIEW_COUNT)
                .map(|v| {
                    (0..VIEW_BINS)
                        .map(|b| ((v * 5 + b) as f64 * k).cos().max(0.0))
                        .collect()
                })
                .collect(),
            label,
            scene: None,
        }
    }

    fn skills() -> Vec<String> {
        vec!["pick".into(), "place".into()]
    }

    #[test]
    fn single_record_is_memorized() {
        let p = ModelParameters::<f64>::new(&skills(), 1, HeadInit::Zero);
        let data = [record(0, 2.0, 0.3)];
        let cfg = TrainConfig {
            max_epochs: 500,
            ..TrainConfig::default()
        };
        let out = train(&p, &data, &cfg).unwrap();
        assert!(*out.loss_curve.last().unwrap() < 1e-4);
        assert!(mse(&out.params, &data).unwrap() < 1e-4);
        assert_eq!(out.params.encoder_digest(), p.encoder_digest());
        assert_eq!(out.params.encoder, p.encoder);
    }

    #[test]
    fn training_is_deterministic() {
        let p = ModelParameters::<f64>::new(&skills(), 1, HeadInit::Random(0.01));
        let data: Vec<_> = (0..40)
            .map(|k| record(k % 2, (k % 3) as f64, 0.1 + k as f64 * 0.01))
            .collect();
        let cfg = TrainConfig {
            max_epochs: 3,
            seed: 7,
            ..TrainConfig::default()
        };
        let a = train(&p, &data, &cfg).unwrap();
        let b = train(&p, &data, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.loss_curve, b.loss_curve);
    }

    #[test]
    fn errors() {
        let p = ModelParameters::<f64>::new(&skills(), 1, HeadInit::Zero);
        assert!(matches!(
            train(&p, &[], &TrainConfig::default()),
            Err(SafetyError::EmptyDataset)
        ));
        let bad = [record(0, f64::NAN, 0.1)];
        assert!(matches!(
            train(&p, &bad, &TrainConfig::default()),
            Err(SafetyError::NonFiniteLabel(0))
        ));
        let huge = TrainConfig {
            lr: 1e300,
            max_epochs: 5,
            ..TrainConfig::default()
        };
        let data = [record(0, 1e300, 0.1)];
        assert!(matches!(
            train(&p, &data, &huge),
            Err(SafetyError::Diverged { .. })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut p = ModelParameters::<f64>::new(&skills(), 5, HeadInit::Random(0.3));
        p.bias
            .iter_mut()
            .enumerate()
            .for_each(|(k, b)| *b = 0.01 * k as f64);
        let recs: Vec<_> = (0..4)
            .map(|k| record(k % 2, 1.0 + k as f64, 0.2 * k as f64 + 0.1))
            .collect();
        let refs: Vec<&TrajectoryRecord> = recs.iter().collect();
        let (_, g) = loss_and_gradient(&p, &refs).unwrap();
        let eps = 1e-5;
        for (s, idx) in [(0usize, 17usize), (1, 100), (2, 3), (3, 70), (4, 1)] {
            let mut plus = p.clone();
            plus.trainable_mut()[s][idx] += eps;
            let mut minus = p.clone();
            minus.trainable_mut()[s][idx] -= eps;
            let lp = loss_and_gradient(&plus, &refs).unwrap().0;
            let lm = loss_and_gradient(&minus, &refs).unwrap().0;
            let fd = (lp - lm) / (2.0 * eps);
            let an = g.slices()[s][idx];
            assert!(
                (fd - an).abs() <= 1e-6 * an.abs().max(1e-3),
                "{s}/{idx}: {fd} vs {an}"
            );
        }
    }
}
