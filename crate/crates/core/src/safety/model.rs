use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SafetyError;
use crate::world::{VIEW_BINS, VIEW_COUNT};
use crate::Scalar;

pub const VIEW_DIM: usize = VIEW_BINS;
pub const EMBED_DIM: usize = 16;
pub const HIDDEN: usize = 64;

/// Frozen projection encoder, tanh recurrent aggregator over the five views,
/// one linear head per skill. Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters<T> {
    pub skills: Vec<String>,
    /// `EMBED_DIM × VIEW_DIM`, never trained.
    pub encoder: Vec<T>,
    /// `HIDDEN × EMBED_DIM`
    pub w_in: Vec<T>,
    /// `HIDDEN × HIDDEN`
    pub w_rec: Vec<T>,
    pub bias: Vec<T>,
    /// `I × HIDDEN`
    pub head_w: Vec<T>,
    pub head_b: Vec<T>,
}

/// Gradient of the trainable arrays, same layout as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub w_in: Vec<T>,
    pub w_rec: Vec<T>,
    pub bias: Vec<T>,
    pub head_w: Vec<T>,
    pub head_b: Vec<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros(heads: usize) -> Self {
        Gradients {
            w_in: vec![T::zero(); HIDDEN * EMBED_DIM],
            w_rec: vec![T::zero(); HIDDEN * HIDDEN],
            bias: vec![T::zero(); HIDDEN],
            head_w: vec![T::zero(); heads * HIDDEN],
            head_b: vec![T::zero(); heads],
        }
    }

    pub fn slices(&self) -> [&[T]; 5] {
        [
            &self.w_in,
            &self.w_rec,
            &self.bias,
            &self.head_w,
            &self.head_b,
        ]
    }

    fn slices_mut(&mut self) -> [&mut [T]; 5] {
        [
            &mut self.w_in,
            &mut self.w_rec,
            &mut self.bias,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }

    pub fn scale(&mut self, k: T) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|g| *g *= k);
        }
    }
}

/// How the heads start out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadInit {
    Zero,
    /// Gaussian with this standard deviation.
    Random(f64),
}

/// Projected views plus the hidden-state sequence, kept for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub embedded: Vec<Vec<T>>,
    /// `h_0 = 0` followed by one state per view.
    pub hidden: Vec<Vec<T>>,
    pub output: T,
}

fn normal_vec<T: Scalar>(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Vec<T> {
    let d = Normal::new(0.0, std).expect("finite std");
    (0..n).map(|_| T::of(d.sample(rng))).collect()
}

impl<T: Scalar> ModelParameters<T> {
    /// Seeded initialization. The encoder depends only on `seed`, so models
    /// built with the same seed share it.
    pub fn new(skills: &[String], seed: u64, heads: HeadInit) -> Self {
        let mut enc_rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = normal_vec(&mut enc_rng, EMBED_DIM * VIEW_DIM, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_4ead5);
        let w_in = normal_vec(
            &mut rng,
            HIDDEN * EMBED_DIM,
            1.0 / (EMBED_DIM as f64).sqrt(),
        );
        // contractive recurrence at start
        let w_rec = normal_vec(&mut rng, HIDDEN * HIDDEN, 0.5 / (HIDDEN as f64).sqrt());
        let i = skills.len();
        let (head_w, head_b) = match heads {
            HeadInit::Zero => (vec![T::zero(); i * HIDDEN], vec![T::zero(); i]),
            HeadInit::Random(std) => (
                normal_vec(&mut rng, i * HIDDEN, std),
                normal_vec(&mut rng, i, std),
            ),
        };
        ModelParameters {
            skills: skills.to_vec(),
            encoder,
            w_in,
            w_rec,
            bias: vec![T::zero(); HIDDEN],
            head_w,
            head_b,
        }
    }

    pub fn heads(&self) -> usize {
        self.skills.len()
    }

    pub fn skill_index(&self, skill: &str) -> Option<usize> {
        self.skills.iter().position(|s| s == skill)
    }

    pub fn trainable(&self) -> [&[T]; 5] {
        [
            &self.w_in,
            &self.w_rec,
            &self.bias,
            &self.head_w,
            &self.head_b,
        ]
    }

    pub fn trainable_mut(&mut self) -> [&mut [T]; 5] {
        [
            &mut self.w_in,
            &mut self.w_rec,
            &mut self.bias,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.trainable()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Project the views through the frozen encoder.
    pub fn encode(&self, views: &[Vec<f64>]) -> Result<Vec<Vec<T>>, SafetyError> {
        if views.len() != VIEW_COUNT {
            return Err(SafetyError::Dimension {
                what: "views",
                expected: VIEW_COUNT,
                found: views.len(),
            });
        }
        views
            .iter()
            .map(|v| {
                if v.len() != VIEW_DIM {
                    return Err(SafetyError::Dimension {
                        what: "view",
                        expected: VIEW_DIM,
                        found: v.len(),
                    });
                }
                Ok((0..EMBED_DIM)
                    .map(|r| {
                        let row = &self.encoder[r * VIEW_DIM..(r + 1) * VIEW_DIM];
                        row.iter().zip(v).map(|(&p, &x)| p * T::of(x)).sum()
                    })
                    .collect())
            })
            .collect()
    }

    /// Recurrent pass over already-encoded views.
    pub fn forward_encoded(&self, embedded: Vec<Vec<T>>, skill: usize) -> ForwardCache<T> {
        let mut hidden = vec![vec![T::zero(); HIDDEN]];
        for e in &embedded {
            let prev = hidden.last().unwrap();
            let h: Vec<T> = (0..HIDDEN)
                .map(|j| {
                    let wi = &self.w_in[j * EMBED_DIM..(j + 1) * EMBED_DIM];
                    let wr = &self.w_rec[j * HIDDEN..(j + 1) * HIDDEN];
                    let a = self.bias[j]
                        + wi.iter().zip(e).map(|(&w, &x)| w * x).sum::<T>()
                        + wr.iter().zip(prev).map(|(&w, &x)| w * x).sum::<T>();
                    a.tanh()
                })
                .collect();
            hidden.push(h);
        }
        let head = &self.head_w[skill * HIDDEN..(skill + 1) * HIDDEN];
        let last = hidden.last().unwrap();
        let output = self.head_b[skill] + head.iter().zip(last).map(|(&w, &h)| w * h).sum::<T>();
        ForwardCache {
            embedded,
            hidden,
            output,
        }
    }

    /// Predicted risk of skill `skill` on the object seen through `views`.
    pub fn forward(&self, views: &[Vec<f64>], skill: usize) -> Result<T, SafetyError> {
        self.check_skill(skill)?;
        Ok(self.forward_encoded(self.encode(views)?, skill).output)
    }

    pub(crate) fn check_skill(&self, skill: usize) -> Result<(), SafetyError> {
        if skill >= self.heads() {
            return Err(SafetyError::SkillIndex {
                index: skill,
                heads: self.heads(),
            });
        }
        Ok(())
    }

    /// Accumulate `d_out · ∂output/∂θ` into `g`.
    pub fn backward(&self, cache: &ForwardCache<T>, skill: usize, d_out: T, g: &mut Gradients<T>) {
        let last = cache.hidden.last().unwrap();
        let head = &self.head_w[skill * HIDDEN..(skill + 1) * HIDDEN];
        g.head_b[skill] += d_out;
        let gh = &mut g.head_w[skill * HIDDEN..(skill + 1) * HIDDEN];
        for (gw, &h) in gh.iter_mut().zip(last) {
            *gw += d_out * h;
        }
        let mut dh: Vec<T> = head.iter().map(|&w| w * d_out).collect();
        for t in (1..cache.hidden.len()).rev() {
            let h = &cache.hidden[t];
            let prev = &cache.hidden[t - 1];
            let e = &cache.embedded[t - 1];
            let da: Vec<T> = dh
                .iter()
                .zip(h)
                .map(|(&d, &hj)| d * (T::one() - hj * hj))
                .collect();
            for j in 0..HIDDEN {
                let a = da[j];
                if a == T::zero() {
                    continue;
                }
                g.bias[j] += a;
                for (gw, &x) in g.w_in[j * EMBED_DIM..(j + 1) * EMBED_DIM].iter_mut().zip(e) {
                    *gw += a * x;
                }
                for (gw, &x) in g.w_rec[j * HIDDEN..(j + 1) * HIDDEN].iter_mut().zip(prev) {
                    *gw += a * x;
                }
            }
            // dh_prev = W_recᵀ da
            let mut next = vec![T::zero(); HIDDEN];
            for (j, &a) in da.iter().enumerate() {
                let row = &self.w_rec[j * HIDDEN..(j + 1) * HIDDEN];
                for (n, &w) in next.iter_mut().zip(row) {
                    *n += w * a;
                }
            }
            dh = next;
        }
    }

    /// Order-independent digest of the encoder bits.
    pub fn encoder_digest(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        use std::hash::{Hash, Hasher};
        let mut h = DefaultHasher::new();
        for v in &self.encoder {
            v.to_f64_lossy().to_bits().hash(&mut h);
        }
        h.finish()
    }
}
