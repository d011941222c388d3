//! Learned collision-risk prediction: dataset collection, a frozen-encoder
//! recurrent regressor with one head per skill, and the matrix to ranking
//! sentence transform fed to the planner.

mod dataset;
mod model;
mod persist;
mod train;

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::risk::ground_skill;
use crate::world::{extract_predicates, render_views, WorldError, WorldState};
use crate::Scalar;

pub use dataset::{
    collect_dataset, parse_dataset, render_dataset, render_record, CollectOptions, TrajectoryRecord,
};
pub use model::{ForwardCache, Gradients, HeadInit, ModelParameters, EMBED_DIM, HIDDEN, VIEW_DIM};
pub use persist::{parse_model, render_model, MODEL_MAGIC};
pub use train::{loss_and_gradient, mse, train, TrainConfig, TrainOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SafetyError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("record {0} has a non-finite label")]
    NonFiniteLabel(usize),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("{what}: expected dimension {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("skill index {index} out of range for {heads} heads")]
    SkillIndex { index: usize, heads: usize },
    #[error("model file line {line}: {msg}")]
    ModelFormat { line: usize, msg: String },
    #[error("dataset line {line}: {msg}")]
    DatasetFormat { line: usize, msg: String },
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixSource {
    Predicted,
    Oracle,
}

/// I×N risk table, skills by objects. `+∞` marks inapplicable pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyMatrix {
    pub entries: Vec<Vec<f64>>,
    pub skills: Vec<String>,
    pub objects: Vec<String>,
    pub source: MatrixSource,
}

impl SafetyMatrix {
    pub fn get(&self, skill: &str, object: &str) -> Option<f64> {
        let i = self.skills.iter().position(|s| s == skill)?;
        let n = self.objects.iter().position(|o| o == object)?;
        Some(self.entries[i][n])
    }

    /// Row-major values.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().flatten().copied()
    }
}

impl fmt::Display for SafetyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<10}", "")?;
        for o in &self.objects {
            write!(f, " {o:>14}")?;
        }
        for (s, row) in self.skills.iter().zip(&self.entries) {
            write!(f, "\n{s:<10}")?;
            for v in row {
                if v.is_finite() {
                    write!(f, " {v:>14.3}")?;
                } else {
                    write!(f, " {:>14}", "inf")?;
                }
            }
        }
        Ok(())
    }
}

/// Skill/object pairs of the world the model can act on.
fn applicable(w: &WorldState, skill: &str, object: &str) -> bool {
    let state = extract_predicates(w);
    ground_skill(w, skill, object).is_some_and(|a| crate::pddl::is_applicable(&state, &a))
}

/// Predicted risk of every (skill, object) pair.
pub fn predict_matrix<T: Scalar>(
    params: &ModelParameters<T>,
    w: &WorldState,
    objects: &[String],
) -> Result<SafetyMatrix, SafetyError> {
    let mut entries = vec![vec![f64::INFINITY; objects.len()]; params.heads()];
    for (n, o) in objects.iter().enumerate() {
        let mut views = None;
        for (i, skill) in params.skills.iter().enumerate() {
            if !applicable(w, skill, o) {
                continue;
            }
            if views.is_none() {
                views = Some(params.encode(&render_views(w, o)?)?);
            }
            let enc = views.clone().unwrap();
            entries[i][n] = params.forward_encoded(enc, i).output.to_f64_lossy();
        }
    }
    Ok(SafetyMatrix {
        entries,
        skills: params.skills.clone(),
        objects: objects.to_vec(),
        source: MatrixSource::Predicted,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedOperator {
    pub skill: String,
    pub object: String,
    /// 1-based.
    pub rank: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyRanking {
    pub order: Vec<RankedOperator>,
    pub text: String,
}

const ORDINALS: [&str; 9] = [
    "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

/// `safest`, `second safest`, ... `tenth safest`, then `11-th safest`.
pub fn ordinal_phrase(rank: usize) -> String {
    match rank {
        0 | 1 => "safest".to_string(),
        2..=10 => format!("{} safest", ORDINALS[rank - 2]),
        n => format!("{n}-th safest"),
    }
}

/// Sort ascending by value; ties by object then skill. NaN sorts last.
pub fn matrix_to_ranking(m: &SafetyMatrix) -> SafetyRanking {
    let mut cells: Vec<(f64, &str, &str)> = Vec::new();
    for (i, s) in m.skills.iter().enumerate() {
        for (n, o) in m.objects.iter().enumerate() {
            cells.push((m.entries[i][n], o, s));
        }
    }
    cells.sort_by(|a, b| {
        let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
        key(a.0)
            .partial_cmp(&key(b.0))
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
            .then_with(|| a.2.cmp(b.2))
    });
    let order: Vec<RankedOperator> = cells
        .into_iter()
        .enumerate()
        .map(|(k, (value, o, s))| RankedOperator {
            skill: s.to_string(),
            object: o.to_string(),
            rank: k + 1,
            value,
        })
        .collect();
    let text = order
        .iter()
        .map(|r| {
            format!(
                "The {} operator is to {} the {}.",
                ordinal_phrase(r.rank),
                r.skill,
                r.object
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    SafetyRanking { order, text }
}

/// Ranks with ties sharing their average position.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut j = k;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[k]] {
            j += 1;
        }
        let avg = (k + j) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=j] {
            ranks[i] = avg;
        }
        k = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant or the lengths differ.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

/// Rank agreement of a predicted matrix with the oracle on one scene.
///
/// Only pairs the oracle marks applicable count. Predictions are snapped to
/// the nearest whole collision count, since labels are counts and an
/// unrounded regressor would otherwise invent orderings between tied pairs.
/// When the oracle has no spread the score is 1 if the snapped predictions
/// have none either, else 0.
pub fn scene_rank_agreement(pred: &SafetyMatrix, oracle: &SafetyMatrix) -> f64 {
    let (p, o): (Vec<f64>, Vec<f64>) = pred
        .values()
        .zip(oracle.values())
        .filter(|(_, o)| o.is_finite())
        .map(|(p, o)| (p.round().max(0.0), o))
        .unzip();
    match spearman(&p, &o) {
        Some(r) => r,
        None => {
            let constant = |v: &[f64]| v.windows(2).all(|w| w[0] == w[1]);
            if constant(&o) && constant(&p) {
                1.0
            } else {
                0.0
            }
        }
    }
}
