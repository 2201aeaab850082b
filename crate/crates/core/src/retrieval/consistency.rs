use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::symmetric_kl;
use crate::story::StoryDocument;

/// Rows of the classification TSV may be off unit mass by this much before
/// being renormalized.
const ROW_MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConsistencyError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("image {image_id:?} has {found} classes, expected {expected}")]
    TaxonomyMismatch {
        image_id: String,
        expected: usize,
        found: usize,
    },
    #[error("image {image_id:?}: {reason}")]
    InvalidDistribution { image_id: String, reason: String },
}

/// Classifier output for one image over a fixed class taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub image_id: String,
    pub probs: Vec<f64>,
}

impl ClassDistribution {
    pub fn new(image_id: impl Into<String>, probs: Vec<f64>) -> Result<Self, ConsistencyError> {
        let image_id = image_id.into();
        let bad = |reason: &str| ConsistencyError::InvalidDistribution {
            image_id: image_id.clone(),
            reason: reason.to_owned(),
        };
        if probs.is_empty() {
            return Err(bad("no classes"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(bad("probabilities must be finite and nonnegative"));
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > ROW_MASS_TOLERANCE {
            return Err(bad(&format!("probabilities sum to {mass}")));
        }
        let probs = probs.into_iter().map(|p| p / mass).collect();
        Ok(Self { image_id, probs })
    }
}

/// Reads `image-id \t p1 \t p2 …` rows. Blank and `#` lines are skipped.
pub fn read_class_distributions(reader: impl BufRead) -> Result<Vec<ClassDistribution>, ConsistencyError> {
    let mut out: Vec<ClassDistribution> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse = |reason: String| ConsistencyError::Parse { line: i + 1, reason };
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default().trim();
        if id.is_empty() {
            return Err(parse("missing image id".into()));
        }
        let probs = fields
            .map(|f| f.trim().parse::<f64>().map_err(|e| parse(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let d = ClassDistribution::new(id, probs)?;
        if let Some(first) = out.first() {
            if first.probs.len() != d.probs.len() {
                return Err(ConsistencyError::TaxonomyMismatch {
                    image_id: d.image_id,
                    expected: first.probs.len(),
                    found: d.probs.len(),
                });
            }
        }
        out.push(d);
    }
    Ok(out)
}

pub fn load_class_distributions(path: impl AsRef<Path>) -> Result<Vec<ClassDistribution>, ConsistencyError> {
    read_class_distributions(BufReader::new(File::open(path)?))
}

/// Sum over unordered image pairs of the symmetric KL divergence. Lower is
/// more visually coherent; fewer than two images score 0.
pub fn consistency(dists: &[ClassDistribution]) -> Result<f64, ConsistencyError> {
    if let Some(first) = dists.first() {
        if let Some(d) = dists.iter().find(|d| d.probs.len() != first.probs.len()) {
            return Err(ConsistencyError::TaxonomyMismatch {
                image_id: d.image_id.clone(),
                expected: first.probs.len(),
                found: d.probs.len(),
            });
        }
    }
    let mut total = 0.0;
    for (i, a) in dists.iter().enumerate() {
        for b in &dists[i + 1..] {
            total += symmetric_kl(&a.probs, &b.probs).expect("lengths checked above");
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedStory {
    /// Position in the input list.
    pub index: usize,
    pub story_id: String,
    pub image_count: usize,
    /// `None` for stories without images or with unusable distributions.
    pub consistency: Option<f64>,
}

/// Orders stories by ascending consistency. Stories that have no images, or
/// whose distributions cannot be compared, follow all scored stories in input
/// order.
pub fn rank_stories_by_consistency(stories: &[(StoryDocument, Vec<ClassDistribution>)]) -> Vec<RankedStory> {
    let mut ranked: Vec<RankedStory> = stories
        .iter()
        .enumerate()
        .map(|(index, (story, dists))| {
            let score = if dists.is_empty() {
                None
            } else {
                match consistency(dists) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        log::warn!("story {}: {e}", story.id);
                        None
                    }
                }
            };
            RankedStory {
                index,
                story_id: story.id.clone(),
                image_count: dists.len(),
                consistency: score,
            }
        })
        .collect();
    ranked.sort_by(|a, b| match (a.consistency, b.consistency) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    ranked
}

/// Looks up the distribution of every image block of `story`; images without
/// a distribution are skipped.
pub fn story_distributions(
    story: &StoryDocument,
    table: &HashMap<String, ClassDistribution>,
) -> Vec<ClassDistribution> {
    story.image_ids().filter_map(|id| table.get(id).cloned()).collect()
}
