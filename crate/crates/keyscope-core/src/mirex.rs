//! Weighted key-classification scoring.
//!
//! A prediction earns full credit for the exact key and partial credit
//! for musically close mistakes: fifth errors, relative keys and
//! parallel keys. The weighted score is
//! `correct + 0.5*fifth + 0.3*relative + 0.2*parallel`.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::key::{KeyLabel, Mode};

pub const WEIGHT_FIFTH: f64 = 0.5;
pub const WEIGHT_RELATIVE: f64 = 0.3;
pub const WEIGHT_PARALLEL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationCategory {
    Correct,
    Fifth,
    Relative,
    Parallel,
    Other,
}

impl RelationCategory {
    pub const ALL: [RelationCategory; 5] = [
        RelationCategory::Correct,
        RelationCategory::Fifth,
        RelationCategory::Relative,
        RelationCategory::Parallel,
        RelationCategory::Other,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RelationCategory::Correct => "Correct",
            RelationCategory::Fifth => "Fifth",
            RelationCategory::Relative => "Relative",
            RelationCategory::Parallel => "Parallel",
            RelationCategory::Other => "Other",
        }
    }

    pub fn weight(&self) -> f64 {
        match self {
            RelationCategory::Correct => 1.0,
            RelationCategory::Fifth => WEIGHT_FIFTH,
            RelationCategory::Relative => WEIGHT_RELATIVE,
            RelationCategory::Parallel => WEIGHT_PARALLEL,
            RelationCategory::Other => 0.0,
        }
    }
}

/// Categorise a prediction against the reference key.
///
/// Checks run in priority order; the first match wins:
/// exact, fifth (same mode, tonic a perfect fifth away in either
/// direction), relative (major/minor pair sharing a key signature),
/// parallel (same tonic, opposite mode), otherwise `Other`.
pub fn classify_relation(predicted: KeyLabel, target: KeyLabel) -> RelationCategory {
    if predicted == target {
        return RelationCategory::Correct;
    }
    let dt = (predicted.tonic as i32 - target.tonic as i32).rem_euclid(12);
    if predicted.mode == target.mode {
        if dt == 7 || dt == 5 {
            return RelationCategory::Fifth;
        }
        return RelationCategory::Other;
    }
    // Modes differ from here on.
    let relative = match target.mode {
        // Relative minor sits three semitones below the major tonic.
        Mode::Major => predicted.mode == Mode::Minor && dt == 9,
        Mode::Minor => predicted.mode == Mode::Major && dt == 3,
    };
    if relative {
        return RelationCategory::Relative;
    }
    if dt == 0 {
        return RelationCategory::Parallel;
    }
    RelationCategory::Other
}

/// Per-category rates plus the weighted score, over `n` items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreBreakdown {
    pub correct: f64,
    pub fifth: f64,
    pub relative: f64,
    pub parallel: f64,
    pub other: f64,
    pub weighted: f64,
    pub n: usize,
}

impl ScoreBreakdown {
    /// Combine category rates (fractions in [0, 1]) into a breakdown.
    pub fn from_ratios(correct: f64, fifth: f64, relative: f64, parallel: f64, n: usize) -> Self {
        let other = (1.0 - correct - fifth - relative - parallel).max(0.0);
        ScoreBreakdown {
            correct,
            fifth,
            relative,
            parallel,
            other,
            weighted: weighted_score(correct, fifth, relative, parallel),
            n,
        }
    }

    pub fn rate(&self, category: RelationCategory) -> f64 {
        match category {
            RelationCategory::Correct => self.correct,
            RelationCategory::Fifth => self.fifth,
            RelationCategory::Relative => self.relative,
            RelationCategory::Parallel => self.parallel,
            RelationCategory::Other => self.other,
        }
    }
}

pub fn weighted_score(correct: f64, fifth: f64, relative: f64, parallel: f64) -> f64 {
    correct + WEIGHT_FIFTH * fifth + WEIGHT_RELATIVE * relative + WEIGHT_PARALLEL * parallel
}

/// Score a list of (predicted, target) pairs.
pub fn score(pairs: &[(KeyLabel, KeyLabel)]) -> Result<ScoreBreakdown> {
    if pairs.is_empty() {
        return Err(CoreError::Data(
            "cannot score an empty prediction list".into(),
        ));
    }
    let mut counts = [0usize; 5];
    for &(predicted, target) in pairs {
        let cat = classify_relation(predicted, target);
        let slot = RelationCategory::ALL
            .iter()
            .position(|c| *c == cat)
            .unwrap();
        counts[slot] += 1;
    }
    let n = pairs.len();
    let rate = |i: usize| counts[i] as f64 / n as f64;
    Ok(ScoreBreakdown {
        correct: rate(0),
        fifth: rate(1),
        relative: rate(2),
        parallel: rate(3),
        other: rate(4),
        weighted: weighted_score(rate(0), rate(1), rate(2), rate(3)),
        n,
    })
}

/// Count how many of the `pairs` fall into each category, ordered as
/// [`RelationCategory::ALL`].
pub fn category_counts(pairs: &[(KeyLabel, KeyLabel)]) -> [usize; 5] {
    let mut counts = [0usize; 5];
    for &(predicted, target) in pairs {
        let cat = classify_relation(predicted, target);
        let slot = RelationCategory::ALL
            .iter()
            .position(|c| *c == cat)
            .unwrap();
        counts[slot] += 1;
    }
    counts
}

/// All 24*24 ordered (predicted, target) label pairs.
pub fn all_label_pairs() -> Vec<(KeyLabel, KeyLabel)> {
    let mut pairs = Vec::with_capacity(24 * 24);
    for target in KeyLabel::all() {
        for predicted in KeyLabel::all() {
            pairs.push((predicted, target));
        }
    }
    pairs
}
