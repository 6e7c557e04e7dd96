//! Manifest entries, deterministic splits, the classical truncation
//! rule, and the chord-based mode heuristic.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods cover std builds
use num_traits::Float;
use crate::error::{CoreError, Result};
use crate::key::{parse_key_label, KeyLabel, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Valid,
    Test,
    Unassigned,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "valid" | "validation" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            "" | "unassigned" => Ok(Split::Unassigned),
            other => Err(CoreError::Data(format!("unknown split {:?}", other))),
        }
    }
}

/// One manifest row: an audio item or a precomputed feature file,
/// its key label, and where it sits in the train/valid/test split.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManifestEntry {
    pub id: String,
    pub audio_path: Option<String>,
    pub feature_path: Option<String>,
    /// Raw label text as written in the manifest; parse with [`key`].
    pub key_label: String,
    pub dataset: String,
    pub split: Split,
    pub offset_s: f64,
    /// Seconds to read from the offset; 0 means the full recording.
    pub duration_s: f64,
}

impl ManifestEntry {
    pub fn key(&self) -> Result<KeyLabel> {
        parse_key_label(&self.key_label)
    }

    /// Check the single-path invariant and that the label parses.
    pub fn validate(&self) -> Result<()> {
        match (&self.audio_path, &self.feature_path) {
            (Some(_), Some(_)) => {
                return Err(CoreError::Data(format!(
                    "entry {:?} has both audio and feature paths",
                    self.id
                )))
            }
            (None, None) => {
                return Err(CoreError::Data(format!(
                    "entry {:?} has neither audio nor feature path",
                    self.id
                )))
            }
            _ => {}
        }
        if self.offset_s < 0.0 || self.duration_s < 0.0 {
            return Err(CoreError::Data(format!(
                "entry {:?} has negative offset or duration",
                self.id
            )));
        }
        self.key()?;
        Ok(())
    }
}

/// 64-bit FNV-1a over the seed (little-endian) followed by the id.
fn split_hash(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let prime: u64 = 0x100000001b3;
    for byte in seed.to_le_bytes().iter().copied().chain(id.bytes()) {
        h ^= byte as u64;
        h = h.wrapping_mul(prime);
    }
    h
}

/// Assign train/valid/test splits to the unassigned entries.
///
/// Entries are ranked by a seeded hash of their id, so the assignment
/// is deterministic and survives manifest reordering. Quotas come
/// from the ratios by largest-remainder rounding, which keeps every
/// split within one item of its exact share.
pub fn assign_splits(
    entries: &mut [ManifestEntry],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<()> {
    let (rt, rv, rs) = ratios;
    for r in [rt, rv, rs] {
        if !(0.0..=1.0).contains(&r) {
            return Err(CoreError::Config(format!(
                "split ratio {} outside [0, 1]",
                r
            )));
        }
    }
    if ((rt + rv + rs) - 1.0).abs() > 1e-9 {
        return Err(CoreError::Config(format!(
            "split ratios sum to {}, expected 1",
            rt + rv + rs
        )));
    }

    let mut open: Vec<usize> = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.split == Split::Unassigned)
        .map(|(i, _)| i)
        .collect();
    let n = open.len();
    if n == 0 {
        return Ok(());
    }
    open.sort_by(|&a, &b| {
        let ha = split_hash(seed, &entries[a].id);
        let hb = split_hash(seed, &entries[b].id);
        ha.cmp(&hb).then_with(|| entries[a].id.cmp(&entries[b].id))
    });

    // Largest-remainder quotas; leftover items go to the splits with
    // the biggest fractional parts, ties favouring train, then valid.
    let exact = [rt * n as f64, rv * n as f64, rs * n as f64];
    let mut quota = [
        exact[0].floor() as usize,
        exact[1].floor() as usize,
        exact[2].floor() as usize,
    ];
    let mut rest = n - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &slot in &order {
        if rest == 0 {
            break;
        }
        quota[slot] += 1;
        rest -= 1;
    }

    for (rank, &idx) in open.iter().enumerate() {
        entries[idx].split = if rank < quota[0] {
            Split::Train
        } else if rank < quota[0] + quota[1] {
            Split::Valid
        } else {
            Split::Test
        };
    }
    Ok(())
}

/// Cap classical recordings at their first 30 seconds. Entries from
/// other datasets pass through untouched; reapplying is a no-op.
pub fn apply_classical_rule(entry: &mut ManifestEntry) {
    if !entry.dataset.eq_ignore_ascii_case("classical") {
        return;
    }
    entry.offset_s = 0.0;
    entry.duration_s = if entry.duration_s == 0.0 {
        30.0
    } else {
        entry.duration_s.min(30.0)
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ChordQuality {
    Major,
    Minor,
    Dominant,
    Other,
}

impl ChordQuality {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "major" | "maj" => Ok(ChordQuality::Major),
            "minor" | "min" => Ok(ChordQuality::Minor),
            "dominant" | "dom" | "7" => Ok(ChordQuality::Dominant),
            "other" => Ok(ChordQuality::Other),
            other => Err(CoreError::Data(format!("unknown chord quality {:?}", other))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChordEvent {
    pub onset_s: f64,
    /// Pitch class 0..=11 of the chord root.
    pub root: u8,
    pub quality: ChordQuality,
}

/// Decide a segment's mode from its chord annotations.
///
/// Tally major against minor chords rooted on the tonic; a quality
/// wins if it holds strictly more than 80% of that tally. With no
/// tonic-rooted major/minor chords at all, the same test runs over
/// chords rooted on the dominant. Returns `None` when neither test
/// is decisive.
pub fn derive_mode_from_chords(tonic: u8, chords: &[ChordEvent]) -> Option<Mode> {
    let tally = |root: u8| {
        let mut major = 0usize;
        let mut minor = 0usize;
        for c in chords {
            if c.root != root {
                continue;
            }
            match c.quality {
                ChordQuality::Major => major += 1,
                ChordQuality::Minor => minor += 1,
                _ => {}
            }
        }
        (major, minor)
    };
    let decide = |major: usize, minor: usize| {
        let total = major + minor;
        if total == 0 {
            return None;
        }
        // Strict "more than 80%", tested in integers: x/t > 4/5.
        if major * 5 > total * 4 {
            Some(Mode::Major)
        } else if minor * 5 > total * 4 {
            Some(Mode::Minor)
        } else {
            None
        }
    };
    let (major, minor) = tally(tonic % 12);
    if major + minor > 0 {
        return decide(major, minor);
    }
    let (major, minor) = tally((tonic + 7) % 12);
    decide(major, minor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn entry(id: &str) -> ManifestEntry {
        ManifestEntry {
            id: id.to_string(),
            audio_path: Some(format!("{id}.wav")),
            feature_path: None,
            key_label: "C major".to_string(),
            dataset: "test".to_string(),
            split: Split::Unassigned,
            offset_s: 0.0,
            duration_s: 0.0,
        }
    }

    fn counts(entries: &[ManifestEntry]) -> (usize, usize, usize) {
        let c = |s: Split| entries.iter().filter(|e| e.split == s).count();
        (c(Split::Train), c(Split::Valid), c(Split::Test))
    }

    #[test]
    fn thousand_items_split_80_20() {
        let mut entries: Vec<_> = (0..1000).map(|i| entry(&format!("id{i}"))).collect();
        assign_splits(&mut entries, (0.8, 0.2, 0.0), 7).unwrap();
        assert_eq!(counts(&entries), (800, 200, 0));
    }

    #[test]
    fn eight_items_billboard_ratios() {
        let mut entries: Vec<_> = (0..8).map(|i| entry(&format!("b{i}"))).collect();
        assign_splits(&mut entries, (0.625, 0.125, 0.25), 3).unwrap();
        assert_eq!(counts(&entries), (5, 1, 2));
    }

    #[test]
    fn same_seed_same_assignment() {
        let mut a: Vec<_> = (0..100).map(|i| entry(&format!("x{i}"))).collect();
        let mut b = a.clone();
        assign_splits(&mut a, (0.7, 0.2, 0.1), 42).unwrap();
        assign_splits(&mut b, (0.7, 0.2, 0.1), 42).unwrap();
        assert_eq!(a, b);
        let mut c: Vec<_> = (0..100).map(|i| entry(&format!("x{i}"))).collect();
        assign_splits(&mut c, (0.7, 0.2, 0.1), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn reordering_does_not_move_ids() {
        let mut fwd: Vec<_> = (0..60).map(|i| entry(&format!("p{i}"))).collect();
        let mut rev: Vec<_> = (0..60).rev().map(|i| entry(&format!("p{i}"))).collect();
        assign_splits(&mut fwd, (0.5, 0.25, 0.25), 11).unwrap();
        assign_splits(&mut rev, (0.5, 0.25, 0.25), 11).unwrap();
        for e in &fwd {
            let twin = rev.iter().find(|r| r.id == e.id).unwrap();
            assert_eq!(e.split, twin.split, "{}", e.id);
        }
    }

    #[test]
    fn preassigned_entries_untouched() {
        let mut entries: Vec<_> = (0..10).map(|i| entry(&format!("t{i}"))).collect();
        entries[0].split = Split::Test;
        assign_splits(&mut entries, (1.0, 0.0, 0.0), 5).unwrap();
        assert_eq!(entries[0].split, Split::Test);
        assert_eq!(counts(&entries), (9, 0, 1));
    }

    #[test]
    fn bad_ratios_rejected() {
        let mut entries = vec![entry("a")];
        assert!(assign_splits(&mut entries, (0.5, 0.2, 0.2), 0).is_err());
        assert!(assign_splits(&mut entries, (1.2, -0.2, 0.0), 0).is_err());
    }

    #[test]
    fn classical_rule_caps_and_is_idempotent() {
        let mut e = entry("c1");
        e.dataset = "classical".to_string();
        e.offset_s = 5.0;
        e.duration_s = 300.0;
        apply_classical_rule(&mut e);
        assert_eq!(e.offset_s, 0.0);
        assert_eq!(e.duration_s, 30.0);
        apply_classical_rule(&mut e);
        assert_eq!(e.duration_s, 30.0);

        let mut short = entry("c2");
        short.dataset = "Classical".to_string();
        short.duration_s = 20.0;
        apply_classical_rule(&mut short);
        assert_eq!(short.duration_s, 20.0);

        let mut full = entry("c3");
        full.dataset = "classical".to_string();
        apply_classical_rule(&mut full);
        assert_eq!(full.duration_s, 30.0);

        let mut other = entry("g1");
        other.duration_s = 300.0;
        other.offset_s = 5.0;
        apply_classical_rule(&mut other);
        assert_eq!(other.duration_s, 300.0);
        assert_eq!(other.offset_s, 5.0);
    }

    #[test]
    fn validate_requires_exactly_one_path() {
        let mut both = entry("v1");
        both.feature_path = Some("v1.kspc".to_string());
        assert!(both.validate().is_err());
        let mut neither = entry("v2");
        neither.audio_path = None;
        assert!(neither.validate().is_err());
        assert!(entry("v3").validate().is_ok());
        let mut bad_key = entry("v4");
        bad_key.key_label = "H major".to_string();
        assert!(bad_key.validate().is_err());
    }

    fn chord(root: u8, quality: ChordQuality) -> ChordEvent {
        ChordEvent {
            onset_s: 0.0,
            root,
            quality,
        }
    }

    #[test]
    fn ninety_percent_major_wins() {
        let mut chords = vec![chord(0, ChordQuality::Major); 9];
        chords.push(chord(0, ChordQuality::Minor));
        assert_eq!(derive_mode_from_chords(0, &chords), Some(Mode::Major));
    }

    #[test]
    fn exactly_eighty_percent_is_undetermined() {
        let mut chords = vec![chord(0, ChordQuality::Major); 8];
        chords.extend(vec![chord(0, ChordQuality::Minor); 2]);
        assert_eq!(derive_mode_from_chords(0, &chords), None);
    }

    #[test]
    fn dominant_fallback() {
        let chords = vec![chord(7, ChordQuality::Major); 5];
        assert_eq!(derive_mode_from_chords(0, &chords), Some(Mode::Major));
        // A single tonic-rooted chord pre-empts the fallback.
        let mut with_tonic = chords.clone();
        with_tonic.push(chord(0, ChordQuality::Minor));
        assert_eq!(derive_mode_from_chords(0, &with_tonic), Some(Mode::Minor));
    }

    #[test]
    fn non_triad_qualities_ignored() {
        let chords = vec![
            chord(0, ChordQuality::Dominant),
            chord(0, ChordQuality::Other),
            chord(0, ChordQuality::Major),
        ];
        // One major out of one counted chord: decisive.
        assert_eq!(derive_mode_from_chords(0, &chords), Some(Mode::Major));
    }

    #[test]
    fn order_and_duplication_invariant() {
        let mut chords = vec![
            chord(5, ChordQuality::Minor),
            chord(5, ChordQuality::Minor),
            chord(5, ChordQuality::Minor),
            chord(5, ChordQuality::Minor),
            chord(5, ChordQuality::Minor),
            chord(5, ChordQuality::Major),
            chord(3, ChordQuality::Major),
        ];
        let forward = derive_mode_from_chords(5, &chords);
        chords.reverse();
        assert_eq!(derive_mode_from_chords(5, &chords), forward);
        let doubled: Vec<_> = chords.iter().chain(chords.iter()).copied().collect();
        assert_eq!(derive_mode_from_chords(5, &doubled), forward);
        assert_eq!(forward, Some(Mode::Minor));
    }

    #[test]
    fn no_chords_at_all() {
        assert_eq!(derive_mode_from_chords(4, &[]), None);
        let unrelated = vec![chord(1, ChordQuality::Major)];
        assert_eq!(derive_mode_from_chords(4, &unrelated), None);
    }
}
