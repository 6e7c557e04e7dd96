//! Key labels: a tonic pitch class plus a mode, over 24 classes.
//!
//! The canonical class index puts the major block first:
//! `0..=11` are C major .. B major, `12..=23` are C minor .. B minor.
//! Checkpoints, CSV reports and the network's softmax all use this map.

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

use crate::error::{CoreError, Result};
use crate::N_CLASSES;

pub const NOTE_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Mode {
    Major,
    Minor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KeyLabel {
    /// Pitch class 0..=11, 0 = C, ascending in semitones.
    pub tonic: u8,
    pub mode: Mode,
}

impl KeyLabel {
    pub fn new(tonic: u8, mode: Mode) -> Result<Self> {
        if tonic > 11 {
            return Err(CoreError::Range(format!("tonic {} outside 0..=11", tonic)));
        }
        Ok(KeyLabel { tonic, mode })
    }

    /// Canonical class index: major block 0..=11, minor block 12..=23.
    pub fn class_index(&self) -> usize {
        match self.mode {
            Mode::Major => self.tonic as usize,
            Mode::Minor => 12 + self.tonic as usize,
        }
    }

    pub fn from_class_index(index: usize) -> Result<Self> {
        if index >= N_CLASSES {
            return Err(CoreError::Range(format!(
                "class index {} outside 0..{}",
                index, N_CLASSES
            )));
        }
        Ok(KeyLabel {
            tonic: (index % 12) as u8,
            mode: if index < 12 { Mode::Major } else { Mode::Minor },
        })
    }

    /// The label of the same content transposed by `semitones`.
    pub fn transpose(&self, semitones: i32) -> Self {
        let t = (self.tonic as i32 + semitones).rem_euclid(12) as u8;
        KeyLabel {
            tonic: t,
            mode: self.mode,
        }
    }

    pub fn all() -> impl Iterator<Item = KeyLabel> {
        (0..N_CLASSES).map(|i| KeyLabel::from_class_index(i).unwrap())
    }
}

impl fmt::Display for KeyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Major => "major",
            Mode::Minor => "minor",
        };
        write!(f, "{} {}", NOTE_NAMES[self.tonic as usize], mode)
    }
}

impl core::str::FromStr for KeyLabel {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        parse_key_label(s)
    }
}

/// Parse a key label in any of the common dataset spellings.
///
/// Accepted forms (case-insensitive): `"C major"`, `"f# minor"`,
/// `"Ebmaj"`, `"Am"`, `"Dm"`, `"Gb min"`. Accidentals fold
/// enharmonically, so `"F# minor"` and `"Gb minor"` are the same label.
pub fn parse_key_label(text: &str) -> Result<KeyLabel> {
    let trimmed = text.trim();
    let mut chars = trimmed.chars();
    let letter = chars.next().ok_or_else(|| CoreError::Label(text.to_string()))?;
    let base: i32 = match letter.to_ascii_uppercase() {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return Err(CoreError::Label(text.to_string())),
    };
    let rest: String = chars.collect();
    let (accidental, rest) = match rest.chars().next() {
        Some('#') => (1, &rest[1..]),
        // 'b' is only a flat when something follows; a bare trailing "b"
        // would otherwise be ambiguous with nothing (e.g. "Ab" vs "A b?")
        Some('b') if !rest[1..].trim().is_empty() => (-1, &rest[1..]),
        _ => (0, rest.as_str()),
    };
    let tonic = (base + accidental).rem_euclid(12) as u8;
    let mode = match rest.trim().to_ascii_lowercase().as_str() {
        "major" | "maj" => Mode::Major,
        "minor" | "min" | "m" => Mode::Minor,
        _ => return Err(CoreError::Label(text.to_string())),
    };
    KeyLabel::new(tonic, mode)
}
