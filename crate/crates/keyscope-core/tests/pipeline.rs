//! End-to-end checks over the synthetic corpus: the generated audio
//! must carry enough key information for a trivial template baseline,
//! transposed keys must move the spectral profile by the right number
//! of bins, and snippet sampling must be uniform.

use keyscope_core::frontend::{build_filterbank, compute_spectrogram, FilterBankParams};
use keyscope_core::synth::{key_for_index, piece_seed, synthesize_piece};
use keyscope_core::train::sample_snippet;
use keyscope_core::{FilterBank, KeyLabel, LogFreqSpectrogram, Mode, RngStream};

fn filterbank() -> FilterBank {
    build_filterbank(FilterBankParams::default()).unwrap()
}

fn piece_spectrogram(key: KeyLabel, seed: u64, fb: &FilterBank) -> LogFreqSpectrogram {
    let clip = synthesize_piece(key, seed, 12.0).unwrap();
    compute_spectrogram(&clip, fb).unwrap()
}

/// Time-averaged spectrum folded to 12 semitone classes (two bins per
/// semitone, octaves collapsed).
fn chroma(spec: &LogFreqSpectrogram) -> [f64; 12] {
    let mut profile = vec![0.0f64; spec.n_bins];
    for t in 0..spec.n_frames {
        for (k, p) in profile.iter_mut().enumerate() {
            *p += spec.values[t * spec.n_bins + k] as f64;
        }
    }
    let mut folded = [0.0f64; 12];
    for (k, p) in profile.iter().enumerate() {
        folded[(k / 2) % 12] += p;
    }
    let norm = folded.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut folded {
            *v /= norm;
        }
    }
    folded
}

fn cosine(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One synthetic piece per key builds a template; a second piece per
/// key with different seeds must match its own key's template. The
/// corpus would be unlearnable if this baseline failed.
#[test]
fn chroma_templates_classify_held_out_synthetic_pieces() {
    let fb = filterbank();
    let templates: Vec<(KeyLabel, [f64; 12])> = (0..24)
        .map(|i| {
            let key = key_for_index(i);
            let spec = piece_spectrogram(key, piece_seed(1000, i), &fb);
            (key, chroma(&spec))
        })
        .collect();

    let mut correct = 0;
    for i in 0..24 {
        let key = key_for_index(i);
        let spec = piece_spectrogram(key, piece_seed(2000, i + 24), &fb);
        let probe = chroma(&spec);
        let best = templates
            .iter()
            .max_by(|(_, a), (_, b)| cosine(&probe, a).partial_cmp(&cosine(&probe, b)).unwrap())
            .unwrap()
            .0;
        if best == key {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / 24.0;
    assert!(
        accuracy > 0.8,
        "template baseline got {correct}/24 ({accuracy:.2})"
    );
}

/// Synthesising the same material in a key `k` semitones higher moves
/// the strongest filterbank bin up by 2k (within one bin), as long as
/// no chord degree wraps past the octave.
#[test]
fn transposed_keys_shift_the_spectral_peak() {
    let fb = filterbank();
    let argmax_profile = |spec: &LogFreqSpectrogram| -> usize {
        let mut profile = vec![0.0f64; spec.n_bins];
        for t in 0..spec.n_frames {
            for (k, p) in profile.iter_mut().enumerate() {
                *p += spec.values[t * spec.n_bins + k] as f64;
            }
        }
        profile
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
    };

    // Degree pitch classes {0, 5, 7}: tonics 0 and 2 keep every chord
    // root in the same octave, so the whole texture moves together.
    for mode in [Mode::Major, Mode::Minor] {
        let low = piece_spectrogram(KeyLabel::new(0, mode).unwrap(), 7, &fb);
        let high = piece_spectrogram(KeyLabel::new(2, mode).unwrap(), 7, &fb);
        let a = argmax_profile(&low) as i64;
        let b = argmax_profile(&high) as i64;
        assert!(
            (b - a - 4).abs() <= 1,
            "{mode:?}: peak moved {a} -> {b}, expected +4 bins (2 per semitone)"
        );
    }
}

/// 100,000 snippet starts from a 600-frame piece, chi-square against
/// the uniform distribution on {0..500} at the 0.001 level (df = 500,
/// critical value 603.4).
#[test]
fn snippet_starts_are_uniform() {
    let frames = 600usize;
    let bins = 2usize;
    let values: Vec<f32> = (0..frames * bins).map(|i| (i / bins) as f32).collect();
    let spec = LogFreqSpectrogram::from_values(values, frames, bins).unwrap();

    let draws = 100_000usize;
    let cells = frames - 100 + 1;
    let mut counts = vec![0usize; cells];
    let base = RngStream::new(20_240_817);
    for k in 0..draws {
        let mut rng = base.derive(&[k as u64]);
        let snip = sample_snippet(&spec, 100, &mut rng).unwrap();
        let start = snip.values[0] as usize;
        counts[start] += 1;
    }

    let expected = draws as f64 / cells as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    assert!(
        chi2 < 603.4,
        "chi-square {chi2:.1} exceeds the 0.001 critical value for df=500"
    );
    assert!(counts.iter().all(|&c| c > 0), "some start never drawn");
}
