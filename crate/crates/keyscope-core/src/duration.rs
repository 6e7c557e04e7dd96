//! Duration-stratified error analysis: quartiles and kernel density
//! estimates of excerpt length for correctly and incorrectly
//! classified items, on a shared grid suitable for plotting.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods cover std builds
use num_traits::Float;
use crate::error::{CoreError, Result};

pub const KDE_GRID_POINTS: usize = 256;

/// Order statistics and (optionally) a density curve for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub n: usize,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    /// Density sampled on [`DurationStats::grid`]; absent for groups
    /// with fewer than two items.
    pub density: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurationStats {
    /// 256 evenly spaced durations covering [0, max duration * 1.1].
    pub grid: Vec<f64>,
    pub correct: Option<GroupStats>,
    pub incorrect: Option<GroupStats>,
}

/// Linear-interpolation quantile on sorted data (numpy's default):
/// index h = (n-1)*q, interpolating between the neighbouring values.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Silverman's rule of thumb: 0.9 * min(std, IQR/1.34) * n^(-1/5).
/// Zero-spread candidates are skipped; fully degenerate samples fall
/// back to a one-second bandwidth so the density stays finite.
fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let nf = n as f64;
    let mean = sorted.iter().sum::<f64>() / nf;
    let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    let std = var.sqrt();
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let mut spread = f64::INFINITY;
    if std > 0.0 {
        spread = spread.min(std);
    }
    if iqr > 0.0 {
        spread = spread.min(iqr / 1.34);
    }
    if !spread.is_finite() {
        return 1.0;
    }
    0.9 * spread * nf.powf(-0.2)
}

fn gaussian_kde(sorted: &[f64], grid: &[f64]) -> Vec<f64> {
    let bw = silverman_bandwidth(sorted);
    let norm = 1.0 / (sorted.len() as f64 * bw * (2.0 * core::f64::consts::PI).sqrt());
    let mut density: Vec<f64> = grid
        .iter()
        .map(|&x| {
            let s: f64 = sorted
                .iter()
                .map(|&xi| {
                    let z = (x - xi) / bw;
                    (-0.5 * z * z).exp()
                })
                .sum();
            norm * s
        })
        .collect();
    // The grid truncates the left tail at zero, so renormalise by the
    // trapezoid integral to make the curve integrate to one.
    let integral = trapezoid(grid, &density);
    if integral > 0.0 {
        for d in &mut density {
            *d /= integral;
        }
    }
    density
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (ys[0] + ys[1]) * (xs[1] - xs[0]))
        .sum()
}

fn group_stats(mut durations: Vec<f64>, grid: &[f64]) -> Option<GroupStats> {
    if durations.is_empty() {
        return None;
    }
    durations.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let density = if durations.len() >= 2 {
        Some(gaussian_kde(&durations, grid))
    } else {
        None
    };
    Some(GroupStats {
        n: durations.len(),
        median: quantile_sorted(&durations, 0.5),
        lower_quartile: quantile_sorted(&durations, 0.25),
        upper_quartile: quantile_sorted(&durations, 0.75),
        density,
    })
}

/// Summarise excerpt durations split by classification outcome.
///
/// `items` pairs each duration in seconds with whether the item was
/// classified correctly. Groups need at least two members to get a
/// density curve; order statistics are always reported.
pub fn duration_report(items: &[(f64, bool)]) -> Result<DurationStats> {
    if items.is_empty() {
        return Err(CoreError::Data("duration report needs at least one item".into()));
    }
    let mut max = 0.0f64;
    for &(d, _) in items {
        if !(d > 0.0) || !d.is_finite() {
            return Err(CoreError::Range(format!(
                "durations must be positive and finite, got {}",
                d
            )));
        }
        max = max.max(d);
    }
    let hi = max * 1.1;
    let step = hi / (KDE_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| i as f64 * step).collect();

    let correct: Vec<f64> = items.iter().filter(|(_, c)| *c).map(|(d, _)| *d).collect();
    let incorrect: Vec<f64> = items.iter().filter(|(_, c)| !*c).map(|(d, _)| *d).collect();
    Ok(DurationStats {
        correct: group_stats(correct, &grid),
        incorrect: group_stats(incorrect, &grid),
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn quartiles_of_three_points() {
        let stats = duration_report(&[(10.0, true), (20.0, true), (30.0, true)]).unwrap();
        let g = stats.correct.unwrap();
        assert_eq!(g.median, 20.0);
        assert_eq!(g.lower_quartile, 15.0);
        assert_eq!(g.upper_quartile, 25.0);
        assert!(stats.incorrect.is_none());
    }

    #[test]
    fn quartiles_are_ordered() {
        let items: Vec<(f64, bool)> = (1..50).map(|i| (i as f64 * 3.7, i % 3 == 0)).collect();
        let stats = duration_report(&items).unwrap();
        for g in [stats.correct.unwrap(), stats.incorrect.unwrap()] {
            assert!(g.lower_quartile <= g.median);
            assert!(g.median <= g.upper_quartile);
        }
    }

    #[test]
    fn identical_groups_identical_curves() {
        let durations = [12.0, 40.0, 55.0, 80.0, 120.0];
        let mut items = Vec::new();
        for &d in &durations {
            items.push((d, true));
            items.push((d, false));
        }
        let stats = duration_report(&items).unwrap();
        let a = stats.correct.unwrap();
        let b = stats.incorrect.unwrap();
        assert_eq!(a.density, b.density);
        assert_eq!(a.median, b.median);
    }

    #[test]
    fn density_nonnegative_and_integrates_to_one() {
        let items: Vec<(f64, bool)> = (0..200)
            .map(|i| (20.0 + (i % 37) as f64 * 4.0, i % 2 == 0))
            .collect();
        let stats = duration_report(&items).unwrap();
        for g in [stats.correct.unwrap(), stats.incorrect.unwrap()] {
            let density = g.density.unwrap();
            assert!(density.iter().all(|d| *d >= 0.0));
            let integral = trapezoid(&stats.grid, &density);
            assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
        }
    }

    #[test]
    fn grid_covers_max_with_headroom() {
        let stats = duration_report(&[(100.0, true), (50.0, false), (60.0, false)]).unwrap();
        assert_eq!(stats.grid.len(), KDE_GRID_POINTS);
        assert_eq!(stats.grid[0], 0.0);
        let last = *stats.grid.last().unwrap();
        assert!((last - 110.0).abs() < 1e-9);
    }

    #[test]
    fn singleton_group_has_stats_but_no_density() {
        let stats = duration_report(&[(30.0, true), (10.0, false), (20.0, false)]).unwrap();
        let g = stats.correct.unwrap();
        assert_eq!(g.n, 1);
        assert_eq!(g.median, 30.0);
        assert!(g.density.is_none());
    }

    #[test]
    fn rejects_nonpositive_durations() {
        assert!(duration_report(&[(0.0, true)]).is_err());
        assert!(duration_report(&[(-3.0, true)]).is_err());
        assert!(duration_report(&[]).is_err());
    }

    /// Draw both groups from known normals and check the recovered
    /// medians against the true means (the median of a normal).
    #[test]
    fn recovers_normal_medians() {
        let mut rng = RngStream::new(04_2024);
        let mut items = Vec::new();
        for i in 0..2000 {
            // Box-Muller transform.
            let u1: f64 = rng.next_f64().max(1e-12);
            let u2: f64 = rng.next_f64();
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos();
            if i % 2 == 0 {
                items.push(((131.0 + 20.0 * z).max(1.0), true));
            } else {
                items.push(((51.0 + 10.0 * z).max(1.0), false));
            }
        }
        let stats = duration_report(&items).unwrap();
        let med_c = stats.correct.unwrap().median;
        let med_i = stats.incorrect.unwrap().median;
        assert!((med_c - 131.0).abs() / 131.0 < 0.05, "median {med_c}");
        assert!((med_i - 51.0).abs() / 51.0 < 0.05, "median {med_i}");
    }
}
