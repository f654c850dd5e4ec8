//! Detectability scores for a filled gap.
//!
//! Two numbers: how much stronger edges are along the gap boundary than in
//! the rest of the valid image, and how far the filled colors are from the
//! valid colors as a Jensen-Shannon divergence of coarse RGB histograms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fill::{fill, FillPolicy, NeighborConfig};
use crate::raster::{to_grayscale, GapMask, LumaGrid, Raster, Rgb};

/// Ratio reported when the interior is perfectly flat but the boundary band
/// is not.
pub const LARGE_RATIO: f64 = 1e9;

/// Gradient means at or below this count as zero.
const FLAT_EPS: f64 = 1e-12;

pub const BINS_PER_CHANNEL: usize = 8;
pub const HISTOGRAM_BINS: usize = BINS_PER_CHANNEL * BINS_PER_CHANNEL * BINS_PER_CHANNEL;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectabilityReport {
    pub boundary_gradient_ratio: f64,
    pub histogram_divergence: f64,
    pub gap_fraction: f64,
}

/// A report tagged with the fill that produced it, as written to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    #[serde(flatten)]
    pub report: DetectabilityReport,
    pub policy: Option<FillPolicy>,
    pub seed: Option<u64>,
}

/// 3x3 Sobel gradient magnitude with edge replication at the borders.
pub fn sobel_magnitude(luma: &LumaGrid) -> Vec<f64> {
    let (w, h) = (luma.width as i64, luma.height as i64);
    let at = |x: i64, y: i64| luma.values[(y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize];
    let mut out = Vec::with_capacity(luma.values.len());
    for y in 0..h {
        for x in 0..w {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}

/// Pixels whose 3x3 neighbourhood holds both valid and gap pixels: a band
/// two pixels wide straddling every mask transition.
pub fn boundary_band(mask: &GapMask) -> Vec<bool> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let valid = mask.as_slice();
    let mut band = vec![false; valid.len()];
    for y in 0..h {
        for x in 0..w {
            let mut seen_valid = false;
            let mut seen_gap = false;
            for ny in (y - 1).max(0)..=(y + 1).min(h - 1) {
                for nx in (x - 1).max(0)..=(x + 1).min(w - 1) {
                    if valid[(ny * w + nx) as usize] {
                        seen_valid = true;
                    } else {
                        seen_gap = true;
                    }
                }
            }
            band[(y * w + x) as usize] = seen_valid && seen_gap;
        }
    }
    band
}

fn bin_of(p: Rgb) -> usize {
    let shift = 8 - BINS_PER_CHANNEL.trailing_zeros();
    let b = |c: u8| (c >> shift) as usize;
    (b(p[0]) * BINS_PER_CHANNEL + b(p[1])) * BINS_PER_CHANNEL + b(p[2])
}

/// Normalized 8x8x8 RGB histogram. Empty input yields all zeros.
pub fn rgb_histogram<'a>(pixels: impl IntoIterator<Item = &'a Rgb>) -> Vec<f64> {
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    let mut total = 0u64;
    for p in pixels {
        counts[bin_of(*p)] += 1;
        total += 1;
    }
    if total == 0 {
        return vec![0.0; HISTOGRAM_BINS];
    }
    counts.into_iter().map(|c| c as f64 / total as f64).collect()
}

/// Jensen-Shannon divergence in nats, clamped to `[0, ln 2]`.
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "histograms must have equal length");
    let kl_to_mid = |a: f64, m: f64| if a > 0.0 { a * (a / m).ln() } else { 0.0 };
    let js: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            0.5 * kl_to_mid(a, m) + 0.5 * kl_to_mid(b, m)
        })
        .sum();
    js.clamp(0.0, std::f64::consts::LN_2)
}

/// Scores how visible the filled gap is. `original` supplies the valid
/// region's colors, `filled` supplies gradients and the gap's colors.
pub fn evaluate(original: &Raster, filled: &Raster, mask: &GapMask) -> Result<DetectabilityReport> {
    mask.check_matches(original)?;
    mask.check_matches(filled)?;
    let gaps = mask.gap_count();
    if gaps == 0 {
        return Err(Error::DegenerateMask("mask has no gap pixels".into()));
    }
    if gaps == mask.len() {
        return Err(Error::DegenerateMask("mask has no valid pixels".into()));
    }
    let band = boundary_band(mask);
    let valid = mask.as_slice();
    let gradient = sobel_magnitude(&to_grayscale(filled));

    let (mut band_sum, mut band_n) = (0.0, 0usize);
    let (mut interior_sum, mut interior_n) = (0.0, 0usize);
    for i in 0..valid.len() {
        if band[i] {
            band_sum += gradient[i];
            band_n += 1;
        } else if valid[i] {
            interior_sum += gradient[i];
            interior_n += 1;
        }
    }
    if interior_n == 0 {
        return Err(Error::DegenerateMask(
            "no valid pixels remain outside the boundary band".into(),
        ));
    }
    let band_mean = if band_n > 0 { band_sum / band_n as f64 } else { 0.0 };
    let interior_mean = interior_sum / interior_n as f64;
    let boundary_gradient_ratio = if interior_mean <= FLAT_EPS {
        if band_mean <= FLAT_EPS {
            0.0
        } else {
            LARGE_RATIO
        }
    } else {
        band_mean / interior_mean
    };

    let gap_hist = rgb_histogram(
        filled
            .pixels()
            .iter()
            .zip(valid)
            .filter_map(|(p, v)| (!v).then_some(p)),
    );
    let valid_hist = rgb_histogram(
        original
            .pixels()
            .iter()
            .zip(valid)
            .filter_map(|(p, v)| v.then_some(p)),
    );

    Ok(DetectabilityReport {
        boundary_gradient_ratio,
        histogram_divergence: jensen_shannon(&gap_hist, &valid_hist),
        gap_fraction: gaps as f64 / mask.len() as f64,
    })
}

/// Per-policy aggregate over several seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: FillPolicy,
    pub runs: usize,
    pub mean: DetectabilityReport,
    pub min: DetectabilityReport,
    pub max: DetectabilityReport,
}

/// Fills `original`'s gap with every policy for every seed and averages the
/// resulting reports. Results come back in [`FillPolicy::ALL`] order.
pub fn compare_policies(
    original: &Raster,
    mask: &GapMask,
    seeds: &[u64],
    config: &NeighborConfig,
) -> Result<Vec<PolicySummary>> {
    if seeds.is_empty() {
        return Err(Error::InvalidSpec("compare_policies needs at least one seed".into()));
    }
    FillPolicy::ALL
        .into_iter()
        .map(|policy| {
            let reports = seeds
                .iter()
                .map(|&seed| {
                    let (filled, _) = fill(original, mask, policy, seed, config)?;
                    evaluate(original, &filled, mask)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(policy, &reports))
        })
        .collect()
}

fn summarize(policy: FillPolicy, reports: &[DetectabilityReport]) -> PolicySummary {
    let n = reports.len() as f64;
    let fold = |init: f64, f: fn(f64, f64) -> f64, get: fn(&DetectabilityReport) -> f64| {
        reports.iter().map(get).fold(init, f)
    };
    let field = |init: f64, f: fn(f64, f64) -> f64| DetectabilityReport {
        boundary_gradient_ratio: fold(init, f, |r| r.boundary_gradient_ratio),
        histogram_divergence: fold(init, f, |r| r.histogram_divergence),
        gap_fraction: fold(init, f, |r| r.gap_fraction),
    };
    let sum = field(0.0, |a, b| a + b);
    PolicySummary {
        policy,
        runs: reports.len(),
        mean: DetectabilityReport {
            boundary_gradient_ratio: sum.boundary_gradient_ratio / n,
            histogram_divergence: sum.histogram_divergence / n,
            gap_fraction: sum.gap_fraction / n,
        },
        min: field(f64::INFINITY, f64::min),
        max: field(f64::NEG_INFINITY, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fill::fill_neighbor_rgb;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn corner_gap(w: u32, h: u32, side: u32) -> GapMask {
        GapMask::from_fn(w, h, |x, y| !(x < side && y < side))
    }

    #[test]
    fn invisible_fill_scores_zero() {
        let gray = Raster::filled(64, 64, [90, 90, 90]);
        let m = corner_gap(64, 64, 28);
        let r = evaluate(&gray, &gray, &m).unwrap();
        assert_eq!(r.boundary_gradient_ratio, 0.0);
        assert!(r.histogram_divergence.abs() < 1e-9);
        assert_eq!(r.gap_fraction, 28.0 * 28.0 / 4096.0);
    }

    #[test]
    fn black_gap_is_maximally_divergent() {
        let gray = Raster::filled(64, 64, [90, 90, 90]);
        let m = corner_gap(64, 64, 28);
        let holed = Raster::from_fn(64, 64, |x, y| if m.is_gap(x, y) { [0; 3] } else { [90; 3] });
        let r = evaluate(&gray, &holed, &m).unwrap();
        assert!((r.histogram_divergence - LN_2).abs() < 1e-12);
        assert_eq!(r.boundary_gradient_ratio, LARGE_RATIO);
    }

    #[test]
    fn degenerate_masks() {
        let img = Raster::filled(8, 8, [1; 3]);
        assert!(matches!(
            evaluate(&img, &img, &GapMask::all_valid(8, 8)),
            Err(Error::DegenerateMask(_))
        ));
        assert!(matches!(
            evaluate(&img, &img, &GapMask::from_fn(8, 8, |_, _| false)),
            Err(Error::DegenerateMask(_))
        ));
        // Every valid pixel touches the gap.
        let stripes = GapMask::from_fn(8, 8, |x, _| x % 2 == 0);
        assert!(matches!(evaluate(&img, &img, &stripes), Err(Error::DegenerateMask(_))));
        assert!(matches!(
            evaluate(&img, &Raster::filled(8, 9, [1; 3]), &corner_gap(8, 8, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn band_straddles_boundary() {
        let m = GapMask::from_fn(10, 4, |x, _| x < 5);
        let band = boundary_band(&m);
        for y in 0..4 {
            let cols: Vec<usize> = (0..10).filter(|x| band[y * 10 + x]).collect();
            assert_eq!(cols, vec![4, 5]);
        }
    }

    #[test]
    fn sobel_on_ramp() {
        // Horizontal ramp of slope 1: gx = 8, gy = 0 away from the borders.
        let luma = LumaGrid {
            width: 6,
            height: 4,
            values: (0..24).map(|i| (i % 6) as f64).collect(),
        };
        let g = sobel_magnitude(&luma);
        assert_eq!(g[6 + 2], 8.0);
        // Replicated border halves the central difference.
        assert_eq!(g[6], 4.0);
    }

    #[test]
    fn js_reference_values() {
        let p = [0.5, 0.5, 0.0];
        let q = [0.0, 0.0, 1.0];
        assert!((jensen_shannon(&p, &q) - LN_2).abs() < 1e-15);
        assert_eq!(jensen_shannon(&p, &p), 0.0);
        // p = (1, 0), q = (1/2, 1/2): m = (3/4, 1/4).
        let expected = 0.5 * (1.0f64 / 0.75).ln() + 0.5 * (0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln());
        assert!((jensen_shannon(&[1.0, 0.0], &[0.5, 0.5]) - expected).abs() < 1e-15);
    }

    #[test]
    fn histogram_bins() {
        assert_eq!(bin_of([0, 0, 0]), 0);
        assert_eq!(bin_of([255, 255, 255]), HISTOGRAM_BINS - 1);
        assert_eq!(bin_of([31, 32, 0]), 8);
        let h = rgb_histogram(&[[0, 0, 0], [255, 255, 255]]);
        assert_eq!(h.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn uniform_neighbor_divergence_is_zero() {
        let img = Raster::filled(48, 48, [33, 66, 99]);
        let m = corner_gap(48, 48, 20);
        let summary = compare_policies(&img, &m, &[1, 2, 3], &NeighborConfig::default()).unwrap();
        let neighbor = summary.iter().find(|s| s.policy == FillPolicy::NeighborRgb).unwrap();
        assert_eq!(neighbor.mean.histogram_divergence, 0.0);
        assert_eq!(neighbor.mean.boundary_gradient_ratio, 0.0);
        assert!(compare_policies(&img, &m, &[], &NeighborConfig::default()).is_err());
    }

    #[test]
    fn means_stay_inside_envelope() {
        let img = Raster::from_fn(48, 48, |x, y| [(x * 5) as u8, (y * 5) as u8, ((x * y) % 251) as u8]);
        let m = corner_gap(48, 48, 20);
        let summary = compare_policies(&img, &m, &[4, 5, 6, 7], &NeighborConfig::default()).unwrap();
        assert_eq!(summary.len(), 3);
        for s in summary {
            assert_eq!(s.runs, 4);
            for (lo, mid, hi) in [
                (s.min.boundary_gradient_ratio, s.mean.boundary_gradient_ratio, s.max.boundary_gradient_ratio),
                (s.min.histogram_divergence, s.mean.histogram_divergence, s.max.histogram_divergence),
            ] {
                assert!(lo <= mid + 1e-12 && mid <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn report_record_json() {
        let rec = ReportRecord {
            report: DetectabilityReport {
                boundary_gradient_ratio: 1.5,
                histogram_divergence: 0.25,
                gap_fraction: 0.2,
            },
            policy: Some(FillPolicy::PixelRgb),
            seed: Some(3),
        };
        assert_eq!(
            serde_json::to_string(&rec).unwrap(),
            r#"{"boundary_gradient_ratio":1.5,"histogram_divergence":0.25,"gap_fraction":0.2,"policy":"pixel","seed":3}"#
        );
    }

    #[test]
    fn evaluate_is_pure() {
        let img = Raster::from_fn(40, 40, |x, y| [(x * 6) as u8, (y * 6) as u8, 17]);
        let m = corner_gap(40, 40, 16);
        let (filled, _) = fill_neighbor_rgb(&img, &m, 8, &NeighborConfig::default()).unwrap();
        assert_eq!(evaluate(&img, &filled, &m).unwrap(), evaluate(&img, &filled, &m).unwrap());
    }

    proptest! {
        #[test]
        fn js_symmetric_and_bounded(a in proptest::collection::vec(0u32..50, 6), b in proptest::collection::vec(0u32..50, 6)) {
            let norm = |v: &[u32]| {
                let s: u32 = v.iter().sum();
                v.iter().map(|x| if s == 0 { 0.0 } else { *x as f64 / s as f64 }).collect::<Vec<f64>>()
            };
            let (p, q) = (norm(&a), norm(&b));
            prop_assume!(p.iter().sum::<f64>() > 0.0 && q.iter().sum::<f64>() > 0.0);
            let pq = jensen_shannon(&p, &q);
            prop_assert!((pq - jensen_shannon(&q, &p)).abs() < 1e-12);
            prop_assert!((0.0..=LN_2).contains(&pq));
            if p == q {
                prop_assert!(pq.abs() < 1e-12);
            } else {
                prop_assert!(pq > 0.0);
            }
        }
    }
}
