//! Gap recovery from imagery and the usability rule.

use serde::{Deserialize, Serialize};

use crate::raster::{mask_from_sentinel, GapMask, Raster, SentinelColor, SourceImage};

/// Images are usable only while strictly less than this fraction is missing.
pub const USABLE_GAP_LIMIT: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub gap_fraction: f64,
    #[serde(rename = "components")]
    pub component_count: usize,
    pub largest_component_fraction: f64,
    pub usable: bool,
}

pub fn is_usable(gap_fraction: f64) -> bool {
    gap_fraction < USABLE_GAP_LIMIT
}

/// Builds the mask from sentinel pixels and, when `use_alpha` is set and the
/// source carried an alpha plane, from fully transparent pixels as well.
pub fn detect(source: &SourceImage, sentinel: SentinelColor, use_alpha: bool) -> (GapMask, GapStats) {
    let mut mask = mask_from_sentinel(&source.raster, sentinel);
    if use_alpha {
        if let Some(alpha) = &source.alpha {
            let (w, h) = mask.dimensions();
            for (i, a) in alpha.iter().enumerate() {
                if *a == 0 {
                    mask.set_valid(i as u32 % w, i as u32 / w, false);
                }
            }
            debug_assert_eq!(alpha.len(), (w * h) as usize);
        }
    }
    let stats = gap_stats(&mask);
    (mask, stats)
}

pub fn detect_raster(raster: &Raster, sentinel: SentinelColor) -> (GapMask, GapStats) {
    let mask = mask_from_sentinel(raster, sentinel);
    let stats = gap_stats(&mask);
    (mask, stats)
}

pub fn gap_stats(mask: &GapMask) -> GapStats {
    let sizes = component_sizes(mask);
    let total = mask.len() as f64;
    let gap_fraction = mask.gap_count() as f64 / total;
    GapStats {
        gap_fraction,
        component_count: sizes.len(),
        largest_component_fraction: sizes.iter().copied().max().unwrap_or(0) as f64 / total,
        usable: is_usable(gap_fraction),
    }
}

/// Sizes of the 4-connected gap components, in discovery (row-major) order.
pub fn component_sizes(mask: &GapMask) -> Vec<usize> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let valid = mask.as_slice();
    let mut seen = vec![false; valid.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..valid.len() {
        if valid[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !valid[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        sizes.push(size);
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source(r: Raster) -> SourceImage {
        SourceImage {
            raster: r,
            alpha: None,
        }
    }

    #[test]
    fn clean_image() {
        let (mask, stats) = detect(&source(Raster::filled(8, 8, [3, 3, 3])), SentinelColor::BLACK, false);
        assert_eq!(mask.gap_count(), 0);
        assert_eq!(stats.gap_fraction, 0.0);
        assert_eq!(stats.component_count, 0);
        assert_eq!(stats.largest_component_fraction, 0.0);
        assert!(stats.usable);
    }

    #[test]
    fn single_square() {
        let r = Raster::from_fn(256, 256, |x, y| if x < 114 && y < 114 { [0; 3] } else { [5, 5, 5] });
        let (_, stats) = detect(&source(r), SentinelColor::BLACK, false);
        assert_eq!(stats.component_count, 1);
        assert!((stats.gap_fraction - 12996.0 / 65536.0).abs() < 1e-12);
        assert_eq!(stats.largest_component_fraction, stats.gap_fraction);
        assert!(stats.usable);
    }

    #[test]
    fn usability_threshold_is_strict() {
        assert!(is_usable(0.20));
        assert!(is_usable(0.2499999));
        assert!(!is_usable(0.25));
        assert!(!is_usable(0.30));
        // 30 of 100 pixels.
        let r = Raster::from_fn(10, 10, |x, _| if x < 3 { [0; 3] } else { [1; 3] });
        let (_, stats) = detect_raster(&r, SentinelColor::BLACK);
        assert_eq!(stats.gap_fraction, 0.30);
        assert!(!stats.usable);
    }

    #[test]
    fn diagonal_pixels_are_separate_components() {
        let mask = GapMask::from_fn(4, 4, |x, y| !(x == y));
        assert_eq!(component_sizes(&mask), vec![1, 1, 1, 1]);
        let stats = gap_stats(&mask);
        assert_eq!(stats.component_count, 4);
        assert_eq!(stats.largest_component_fraction, 1.0 / 16.0);
    }

    #[test]
    fn alpha_zero_is_gap_only_when_requested() {
        let src = SourceImage {
            raster: Raster::filled(2, 2, [9, 9, 9]),
            alpha: Some(vec![255, 0, 255, 255]),
        };
        assert_eq!(detect(&src, SentinelColor::BLACK, false).0.gap_count(), 0);
        let (mask, _) = detect(&src, SentinelColor::BLACK, true);
        assert!(mask.is_gap(1, 0));
        assert_eq!(mask.gap_count(), 1);
    }

    #[test]
    fn stats_json_field_names() {
        let stats = gap_stats(&GapMask::all_valid(2, 2));
        let json = serde_json::to_value(&stats).unwrap();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 4);
        for k in ["gap_fraction", "components", "largest_component_fraction", "usable"] {
            assert!(json.get(k).is_some(), "missing {k}");
        }
    }
}
