use std::f64::consts::LN_2;

use proptest::prelude::*;
use swathfill::detect::detect_raster;
use swathfill::gapsim::{inject_polygon_gap, Point};
use swathfill::raster::{load_source, save_raster};
use swathfill::synth::{synthetic_image, SceneKind};
use swathfill::{
    compare_policies, evaluate, fill, inject_gap, make_variants, FillPolicy, GapPosition, GapSpec, NeighborConfig,
    Raster, SentinelColor,
};

fn scene(w: u32, h: u32) -> Raster {
    synthetic_image(SceneKind::Parcels, w, h, 41)
}

#[test]
fn inject_save_detect_fill_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let original = scene(120, 90);
    for (ext, position) in [("png", GapPosition::LowerLeft), ("ppm", GapPosition::UpperRight)] {
        let injected = inject_gap(&original, &GapSpec::square(position, 0.2, SentinelColor::BLACK)).unwrap();
        let path = dir.path().join(format!("g.{ext}"));
        save_raster(&injected.raster, &path).unwrap();

        let loaded = load_source(&path).unwrap();
        assert_eq!(loaded.raster, injected.raster);
        let (mask, stats) = detect_raster(&loaded.raster, SentinelColor::BLACK);
        assert_eq!(mask, injected.mask);
        // side = round(sqrt(0.2 * 120 * 90)) = 46
        assert_eq!(mask.gap_count(), 46 * 46);
        assert_eq!(stats.component_count, 1);
        assert!(stats.usable);

        for policy in FillPolicy::ALL {
            let (filled, report) = fill(&loaded.raster, &mask, policy, 8, &NeighborConfig::default()).unwrap();
            assert_eq!(report.pixels_filled, 46 * 46);
            let r = evaluate(&original, &filled, &mask).unwrap();
            assert!(r.boundary_gradient_ratio >= 0.0 && r.boundary_gradient_ratio.is_finite());
            assert!((0.0..=LN_2).contains(&r.histogram_divergence));
            assert_eq!(r.gap_fraction, (46.0 * 46.0) / (120.0 * 90.0));
        }
    }
}

#[test]
fn polygon_gap_matches_brute_force_count() {
    let original = scene(64, 64);
    let tri = [Point::new(0.0, 0.0), Point::new(40.0, 0.0), Point::new(0.0, 40.0)];
    let injected = inject_polygon_gap(&original, &tri, SentinelColor::BLACK).unwrap();
    // Pixel centres (x+.5, y+.5) strictly inside x + y < 40.
    let mut expected = 0;
    for y in 0..64 {
        for x in 0..64 {
            if (x as f64 + 0.5) + (y as f64 + 0.5) < 40.0 {
                expected += 1;
            }
        }
    }
    assert_eq!(injected.mask.gap_count(), expected);
    let (filled, _) = fill(&injected.raster, &injected.mask, FillPolicy::NeighborRgb, 1, &NeighborConfig::default())
        .unwrap();
    let (_, stats) = detect_raster(&filled, SentinelColor::BLACK);
    assert_eq!(stats.gap_fraction, 0.0);
}

#[test]
fn oversized_and_degenerate_inputs_are_rejected() {
    let original = scene(32, 32);
    assert!(inject_gap(&original, &GapSpec::square(GapPosition::UpperLeft, 0.26, SentinelColor::BLACK)).is_err());
    let bowtie = [Point::new(0.0, 0.0), Point::new(10.0, 10.0), Point::new(10.0, 0.0), Point::new(0.0, 10.0)];
    assert!(inject_polygon_gap(&original, &bowtie, SentinelColor::BLACK).is_err());
    let all_gap = swathfill::GapMask::from_fn(32, 32, |_, _| false);
    for policy in [FillPolicy::PixelRgb, FillPolicy::NeighborRgb] {
        assert!(matches!(
            fill(&original, &all_gap, policy, 0, &NeighborConfig::default()),
            Err(swathfill::Error::NoValidSource)
        ));
    }
}

#[test]
fn random_fill_is_worst_on_a_smooth_scene() {
    let original = synthetic_image(SceneKind::Gradient, 96, 96, 3);
    let mask = inject_gap(&original, &GapSpec::square(GapPosition::LowerRight, 0.2, SentinelColor::BLACK))
        .unwrap()
        .mask;
    let s = compare_policies(&original, &mask, &[1, 2, 3], &NeighborConfig::default()).unwrap();
    let (random, pixel, neighbor) = (&s[0].mean, &s[1].mean, &s[2].mean);
    assert!(neighbor.boundary_gradient_ratio < random.boundary_gradient_ratio);
    assert!(pixel.histogram_divergence < random.histogram_divergence);
    assert!(neighbor.histogram_divergence < random.histogram_divergence);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn variants_share_gap_size_and_keep_valid_pixels(
        w in 8u32..60, h in 8u32..60, af in 0.01f64..0.25, seed in any::<u64>()
    ) {
        // Below 0.25 a square always fits once the aspect ratio is at most 4.
        prop_assume!(w.max(h) <= 4 * w.min(h));
        let original = synthetic_image(SceneKind::Noise, w, h, seed);
        let variants = make_variants(&original, SentinelColor::BLACK, af, seed).unwrap();
        prop_assert_eq!(variants.len(), 5);
        prop_assert_eq!(&variants[0].raster, &original);
        prop_assert_eq!(variants[0].mask.gap_count(), 0);
        let gaps = variants[1].mask.gap_count();
        let mut seeds = std::collections::HashSet::new();
        for v in &variants {
            seeds.insert(v.seed);
            if v.position != GapPosition::Absent {
                prop_assert_eq!(v.mask.gap_count(), gaps);
            }
            for (i, valid) in v.mask.as_slice().iter().enumerate() {
                if *valid {
                    prop_assert_eq!(v.raster.pixels()[i], original.pixels()[i]);
                } else {
                    prop_assert_eq!(v.raster.pixels()[i], [0, 0, 0]);
                }
            }
        }
        prop_assert_eq!(seeds.len(), 5);
    }
}
