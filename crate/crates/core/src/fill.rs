//! The three gap-filling policies.
//!
//! All policies visit gap pixels in row-major order and draw from a single
//! [`crate::rng`] stream seeded by the caller, so `(raster, mask, seed,
//! config)` determine the output bit-exactly. Valid pixels are never
//! written, and only originally-valid pixels are ever used as sources.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distance::chebyshev_to_valid;
use crate::error::{Error, Result};
use crate::raster::{save_gray16, GapMask, Raster, Rgb};
use crate::rng::{stream, FillRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FillPolicy {
    /// Independent uniform draw per channel.
    #[serde(rename = "random")]
    RandomRgb,
    /// Whole triples sampled from the valid pixels of the image.
    #[serde(rename = "pixel")]
    PixelRgb,
    /// Triples sampled from nearby valid pixels with an expanding radius.
    #[serde(rename = "neighbor")]
    NeighborRgb,
}

impl FillPolicy {
    pub const ALL: [FillPolicy; 3] = [FillPolicy::RandomRgb, FillPolicy::PixelRgb, FillPolicy::NeighborRgb];

    pub fn code(self) -> &'static str {
        match self {
            FillPolicy::RandomRgb => "random",
            FillPolicy::PixelRgb => "pixel",
            FillPolicy::NeighborRgb => "neighbor",
        }
    }
}

impl fmt::Display for FillPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for FillPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FillPolicy::ALL
            .into_iter()
            .find(|p| p.code() == s)
            .ok_or_else(|| format!("unknown fill policy {s:?} (expected random|pixel|neighbor)"))
    }
}

/// Starting search radius for a gap pixel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialRadius {
    /// Same radius for every gap pixel.
    Fixed(u32),
    /// Chebyshev distance to the nearest valid pixel.
    DistanceTransform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborConfig {
    pub draws_per_radius: u32,
    pub radius_growth: f64,
    pub initial_radius: InitialRadius,
}

impl Default for NeighborConfig {
    fn default() -> Self {
        Self {
            draws_per_radius: 3,
            radius_growth: 2.0,
            initial_radius: InitialRadius::DistanceTransform,
        }
    }
}

impl NeighborConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws_per_radius == 0 {
            return Err(Error::InvalidSpec("draws_per_radius must be at least 1".into()));
        }
        if !(self.radius_growth.is_finite() && self.radius_growth > 1.0) {
            return Err(Error::InvalidSpec(format!(
                "radius_growth must be a finite multiplier > 1, got {}",
                self.radius_growth
            )));
        }
        if self.initial_radius == InitialRadius::Fixed(0) {
            return Err(Error::InvalidSpec("fixed initial radius must be at least 1".into()));
        }
        Ok(())
    }

    fn next_radius(&self, r: u32, cap: u32) -> u32 {
        let grown = (r as f64 * self.radius_growth).ceil();
        let grown = if grown >= cap as f64 { cap } else { grown as u32 };
        grown.max(r + 1).min(cap)
    }
}

/// Final sampling radius per pixel; 0 everywhere outside the gap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadiusMap {
    pub width: u32,
    pub height: u32,
    pub radii: Vec<u32>,
}

impl RadiusMap {
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.radii[y as usize * self.width as usize + x as usize]
    }

    /// 16-bit grayscale PNG, saturating at 65535.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        save_gray16(self.width, self.height, &self.radii, path)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FillReport {
    pub policy: FillPolicy,
    pub seed: u64,
    pub pixels_filled: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbor_config: Option<NeighborConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_final_radius: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_final_radius: Option<f64>,
    pub elapsed_ms: f64,
    #[serde(skip)]
    pub neighbor_final_radii: Option<RadiusMap>,
}

impl FillReport {
    fn new(policy: FillPolicy, seed: u64, pixels_filled: usize, started: Instant) -> Self {
        Self {
            policy,
            seed,
            pixels_filled,
            neighbor_config: None,
            max_final_radius: None,
            mean_final_radius: None,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
            neighbor_final_radii: None,
        }
    }
}

/// Fills the gap of `raster` described by `mask` using `policy`.
/// `config` only affects [`FillPolicy::NeighborRgb`].
pub fn fill(
    raster: &Raster,
    mask: &GapMask,
    policy: FillPolicy,
    seed: u64,
    config: &NeighborConfig,
) -> Result<(Raster, FillReport)> {
    match policy {
        FillPolicy::RandomRgb => fill_random_rgb(raster, mask, seed),
        FillPolicy::PixelRgb => fill_pixel_rgb(raster, mask, seed),
        FillPolicy::NeighborRgb => fill_neighbor_rgb(raster, mask, seed, config),
    }
}

pub fn fill_random_rgb(raster: &Raster, mask: &GapMask, seed: u64) -> Result<(Raster, FillReport)> {
    mask.check_matches(raster)?;
    let started = Instant::now();
    let mut rng = stream(seed);
    let mut out = raster.clone();
    let mut filled = 0;
    for (px, valid) in out.pixels_mut().iter_mut().zip(mask.as_slice()) {
        if !*valid {
            *px = [rng.gen(), rng.gen(), rng.gen()];
            filled += 1;
        }
    }
    Ok((out, FillReport::new(FillPolicy::RandomRgb, seed, filled, started)))
}

pub fn fill_pixel_rgb(raster: &Raster, mask: &GapMask, seed: u64) -> Result<(Raster, FillReport)> {
    mask.check_matches(raster)?;
    let started = Instant::now();
    let sources: Vec<Rgb> = raster
        .pixels()
        .iter()
        .zip(mask.as_slice())
        .filter_map(|(p, v)| v.then_some(*p))
        .collect();
    if sources.is_empty() {
        return Err(Error::NoValidSource);
    }
    let mut rng = stream(seed);
    let mut out = raster.clone();
    let mut filled = 0;
    for (px, valid) in out.pixels_mut().iter_mut().zip(mask.as_slice()) {
        if !*valid {
            *px = sources[rng.gen_range(0..sources.len())];
            filled += 1;
        }
    }
    Ok((out, FillReport::new(FillPolicy::PixelRgb, seed, filled, started)))
}

pub fn fill_neighbor_rgb(
    raster: &Raster,
    mask: &GapMask,
    seed: u64,
    config: &NeighborConfig,
) -> Result<(Raster, FillReport)> {
    mask.check_matches(raster)?;
    config.validate()?;
    let started = Instant::now();
    let distance = chebyshev_to_valid(mask)?;
    let (w, h) = raster.dimensions();
    let cap = w.max(h);
    let valid = mask.as_slice();
    let src = raster.pixels();
    let mut sources: Option<Vec<usize>> = None;

    let mut rng = stream(seed);
    let mut out = raster.clone();
    let mut radii = vec![0u32; valid.len()];
    let mut filled = 0usize;
    let mut radius_sum = 0u64;

    for idx in mask.gap_indices() {
        let (px, py) = ((idx % w as usize) as i64, (idx / w as usize) as i64);
        let mut r = match config.initial_radius {
            InitialRadius::DistanceTransform => distance[idx],
            InitialRadius::Fixed(v) => v,
        }
        .clamp(1, cap);
        let chosen = loop {
            if let Some(j) = draw_in_window(&mut rng, px, py, r, w, h, valid, config.draws_per_radius) {
                break j;
            }
            if r == cap {
                // The cap window covers the whole image, so continued
                // rejection sampling there is uniform over all valid
                // pixels; draw from that set directly.
                let pool = sources.get_or_insert_with(|| {
                    valid.iter().enumerate().filter_map(|(i, v)| v.then_some(i)).collect()
                });
                break pool[rng.gen_range(0..pool.len())];
            }
            r = config.next_radius(r, cap);
        };
        out.pixels_mut()[idx] = src[chosen];
        radii[idx] = r;
        radius_sum += r as u64;
        filled += 1;
    }

    let mut report = FillReport::new(FillPolicy::NeighborRgb, seed, filled, started);
    report.neighbor_config = Some(*config);
    report.max_final_radius = radii.iter().copied().max();
    report.mean_final_radius = (filled > 0).then(|| radius_sum as f64 / filled as f64);
    report.neighbor_final_radii = Some(RadiusMap {
        width: w,
        height: h,
        radii,
    });
    Ok((out, report))
}

/// Up to `draws` uniform picks from the `(2r+1)^2 - 1` window positions
/// around `(px, py)`; returns the first that lands on a valid pixel.
/// Picks outside the image count as failures.
#[allow(clippy::too_many_arguments)]
fn draw_in_window(
    rng: &mut FillRng,
    px: i64,
    py: i64,
    r: u32,
    w: u32,
    h: u32,
    valid: &[bool],
    draws: u32,
) -> Option<usize> {
    let side = 2 * r as u64 + 1;
    let center = r as u64 * side + r as u64;
    let positions = side * side - 1;
    for _ in 0..draws {
        let mut k = rng.gen_range(0..positions);
        if k >= center {
            k += 1;
        }
        let x = px + (k % side) as i64 - r as i64;
        let y = py + (k / side) as i64 - r as i64;
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            continue;
        }
        let j = y as usize * w as usize + x as usize;
        if valid[j] {
            return Some(j);
        }
    }
    None
}
