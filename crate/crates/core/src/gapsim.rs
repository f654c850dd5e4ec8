//! Synthetic swath-gap injection.
//!
//! Square gaps sit flush in one image corner with side
//! `round(sqrt(area_fraction * width * height))`. Polygon gaps are
//! rasterized with the even-odd rule evaluated at pixel centers.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GapMask, Raster, SentinelColor};
use crate::rng::derive_seed;

pub const DEFAULT_AREA_FRACTION: f64 = 0.20;
pub const MAX_AREA_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GapPosition {
    #[serde(rename = "none")]
    Absent,
    #[serde(rename = "ul")]
    UpperLeft,
    #[serde(rename = "ur")]
    UpperRight,
    #[serde(rename = "ll")]
    LowerLeft,
    #[serde(rename = "lr")]
    LowerRight,
}

impl GapPosition {
    /// Variant order used by [`make_variants`].
    pub const ALL: [GapPosition; 5] = [
        GapPosition::Absent,
        GapPosition::UpperLeft,
        GapPosition::UpperRight,
        GapPosition::LowerLeft,
        GapPosition::LowerRight,
    ];

    pub fn code(self) -> &'static str {
        match self {
            GapPosition::Absent => "none",
            GapPosition::UpperLeft => "ul",
            GapPosition::UpperRight => "ur",
            GapPosition::LowerLeft => "ll",
            GapPosition::LowerRight => "lr",
        }
    }
}

impl fmt::Display for GapPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for GapPosition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        GapPosition::ALL
            .into_iter()
            .find(|p| p.code() == s)
            .ok_or_else(|| format!("unknown gap position {s:?} (expected ul|ur|ll|lr|none)"))
    }
}

/// A vertex in continuous pixel coordinates; pixel `(x, y)` has its center at
/// `(x + 0.5, y + 0.5)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GapShape {
    Square,
    Polygon(Vec<Point>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapSpec {
    pub position: GapPosition,
    pub area_fraction: f64,
    pub shape: GapShape,
    pub sentinel: SentinelColor,
}

impl GapSpec {
    pub fn square(position: GapPosition, area_fraction: f64, sentinel: SentinelColor) -> Self {
        Self {
            position,
            area_fraction,
            shape: GapShape::Square,
            sentinel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_area_fraction(self.area_fraction)
    }
}

impl Default for GapSpec {
    fn default() -> Self {
        Self::square(
            GapPosition::UpperLeft,
            DEFAULT_AREA_FRACTION,
            SentinelColor::default(),
        )
    }
}

pub fn validate_area_fraction(area_fraction: f64) -> Result<()> {
    if !(area_fraction > 0.0 && area_fraction <= MAX_AREA_FRACTION) {
        return Err(Error::InvalidSpec(format!(
            "area fraction {area_fraction} outside (0, {MAX_AREA_FRACTION}]"
        )));
    }
    Ok(())
}

/// Result of injecting a gap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectedGap {
    pub raster: Raster,
    pub mask: GapMask,
    /// Pixels outside the injected gap that already matched the sentinel.
    /// When non-zero, sentinel scans over-report the gap and the returned
    /// mask is the authoritative one.
    pub preexisting_sentinel: usize,
}

impl InjectedGap {
    pub fn warning(&self) -> Option<String> {
        (self.preexisting_sentinel > 0).then(|| {
            format!(
                "{} pixel(s) outside the gap already equal the sentinel color",
                self.preexisting_sentinel
            )
        })
    }
}

/// Side length of a square covering `area_fraction` of a `width x height` image.
pub fn square_side(width: u32, height: u32, area_fraction: f64) -> u32 {
    (area_fraction * width as f64 * height as f64).sqrt().round() as u32
}

/// Top-left corner of a `side`-sized square flush against the corner named by
/// `position`, or `None` for [`GapPosition::Absent`].
pub fn square_origin(width: u32, height: u32, side: u32, position: GapPosition) -> Option<(u32, u32)> {
    let right = width - side;
    let bottom = height - side;
    match position {
        GapPosition::Absent => None,
        GapPosition::UpperLeft => Some((0, 0)),
        GapPosition::UpperRight => Some((right, 0)),
        GapPosition::LowerLeft => Some((0, bottom)),
        GapPosition::LowerRight => Some((right, bottom)),
    }
}

pub fn inject_gap(raster: &Raster, spec: &GapSpec) -> Result<InjectedGap> {
    spec.validate()?;
    if spec.position == GapPosition::Absent {
        return Ok(InjectedGap {
            raster: raster.clone(),
            mask: GapMask::all_valid(raster.width(), raster.height()),
            preexisting_sentinel: 0,
        });
    }
    match &spec.shape {
        GapShape::Square => {
            let mask = square_mask(raster.width(), raster.height(), spec.area_fraction, spec.position)?;
            Ok(apply_mask(raster, mask, spec.sentinel))
        }
        GapShape::Polygon(vertices) => inject_polygon_gap(raster, vertices, spec.sentinel),
    }
}

/// Mask of the corner square for `position`; all-valid for `Absent`.
pub fn square_mask(width: u32, height: u32, area_fraction: f64, position: GapPosition) -> Result<GapMask> {
    validate_area_fraction(area_fraction)?;
    let side = square_side(width, height, area_fraction);
    if side > width || side > height {
        return Err(Error::GapTooLarge(format!(
            "square side {side} exceeds {width}x{height} image"
        )));
    }
    Ok(match square_origin(width, height, side, position) {
        None => GapMask::all_valid(width, height),
        Some((x0, y0)) => GapMask::from_fn(width, height, |x, y| {
            !(x >= x0 && x < x0 + side && y >= y0 && y < y0 + side)
        }),
    })
}

pub fn inject_polygon_gap(
    raster: &Raster,
    vertices: &[Point],
    sentinel: SentinelColor,
) -> Result<InjectedGap> {
    let mask = polygon_mask(raster.width(), raster.height(), vertices)?;
    let fraction = mask.gap_fraction();
    if fraction > MAX_AREA_FRACTION {
        return Err(Error::GapTooLarge(format!(
            "polygon covers {:.4} of the image, above the {MAX_AREA_FRACTION} cap",
            fraction
        )));
    }
    Ok(apply_mask(raster, mask, sentinel))
}

fn apply_mask(raster: &Raster, mask: GapMask, sentinel: SentinelColor) -> InjectedGap {
    let mut out = raster.clone();
    let mut preexisting = 0;
    for (px, valid) in out.pixels_mut().iter_mut().zip(mask.as_slice()) {
        if *valid {
            if sentinel.matches(*px) {
                preexisting += 1;
            }
        } else {
            *px = sentinel.rgb();
        }
    }
    if preexisting > 0 {
        log::warn!("{preexisting} pixel(s) outside the injected gap already match sentinel {sentinel}");
    }
    InjectedGap {
        raster: out,
        mask,
        preexisting_sentinel: preexisting,
    }
}

/// Rasterizes a simple polygon: a pixel is gap when its center is inside
/// under the even-odd rule.
pub fn polygon_mask(width: u32, height: u32, vertices: &[Point]) -> Result<GapMask> {
    validate_polygon(width, height, vertices)?;
    let n = vertices.len();
    let mut valid = vec![true; width as usize * height as usize];
    let mut crossings = Vec::with_capacity(n);
    for y in 0..height {
        let cy = y as f64 + 0.5;
        crossings.clear();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if (a.y > cy) != (b.y > cy) {
                crossings.push(a.x + (cy - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        if crossings.is_empty() {
            continue;
        }
        crossings.sort_by(f64::total_cmp);
        let row = &mut valid[y as usize * width as usize..(y as usize + 1) * width as usize];
        for (x, v) in row.iter_mut().enumerate() {
            let cx = x as f64 + 0.5;
            let right_of = crossings.len() - crossings.partition_point(|c| *c <= cx);
            if right_of % 2 == 1 {
                *v = false;
            }
        }
    }
    GapMask::new(width, height, valid)
}

fn validate_polygon(width: u32, height: u32, vertices: &[Point]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::InvalidPolygon(format!("need at least 3 vertices, got {n}")));
    }
    for (i, p) in vertices.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::InvalidPolygon(format!("vertex {i} is not finite")));
        }
        if p.x < 0.0 || p.y < 0.0 || p.x > width as f64 || p.y > height as f64 {
            return Err(Error::InvalidPolygon(format!(
                "vertex {i} ({}, {}) lies outside the {width}x{height} image",
                p.x, p.y
            )));
        }
    }
    let edge = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    for i in 0..n {
        let (a, b) = edge(i);
        if a == b {
            return Err(Error::InvalidPolygon(format!("edge {i} has zero length")));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = edge(i);
            let (c, d) = edge(j);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared vertex is fine; folding back along the same line is not.
                let (shared, far_i, far_j) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orient(shared, far_i, far_j) == 0.0 && dot(far_i, shared, far_j) > 0.0 {
                    return Err(Error::InvalidPolygon(format!(
                        "edges {i} and {j} overlap"
                    )));
                }
            } else if segments_intersect(a, b, c, d) {
                return Err(Error::InvalidPolygon(format!(
                    "edges {i} and {j} intersect"
                )));
            }
        }
    }
    Ok(())
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Dot product of `a - origin` and `b - origin`.
fn dot(a: Point, origin: Point, b: Point) -> f64 {
    (a.x - origin.x) * (b.x - origin.x) + (a.y - origin.y) * (b.y - origin.y)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// One positional copy of a source image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variant {
    pub position: GapPosition,
    pub raster: Raster,
    pub mask: GapMask,
    /// Seed downstream fills of this variant should use.
    pub seed: u64,
    pub preexisting_sentinel: usize,
}

/// Produces the five standard copies of `raster`, in [`GapPosition::ALL`]
/// order, with equally sized corner squares.
pub fn make_variants(
    raster: &Raster,
    sentinel: SentinelColor,
    area_fraction: f64,
    base_seed: u64,
) -> Result<Vec<Variant>> {
    GapPosition::ALL
        .into_iter()
        .enumerate()
        .map(|(i, position)| {
            let spec = GapSpec::square(position, area_fraction, sentinel);
            let injected = inject_gap(raster, &spec)?;
            Ok(Variant {
                position,
                raster: injected.raster,
                mask: injected.mask,
                seed: derive_seed(base_seed, i as u64),
                preexisting_sentinel: injected.preexisting_sentinel,
            })
        })
        .collect()
}

/// One JSONL manifest record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestLine {
    pub source: String,
    pub class: String,
    pub position: GapPosition,
    pub output: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub position: GapPosition,
    pub output_path: PathBuf,
    pub seed: u64,
    pub mask_path: Option<PathBuf>,
    pub warning: Option<String>,
}

/// Provenance of the five variants written for one source image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariantManifest {
    pub source_path: PathBuf,
    pub class_label: String,
    entries: Vec<ManifestEntry>,
}

impl VariantManifest {
    /// Requires exactly one entry per [`GapPosition`].
    pub fn new(source_path: PathBuf, class_label: String, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut positions: Vec<GapPosition> = entries.iter().map(|e| e.position).collect();
        positions.sort();
        if positions != GapPosition::ALL {
            return Err(Error::InvalidSpec(format!(
                "manifest for {} must list each gap position once, got {positions:?}",
                source_path.display()
            )));
        }
        Ok(Self {
            source_path,
            class_label,
            entries,
        })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn lines(&self) -> Vec<ManifestLine> {
        self.entries
            .iter()
            .map(|e| ManifestLine {
                source: self.source_path.display().to_string(),
                class: self.class_label.clone(),
                position: e.position,
                output: e.output_path.display().to_string(),
                seed: e.seed,
                mask: e.mask_path.as_ref().map(|p| p.display().to_string()),
                warning: e.warning.clone(),
            })
            .collect()
    }
}
