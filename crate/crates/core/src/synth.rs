//! Seeded synthetic scenes for exercising the pipeline without real imagery.
//!
//! Each scene combines a low-frequency illumination gradient with a texture
//! (value noise, stripes, parcels, rings, blobs or a meandering band), so the
//! corpus mixes smooth and busy content. Channels are kept in `1..=255`, which
//! guarantees no pixel equals the default black sentinel.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::{Error, Result};
use crate::raster::{save_raster, Raster, Rgb};
use crate::rng::{derive_seed, stream, FillRng};

/// Land-use class names used for the default corpus layout.
pub const DEFAULT_CLASSES: [&str; 7] = [
    "airplane",
    "beach",
    "forest",
    "harbor",
    "freeway",
    "river",
    "storagetanks",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneKind {
    Blobs,
    Gradient,
    Noise,
    Parcels,
    Stripes,
    Meander,
    Rings,
}

impl SceneKind {
    pub const ALL: [SceneKind; 7] = [
        SceneKind::Blobs,
        SceneKind::Gradient,
        SceneKind::Noise,
        SceneKind::Parcels,
        SceneKind::Stripes,
        SceneKind::Meander,
        SceneKind::Rings,
    ];
}

/// Bilinear value noise on a random lattice with smoothstep easing.
struct ValueNoise {
    lattice: Vec<f64>,
    cols: usize,
    cell: f64,
}

impl ValueNoise {
    fn new(rng: &mut FillRng, width: u32, height: u32, cell: f64) -> Self {
        let cols = (width as f64 / cell).ceil() as usize + 2;
        let rows = (height as f64 / cell).ceil() as usize + 2;
        let lattice = (0..cols * rows).map(|_| rng.gen::<f64>()).collect();
        Self { lattice, cols, cell }
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = (x / self.cell, y / self.cell);
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        let ease = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (ease(gx.fract()), ease(gy.fract()));
        let v = |cx: usize, cy: usize| self.lattice[cy * self.cols + cx];
        let top = v(ix, iy) * (1.0 - tx) + v(ix + 1, iy) * tx;
        let bottom = v(ix, iy + 1) * (1.0 - tx) + v(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

fn random_color(rng: &mut FillRng) -> [f64; 3] {
    [rng.gen_range(20.0..235.0), rng.gen_range(20.0..235.0), rng.gen_range(20.0..235.0)]
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

fn to_pixel(c: [f64; 3]) -> Rgb {
    let q = |v: f64| v.round().clamp(1.0, 255.0) as u8;
    [q(c[0]), q(c[1]), q(c[2])]
}

/// Renders one scene. Same arguments, same pixels.
pub fn synthetic_image(kind: SceneKind, width: u32, height: u32, seed: u64) -> Raster {
    let mut rng = stream(seed);
    let (w, h) = (width as f64, height as f64);

    // Shared ingredients: an illumination ramp and fine grain.
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let (ca, sa) = (angle.cos(), angle.sin());
    let light = rng.gen_range(0.15..0.45);
    let grain_amp = rng.gen_range(4.0..14.0);
    let grain = ValueNoise::new(&mut rng, width, height, 1.5);
    let base = random_color(&mut rng);
    let accent = random_color(&mut rng);
    let coarse_cell = rng.gen_range(24.0..64.0);
    let coarse = ValueNoise::new(&mut rng, width, height, coarse_cell);
    let medium_cell = rng.gen_range(6.0..16.0);
    let medium = ValueNoise::new(&mut rng, width, height, medium_cell);

    let centers: Vec<(f64, f64, [f64; 3], f64)> = (0..rng.gen_range(6..18))
        .map(|_| {
            (
                rng.gen_range(0.0..w),
                rng.gen_range(0.0..h),
                random_color(&mut rng),
                rng.gen_range(6.0..22.0),
            )
        })
        .collect();
    let freq = rng.gen_range(0.05..0.25);
    let stripe_angle = rng.gen_range(0.0..std::f64::consts::PI);
    let (sc, ss) = (stripe_angle.cos(), stripe_angle.sin());
    let river_phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let river_width = rng.gen_range(14.0..40.0);

    Raster::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        let ramp = ((fx / w - 0.5) * ca + (fy / h - 0.5) * sa) * 2.0 * light;
        let texture = match kind {
            SceneKind::Gradient => mix(base, accent, (fx * ca.abs() + fy * sa.abs()) / (w + h)),
            SceneKind::Noise => mix(base, accent, 0.6 * coarse.sample(fx, fy) + 0.4 * medium.sample(fx, fy)),
            SceneKind::Stripes => {
                let t = 0.5 + 0.5 * ((fx * sc + fy * ss) * freq).sin();
                mix(base, accent, 0.7 * t + 0.3 * medium.sample(fx, fy))
            }
            SceneKind::Parcels => {
                let nearest = centers
                    .iter()
                    .min_by(|a, b| {
                        let da = (a.0 - fx).powi(2) + (a.1 - fy).powi(2);
                        let db = (b.0 - fx).powi(2) + (b.1 - fy).powi(2);
                        da.total_cmp(&db)
                    })
                    .map(|c| c.2)
                    .unwrap_or(base);
                mix(nearest, accent, 0.25 * medium.sample(fx, fy))
            }
            SceneKind::Rings => {
                let mut c = mix(base, accent, 0.3 * coarse.sample(fx, fy));
                for (cx, cy, col, r) in &centers {
                    let d = ((cx - fx).powi(2) + (cy - fy).powi(2)).sqrt();
                    if d < *r {
                        let t = 0.5 + 0.5 * (d * 0.9).cos();
                        c = mix(*col, [235.0, 235.0, 235.0], 0.5 * t);
                    }
                }
                c
            }
            SceneKind::Blobs => {
                let mut c = mix(base, accent, medium.sample(fx, fy));
                for (cx, cy, col, r) in &centers {
                    let d = ((cx - fx).powi(2) + (cy - fy).powi(2)).sqrt();
                    if d < *r * 0.6 {
                        c = *col;
                    }
                }
                c
            }
            SceneKind::Meander => {
                let centre = h * 0.5 + h * 0.25 * (fx / w * std::f64::consts::TAU + river_phase).sin();
                let band = ((fy - centre).abs() / river_width).min(1.0);
                let land = mix(base, accent, coarse.sample(fx, fy));
                mix([40.0, 70.0, 120.0], land, band)
            }
        };
        let shade = 1.0 + ramp;
        let g = (grain.sample(fx, fy) - 0.5) * 2.0 * grain_amp;
        to_pixel([texture[0] * shade + g, texture[1] * shade + g, texture[2] * shade + g])
    })
}

/// One synthetic corpus image.
#[derive(Clone, Debug)]
pub struct CorpusImage {
    pub class: String,
    pub index: usize,
    pub raster: Raster,
}

/// `per_class` scenes for each class in `classes`. Kinds rotate through
/// [`SceneKind::ALL`] so every class mixes smooth and textured content.
pub fn synthetic_corpus(classes: &[&str], per_class: usize, width: u32, height: u32, seed: u64) -> Vec<CorpusImage> {
    let mut out = Vec::with_capacity(classes.len() * per_class);
    for (ci, class) in classes.iter().enumerate() {
        for i in 0..per_class {
            let n = (ci * per_class + i) as u64;
            let kind = SceneKind::ALL[(ci + i) % SceneKind::ALL.len()];
            out.push(CorpusImage {
                class: class.to_string(),
                index: i,
                raster: synthetic_image(kind, width, height, derive_seed(seed, n)),
            });
        }
    }
    out
}

/// Writes a corpus as `<dir>/<class>/<class>NN.png` and returns the paths.
pub fn write_corpus(dir: &Path, corpus: &[CorpusImage]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(corpus.len());
    for img in corpus {
        let class_dir = dir.join(&img.class);
        fs::create_dir_all(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
        let path = class_dir.join(format!("{}{:02}.png", img.class, img.index));
        save_raster(&img.raster, &path)?;
        paths.push(path);
    }
    Ok(paths)
}
