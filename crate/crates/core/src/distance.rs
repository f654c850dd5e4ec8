//! Chebyshev (chessboard) distance from each pixel to the nearest valid pixel.

use crate::error::{Error, Result};
use crate::raster::GapMask;

/// Distance to the nearest valid pixel under the max-norm; 0 on valid pixels.
///
/// Two raster-order chamfer passes with unit weights on all eight neighbours
/// are exact for this norm. Fails with `NoValidSource` when the mask has no
/// valid pixel at all.
pub fn chebyshev_to_valid(mask: &GapMask) -> Result<Vec<u32>> {
    if mask.valid_count() == 0 {
        return Err(Error::NoValidSource);
    }
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut d: Vec<u32> = mask
        .as_slice()
        .iter()
        .map(|v| if *v { 0 } else { u32::MAX })
        .collect();
    let relax = |d: &mut [u32], i: usize, j: usize| {
        let cand = d[j].saturating_add(1);
        if cand < d[i] {
            d[i] = cand;
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x > 0 {
                relax(&mut d, i, i - 1);
            }
            if y > 0 {
                relax(&mut d, i, i - w);
                if x > 0 {
                    relax(&mut d, i, i - w - 1);
                }
                if x + 1 < w {
                    relax(&mut d, i, i - w + 1);
                }
            }
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let i = y * w + x;
            if x + 1 < w {
                relax(&mut d, i, i + 1);
            }
            if y + 1 < h {
                relax(&mut d, i, i + w);
                if x + 1 < w {
                    relax(&mut d, i, i + w + 1);
                }
                if x > 0 {
                    relax(&mut d, i, i + w - 1);
                }
            }
        }
    }
    Ok(d)
}
