//! Seeded synthetic scenes: camera raster, radar planes, prompt and the
//! matching ground-truth boxes and mask.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::heads::{BinaryMask, DetectionBox};
use crate::raster::Raster;
use crate::tensor::FeatureMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image: Raster,
    /// `(1, 3, S, S)`: range, velocity, power.
    pub radar: FeatureMap,
    pub prompt: String,
    pub boxes: Vec<DetectionBox>,
    pub mask: BinaryMask,
}

const COLOURS: [(&str, [u8; 3]); 5] = [
    ("red", [200, 40, 40]),
    ("white", [235, 235, 235]),
    ("blue", [40, 60, 200]),
    ("yellow", [220, 200, 40]),
    ("black", [20, 20, 20]),
];
const NOUNS: [&str; 5] = ["boat", "ship", "kayak", "buoy", "ferry"];

/// A water-coloured `size x size` scene with 1 to 3 axis-aligned objects.
pub fn scene(size: usize, seed: u64) -> Result<Scene> {
    if size < 16 {
        return Err(Error::InvalidParam(format!("scene size {size} is below 16")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = vec![0u8; size * size * 3];
    for y in 0..size {
        for x in 0..size {
            let base = [30u8, 70 + (y * 60 / size) as u8, 110 + (x * 40 / size) as u8];
            pixels[(y * size + x) * 3..(y * size + x) * 3 + 3].copy_from_slice(&base);
        }
    }
    let mut radar = FeatureMap::zeros([1, 3, size, size]);
    let mut bits = vec![0u8; size * size];
    let mut boxes = Vec::new();
    let count = rng.gen_range(1..=3);
    let mut target_colour = "";
    let mut target_noun = "";
    for i in 0..count {
        let w = rng.gen_range(size / 8..=size / 3);
        let h = rng.gen_range(size / 8..=size / 3);
        let x0 = rng.gen_range(0..size - w);
        let y0 = rng.gen_range(0..size - h);
        let &(name, rgb) = COLOURS.choose(&mut rng).unwrap();
        let range = rng.gen_range(0.1f32..1.0);
        let velocity = rng.gen_range(-1.0f32..1.0);
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                pixels[(y * size + x) * 3..(y * size + x) * 3 + 3].copy_from_slice(&rgb);
                radar.set(0, 0, y, x, range);
                radar.set(0, 1, y, x, velocity);
                radar.set(0, 2, y, x, 1.0);
                if i == 0 {
                    bits[y * size + x] = 1;
                }
            }
        }
        if i == 0 {
            target_colour = name;
            target_noun = NOUNS.choose(&mut rng).unwrap();
            boxes.push(DetectionBox::new(
                x0 as f32 + w as f32 / 2.0,
                y0 as f32 + h as f32 / 2.0,
                w as f32,
                h as f32,
                1.0,
            ));
        }
    }
    // objects painted later may cover the target
    for (i, b) in bits.iter_mut().enumerate() {
        let px = &pixels[i * 3..i * 3 + 3];
        if *b == 1 && COLOURS.iter().all(|(n, c)| *n != target_colour || c != px) {
            *b = 0;
        }
    }
    let side = if boxes[0].cx < size as f32 / 2.0 { "left" } else { "right" };
    Ok(Scene {
        image: Raster::new(size, size, 3, pixels)?,
        radar,
        prompt: format!("the {target_colour} {target_noun} on the {side}"),
        boxes,
        mask: BinaryMask::new(size, size, bits)?,
    })
}
