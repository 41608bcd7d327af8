//! Procedural HDR test scenes.
//!
//! Scenes combine a dark-to-bright log gradient, textured discs and a few
//! small emitters, so relative luminance spans at least four decades.

use crate::image::LinearImage;
use crate::rng::CounterRng;

/// Generates a `width x height` relative-linear scene with values in
/// `[1e-5, 1]`.
pub fn hdr_scene(width: usize, height: usize, seed: u64) -> LinearImage {
    let mut rng = CounterRng::new(seed);
    let mut draw = {
        let mut i = 0u64;
        move || {
            i += 1;
            rng.uniform(i)
        }
    };
    let angle = draw() * std::f64::consts::TAU;
    let (ca, sa) = (angle.cos(), angle.sin());
    let tint = [0.8 + 0.4 * draw(), 0.8 + 0.4 * draw(), 0.8 + 0.4 * draw()];

    struct Disc {
        cx: f64,
        cy: f64,
        r: f64,
        level: f64,
        color: [f64; 3],
        freq: f64,
    }
    let n_discs = 4 + (draw() * 5.0) as usize;
    let discs: Vec<Disc> = (0..n_discs)
        .map(|_| Disc {
            cx: draw(),
            cy: draw(),
            r: 0.05 + 0.2 * draw(),
            level: 10f64.powf(-4.5 + 4.5 * draw()),
            color: [0.5 + draw(), 0.5 + draw(), 0.5 + draw()],
            freq: 4.0 + 30.0 * draw(),
        })
        .collect();
    let emitters: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (draw(), draw(), 0.01 + 0.03 * draw()))
        .collect();

    let w = width as f64;
    let h = height as f64;
    let data: Vec<f32> = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .flat_map(|(x, y)| {
            let u = (x as f64 + 0.5) / w;
            let v = (y as f64 + 0.5) / h;
            // Background: five decades along a random direction.
            let t = ((u - 0.5) * ca + (v - 0.5) * sa) / std::f64::consts::SQRT_2 + 0.5;
            let mut rgb = [0.0f64; 3];
            let base = 10f64.powf(-5.0 + 3.0 * t.clamp(0.0, 1.0));
            for c in 0..3 {
                rgb[c] = base * tint[c];
            }
            for d in &discs {
                let dist = ((u - d.cx).powi(2) + (v - d.cy).powi(2)).sqrt();
                if dist < d.r {
                    let texture = 1.0 + 0.5 * (d.freq * u * 6.3).sin() * (d.freq * v * 5.1).cos();
                    for (out, col) in rgb.iter_mut().zip(d.color) {
                        *out = d.level * col * texture;
                    }
                }
            }
            for &(ex, ey, er) in &emitters {
                let dist2 = (u - ex).powi(2) + (v - ey).powi(2);
                let glow = (-dist2 / (2.0 * er * er)).exp();
                for c in rgb.iter_mut() {
                    *c += glow;
                }
            }
            rgb.map(|c| c.clamp(1e-5, 1.0) as f32)
        })
        .collect();
    LinearImage::new(width, height, data).expect("scene values are finite and positive")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_is_deterministic_and_high_dynamic_range() {
        let a = hdr_scene(64, 48, 3);
        assert_eq!(a, hdr_scene(64, 48, 3));
        assert_ne!(a, hdr_scene(64, 48, 4));
        let lo = a.data().iter().cloned().fold(f32::INFINITY, f32::min);
        let hi = a.data().iter().cloned().fold(0.0f32, f32::max);
        assert!(hi / lo >= 1e4, "{lo} {hi}");
        assert!(hi <= 1.0 && lo >= 1e-5);
    }
}
