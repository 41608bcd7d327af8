//! Browser bindings for the interactive demo in `www/`.

use wasm_bindgen::prelude::*;

use hdr_percept::dataset::{degrade, DegradeParams, Task};
use hdr_percept::degrade::NoiseParams;
use hdr_percept::metrics::{pu_psnr, pu_ssim};
use hdr_percept::synthetic::hdr_scene;
use hdr_percept::transfer::{curve_table, encode_image};
use hdr_percept::{condition_registry, DisplayModel, EncodingKind, LinearImage};

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Transfer curves as a flat array of rows
/// `[luminance, linear, mulaw, pq, pu21]`.
#[wasm_bindgen]
pub fn transfer_curves(points: usize, mu: f64) -> Result<Vec<f64>, JsValue> {
    let rows = curve_table(points, mu).map_err(js_err)?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.luminance_cd_m2, r.linear, r.mulaw, r.pq, r.pu21])
        .collect())
}

struct Scene {
    clean: LinearImage,
    degraded: LinearImage,
    display: DisplayModel,
}

fn build_scene(size: usize, seed: u32, exposure: f64, task: &str, peak: f64) -> Result<Scene, JsValue> {
    let task: Task = task.parse().map_err(js_err)?;
    let display = DisplayModel::new(0.005, peak).map_err(js_err)?;
    let size = size.clamp(16, 512) / 4 * 4;
    let clean = hdr_scene(size, size, u64::from(seed)).scaled(exposure);
    let params = DegradeParams {
        noise: NoiseParams {
            seed: u64::from(seed),
            ..NoiseParams::default()
        },
        ..DegradeParams::default()
    };
    let mut degraded = degrade(task, &clean, &params).map_err(js_err)?;
    if task == Task::SuperRes4x {
        degraded = hdr_percept::degrade::upsample_bilinear(&degraded, params.sr_factor).map_err(js_err)?;
    }
    Ok(Scene {
        clean,
        degraded,
        display,
    })
}

/// Renders the clean (left) and degraded (right) synthetic scene side by
/// side as RGBA bytes, with encoded values mapped straight to 8-bit.
/// The result is `2 * size` wide and `size` high.
#[wasm_bindgen]
pub fn render_scene(
    size: usize,
    seed: u32,
    exposure: f64,
    task: &str,
    encoding: &str,
    peak: f64,
) -> Result<Vec<u8>, JsValue> {
    let s = build_scene(size, seed, exposure, task, peak)?;
    let kind: EncodingKind = encoding.parse().map_err(js_err)?;
    let left = encode_image(&s.clean, kind, &s.display).map_err(js_err)?;
    let right = encode_image(&s.degraded, kind, &s.display).map_err(js_err)?;
    let (w, h) = left.dims();
    let mut out = vec![255u8; 2 * w * h * 4];
    for y in 0..h {
        for (half, img) in [&left, &right].into_iter().enumerate() {
            for x in 0..w {
                let src = &img.data()[(y * w + x) * 3..(y * w + x) * 3 + 3];
                let dst = (y * 2 * w + half * w + x) * 4;
                for c in 0..3 {
                    out[dst + c] = (src[c].clamp(0.0, 1.0) * 255.0).round() as u8;
                }
            }
        }
    }
    Ok(out)
}

/// Edge length actually used by [`render_scene`] for a requested size.
#[wasm_bindgen]
pub fn scene_size(size: usize) -> usize {
    size.clamp(16, 512) / 4 * 4
}

/// Loss of every training condition between the degraded and clean scene,
/// plus PU-PSNR and PU-SSIM of the degraded image, as JSON.
#[wasm_bindgen]
pub fn compare_conditions(size: usize, seed: u32, exposure: f64, task: &str, peak: f64) -> Result<String, JsValue> {
    let s = build_scene(size, seed, exposure, task, peak)?;
    let mut losses = Vec::new();
    for c in condition_registry() {
        let v = c.evaluate_linear(&s.degraded, &s.clean, &s.display).map_err(js_err)?;
        losses.push(serde_json::json!({ "condition": c.label, "loss": v }));
    }
    let psnr = pu_psnr(&s.degraded, &s.clean, &s.display).map_err(js_err)?;
    let ssim = pu_ssim(&s.degraded, &s.clean, &s.display).map_err(js_err)?;
    Ok(serde_json::json!({ "losses": losses, "pu_psnr": psnr, "pu_ssim": ssim }).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_are_flat_rows() {
        let v = transfer_curves(4, 5000.0).unwrap();
        assert_eq!(v.len(), 20);
        assert_eq!(v[0], 0.005);
        assert_eq!(v[15], 10000.0);
    }

    #[test]
    fn scene_has_two_panels() {
        let px = render_scene(32, 1, 1.0, "denoise", "pu21", 4000.0).unwrap();
        assert_eq!(px.len(), 2 * 32 * 32 * 4);
        assert!(px.chunks(4).all(|p| p[3] == 255));
    }

    #[test]
    fn comparison_lists_all_conditions() {
        let json = compare_conditions(32, 2, 0.5, "superres4x", 4000.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let losses = v["losses"].as_array().unwrap();
        assert_eq!(losses.len(), 8);
        assert_ne!(losses[0]["loss"], losses[3]["loss"], "PU21-L1 and Linear-L1 differ");
        assert!(v["pu_psnr"].as_f64().unwrap() > 0.0);
    }
}
