#![allow(dead_code)]

use psog_sim::eye_render::{
    CameraConfig, EyeImage, EyeModelConfig, ImageGeometry, LightingConfig, LightingModel,
};
use psog_sim::scene::Scene;
use psog_sim::sensing::{AreaShape, DetectionArea};
use rand::Rng;

/// Random image whose pixel pitch, optical centre and fill vary per case.
pub fn random_image<R: Rng>(rng: &mut R) -> EyeImage {
    let rows = rng.random_range(4..40);
    let cols = rng.random_range(4..40);
    let geometry = ImageGeometry {
        rows,
        cols,
        mm_per_pixel_x: rng.random_range(0.1..0.6),
        mm_per_pixel_y: rng.random_range(0.1..0.6),
        optical_center: (
            rng.random_range(0.0..rows as f64 - 1.0),
            rng.random_range(0.0..cols as f64 - 1.0),
        ),
    };
    let data = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
    EyeImage::new(geometry, data, rng.random::<f64>()).unwrap()
}

/// Random area that stays inside the padded frame of `image`.
pub fn random_area<R: Rng>(rng: &mut R, image: &EyeImage) -> DetectionArea {
    let g = image.geometry();
    let (oc_r, oc_c) = g.optical_center;
    let w_mm = g.cols as f64 * g.mm_per_pixel_x;
    let h_mm = g.rows as f64 * g.mm_per_pixel_y;
    let cx = (rng.random_range(0.0..g.cols as f64) - oc_c) * g.mm_per_pixel_x;
    let cy = (rng.random_range(0.0..g.rows as f64) - oc_r) * g.mm_per_pixel_y;
    let small = w_mm.min(h_mm) / 2.0;
    if rng.random_bool(0.5) {
        DetectionArea::rectangle(
            cx,
            cy,
            rng.random_range(0.02..small),
            rng.random_range(0.02..small),
            rng.random_range(-90.0..=90.0),
        )
    } else {
        DetectionArea::circle(cx, cy, rng.random_range(0.02..small))
    }
}

/// Straight double loop over every pixel of the padded frame: coverage
/// counted at `ss × ss` sub-pixel points for rectangles, pixel centres within
/// half the diameter per axis for circles, divided by the window pixel count.
pub fn brute_force_output(image: &EyeImage, area: &DetectionArea, ss: u32) -> f64 {
    let g = image.geometry();
    let (rows, cols) = (g.rows as i64, g.cols as i64);
    let (oc_r, oc_c) = g.optical_center;
    let value = |r: i64, c: i64| {
        if (0..rows).contains(&r) && (0..cols).contains(&c) {
            image.get(r as usize, c as usize)
        } else {
            image.fill()
        }
    };
    match area.shape {
        AreaShape::Rectangle {
            length,
            width,
            angle,
        } => {
            let t = angle.to_radians();
            let mut num = 0.0;
            let mut den = 0.0;
            for r in -rows..2 * rows {
                for c in -cols..2 * cols {
                    let mut n = 0u32;
                    for sy in 0..ss {
                        for sx in 0..ss {
                            let fx = c as f64 - oc_c + (sx as f64 + 0.5) / ss as f64 - 0.5;
                            let fy = r as f64 - oc_r + (sy as f64 + 0.5) / ss as f64 - 0.5;
                            let dx = fx * g.mm_per_pixel_x - area.center_x;
                            let dy = fy * g.mm_per_pixel_y - area.center_y;
                            let u = dx * t.cos() - dy * t.sin();
                            let v = dx * t.sin() + dy * t.cos();
                            if u.abs() <= length / 2.0 && v.abs() <= width / 2.0 {
                                n += 1;
                            }
                        }
                    }
                    if n > 0 {
                        let w = n as f64 / (ss * ss) as f64;
                        num += w * value(r, c);
                        den += w;
                    }
                }
            }
            if den == 0.0 {
                let r = (oc_r + area.center_y / g.mm_per_pixel_y).round() as i64;
                let c = (oc_c + area.center_x / g.mm_per_pixel_x).round() as i64;
                return value(r, c);
            }
            num / den
        }
        AreaShape::CircularGaussian { diameter } => {
            let ux = area.center_x / g.mm_per_pixel_x;
            let uy = area.center_y / g.mm_per_pixel_y;
            let pick = |n: i64, oc: f64, u: f64, half: f64| -> Vec<i64> {
                let d = |i: i64| (i as f64 - oc - u).abs();
                let inside: Vec<i64> = (-n..2 * n).filter(|&i| d(i) <= half).collect();
                if !inside.is_empty() {
                    return inside;
                }
                let best = (-n..2 * n).map(d).fold(f64::INFINITY, f64::min);
                (-n..2 * n).filter(|&i| d(i) == best).collect()
            };
            let rs = pick(rows, oc_r, uy, diameter / 2.0 / g.mm_per_pixel_y);
            let cs = pick(cols, oc_c, ux, diameter / 2.0 / g.mm_per_pixel_x);
            let sx = cs.len() as f64 / 2.0;
            let sy = rs.len() as f64 / 2.0;
            let mut num = 0.0;
            for &r in &rs {
                for &c in &cs {
                    let dx = c as f64 - oc_c - ux;
                    let dy = r as f64 - oc_r - uy;
                    let w = (-0.5 * (dx / sx).powi(2)).exp() * (-0.5 * (dy / sy).powi(2)).exp();
                    num += w * value(r, c);
                }
            }
            num / (rs.len() * cs.len()) as f64
        }
    }
}

/// Bundled eye with everything that breaks left/right symmetry turned off.
pub fn symmetric_scene() -> Scene {
    let model = EyeModelConfig {
        eyelids: false,
        ..EyeModelConfig::default()
    };
    let lighting = LightingConfig {
        model: LightingModel::Ambient,
        ..LightingConfig::default()
    };
    Scene::new(model, CameraConfig::default(), lighting).unwrap()
}

/// Coarse camera for property tests that render many frames.
pub fn small_scene() -> Scene {
    let camera = CameraConfig {
        image_rows: 60,
        image_cols: 80,
        ..CameraConfig::default()
    };
    let model = EyeModelConfig {
        supersampling_factor: 2,
        ..EyeModelConfig::default()
    };
    Scene::new(model, camera, LightingConfig::default()).unwrap()
}
