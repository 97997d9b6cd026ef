//! Random fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use panoptic_eval::{BinaryMask, BitDepth, BoxAnnotation, GrayImage, PanopticMap};
use rand::Rng;

/// Axis-aligned ellipse, optionally rotated.
#[derive(Debug, Clone, Copy)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    pub angle: f64,
}

impl Ellipse {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let (dx, dy) = (x as f64 + 0.5 - self.cx, y as f64 + 0.5 - self.cy);
        let (s, c) = self.angle.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.rx).powi(2) + (v / self.ry).powi(2) <= 1.0
    }

    /// Pixel bounds `(x0, y0, x1, y1)`, half-open, clipped to `w × h`.
    pub fn bounds(&self, w: usize, h: usize) -> (usize, usize, usize, usize) {
        let r = self.rx.max(self.ry);
        let x0 = (self.cx - r).floor().max(0.0) as usize;
        let y0 = (self.cy - r).floor().max(0.0) as usize;
        let x1 = ((self.cx + r).ceil() as usize).min(w);
        let y1 = ((self.cy + r).ceil() as usize).min(h);
        (x0, y0, x1, y1)
    }

    pub fn support(&self, w: usize, h: usize) -> BinaryMask {
        let mut m = BinaryMask::empty(w, h);
        let (x0, y0, x1, y1) = self.bounds(w, h);
        for y in y0..y1 {
            for x in x0..x1 {
                if self.contains(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    /// Tight box of the support, `(xmin, ymin, xmax, ymax)` half-open.
    pub fn tight_box(&self, w: usize, h: usize) -> (usize, usize, usize, usize) {
        let m = self.support(w, h);
        let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
        for (x, y) in m.pixels() {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x + 1);
            y1 = y1.max(y + 1);
        }
        (x0, y0, x1, y1)
    }
}

/// Bright lesions on a noisy darker background.
pub struct BlobImage {
    pub image: GrayImage,
    pub blobs: Vec<Ellipse>,
    pub boxes: Vec<BoxAnnotation>,
}

/// Places `count` non-overlapping ellipses with padded boxes that do not
/// overlap each other either.
pub fn blob_image<R: Rng>(
    rng: &mut R,
    image_id: &str,
    w: usize,
    h: usize,
    count: usize,
) -> BlobImage {
    let mut blobs = Vec::new();
    let mut boxes: Vec<BoxAnnotation> = Vec::new();
    let mut attempts = 0;
    while blobs.len() < count && attempts < 1000 {
        attempts += 1;
        let rx = rng.gen_range(12.0..30.0);
        let ry = rx * rng.gen_range(0.6..1.0);
        let e = Ellipse {
            cx: rng.gen_range(rx + 15.0..w as f64 - rx - 15.0),
            cy: rng.gen_range(rx + 15.0..h as f64 - rx - 15.0),
            rx,
            ry,
            angle: rng.gen_range(0.0..std::f64::consts::PI),
        };
        let (x0, y0, x1, y1) = e.tight_box(w, h);
        let pad_x = ((x1 - x0) as f64 * rng.gen_range(0.1..0.35)).round() as usize;
        let pad_y = ((y1 - y0) as f64 * rng.gen_range(0.1..0.35)).round() as usize;
        let rect = (
            x0.saturating_sub(pad_x) as u32,
            y0.saturating_sub(pad_y) as u32,
            (x1 + pad_x).min(w) as u32,
            (y1 + pad_y).min(h) as u32,
        );
        let clear = boxes
            .iter()
            .all(|b| rect.2 <= b.xmin || b.xmax <= rect.0 || rect.3 <= b.ymin || b.ymax <= rect.1);
        if !clear {
            continue;
        }
        let category = rng.gen_range(3..=5);
        boxes.push(BoxAnnotation::new(image_id, rect, category).unwrap());
        blobs.push(e);
    }
    let background = rng.gen_range(20.0..70.0);
    let contrasts: Vec<f64> = blobs.iter().map(|_| rng.gen_range(70.0..160.0)).collect();
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let mut v = background + rng.gen_range(-12.0..12.0);
            for (e, c) in blobs.iter().zip(&contrasts) {
                if e.contains(x, y) {
                    v += c;
                }
            }
            v.round().clamp(0.0, 255.0) as u16
        })
        .collect();
    BlobImage {
        image: GrayImage::new(w, h, BitDepth::Eight, data).unwrap(),
        blobs,
        boxes,
    }
}

/// Segment shapes painted first-wins into an id map.
fn paint(w: usize, h: usize, shapes: &[(u32, Ellipse)]) -> Vec<u32> {
    let mut ids = vec![0u32; w * h];
    for &(id, e) in shapes {
        let (x0, y0, x1, y1) = e.bounds(w, h);
        for y in y0..y1 {
            for x in x0..x1 {
                let slot = &mut ids[y * w + x];
                if *slot == 0 && e.contains(x, y) {
                    *slot = id;
                }
            }
        }
    }
    ids
}

/// A ground-truth map and a noisy prediction of it.
///
/// Predictions jitter the ground-truth shapes, sometimes switch category,
/// and include spurious segments. Every prediction has a confidence.
pub fn random_pair<R: Rng>(
    rng: &mut R,
    w: usize,
    h: usize,
    max_segments: usize,
    categories: u32,
) -> (PanopticMap, PanopticMap) {
    let scale = w.min(h) as f64;
    let n = rng.gen_range(1..=max_segments);
    let mut gt_shapes = Vec::new();
    let mut gt_labels = HashMap::new();
    for i in 0..n {
        let r = rng.gen_range(0.04..0.2) * scale;
        let e = Ellipse {
            cx: rng.gen_range(0.0..w as f64),
            cy: rng.gen_range(0.0..h as f64),
            rx: r,
            ry: r * rng.gen_range(0.5..1.0),
            angle: rng.gen_range(0.0..3.2),
        };
        let id = i as u32 + 1;
        gt_shapes.push((id, e));
        gt_labels.insert(id, (rng.gen_range(1..=categories), None));
    }

    let mut pred_shapes = Vec::new();
    let mut pred_labels = HashMap::new();
    let mut next = 1u32;
    for &(gid, e) in &gt_shapes {
        if !rng.gen_bool(0.8) {
            continue;
        }
        let jitter = rng.gen_range(0.0..0.8);
        let p = Ellipse {
            cx: e.cx + rng.gen_range(-jitter..=jitter) * e.rx,
            cy: e.cy + rng.gen_range(-jitter..=jitter) * e.ry,
            rx: e.rx * rng.gen_range(0.6..1.4),
            ry: e.ry * rng.gen_range(0.6..1.4),
            angle: e.angle + rng.gen_range(-0.5..0.5),
        };
        let cat = if rng.gen_bool(0.9) {
            gt_labels[&gid].0
        } else {
            rng.gen_range(1..=categories)
        };
        pred_shapes.push((next, p));
        pred_labels.insert(next, (cat, Some(rng.gen_range(0.0..1.0))));
        next += 1;
    }
    for _ in 0..rng.gen_range(0..=2) {
        let r = rng.gen_range(0.03..0.12) * scale;
        pred_shapes.push((
            next,
            Ellipse {
                cx: rng.gen_range(0.0..w as f64),
                cy: rng.gen_range(0.0..h as f64),
                rx: r,
                ry: r,
                angle: 0.0,
            },
        ));
        pred_labels.insert(
            next,
            (rng.gen_range(1..=categories), Some(rng.gen_range(0.0..1.0))),
        );
        next += 1;
    }
    let gt = PanopticMap::from_id_map(w, h, paint(w, h, &gt_shapes), &gt_labels).unwrap();
    let pred = PanopticMap::from_id_map(w, h, paint(w, h, &pred_shapes), &pred_labels).unwrap();
    (gt, pred)
}
