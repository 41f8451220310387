//! Minimal deterministic PNG plots: scatter points and polyline series on
//! white with gray axes. Enough to render tradeoff and loss-trajectory
//! figures without pulling in a plotting stack.

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

const W: u32 = 640;
const H: u32 = 480;
const MARGIN: u32 = 48;

const AXIS: Rgb<u8> = Rgb([120, 120, 120]);
const SERIES_COLORS: [Rgb<u8>; 5] = [
    Rgb([31, 119, 180]),
    Rgb([255, 127, 14]),
    Rgb([44, 160, 44]),
    Rgb([214, 39, 40]),
    Rgb([148, 103, 189]),
];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_points<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let mut f = Frame {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for &(x, y) in points {
            f.x_min = f.x_min.min(x);
            f.x_max = f.x_max.max(x);
            f.y_min = f.y_min.min(y);
            f.y_max = f.y_max.max(y);
        }
        for (lo, hi) in [(&mut f.x_min, &mut f.x_max), (&mut f.y_min, &mut f.y_max)] {
            if !lo.is_finite() || !hi.is_finite() {
                *lo = 0.0;
                *hi = 1.0;
            } else if *hi - *lo < 1e-12 {
                *lo -= 0.5;
                *hi += 0.5;
            }
        }
        f
    }

    fn to_px(&self, x: f64, y: f64) -> (i64, i64) {
        let fx = (x - self.x_min) / (self.x_max - self.x_min);
        let fy = (y - self.y_min) / (self.y_max - self.y_min);
        let px = MARGIN as f64 + fx * (W - 2 * MARGIN) as f64;
        let py = (H - MARGIN) as f64 - fy * (H - 2 * MARGIN) as f64;
        (px.round() as i64, py.round() as i64)
    }
}

fn blank() -> RgbImage {
    let mut img = RgbImage::from_pixel(W, H, Rgb([255, 255, 255]));
    for x in MARGIN..=(W - MARGIN) {
        img.put_pixel(x, H - MARGIN, AXIS);
    }
    for y in MARGIN..=(H - MARGIN) {
        img.put_pixel(MARGIN, y, AXIS);
    }
    img
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < W && (y as u32) < H {
        img.put_pixel(x as u32, y as u32, color);
    }
}

fn disc(img: &mut RgbImage, cx: i64, cy: i64, r: i64, color: Rgb<u8>) {
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                put(img, cx + dx, cy + dy, color);
            }
        }
    }
}

fn line(img: &mut RgbImage, a: (i64, i64), b: (i64, i64), color: Rgb<u8>) {
    let (mut x0, mut y0) = a;
    let (x1, y1) = b;
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x0, y0, color);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn save(img: &RgbImage, path: impl AsRef<std::path::Path>) -> Result<()> {
    img.save(path.as_ref())
        .map_err(|e| Error::Checkpoint(format!("cannot write plot {}: {e}", path.as_ref().display())))
}

/// Scatter plot of one or more point sets.
pub fn scatter_plot(series: &[Vec<(f64, f64)>], path: impl AsRef<std::path::Path>) -> Result<()> {
    let frame = Frame::from_points(series.iter().flatten());
    let mut img = blank();
    for (i, pts) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        for &(x, y) in pts {
            let (px, py) = frame.to_px(x, y);
            disc(&mut img, px, py, 3, color);
        }
    }
    save(&img, path)
}

/// Line plot of one or more series.
pub fn line_plot(series: &[Vec<(f64, f64)>], path: impl AsRef<std::path::Path>) -> Result<()> {
    let frame = Frame::from_points(series.iter().flatten());
    let mut img = blank();
    for (i, pts) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        for pair in pts.windows(2) {
            let a = frame.to_px(pair[0].0, pair[0].1);
            let b = frame.to_px(pair[1].0, pair[1].1);
            line(&mut img, a, b, color);
        }
    }
    save(&img, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_are_valid_images_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.png");
        let p2 = dir.path().join("b.png");
        let series = vec![
            vec![(0.01, 0.9), (0.1, 0.8), (1.0, 0.6), (10.0, 0.5)],
            vec![(0.01, 0.2), (10.0, 0.9)],
        ];
        scatter_plot(&series, &p1).unwrap();
        scatter_plot(&series, &p2).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert!(!b1.is_empty());
        assert_eq!(b1, b2);
        let img = image::open(&p1).unwrap();
        assert_eq!(img.width(), 640);

        let p3 = dir.path().join("c.png");
        line_plot(&[vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.75)]], &p3).unwrap();
        assert!(image::open(&p3).is_ok());
    }
}
