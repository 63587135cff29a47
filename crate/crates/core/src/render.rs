//! Rasterisation of attractors and of uniqueness languages.
//!
//! Both methods produce integer hit counts, so merging per-worker buffers in
//! any order yields the same raster; the chaos game additionally splits its
//! iterations over a fixed number of independent random streams, so the
//! result does not depend on the number of threads.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::hull::outer_hull;
use crate::bounds::bounding_set;
use crate::affine::affine_of_word;
use crate::polygon::ConvexPolygon;
use crate::project::project;
use crate::system::SystemSpec;
use crate::uniqueness::UniquenessCertificate;
use crate::word::{EventualAddress, Symbol, Word};

/// Independent random streams of the chaos game.
pub const CHAOS_STREAMS: u64 = 64;
const TILE: usize = 64;
/// Cylinders are plotted once their box is below this fraction of a pixel.
const LEAF_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Viewport {
    pub fn is_valid(&self) -> bool {
        [self.x0, self.x1, self.y0, self.y1].iter().all(|v| v.is_finite()) && self.x1 > self.x0 && self.y1 > self.y0
    }

    /// Bounding box of a polygon, grown by `frac` of its size on every side.
    pub fn around(p: &ConvexPolygon, frac: f64) -> Viewport {
        let xs = p.vertices.iter().map(|v| v.x);
        let ys = p.vertices.iter().map(|v| v.y);
        let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        let (dx, dy) = ((x1 - x0) * frac, (y1 - y0) * frac);
        Viewport {
            x0: x0 - dx,
            x1: x1 + dx,
            y0: y0 - dy,
            y1: y1 + dy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    ChaosGame { iterations: u64, seed: u64, burn_in: u64 },
    Subdivision { depth: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterConfig {
    pub width: usize,
    pub height: usize,
    /// Defaults to the box of the circumscribed hull grown by 5%.
    pub viewport: Option<Viewport>,
    pub method: Method,
}

impl RasterConfig {
    pub fn chaos(size: usize, iterations: u64, seed: u64) -> Self {
        RasterConfig {
            width: size,
            height: size,
            viewport: None,
            method: Method::ChaosGame {
                iterations,
                seed,
                burn_in: 100,
            },
        }
    }

    pub fn subdivision(size: usize, depth: usize) -> Self {
        RasterConfig {
            width: size,
            height: size,
            viewport: None,
            method: Method::Subdivision { depth },
        }
    }
}

pub fn default_viewport(spec: &SystemSpec) -> Viewport {
    let eps = 1e-4 * bounding_set(spec).diameter();
    Viewport::around(&outer_hull(spec, eps), 0.05)
}

/// Hit counts, row-major with row 0 at the top (largest `y`).
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub viewport: Viewport,
    pub counts: Vec<u32>,
}

impl Raster {
    pub fn new(width: usize, height: usize, viewport: Viewport) -> Self {
        Raster {
            width,
            height,
            viewport,
            counts: vec![0; width * height],
        }
    }

    pub fn pixel_of(&self, p: Vec2) -> Option<(usize, usize)> {
        pixel_of(self.width, self.height, &self.viewport, p)
    }

    /// Center of pixel `(col, row)`.
    pub fn pixel_center(&self, col: usize, row: usize) -> Vec2 {
        let v = &self.viewport;
        Vec2::new(
            v.x0 + (col as f64 + 0.5) * (v.x1 - v.x0) / self.width as f64,
            v.y1 - (row as f64 + 0.5) * (v.y1 - v.y0) / self.height as f64,
        )
    }

    pub fn get(&self, col: usize, row: usize) -> u32 {
        self.counts[row * self.width + col]
    }

    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Grey levels: 0 for empty pixels, otherwise `1 + round(254 ln c / ln max)`.
    pub fn grey_levels(&self) -> Vec<u8> {
        let max = self.max_count();
        let lmax = (max as f64).ln();
        self.counts
            .iter()
            .map(|&c| match c {
                0 => 0,
                _ if max == 1 => 255,
                _ => 1 + (254.0 * (c as f64).ln() / lmax).round() as u8,
            })
            .collect()
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.grey_levels());
        out
    }

    pub fn write_pgm(&self, path: &Path) -> std::io::Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_pgm())
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.grey_levels())
            .expect("buffer matches dimensions");
        img.save(path).map_err(|e| Error::Parse(e.to_string()))
    }

    fn add(&mut self, other: &Raster) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Attractor in grey with the overlay in red.
pub fn write_overlay_png(base: &Raster, overlay: &Raster, path: &Path) -> Result<()> {
    let grey = base.grey_levels();
    let mut img = image::RgbImage::new(base.width as u32, base.height as u32);
    for (i, px) in img.pixels_mut().enumerate() {
        *px = if overlay.counts[i] > 0 {
            image::Rgb([200, 0, 0])
        } else if grey[i] > 0 {
            let g = 230 - (grey[i] as u16 * 130 / 255) as u8;
            image::Rgb([g, g, g])
        } else {
            image::Rgb([255, 255, 255])
        };
    }
    img.save(path).map_err(|e| Error::Parse(e.to_string()))
}

fn pixel_of(width: usize, height: usize, v: &Viewport, p: Vec2) -> Option<(usize, usize)> {
    let fx = (p.x - v.x0) / (v.x1 - v.x0);
    let fy = (v.y1 - p.y) / (v.y1 - v.y0);
    if !(0.0..1.0).contains(&fx) || !(0.0..1.0).contains(&fy) {
        return None;
    }
    Some(((fx * width as f64) as usize, (fy * height as f64) as usize))
}

fn resolve(spec: &SystemSpec, config: &RasterConfig) -> Result<Viewport> {
    if config.width == 0 || config.height == 0 {
        return Err(Error::ViewportEmpty);
    }
    let v = config.viewport.unwrap_or_else(|| default_viewport(spec));
    if !v.is_valid() {
        return Err(Error::ViewportEmpty);
    }
    Ok(v)
}

pub fn render_attractor(spec: &SystemSpec, config: &RasterConfig) -> Result<Raster> {
    let viewport = resolve(spec, config)?;
    Ok(match config.method {
        Method::ChaosGame {
            iterations,
            seed,
            burn_in,
        } => chaos_game(spec, config, viewport, iterations, seed, burn_in),
        Method::Subdivision { depth } => {
            let blocks = [Word::repeat(Symbol::M, 1), Word::repeat(Symbol::P, 1)];
            subdivide(spec, config, viewport, &blocks, depth)
        }
    })
}

fn chaos_game(spec: &SystemSpec, config: &RasterConfig, viewport: Viewport, iterations: u64, seed: u64, burn_in: u64) -> Raster {
    let m = spec.matrix();
    let u = spec.translation();
    let start = project(spec, &EventualAddress::with_tail(Word::empty(), Symbol::P));
    let (w, h) = (config.width, config.height);
    let per = iterations / CHAOS_STREAMS;
    let extra = iterations % CHAOS_STREAMS;
    (0..CHAOS_STREAMS)
        .into_par_iter()
        .fold(
            || Raster::new(w, h, viewport),
            |mut raster, stream| {
                let n = per + u64::from(stream < extra);
                if n == 0 {
                    return raster;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                let mut p = start;
                let step = |p: Vec2, rng: &mut ChaCha8Rng| {
                    if rng.random::<bool>() {
                        m.apply(p) + u
                    } else {
                        m.apply(p) + -u
                    }
                };
                for _ in 0..burn_in {
                    p = step(p, &mut rng);
                }
                for _ in 0..n {
                    if let Some((c, r)) = raster.pixel_of(p) {
                        raster.counts[r * w + c] += 1;
                    }
                    p = step(p, &mut rng);
                }
                raster
            },
        )
        .reduce(
            || Raster::new(w, h, viewport),
            |mut a, b| {
                a.add(&b);
                a
            },
        )
}

/// Per-depth data shared by every cylinder of that depth: `M^d`, the box of
/// `M^d K0` relative to the word offset, and a diameter bound.
struct Level {
    linear: Mat2,
    lo: Vec2,
    hi: Vec2,
}

/// Plots one representative point per language cylinder `F_x(K0)` once the
/// cylinder is smaller than a pixel, pruning cylinders outside the tile.
fn subdivide(spec: &SystemSpec, config: &RasterConfig, viewport: Viewport, blocks: &[Word], depth: usize) -> Raster {
    let (w, h) = (config.width, config.height);
    let mut raster = Raster::new(w, h, viewport);
    if blocks.is_empty() {
        return raster;
    }
    let k0 = outer_hull(spec, 1e-4 * bounding_set(spec).diameter());
    let pixel = ((viewport.x1 - viewport.x0) / w as f64).min((viewport.y1 - viewport.y0) / h as f64);
    // representative point of each cylinder: the limit of repeating the first block
    let rep = project(spec, &EventualAddress::periodic(blocks[0].clone()).expect("nonempty block"));
    let block_maps: Vec<_> = blocks.iter().map(|b| affine_of_word(spec, b)).collect();

    let m = spec.matrix();
    let max_len = depth * blocks.iter().map(|b| b.len()).max().unwrap_or(1);
    let mut levels = Vec::with_capacity(max_len + 1);
    let mut lin = Mat2::IDENTITY;
    for _ in 0..=max_len {
        let pts: Vec<Vec2> = k0.vertices.iter().map(|v| lin.apply(*v)).collect();
        let lo = pts.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |a, p| Vec2::new(a.x.min(p.x), a.y.min(p.y)));
        let hi = pts.iter().fold(Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |a, p| Vec2::new(a.x.max(p.x), a.y.max(p.y)));
        levels.push(Level { linear: lin, lo, hi });
        lin = lin * m;
    }

    let tiles_x = w.div_ceil(TILE);
    let tiles_y = h.div_ceil(TILE);
    let tiles: Vec<(usize, usize, Vec<u32>)> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|t| {
            let (tx, ty) = (t % tiles_x, t / tiles_x);
            let c0 = tx * TILE;
            let r0 = ty * TILE;
            let c1 = (c0 + TILE).min(w);
            let r1 = (r0 + TILE).min(h);
            let region = Viewport {
                x0: viewport.x0 + c0 as f64 * (viewport.x1 - viewport.x0) / w as f64,
                x1: viewport.x0 + c1 as f64 * (viewport.x1 - viewport.x0) / w as f64,
                y1: viewport.y1 - r0 as f64 * (viewport.y1 - viewport.y0) / h as f64,
                y0: viewport.y1 - r1 as f64 * (viewport.y1 - viewport.y0) / h as f64,
            };
            let mut buf = vec![0u32; (c1 - c0) * (r1 - r0)];
            let mut stack = vec![(Vec2::ZERO, 0usize, 0usize)];
            while let Some((offset, len, blocks_used)) = stack.pop() {
                let lv = &levels[len];
                let lo = offset + lv.lo;
                let hi = offset + lv.hi;
                if hi.x < region.x0 || lo.x > region.x1 || hi.y < region.y0 || lo.y > region.y1 {
                    continue;
                }
                let size = (hi.x - lo.x).max(hi.y - lo.y);
                if size < pixel * LEAF_FRACTION || blocks_used == depth {
                    let p = lv.linear.apply(rep) + offset;
                    if let Some((c, r)) = pixel_of(w, h, &viewport, p) {
                        if (c0..c1).contains(&c) && (r0..r1).contains(&r) {
                            buf[(r - r0) * (c1 - c0) + (c - c0)] += 1;
                        }
                    }
                    continue;
                }
                for (b, f) in blocks.iter().zip(&block_maps).rev() {
                    stack.push((lv.linear.apply(f.offset) + offset, len + b.len(), blocks_used + 1));
                }
            }
            (tx, ty, buf)
        })
        .collect();
    for (tx, ty, buf) in tiles {
        let c0 = tx * TILE;
        let r0 = ty * TILE;
        let tw = (c0 + TILE).min(w) - c0;
        for (i, v) in buf.into_iter().enumerate() {
            raster.counts[(r0 + i / tw) * w + c0 + i % tw] += v;
        }
    }
    raster
}

/// Points of `π({uv, uw}^ω)` at subpixel resolution, on the same grid as
/// `config` would give the attractor.
pub fn render_overlay_uniqueness(spec: &SystemSpec, cert: &UniquenessCertificate, config: &RasterConfig) -> Result<Raster> {
    render_language(spec, &[cert.uv(), cert.uw()], config)
}

pub fn render_language(spec: &SystemSpec, blocks: &[Word], config: &RasterConfig) -> Result<Raster> {
    let viewport = resolve(spec, config)?;
    let depth = match config.method {
        Method::Subdivision { depth } => depth,
        Method::ChaosGame { .. } => 64,
    };
    Ok(subdivide(spec, config, viewport, blocks, depth))
}
