//! Procedural defect images with matching annotations.
//!
//! Each image is a mid-gray background with an illumination gradient and
//! Gaussian noise, carrying one or more drawn defects:
//!
//! * Crack: dark random-walk polyline with 1-3 branches, 1-3 px wide.
//! * Pinhole: dark disk, radius 1-3 px.
//! * Hole: dark disk, radius 5-15 px, with a bright rim.
//! * Spatter: 5-20 bright blobs of radius 1-4 px in a loose cluster.
//!
//! Every defect's tight bounding box, grown by [`BOX_HALO`] pixels and
//! clamped to the image, becomes one annotation object.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::annotations::{Annotation, BBox, ClassMap, Object};
use crate::imaging::RasterImage;
use crate::rng::{rng_from, Rng as SynthRng};

pub const BOX_HALO: usize = 2;
pub const MIN_SIDE: usize = 64;
const PLACEMENT_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectKind {
    Crack,
    Pinhole,
    Hole,
    Spatter,
}

impl DefectKind {
    pub const ALL: [DefectKind; 4] = [DefectKind::Crack, DefectKind::Pinhole, DefectKind::Hole, DefectKind::Spatter];

    pub fn label(self) -> &'static str {
        match self {
            DefectKind::Crack => "Crack",
            DefectKind::Pinhole => "Pinhole",
            DefectKind::Hole => "Hole",
            DefectKind::Spatter => "Spatter",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    /// Objects to draw per class, in [`DefectKind::ALL`] order.
    pub counts: [usize; 4],
    /// Upper bound on defects per image; 1 keeps one defect per image.
    pub max_defects_per_image: usize,
    /// Standard deviation of the additive Gaussian noise, in gray levels.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { width: 256, height: 192, counts: [0; 4], max_defects_per_image: 1, noise: 4.0, seed: 0 }
    }
}

impl SynthSpec {
    pub fn per_class(n: usize, seed: u64) -> Self {
        Self { counts: [n; 4], seed, ..Self::default() }
    }

    /// 1536 x 1103 images.
    pub fn paper_scale(mut self) -> Self {
        self.width = 1536;
        self.height = 1103;
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("image {width}x{height} is below the {MIN_SIDE}x{MIN_SIDE} minimum")]
    SpecTooSmall { width: usize, height: usize },
    #[error("defects per image must be between 1 and 4, got {0}")]
    DefectsPerImage(usize),
    #[error("noise level {0} must be finite and non-negative")]
    Noise(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub image: RasterImage,
    pub annotation: Annotation,
}

/// Pixels a defect paints, relative to its own origin.
struct Stamp {
    pixels: Vec<(i32, i32, f64)>,
}

impl Stamp {
    fn extent(&self) -> (i32, i32, i32, i32) {
        let mut e = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for &(x, y, _) in &self.pixels {
            e = (e.0.min(x), e.1.min(y), e.2.max(x), e.3.max(y));
        }
        e
    }

    fn disk(&mut self, cx: f64, cy: f64, r: f64, value: f64) {
        let ri = libm::ceil(r) as i32 + 1;
        let (bx, by) = (libm::round(cx) as i32, libm::round(cy) as i32);
        for y in by - ri..=by + ri {
            for x in bx - ri..=bx + ri {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    self.pixels.push((x, y, value));
                }
            }
        }
    }

    fn ring(&mut self, r_in: f64, r_out: f64, value: f64) {
        let ri = libm::ceil(r_out) as i32;
        for y in -ri..=ri {
            for x in -ri..=ri {
                let d2 = (x * x + y * y) as f64;
                if d2 > r_in * r_in && d2 <= r_out * r_out {
                    self.pixels.push((x, y, value));
                }
            }
        }
    }
}

fn dark<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(25.0..55.0)
}

fn bright<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(205.0..235.0)
}

#[derive(Clone, Copy)]
struct Pen {
    width: f64,
    value: f64,
    /// Radius of the disc the stroke stays inside.
    limit: f64,
}

/// Random walk confined to a disc of radius `pen.limit` around the origin.
fn walk<R: Rng>(rng: &mut R, stamp: &mut Stamp, start: (f64, f64), heading: f64, steps: usize, pen: Pen) -> Vec<(f64, f64)> {
    let Pen { width, value, limit } = pen;
    let (mut x, mut y) = start;
    let mut theta = heading;
    let mut path = vec![(x, y)];
    for _ in 0..steps {
        theta += rng.random_range(-0.35..0.35);
        let (nx, ny) = (x + 2.0 * libm::cos(theta), y + 2.0 * libm::sin(theta));
        if nx * nx + ny * ny > limit * limit {
            theta += core::f64::consts::PI;
            continue;
        }
        // stamp every half pixel along the segment
        for t in 1..=4 {
            let f = t as f64 / 4.0;
            stamp.disk(x + (nx - x) * f, y + (ny - y) * f, width / 2.0, value);
        }
        (x, y) = (nx, ny);
        path.push((x, y));
    }
    path
}

fn draw(kind: DefectKind, rng: &mut SynthRng, room: f64) -> Stamp {
    let mut s = Stamp { pixels: Vec::new() };
    match kind {
        DefectKind::Crack => {
            let width = rng.random_range(1..=3) as f64;
            let value = dark(rng);
            let limit = (room / 2.0 - 1.0).clamp(6.0, 40.0);
            let steps = rng.random_range(12..30);
            let heading = rng.random_range(0.0..core::f64::consts::TAU);
            s.disk(0.0, 0.0, width / 2.0, value);
            let path = walk(rng, &mut s, (0.0, 0.0), heading, steps, Pen { width, value, limit });
            for _ in 0..rng.random_range(1..=3) {
                let &(bx, by) = path.choose(rng).expect("path starts non-empty");
                let branch_heading = heading + rng.random_range(0.6..1.4) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let branch = Pen { width: (width - 1.0).max(1.0), value, limit };
                let branch_steps = rng.random_range(4..12);
                walk(rng, &mut s, (bx, by), branch_heading, branch_steps, branch);
            }
        }
        DefectKind::Pinhole => {
            let r = rng.random_range(1.0..=3.0);
            s.disk(0.0, 0.0, r, dark(rng));
        }
        DefectKind::Hole => {
            let r = rng.random_range(5.0..=15.0);
            s.ring(r, r + 2.0, bright(rng));
            s.disk(0.0, 0.0, r, dark(rng));
        }
        DefectKind::Spatter => {
            let blobs = rng.random_range(5..=20);
            let spread = rng.random_range(8.0..18.0_f64).min(room / 2.0 - 5.0);
            for _ in 0..blobs {
                let (a, d) = (rng.random_range(0.0..core::f64::consts::TAU), spread * libm::sqrt(rng.random::<f64>()));
                let r = rng.random_range(1.0..=4.0);
                s.disk(d * libm::cos(a), d * libm::sin(a), r, bright(rng));
            }
        }
    }
    s
}

type Rect = (usize, usize, usize, usize);

fn overlaps(a: Rect, b: Rect) -> bool {
    a.0 < b.2 && b.0 < a.2 && a.1 < b.3 && b.1 < a.3
}

fn background(spec: &SynthSpec, rng: &mut SynthRng) -> Vec<f64> {
    let base = rng.random_range(115.0..140.0);
    let (gx, gy) = (rng.random_range(-25.0..25.0), rng.random_range(-25.0..25.0));
    let mut canvas = Vec::with_capacity(spec.width * spec.height);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let fx = x as f64 / spec.width as f64 - 0.5;
            let fy = y as f64 / spec.height as f64 - 0.5;
            canvas.push(base + gx * fx + gy * fy);
        }
    }
    canvas
}

fn render_image(spec: &SynthSpec, index: usize, kinds: &[DefectKind]) -> SynthSample {
    let mut rng = rng_from(spec.seed, &[0x5e7, index as u64]);
    let mut canvas = background(spec, &mut rng);
    let room = spec.width.min(spec.height) as f64;
    let mut placed: Vec<Rect> = Vec::new();
    let mut objects = Vec::new();
    for &kind in kinds {
        let stamp = draw(kind, &mut rng, room);
        let (x0, y0, x1, y1) = stamp.extent();
        let (sw, sh) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
        let (fw, fh) = (sw + 2 * BOX_HALO, sh + 2 * BOX_HALO);
        debug_assert!(fw <= spec.width && fh <= spec.height, "stamps are sized to the image");
        let mut spot = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let left = rng.random_range(0..=spec.width - fw);
            let top = rng.random_range(0..=spec.height - fh);
            let rect = (left, top, left + fw, top + fh);
            if placed.iter().all(|&p| !overlaps(p, rect)) {
                spot = Some(rect);
                break;
            }
        }
        // crowded image: the generator caller keeps images sparse, so dropping is rare
        let Some(rect) = spot else { continue };
        placed.push(rect);
        let (ox, oy) = (rect.0 as i32 + BOX_HALO as i32 - x0, rect.1 as i32 + BOX_HALO as i32 - y0);
        for &(px, py, v) in &stamp.pixels {
            let (x, y) = ((px + ox) as usize, (py + oy) as usize);
            canvas[y * spec.width + x] = v;
        }
        let bbox = BBox::new(rect.0 as i64 + 1, rect.1 as i64 + 1, rect.2 as i64, rect.3 as i64).expect("non-empty rect");
        objects.push(Object { label: kind.label().to_string(), bbox });
    }
    if spec.noise > 0.0 {
        let normal = Normal::new(0.0, spec.noise).expect("validated noise");
        for v in &mut canvas {
            *v += normal.sample(&mut rng);
        }
    }
    let pixels = canvas.iter().map(|&v| libm::round(v.clamp(0.0, 255.0)) as u8).collect();
    let filename = format!("{index:04}.pgm");
    SynthSample {
        image: RasterImage::new(spec.width, spec.height, 1, pixels).expect("canvas sized to spec"),
        annotation: Annotation { filename, width: spec.width as u32, height: spec.height as u32, depth: 1, objects },
    }
}

/// Splits the seeded sequence of requested defects into per-image groups.
pub fn plan_images(spec: &SynthSpec) -> Vec<Vec<DefectKind>> {
    let mut defects: Vec<DefectKind> = DefectKind::ALL
        .iter()
        .zip(spec.counts)
        .flat_map(|(&k, n)| core::iter::repeat_n(k, n))
        .collect();
    let mut rng = rng_from(spec.seed, &[0x91a4]);
    defects.shuffle(&mut rng);
    let mut groups = Vec::new();
    let mut rest = defects.as_slice();
    while !rest.is_empty() {
        let take = rng.random_range(1..=spec.max_defects_per_image).min(rest.len());
        groups.push(rest[..take].to_vec());
        rest = &rest[take..];
    }
    groups
}

fn check(spec: &SynthSpec) -> Result<(), SynthError> {
    if spec.width < MIN_SIDE || spec.height < MIN_SIDE {
        return Err(SynthError::SpecTooSmall { width: spec.width, height: spec.height });
    }
    if !(1..=4).contains(&spec.max_defects_per_image) {
        return Err(SynthError::DefectsPerImage(spec.max_defects_per_image));
    }
    if !spec.noise.is_finite() || spec.noise < 0.0 {
        return Err(SynthError::Noise(spec.noise));
    }
    Ok(())
}

/// Renders image `index` of the plan; images are independent given the spec.
pub fn generate_one(spec: &SynthSpec, index: usize, kinds: &[DefectKind]) -> Result<SynthSample, SynthError> {
    check(spec)?;
    let mut sample = render_image(spec, index, kinds);
    // a crowded multi-defect image may drop a stamp; retry on fresh draws
    let mut attempt = 1u64;
    while sample.annotation.objects.len() != kinds.len() {
        let mut retry = spec.clone();
        retry.seed = crate::rng::derive_seed(spec.seed, &[0xdead, attempt]);
        sample = render_image(&retry, index, kinds);
        attempt += 1;
    }
    Ok(sample)
}

pub fn generate(spec: &SynthSpec) -> Result<Vec<SynthSample>, SynthError> {
    check(spec)?;
    plan_images(spec)
        .iter()
        .enumerate()
        .map(|(i, kinds)| generate_one(spec, i, kinds))
        .collect()
}

/// Class histogram of the emitted objects, indexed by `classes`.
pub fn object_histogram(samples: &[SynthSample], classes: &ClassMap) -> Vec<usize> {
    let mut h = vec![0; classes.len()];
    for s in samples {
        for o in &s.annotation.objects {
            if let Some(i) = classes.index_of(&o.label) {
                h[i] += 1;
            }
        }
    }
    h
}
