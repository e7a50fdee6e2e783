//! LabelImg-style annotation records and the crops they describe.
//!
//! Boxes follow the Pascal-VOC dialect LabelImg writes: integer pixel
//! coordinates, 1-based and inclusive on both ends.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::imaging::{resize_bilinear, to_grayscale, RasterImage};
use crate::tensor::Tensor;

/// Boxes whose extent `(xmax - xmin) * (ymax - ymin)` is below this are reported as degenerate.
pub const MIN_BOX_AREA: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    xmin: u32,
    ymin: u32,
    xmax: u32,
    ymax: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("invalid box ({xmin},{ymin})-({xmax},{ymax}): need 1 <= min < max on both axes")]
pub struct InvalidBox {
    pub xmin: i64,
    pub ymin: i64,
    pub xmax: i64,
    pub ymax: i64,
}

impl BBox {
    pub fn new(xmin: i64, ymin: i64, xmax: i64, ymax: i64) -> Result<Self, InvalidBox> {
        let err = InvalidBox { xmin, ymin, xmax, ymax };
        let ok = 1 <= xmin && xmin < xmax && 1 <= ymin && ymin < ymax && xmax <= u32::MAX as i64 && ymax <= u32::MAX as i64;
        if !ok {
            return Err(err);
        }
        Ok(Self { xmin: xmin as u32, ymin: ymin as u32, xmax: xmax as u32, ymax: ymax as u32 })
    }

    pub fn xmin(&self) -> u32 {
        self.xmin
    }

    pub fn ymin(&self) -> u32 {
        self.ymin
    }

    pub fn xmax(&self) -> u32 {
        self.xmax
    }

    pub fn ymax(&self) -> u32 {
        self.ymax
    }

    /// Pixel columns covered (inclusive count).
    pub fn width(&self) -> u32 {
        self.xmax - self.xmin + 1
    }

    pub fn height(&self) -> u32 {
        self.ymax - self.ymin + 1
    }

    /// Corner-to-corner extent, the usual VOC area.
    pub fn extent_area(&self) -> u64 {
        u64::from(self.xmax - self.xmin) * u64::from(self.ymax - self.ymin)
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.xmax as usize <= width && self.ymax as usize <= height
    }

    /// 0-based half-open `(x0, y0, x1, y1)`.
    pub fn to_half_open(&self) -> (usize, usize, usize, usize) {
        (self.xmin as usize - 1, self.ymin as usize - 1, self.xmax as usize, self.ymax as usize)
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.xmin, self.ymin, self.xmax, self.ymax)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Object {
    pub label: String,
    pub bbox: BBox,
}

/// One image's annotation file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub filename: String,
    pub width: u32,
    pub height: u32,
    /// 1 (grayscale) or 3 (colour).
    pub depth: u32,
    pub objects: Vec<Object>,
}

/// Ordered class labels with a reverse lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassMapError {
    #[error("class map needs at least one label")]
    Empty,
    #[error("duplicate label {0:?}")]
    Duplicate(String),
    #[error("empty label")]
    EmptyLabel,
}

impl ClassMap {
    pub fn new<I, S>(labels: I) -> Result<Self, ClassMapError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(ClassMapError::Empty);
        }
        let mut index = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(ClassMapError::EmptyLabel);
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(ClassMapError::Duplicate(l.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    /// Two classes: crack versus every other defect.
    pub fn binary() -> Self {
        Self::new(["Crack", "NonCrack"]).expect("static labels")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }
}

impl Default for ClassMap {
    /// Crack -> 0, Pinhole -> 1, Hole -> 2, Spatter -> 3.
    fn default() -> Self {
        Self::new(["Crack", "Pinhole", "Hole", "Spatter"]).expect("static labels")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    SizeMismatch { field: &'static str, annotated: u32, actual: usize },
    OutOfBounds { object: usize, bbox: BBox },
    UnknownLabel { object: usize, label: String },
    DegenerateBox { object: usize, bbox: BBox },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::SizeMismatch { field, annotated, actual } => {
                write!(f, "annotated {field} {annotated} differs from image {field} {actual}")
            }
            Finding::OutOfBounds { object, bbox } => write!(f, "object {object}: box ({bbox}) exceeds image bounds"),
            Finding::UnknownLabel { object, label } => write!(f, "object {object}: label {label:?} not in class map"),
            Finding::DegenerateBox { object, bbox } => {
                write!(f, "object {object}: box ({bbox}) smaller than {MIN_BOX_AREA} px^2")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Checks an annotation against the image it describes. Problems are
/// returned as findings; nothing here fails.
pub fn validate_annotation(a: &Annotation, img_w: usize, img_h: usize, classes: Option<&ClassMap>) -> ValidationReport {
    let mut findings = Vec::new();
    if a.width as usize != img_w {
        findings.push(Finding::SizeMismatch { field: "width", annotated: a.width, actual: img_w });
    }
    if a.height as usize != img_h {
        findings.push(Finding::SizeMismatch { field: "height", annotated: a.height, actual: img_h });
    }
    for (i, obj) in a.objects.iter().enumerate() {
        if !obj.bbox.fits(img_w, img_h) {
            findings.push(Finding::OutOfBounds { object: i, bbox: obj.bbox });
        }
        if let Some(cmap) = classes {
            if cmap.index_of(&obj.label).is_none() {
                findings.push(Finding::UnknownLabel { object: i, label: obj.label.clone() });
            }
        }
        if obj.bbox.extent_area() < MIN_BOX_AREA {
            findings.push(Finding::DegenerateBox { object: i, bbox: obj.bbox });
        }
    }
    ValidationReport { findings }
}

/// A classifier input cut from an annotated image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPatch {
    /// `target_h x target_w x 1`, values in `[0, 1]`.
    pub pixels: Tensor,
    pub class_index: usize,
    pub source: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractError {
    #[error("object {object}: label {label:?} not in class map")]
    UnknownLabel { object: usize, label: String },
    #[error("object {object}: box ({bbox}) exceeds the {width}x{height} image")]
    OutOfBounds { object: usize, bbox: BBox, width: usize, height: usize },
    #[error("target size must be at least 1x1")]
    BadTarget,
    #[error("margin {0} must be finite and non-negative")]
    BadMargin(f64),
}

/// Grayscale, resize to `target_h x target_w`, and scale to `[0, 1]` the
/// 0-based half-open window `[x0, x1) x [y0, y1)` of `gray`.
pub fn patch_from_window(gray: &RasterImage, window: (usize, usize, usize, usize), target_h: usize, target_w: usize) -> Tensor {
    let (x0, y0, x1, y1) = window;
    let crop = gray.window_tensor(x0, y0, x1, y1);
    let resized = resize_bilinear(&crop, target_h, target_w).expect("target validated by caller");
    resized.map(|v| (v / 255.0).clamp(0.0, 1.0))
}

/// One patch per object, in object order.
///
/// The crop covers the box exactly (converted to 0-based half-open), grown
/// on every side by `margin * max(box width, box height)` pixels (rounded)
/// and clamped to the image.
pub fn extract_patches(
    img: &RasterImage,
    a: &Annotation,
    classes: &ClassMap,
    target_h: usize,
    target_w: usize,
    margin: f64,
) -> Result<Vec<LabeledPatch>, ExtractError> {
    if target_h == 0 || target_w == 0 {
        return Err(ExtractError::BadTarget);
    }
    if !margin.is_finite() || margin < 0.0 {
        return Err(ExtractError::BadMargin(margin));
    }
    let (w, h) = (img.width(), img.height());
    let mut resolved = Vec::with_capacity(a.objects.len());
    for (i, obj) in a.objects.iter().enumerate() {
        let class_index = classes
            .index_of(&obj.label)
            .ok_or_else(|| ExtractError::UnknownLabel { object: i, label: obj.label.clone() })?;
        if !obj.bbox.fits(w, h) {
            return Err(ExtractError::OutOfBounds { object: i, bbox: obj.bbox, width: w, height: h });
        }
        resolved.push(class_index);
    }
    let gray = to_grayscale(img);
    Ok(a.objects
        .iter()
        .zip(resolved)
        .map(|(obj, class_index)| {
            let (x0, y0, x1, y1) = obj.bbox.to_half_open();
            let side = obj.bbox.width().max(obj.bbox.height()) as f64;
            let grow = libm::round(margin * side) as usize;
            let window = (x0.saturating_sub(grow), y0.saturating_sub(grow), (x1 + grow).min(w), (y1 + grow).min(h));
            LabeledPatch {
                pixels: patch_from_window(&gray, window, target_h, target_w),
                class_index,
                source: a.filename.to_string(),
                bbox: obj.bbox,
            }
        })
        .collect())
}
