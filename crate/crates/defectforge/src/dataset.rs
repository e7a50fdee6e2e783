//! On-disk layouts: synthetic datasets, patch sets, and CSV logs.
//!
//! A synthetic dataset directory holds `images/NNNN.pgm`,
//! `annotations/NNNN.xml` and `manifest.csv` (`file,label,count`).
//! A patch directory holds one PGM per patch, `labels.csv`
//! (`patch_file,class_index,source,bbox`, bbox as `xmin ymin xmax ymax`)
//! and `classes.txt` with one class label per line in index order.

use std::fs;
use std::path::{Path, PathBuf};

use defectforge_core::imaging::{decode_pnm, encode_pnm, to_grayscale};
use defectforge_core::metrics::MetricsReport;
use defectforge_core::synth::SynthSample;
use defectforge_core::train::EpochLog;
use defectforge_core::{Annotation, BBox, ClassMap, LabeledPatch, RasterImage, Tensor};

use crate::error::{Error, Result};
use crate::voc::{parse_voc_xml, write_voc_xml};

pub const LABELS_CSV: &str = "labels.csv";
pub const CLASSES_TXT: &str = "classes.txt";
pub const MANIFEST_CSV: &str = "manifest.csv";

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn read_image(path: &Path) -> Result<RasterImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes).map_err(|e| Error::decode(path, e))
}

pub fn write_image(path: &Path, img: &RasterImage) -> Result<()> {
    write_file(path, encode_pnm(img))
}

pub fn read_annotation(path: &Path) -> Result<Annotation> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_voc_xml(&bytes).map_err(|e| Error::decode(path, e))
}

/// Files in `dir` with the given extension (case-insensitive), sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let matches = path.extension().and_then(|x| x.to_str()).is_some_and(|x| x.eq_ignore_ascii_case(ext));
        if matches && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// The image an annotation refers to: `<images>/<filename>`, else a PNM
/// sharing the XML file's stem.
pub fn find_image(images: &Path, annotation: &Annotation, xml_path: &Path) -> Option<PathBuf> {
    let named = images.join(&annotation.filename);
    if named.is_file() {
        return Some(named);
    }
    let stem = xml_path.file_stem()?;
    ["pgm", "ppm", "pnm"].iter().map(|ext| images.join(stem).with_extension(ext)).find(|p| p.is_file())
}

pub fn write_synth_dataset(dir: &Path, samples: &[SynthSample], classes: &ClassMap) -> Result<()> {
    let (images, annotations) = (dir.join("images"), dir.join("annotations"));
    create_dir(&images)?;
    create_dir(&annotations)?;
    let mut manifest = csv::Writer::from_writer(Vec::new());
    manifest.write_record(["file", "label", "count"]).expect("in-memory write");
    for s in samples {
        let name = &s.annotation.filename;
        write_image(&images.join(name), &s.image)?;
        let xml = Path::new(name).with_extension("xml");
        write_file(&annotations.join(xml), write_voc_xml(&s.annotation))?;
        for label in classes.labels() {
            let count = s.annotation.objects.iter().filter(|o| &o.label == label).count();
            if count > 0 {
                manifest.write_record([name.as_str(), label, &count.to_string()]).expect("in-memory write");
            }
        }
    }
    write_file(&dir.join(MANIFEST_CSV), manifest.into_inner().expect("in-memory flush"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchRecord {
    pub file: String,
    pub class_index: usize,
    pub source: String,
    pub bbox: BBox,
}

/// Writes `patches` as `00000.pgm`, `00001.pgm`, ... plus `labels.csv` and
/// `classes.txt`.
pub fn write_patch_set(dir: &Path, patches: &[LabeledPatch], classes: &ClassMap) -> Result<Vec<PatchRecord>> {
    create_dir(dir)?;
    let mut records = Vec::with_capacity(patches.len());
    let mut labels = csv::Writer::from_writer(Vec::new());
    labels.write_record(["patch_file", "class_index", "source", "bbox"]).expect("in-memory write");
    for (i, p) in patches.iter().enumerate() {
        let file = format!("{i:05}.pgm");
        let img = RasterImage::from_unit_tensor(&p.pixels).map_err(|e| Error::Data(format!("patch {i}: {e}")))?;
        write_image(&dir.join(&file), &img)?;
        let rec = PatchRecord { file, class_index: p.class_index, source: p.source.clone(), bbox: p.bbox };
        labels
            .write_record([rec.file.as_str(), &rec.class_index.to_string(), &rec.source, &rec.bbox.to_string()])
            .expect("in-memory write");
        records.push(rec);
    }
    write_file(&dir.join(LABELS_CSV), labels.into_inner().expect("in-memory flush"))?;
    let mut class_lines = classes.labels().join("\n");
    class_lines.push('\n');
    write_file(&dir.join(CLASSES_TXT), class_lines)?;
    Ok(records)
}

pub fn read_class_map(dir: &Path) -> Result<ClassMap> {
    let path = dir.join(CLASSES_TXT);
    if !path.exists() {
        return Ok(ClassMap::default());
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    ClassMap::new(text.lines().map(str::trim).filter(|l| !l.is_empty())).map_err(|e| Error::decode(&path, e))
}

fn parse_bbox(text: &str) -> Option<BBox> {
    let v: Vec<i64> = text.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().ok()?;
    match v[..] {
        [a, b, c, d] => BBox::new(a, b, c, d).ok(),
        _ => None,
    }
}

pub fn read_labels_csv(dir: &Path, classes: usize) -> Result<Vec<PatchRecord>> {
    let path = dir.join(LABELS_CSV);
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::decode(&path, e))?;
        let bad = |what: &str| Error::decode(&path, format!("row {}: {what}", row + 1));
        if rec.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let class_index: usize = rec[1].parse().map_err(|_| bad("class_index is not an integer"))?;
        if class_index >= classes {
            return Err(bad(&format!("class_index {class_index} with only {classes} classes")));
        }
        let bbox = parse_bbox(&rec[3]).ok_or_else(|| bad("bbox must be four integers xmin ymin xmax ymax"))?;
        out.push(PatchRecord { file: rec[0].to_string(), class_index, source: rec[2].to_string(), bbox });
    }
    Ok(out)
}

/// Reads a patch image as an `H x W x 1` tensor scaled to `[0, 1]`.
pub fn read_patch(path: &Path) -> Result<Tensor> {
    let img = read_image(path)?;
    let gray = if img.channels() == 1 { img } else { to_grayscale(&img) };
    Ok(gray.to_tensor().map(|v| v / 255.0))
}

pub struct PatchSet {
    pub classes: ClassMap,
    pub records: Vec<PatchRecord>,
    pub pixels: Vec<Tensor>,
}

impl PatchSet {
    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.class_index).collect()
    }
}

pub fn read_patch_set(dir: &Path) -> Result<PatchSet> {
    let classes = read_class_map(dir)?;
    let records = read_labels_csv(dir, classes.len())?;
    let mut pixels = Vec::with_capacity(records.len());
    for r in &records {
        let t = read_patch(&dir.join(&r.file))?;
        if let Some(first) = pixels.first() {
            let first: &Tensor = first;
            if first.shape() != t.shape() {
                return Err(Error::Data(format!("{}: patch shape {:?} differs from {:?}", r.file, t.shape(), first.shape())));
            }
        }
        pixels.push(t);
    }
    Ok(PatchSet { classes, records, pixels })
}

pub fn epochs_csv(logs: &[EpochLog]) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
    for l in logs {
        out.push_str(&format!("{},{:.6},{:.6},{:.6},{:.6}\n", l.epoch, l.train_loss, l.train_acc, l.val_loss, l.val_acc));
    }
    out
}

pub fn parse_epochs_csv(text: &str) -> Result<Vec<EpochLog>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Data(format!("epochs csv: {e}")))?;
        let f = |i: usize| rec.get(i).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| Error::Data(format!("epochs csv: bad field {i}")));
        out.push(EpochLog { epoch: f(0)? as usize, train_loss: f(1)?, train_acc: f(2)?, val_loss: f(3)?, val_acc: f(4)? });
    }
    Ok(out)
}

pub fn write_metrics_csv(path: &Path, report: &MetricsReport, classes: &ClassMap) -> Result<()> {
    write_file(path, defectforge_core::metrics::render_csv(report, classes))
}
