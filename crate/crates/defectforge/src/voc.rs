//! Pascal-VOC XML as written by LabelImg.
//!
//! The writer emits a fixed element set:
//! `annotation > filename, size(width, height, depth), object*(name, bndbox(xmin, ymin, xmax, ymax))`.
//! The reader also accepts the extra elements LabelImg adds (`folder`,
//! `path`, `source`, `segmented`, `pose`, `truncated`, `difficult`) and
//! ignores them. Text fields are trimmed of surrounding whitespace.

use std::fmt::Write;

use defectforge_core::{Annotation, BBox, Object};
use roxmltree::{Document, Node};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("missing or invalid field: {0}")]
    MissingField(String),
    #[error("bad bounding box: {0}")]
    BadBox(String),
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.has_tag_name(name))
}

fn text<'a>(node: Node<'a, '_>, name: &str, path: &str) -> Result<&'a str, VocError> {
    child(node, name)
        .and_then(|c| c.text())
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| VocError::MissingField(format!("{path}{name}")))
}

fn dimension(size: Node, name: &str) -> Result<u32, VocError> {
    let raw = text(size, name, "size/")?;
    raw.parse::<u32>()
        .ok()
        .filter(|&v| v > 0)
        .ok_or_else(|| VocError::MissingField(format!("size/{name} (not a positive integer: {raw:?})")))
}

fn coord(bndbox: Node, name: &str, object: usize) -> Result<i64, VocError> {
    let raw = child(bndbox, name)
        .and_then(|c| c.text())
        .map(str::trim)
        .ok_or_else(|| VocError::MissingField(format!("object[{object}]/bndbox/{name}")))?;
    raw.parse::<i64>()
        .map_err(|_| VocError::BadBox(format!("object {object}: {name} is not an integer: {raw:?}")))
}

pub fn parse_voc_xml(bytes: &[u8]) -> Result<Annotation, VocError> {
    let src = std::str::from_utf8(bytes).map_err(|e| VocError::MalformedXml(format!("not UTF-8: {e}")))?;
    let doc = Document::parse(src).map_err(|e| VocError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("annotation") {
        return Err(VocError::MissingField(format!("annotation (root is <{}>)", root.tag_name().name())));
    }
    let filename = text(root, "filename", "")?.to_string();
    let size = child(root, "size").ok_or_else(|| VocError::MissingField("size".into()))?;
    let width = dimension(size, "width")?;
    let height = dimension(size, "height")?;
    let depth = dimension(size, "depth")?;
    if depth != 1 && depth != 3 {
        return Err(VocError::MissingField(format!("size/depth (must be 1 or 3, got {depth})")));
    }

    let mut objects = Vec::new();
    for (i, obj) in root.children().filter(|c| c.is_element() && c.has_tag_name("object")).enumerate() {
        let label = text(obj, "name", &format!("object[{i}]/"))?.to_string();
        let bndbox = child(obj, "bndbox").ok_or_else(|| VocError::MissingField(format!("object[{i}]/bndbox")))?;
        let (xmin, ymin) = (coord(bndbox, "xmin", i)?, coord(bndbox, "ymin", i)?);
        let (xmax, ymax) = (coord(bndbox, "xmax", i)?, coord(bndbox, "ymax", i)?);
        let bbox = BBox::new(xmin, ymin, xmax, ymax).map_err(|e| VocError::BadBox(format!("object {i}: {e}")))?;
        objects.push(Object { label, bbox });
    }
    Ok(Annotation { filename, width, height, depth, objects })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
    out
}

pub fn write_voc_xml(a: &Annotation) -> Vec<u8> {
    let mut out = String::new();
    let _ = writeln!(out, "<annotation>");
    let _ = writeln!(out, "\t<filename>{}</filename>", escape(&a.filename));
    let _ = writeln!(out, "\t<size>");
    let _ = writeln!(out, "\t\t<width>{}</width>", a.width);
    let _ = writeln!(out, "\t\t<height>{}</height>", a.height);
    let _ = writeln!(out, "\t\t<depth>{}</depth>", a.depth);
    let _ = writeln!(out, "\t</size>");
    for o in &a.objects {
        let b = &o.bbox;
        let _ = writeln!(out, "\t<object>");
        let _ = writeln!(out, "\t\t<name>{}</name>", escape(&o.label));
        let _ = writeln!(out, "\t\t<bndbox>");
        let _ = writeln!(out, "\t\t\t<xmin>{}</xmin>", b.xmin());
        let _ = writeln!(out, "\t\t\t<ymin>{}</ymin>", b.ymin());
        let _ = writeln!(out, "\t\t\t<xmax>{}</xmax>", b.xmax());
        let _ = writeln!(out, "\t\t\t<ymax>{}</ymax>", b.ymax());
        let _ = writeln!(out, "\t\t</bndbox>");
        let _ = writeln!(out, "\t</object>");
    }
    let _ = writeln!(out, "</annotation>");
    out.into_bytes()
}
