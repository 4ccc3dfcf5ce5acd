//! ASCII PLY and XYZ text readers, and the labeled PLY writer.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{Point3, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    PlyAscii,
    Xyz,
}

impl CloudFormat {
    /// Guesses the format from the file extension (`.ply` or anything else).
    pub fn from_path(path: &Path) -> CloudFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("ply") => CloudFormat::PlyAscii,
            _ => CloudFormat::Xyz,
        }
    }
}

/// Per-point class written by [`save_labeled_cloud`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointClass {
    Plain,
    Edge,
    Corner,
}

impl PointClass {
    pub fn color(self) -> [u8; 3] {
        match self {
            PointClass::Plain => [200, 200, 200],
            PointClass::Edge => [255, 0, 0],
            PointClass::Corner => [0, 0, 255],
        }
    }

    pub fn from_color(rgb: [u8; 3]) -> Option<PointClass> {
        [PointClass::Plain, PointClass::Edge, PointClass::Corner]
            .into_iter()
            .find(|c| c.color() == rgb)
    }
}

pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CloudFormat::PlyAscii => parse_ply(&text, path),
        CloudFormat::Xyz => parse_xyz(&text, path),
    }
}

/// Writes an ASCII PLY whose vertex colors encode `labels`.
pub fn save_labeled_cloud(cloud: &PointCloud, labels: &[PointClass], path: &Path) -> Result<()> {
    if labels.len() != cloud.len() {
        return Err(Error::invalid(format!(
            "{} labels for {} points",
            labels.len(),
            cloud.len()
        )));
    }
    let mut out = String::with_capacity(64 * (cloud.len() + 4));
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", cloud.len());
    out.push_str(
        "property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
    );
    for (p, class) in cloud.points().iter().zip(labels) {
        let [r, g, b] = class.color();
        let _ = writeln!(
            out,
            "{} {} {} {r} {g} {b}",
            format_coord(p.x),
            format_coord(p.y),
            format_coord(p.z)
        );
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Decimal text with 9 significant digits, trailing zeros trimmed.
pub(crate) fn format_coord(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

fn parse_number(tok: &str, path: &Path, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(path, line, format!("not a number: {tok:?}")))
}

fn checked_point(x: f64, y: f64, z: f64, path: &Path, line: usize) -> Result<Point3> {
    let p = Point3::new(x, y, z);
    if !p.is_finite() {
        return Err(Error::parse(path, line, "non-finite coordinate"));
    }
    Ok(p)
}

fn parse_xyz(text: &str, path: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected 3 values, found {}", toks.len()),
            ));
        }
        let x = parse_number(toks[0], path, i + 1)?;
        let y = parse_number(toks[1], path, i + 1)?;
        let z = parse_number(toks[2], path, i + 1)?;
        points.push(checked_point(x, y, z, path, i + 1)?);
    }
    PointCloud::new(points)
}

#[derive(Debug, Default)]
struct PlyHeader {
    vertex_count: usize,
    // Column positions of x, y, z and the optional colors.
    xyz: [Option<usize>; 3],
    rgb: [Option<usize>; 3],
    columns: usize,
    body_start: usize,
}

fn parse_ply_header(lines: &[&str], path: &Path) -> Result<PlyHeader> {
    let mut header = PlyHeader::default();
    if lines.first().map(|l| l.trim()) != Some("ply") {
        return Err(Error::parse(path, 1, "missing 'ply' magic line"));
    }
    let mut saw_format = false;
    let mut saw_vertex = false;
    // Element currently receiving property declarations.
    let mut in_vertex = false;
    for (i, raw) in lines.iter().enumerate().skip(1) {
        let lineno = i + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            [] => continue,
            ["comment", ..] | ["obj_info", ..] => continue,
            ["format", "ascii", "1.0"] => saw_format = true,
            ["format", other, ..] => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("unsupported PLY format {other:?} (only ascii 1.0)"),
                ))
            }
            ["element", name, count] => {
                let count: usize = count
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("bad element count {count:?}")))?;
                if *name == "vertex" {
                    if saw_vertex {
                        return Err(Error::parse(path, lineno, "duplicate vertex element"));
                    }
                    saw_vertex = true;
                    in_vertex = true;
                    header.vertex_count = count;
                } else if !saw_vertex {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("element {name:?} before vertex is not supported"),
                    ));
                } else {
                    in_vertex = false;
                }
            }
            ["property", "list", ..] if in_vertex => {
                return Err(Error::parse(path, lineno, "list properties on vertices are not supported"));
            }
            ["property", ty, name] if in_vertex => {
                let col = header.columns;
                header.columns += 1;
                let is_float = matches!(*ty, "float" | "float32" | "double" | "float64");
                let is_uchar = matches!(*ty, "uchar" | "uint8");
                let slot = match *name {
                    "x" => Some((&mut header.xyz[0], is_float)),
                    "y" => Some((&mut header.xyz[1], is_float)),
                    "z" => Some((&mut header.xyz[2], is_float)),
                    "red" => Some((&mut header.rgb[0], is_uchar)),
                    "green" => Some((&mut header.rgb[1], is_uchar)),
                    "blue" => Some((&mut header.rgb[2], is_uchar)),
                    _ => None,
                };
                if let Some((slot, type_ok)) = slot {
                    if !type_ok {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("unsupported type {ty:?} for property {name:?}"),
                        ));
                    }
                    *slot = Some(col);
                }
            }
            ["property", ..] if !in_vertex => continue,
            ["end_header"] => {
                if !saw_format {
                    return Err(Error::parse(path, lineno, "missing 'format ascii 1.0' line"));
                }
                if !saw_vertex {
                    return Err(Error::parse(path, lineno, "missing vertex element"));
                }
                if header.xyz.iter().any(Option::is_none) {
                    return Err(Error::parse(path, lineno, "vertex element lacks x/y/z"));
                }
                let colors = header.rgb.iter().filter(|c| c.is_some()).count();
                if colors != 0 && colors != 3 {
                    return Err(Error::parse(path, lineno, "partial red/green/blue properties"));
                }
                header.body_start = i + 1;
                return Ok(header);
            }
            _ => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("unrecognized header line {:?}", raw.trim()),
                ))
            }
        }
    }
    Err(Error::parse(path, lines.len(), "missing end_header"))
}

fn parse_ply(text: &str, path: &Path) -> Result<PointCloud> {
    let lines: Vec<&str> = text.lines().collect();
    let header = parse_ply_header(&lines, path)?;
    let has_colors = header.rgb[0].is_some();
    let mut points = Vec::with_capacity(header.vertex_count);
    let mut colors = Vec::with_capacity(if has_colors { header.vertex_count } else { 0 });

    let mut row = header.body_start;
    while points.len() < header.vertex_count {
        let Some(raw) = lines.get(row) else {
            return Err(Error::parse(
                path,
                row,
                format!(
                    "vertex count mismatch: header declares {}, file has {}",
                    header.vertex_count,
                    points.len()
                ),
            ));
        };
        let lineno = row + 1;
        row += 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != header.columns {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} values, found {}", header.columns, toks.len()),
            ));
        }
        let coord = |a: usize| parse_number(toks[header.xyz[a].unwrap()], path, lineno);
        points.push(checked_point(coord(0)?, coord(1)?, coord(2)?, path, lineno)?);
        if has_colors {
            let mut rgb = [0u8; 3];
            for (c, col) in rgb.iter_mut().zip(header.rgb) {
                let tok = toks[col.unwrap()];
                *c = tok
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("not a uchar: {tok:?}")))?;
            }
            colors.push(rgb);
        }
    }

    if has_colors {
        PointCloud::with_colors(points, colors)
    } else {
        PointCloud::new(points)
    }
}
