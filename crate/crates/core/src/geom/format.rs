//! `.gmap` files: a one-line JSON header, then either a blank line and the
//! base64 samples, or a sidecar `.bin` next to the file.
//!
//! Samples are little-endian `f64`, component-major, row-major over the grid
//! with the last axis fastest.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::gridmap::{GridMap, Target};
use super::interp::Interp;
use super::reference::Reference;
use super::torus::TorusShape;

/// Where the samples go.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Storage {
    Inline,
    Sidecar,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    kind: String,
    src_dim: usize,
    dst_dim: usize,
    periods_src: Vec<f64>,
    /// Empty for vector-valued maps.
    periods_dst: Vec<f64>,
    reference: String,
    grid: Vec<usize>,
    interp: Interp,
    /// Reference matrix (row-major) when it is neither the identity nor a
    /// coordinate projection/inclusion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<i32>>,
}

fn header_of<T: Real>(map: &GridMap<T>) -> Header {
    let (reference, matrix) = match map.reference() {
        Reference::Zero => ("zero", None),
        r if r.is_identity() => ("identity", None),
        r if r.is_coordinate() => ("coordproj", None),
        Reference::Linear { entries, .. } => ("linear", Some(entries.clone())),
    };
    Header {
        version: 1,
        kind: map.kind().as_str().to_string(),
        src_dim: map.src().dim(),
        dst_dim: map.dst_dim(),
        periods_src: map.src().periods().iter().map(|p| p.as_f64()).collect(),
        periods_dst: map.target().torus().map(|t| t.periods().iter().map(|p| p.as_f64()).collect()).unwrap_or_default(),
        reference: reference.to_string(),
        grid: map.grid().to_vec(),
        interp: map.interp(),
        matrix,
    }
}

fn sample_bytes<T: Real>(map: &GridMap<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(map.displacement().len() * 8);
    for v in map.displacement() {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out
}

fn header_line<T: Real>(map: &GridMap<T>) -> String {
    serde_json::to_string(&header_of(map)).expect("header serializes")
}

/// The inline form of a map, as written by [`write_gmap`].
pub fn write_gmap_string<T: Real>(map: &GridMap<T>) -> String {
    let mut s = header_line(map);
    s.push_str("\n\n");
    s.push_str(&STANDARD.encode(sample_bytes(map)));
    s.push('\n');
    s
}

pub fn write_gmap<T: Real>(path: &Path, map: &GridMap<T>, storage: Storage) -> Result<()> {
    match storage {
        Storage::Inline => fs::write(path, write_gmap_string(map))?,
        Storage::Sidecar => {
            fs::write(path, header_line(map) + "\n")?;
            fs::write(path.with_extension("bin"), sample_bytes(map))?;
        }
    }
    Ok(())
}

fn decode(header: Header, bytes: &[u8]) -> Result<GridMap<f64>> {
    if header.version != 1 {
        return Err(Error::Format(format!("unsupported version {}", header.version)));
    }
    if header.periods_src.len() != header.src_dim || header.grid.len() != header.src_dim {
        return Err(Error::Format("src_dim disagrees with periods_src or grid".into()));
    }
    let src = TorusShape::new(header.periods_src)?;
    let target = if header.periods_dst.is_empty() {
        Target::Vector(header.dst_dim)
    } else if header.periods_dst.len() == header.dst_dim {
        Target::Torus(TorusShape::new(header.periods_dst)?)
    } else {
        return Err(Error::Format("dst_dim disagrees with periods_dst".into()));
    };
    let reference = match (header.reference.as_str(), header.matrix) {
        ("zero", None) => Reference::Zero,
        ("identity", None) if header.src_dim == header.dst_dim => Reference::identity(header.src_dim),
        ("coordproj", None) => Reference::coordinate(header.src_dim, header.dst_dim),
        ("linear", Some(m)) => Reference::linear(header.dst_dim, header.src_dim, m)?,
        (r, _) => return Err(Error::Format(format!("bad reference {r:?}"))),
    };
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Format(format!("{} sample bytes is not a multiple of 8", bytes.len())));
    }
    let samples: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let map = GridMap::new(src, target, reference, header.grid, header.interp, samples)?;
    if map.kind().as_str() != header.kind {
        return Err(Error::Format(format!("kind {:?} does not match the reference", header.kind)));
    }
    Ok(map)
}

/// Parses the inline form.
pub fn read_gmap_str(text: &str) -> Result<GridMap<f64>> {
    let (head, body) =
        text.split_once("\n\n").ok_or_else(|| Error::Format("missing blank line after header".into()))?;
    let header: Header = serde_json::from_str(head).map_err(|e| Error::Format(e.to_string()))?;
    let body: String = body.split_whitespace().collect();
    let bytes = STANDARD.decode(body).map_err(|e| Error::Format(e.to_string()))?;
    decode(header, &bytes)
}

/// Reads a map, looking for a sidecar `.bin` when there is no inline body.
pub fn read_gmap(path: &Path) -> Result<GridMap<f64>> {
    let text = fs::read_to_string(path)?;
    if text.trim_end().contains("\n\n") {
        return read_gmap_str(&text);
    }
    let header: Header = serde_json::from_str(text.trim()).map_err(|e| Error::Format(e.to_string()))?;
    let bytes = fs::read(path.with_extension("bin"))?;
    decode(header, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_key_order() {
        let s = TorusShape::<f64>::standard(2);
        let pi0 = super::super::gridmap::coordinate_projection(&s, 1, vec![8, 8], Interp::Trig).unwrap();
        let text = write_gmap_string(&pi0);
        let head = text.lines().next().unwrap();
        assert!(head.starts_with(r#"{"version":1,"kind":"fibration","src_dim":2,"dst_dim":1,"periods_src":["#));
        assert!(head.ends_with(r#""reference":"coordproj","grid":[8,8],"interp":"trig"}"#));
    }

    #[test]
    fn inline_round_trip_is_bit_exact() {
        let s = TorusShape::<f64>::standard(2);
        let f = GridMap::diffeo_from_fn(&s, vec![8, 12], Interp::Cubic, |x, d| {
            d[0] = 0.1 * x[1].sin() + 1e-17;
            d[1] = 0.3 * (x[0] + x[1]).cos();
        })
        .unwrap();
        let back = read_gmap_str(&write_gmap_string(&f)).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.interp(), Interp::Cubic);
        assert!(back.displacement().iter().zip(f.displacement()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_gmap_str("{}\n\nAAAA").is_err());
        assert!(read_gmap_str("no header").is_err());
    }
}
