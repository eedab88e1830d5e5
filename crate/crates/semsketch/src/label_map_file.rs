//! `SLM1` label-map files: magic, `u32` width, `u32` height, `u8` source
//! tag length, tag bytes, then `width·height` `u16` concept ids, row-major,
//! all little-endian.

use std::path::Path;

use semsketch_core::LabelMap;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SLM1";

fn take<'a>(bytes: &mut &'a [u8], len: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < len {
        return Err(Error::Format(format!("label map truncated in {what}")));
    }
    let (head, tail) = bytes.split_at(len);
    *bytes = tail;
    Ok(head)
}

/// Decodes a label map without checking ids against a vocabulary.
pub fn decode_label_map(mut bytes: &[u8]) -> Result<LabelMap> {
    let buf = &mut bytes;
    if take(buf, 4, "magic")? != MAGIC {
        return Err(Error::Format("not an SLM1 label map (bad magic)".into()));
    }
    let width = u32::from_le_bytes(take(buf, 4, "header")?.try_into().unwrap());
    let height = u32::from_le_bytes(take(buf, 4, "header")?.try_into().unwrap());
    let tag_len = take(buf, 1, "header")?[0] as usize;
    let source = std::str::from_utf8(take(buf, tag_len, "source tag")?)
        .map_err(|_| Error::Format("label map source tag is not UTF-8".into()))?
        .to_string();
    let pixels = (width as usize)
        .checked_mul(height as usize)
        .filter(|&p| p > 0)
        .ok_or_else(|| Error::Format(format!("label map has invalid size {width}x{height}")))?;
    let payload = take(buf, pixels.saturating_mul(2), "payload")?;
    if !buf.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after label map payload", buf.len())));
    }
    let cells = payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    Ok(LabelMap::new(width, height, source, cells)?)
}

/// Decodes a label map and rejects ids `>= concept_count`.
pub fn parse_label_map(bytes: &[u8], concept_count: usize) -> Result<LabelMap> {
    let map = decode_label_map(bytes)?;
    map.check_ids(concept_count)?;
    Ok(map)
}

pub fn write_label_map(map: &LabelMap) -> Result<Vec<u8>> {
    let tag = map.source().as_bytes();
    let tag_len = u8::try_from(tag.len())
        .map_err(|_| Error::Invalid(format!("source tag longer than 255 bytes: {}", map.source())))?;
    let mut out = Vec::with_capacity(13 + tag.len() + map.cells().len() * 2);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&map.width().to_le_bytes());
    out.extend_from_slice(&map.height().to_le_bytes());
    out.push(tag_len);
    out.extend_from_slice(tag);
    for id in map.cells() {
        out.extend_from_slice(&id.to_le_bytes());
    }
    Ok(out)
}

pub fn read_label_map_file(path: &Path, concept_count: usize) -> Result<LabelMap> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    parse_label_map(&bytes, concept_count)
}

pub fn write_label_map_file(map: &LabelMap, path: &Path) -> Result<()> {
    std::fs::write(path, write_label_map(map)?).map_err(Error::io(path))
}
