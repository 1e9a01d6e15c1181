//! Multi-record container.
//!
//! Layout: `SRF1`, one flags byte, a varint record count, then per record a
//! varint id length, the id bytes, a varint payload length and the payload
//! bytes. Varints are little-endian base-128.
//!
//! Flags: bit 0 static model, bit 1 counts carried across records, bit 2
//! all-16 pair expansion.

use crate::bits::Bitstream;
use crate::grammar::ExpansionMode;

use super::{AdaptiveScope, CodecError, ModelKind};

pub const MAGIC: &[u8; 4] = b"SRF1";

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ArchiveFlags {
    pub model: ModelKind,
    pub scope: AdaptiveScope,
    pub mode: ExpansionMode,
}

impl ArchiveFlags {
    pub fn to_byte(self) -> u8 {
        (self.model == ModelKind::Static) as u8
            | ((self.scope == AdaptiveScope::Dataset) as u8) << 1
            | ((self.mode == ExpansionMode::All16) as u8) << 2
    }

    pub fn from_byte(b: u8) -> Result<ArchiveFlags, CodecError> {
        if b & !0b111 != 0 {
            return Err(CodecError::Archive(format!("unknown flag bits {b:#04x}")));
        }
        Ok(ArchiveFlags {
            model: if b & 1 != 0 { ModelKind::Static } else { ModelKind::Adaptive },
            scope: if b & 2 != 0 { AdaptiveScope::Dataset } else { AdaptiveScope::Record },
            mode: if b & 4 != 0 { ExpansionMode::All16 } else { ExpansionMode::Canonical6 },
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Archive {
    pub flags: ArchiveFlags,
    /// `(id, payload)` in record order.
    pub records: Vec<(String, Bitstream)>,
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn get_varint(bytes: &[u8], pos: &mut usize) -> Result<u64, CodecError> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *bytes.get(*pos).ok_or_else(|| CodecError::Archive("truncated varint".into()))?;
        *pos += 1;
        v |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(CodecError::Archive("varint too long".into()))
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: u64) -> Result<&'a [u8], CodecError> {
    let end = pos
        .checked_add(usize::try_from(n).map_err(|_| CodecError::Archive("length overflow".into()))?)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| CodecError::Archive("truncated archive".into()))?;
    let s = &bytes[*pos..end];
    *pos = end;
    Ok(s)
}

pub fn write_archive(a: &Archive) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    out.push(a.flags.to_byte());
    put_varint(&mut out, a.records.len() as u64);
    for (id, bits) in &a.records {
        put_varint(&mut out, id.len() as u64);
        out.extend_from_slice(id.as_bytes());
        put_varint(&mut out, bits.as_bytes().len() as u64);
        out.extend_from_slice(bits.as_bytes());
    }
    out
}

/// Payloads come back as whole bytes; the padding decodes as the zeros the
/// decoder would supply anyway.
pub fn read_archive(bytes: &[u8]) -> Result<Archive, CodecError> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(CodecError::Archive("missing SRF1 magic".into()));
    }
    let flags = ArchiveFlags::from_byte(bytes[4])?;
    let mut pos = 5;
    let n = get_varint(bytes, &mut pos)?;
    let mut records = Vec::new();
    for _ in 0..n {
        let id_len = get_varint(bytes, &mut pos)?;
        let id = std::str::from_utf8(take(bytes, &mut pos, id_len)?)
            .map_err(|_| CodecError::Archive("record id is not UTF-8".into()))?
            .to_string();
        let len = get_varint(bytes, &mut pos)?;
        let payload = take(bytes, &mut pos, len)?.to_vec();
        records.push((id, Bitstream::from_bytes(payload)));
    }
    if pos != bytes.len() {
        return Err(CodecError::Archive(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(Archive { flags, records })
}
