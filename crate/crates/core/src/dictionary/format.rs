//! Binary dictionary file.
//!
//! Little-endian throughout:
//!
//! ```text
//! "VFLD" | version u16 | |X| u16 | |X^| u16 | D num u64 | D den u64
//! | gamma f64 | upsilon f64 | M u64 | M_actual u64 | seed u64
//! | n_cap u16 | member_cap u64 | d(x, y) f64 * |X||X^|
//! | entries * M_actual | crc32 u32
//! entry = n u16 | counts u32 * |X| | codeword, ceil(log2 |X^|) bits per symbol,
//!         LSB first, padded to a byte
//! ```

use std::path::Path;

use super::{Dictionary, ScanLimits, TypeGroup};
use crate::error::{Error, Result};
use crate::rd::DistortionSpec;
use crate::types::{RateCache, TypeClass};

pub const MAGIC: &[u8; 4] = b"VFLD";
pub const FORMAT_VERSION: u16 = 1;

fn symbol_bits(cols: usize) -> u32 {
    if cols <= 1 {
        0
    } else {
        usize::BITS - (cols - 1).leading_zeros()
    }
}

pub fn to_bytes(d: &Dictionary) -> Vec<u8> {
    let k = d.spec.source_size();
    let cols = d.spec.reproduction_size();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(k as u16).to_le_bytes());
    out.extend_from_slice(&(cols as u16).to_le_bytes());
    out.extend_from_slice(&d.grid.level.num.to_le_bytes());
    out.extend_from_slice(&d.grid.level.den.to_le_bytes());
    out.extend_from_slice(&d.gamma.to_le_bytes());
    out.extend_from_slice(&d.upsilon.to_le_bytes());
    out.extend_from_slice(&d.budget.to_le_bytes());
    out.extend_from_slice(&d.len().to_le_bytes());
    out.extend_from_slice(&d.seed.to_le_bytes());
    out.extend_from_slice(&(d.limits.n_cap as u16).to_le_bytes());
    out.extend_from_slice(&d.limits.member_cap.to_le_bytes());
    for v in d.spec.matrix() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let bits = symbol_bits(cols) as usize;
    for e in d.entries() {
        out.extend_from_slice(&(e.n as u16).to_le_bytes());
        for &c in e.type_class.counts() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        let mut packed = vec![0u8; (e.n * bits).div_ceil(8)];
        for (j, &y) in e.codeword.iter().enumerate() {
            for b in 0..bits {
                if (y >> b) & 1 == 1 {
                    let pos = j * bits + b;
                    packed[pos / 8] |= 1 << (pos % 8);
                }
            }
        }
        out.extend_from_slice(&packed);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!("unexpected end of data at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// CRC32 stored in a serialized dictionary.
pub(crate) fn stored_crc(bytes: &[u8]) -> Option<u32> {
    let n = bytes.len();
    (n >= 4).then(|| u32::from_le_bytes(bytes[n - 4..].try_into().unwrap()))
}

pub fn from_bytes(bytes: &[u8]) -> Result<Dictionary> {
    if bytes.len() < 6 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a dictionary file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Version(version));
    }
    let stored = stored_crc(bytes).expect("length checked");
    let body = &bytes[..bytes.len() - 4];
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let mut r = Reader { buf: body, pos: 6 };
    let k = r.u16()? as usize;
    let cols = r.u16()? as usize;
    let num = r.u64()?;
    let den = r.u64()?;
    if den == 0 {
        return Err(Error::Format("zero denominator".into()));
    }
    let gamma = r.f64()?;
    let upsilon = r.f64()?;
    let budget = r.u64()?;
    let size = r.u64()?;
    let seed = r.u64()?;
    let n_cap = r.u16()? as usize;
    let member_cap = r.u64()?;
    let mut matrix = Vec::with_capacity(k * cols);
    for _ in 0..k * cols {
        matrix.push(r.f64()?);
    }
    let spec = DistortionSpec::from_flat(matrix, k, cols, num as f64 / den as f64)?;
    let bits = symbol_bits(cols) as usize;
    let mask = (1u16 << bits) - 1;
    let mut groups: Vec<TypeGroup> = Vec::new();
    for index in 0..size {
        let n = r.u16()? as usize;
        let mut counts = Vec::with_capacity(k);
        for _ in 0..k {
            counts.push(r.u32()?);
        }
        let packed = r.take((n * bits).div_ceil(8))?;
        let codeword: Vec<u8> = (0..n)
            .map(|j| {
                let mut v = 0u16;
                for b in 0..bits {
                    let pos = j * bits + b;
                    v |= (((packed[pos / 8] >> (pos % 8)) & 1) as u16) << b;
                }
                (v & mask) as u8
            })
            .collect();
        match groups.last_mut() {
            Some(g) if g.type_class.counts() == counts.as_slice() => g.codewords.push(codeword),
            _ => {
                let t = TypeClass::new(counts)?;
                if t.n() != n {
                    return Err(Error::Format(format!("entry {index}: length {n} disagrees with its type")));
                }
                groups.push(TypeGroup {
                    type_class: t,
                    first_index: index,
                    codewords: vec![codeword],
                    capped: false,
                });
            }
        }
    }
    if r.pos != body.len() {
        return Err(Error::Format(format!("{} trailing bytes", body.len() - r.pos)));
    }
    let rates = RateCache::new(spec.clone());
    Dictionary::assemble(
        gamma,
        spec,
        upsilon,
        budget,
        seed,
        ScanLimits { n_cap, member_cap },
        groups,
        &rates,
    )
}

pub fn save(d: &Dictionary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(d)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Dictionary> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
