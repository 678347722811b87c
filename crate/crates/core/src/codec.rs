//! Variable-to-fixed parsing and index streams.
//!
//! A segment grows one letter at a time along the prefix-type automaton of
//! the dictionary. It ends at a terminal type once the next letter would
//! push the empirical lossy rate past the threshold (that letter is returned
//! to the stream), or as soon as it reaches a capped type. The segment is
//! then replaced by the lowest-index codeword of its type within distortion
//! `D`.
//!
//! Encoded stream, little-endian header then indices packed MSB-first:
//!
//! ```text
//! dictionary crc32 u32 | index width u16 | segment count u64 | indices
//! ```

use std::io::{Read, Write};

use serde::Serialize;

use crate::dictionary::{Dictionary, NONE};
use crate::error::{Error, Result};

/// Symbol stream with one letter of pushback.
pub struct SymbolReader<I> {
    inner: I,
    pending: Option<u8>,
    consumed: u64,
}

impl<I: Iterator<Item = u8>> SymbolReader<I> {
    pub fn new(inner: I) -> Self {
        SymbolReader {
            inner,
            pending: None,
            consumed: 0,
        }
    }

    pub fn next_symbol(&mut self) -> Option<u8> {
        let s = self.pending.take().or_else(|| self.inner.next())?;
        self.consumed += 1;
        Some(s)
    }

    /// Return the last symbol read to the stream.
    pub fn unread(&mut self, s: u8) {
        debug_assert!(self.pending.is_none());
        self.pending = Some(s);
        self.consumed -= 1;
    }

    /// Symbols consumed by completed reads.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    /// True once no symbol remains.
    pub fn is_exhausted(&mut self) -> bool {
        match self.pending {
            Some(_) => false,
            None => match self.inner.next() {
                Some(s) => {
                    self.pending = Some(s);
                    false
                }
                None => true,
            },
        }
    }
}

impl<'a> SymbolReader<std::iter::Copied<std::slice::Iter<'a, u8>>> {
    pub fn from_slice(x: &'a [u8]) -> Self {
        SymbolReader::new(x.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParseResult {
    pub segment_length: usize,
    pub codeword_index: u64,
    /// Per-symbol distortion between the segment and its codeword.
    pub realized_distortion: f64,
    /// The same distortion as an integer total on the dictionary's grid.
    pub total_weight: u64,
}

/// Reusable parser over one dictionary.
pub struct Parser<'d> {
    dict: &'d Dictionary,
    segment: Vec<u8>,
}

impl<'d> Parser<'d> {
    pub fn new(dict: &'d Dictionary) -> Self {
        Parser {
            dict,
            segment: Vec::with_capacity(dict.max_len()),
        }
    }

    /// Source letters of the last parsed segment.
    pub fn segment(&self) -> &[u8] {
        &self.segment
    }

    pub fn parse<I: Iterator<Item = u8>>(&mut self, r: &mut SymbolReader<I>) -> Result<ParseResult> {
        let d = self.dict;
        let nodes = &d.table.nodes;
        let k = d.spec.source_size();
        self.segment.clear();
        let mut at = 0usize;
        loop {
            let node = &nodes[at];
            if node.capped {
                break;
            }
            let Some(a) = r.next_symbol() else {
                // a terminal type may end the input
                if at != 0 && node.group != NONE {
                    break;
                }
                return Err(Error::StreamExhausted {
                    read: self.segment.len(),
                });
            };
            if a as usize >= k {
                return Err(Error::SymbolOutOfRange {
                    symbol: a as u32,
                    alphabet: k,
                });
            }
            let child = node.children[a as usize];
            if child == NONE {
                r.unread(a);
                break;
            }
            self.segment.push(a);
            at = child as usize;
        }
        let gi = nodes[at].group;
        if at == 0 || gi == NONE {
            return Err(Error::Integrity(format!(
                "parse stopped at length {} outside every dictionary type",
                self.segment.len()
            )));
        }
        let index = d.lookup(gi as usize, &self.segment).ok_or_else(|| {
            Error::Integrity(format!(
                "no codeword of type {:?} within D of the segment",
                d.groups[gi as usize].type_class.counts()
            ))
        })?;
        let codeword = d.codeword(index)?;
        let n = self.segment.len();
        let total_weight = d.grid.total_weight(&self.segment, codeword);
        Ok(ParseResult {
            segment_length: n,
            codeword_index: index,
            realized_distortion: d.grid.distortion(&self.segment, codeword),
            total_weight,
        })
    }
}

/// Parse one segment from the front of `r`.
pub fn parse_first<I: Iterator<Item = u8>>(r: &mut SymbolReader<I>, d: &Dictionary) -> Result<ParseResult> {
    Parser::new(d).parse(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub index_width: u32,
    pub indices: Vec<u64>,
    /// Source offset where each segment starts, plus the total consumed.
    pub boundaries: Vec<u64>,
    pub results: Vec<ParseResult>,
}

impl Encoded {
    /// Indices packed MSB-first at `index_width` bits each.
    pub fn bits(&self) -> Vec<u8> {
        pack_indices(&self.indices, self.index_width)
    }

    pub fn bit_len(&self) -> u64 {
        self.indices.len() as u64 * self.index_width as u64
    }
}

/// Parse `count` consecutive segments.
pub fn encode_stream<I: Iterator<Item = u8>>(
    r: &mut SymbolReader<I>,
    d: &Dictionary,
    count: usize,
) -> Result<Encoded> {
    let mut p = Parser::new(d);
    let mut out = Encoded {
        index_width: d.index_width(),
        indices: Vec::with_capacity(count),
        boundaries: Vec::with_capacity(count + 1),
        results: Vec::with_capacity(count),
    };
    for _ in 0..count {
        out.boundaries.push(r.consumed());
        let res = p.parse(r)?;
        out.indices.push(res.codeword_index);
        out.results.push(res);
    }
    out.boundaries.push(r.consumed());
    Ok(out)
}

/// Parse segments until the input runs out. Returns the encoding and the
/// number of trailing symbols that do not form a complete segment.
pub fn encode_all(x: &[u8], d: &Dictionary) -> Result<(Encoded, usize)> {
    let mut r = SymbolReader::from_slice(x);
    let mut p = Parser::new(d);
    let mut out = Encoded {
        index_width: d.index_width(),
        indices: Vec::new(),
        boundaries: vec![0],
        results: Vec::new(),
    };
    while !r.is_exhausted() {
        match p.parse(&mut r) {
            Ok(res) => {
                out.indices.push(res.codeword_index);
                out.results.push(res);
                out.boundaries.push(r.consumed());
            }
            Err(Error::StreamExhausted { read }) => return Ok((out, read)),
            Err(e) => return Err(e),
        }
    }
    Ok((out, 0))
}

pub fn pack_indices(indices: &[u64], width: u32) -> Vec<u8> {
    let total = indices.len() * width as usize;
    let mut out = vec![0u8; total.div_ceil(8)];
    let mut pos = 0usize;
    for &v in indices {
        for b in (0..width).rev() {
            if (v >> b) & 1 == 1 {
                out[pos / 8] |= 0x80 >> (pos % 8);
            }
            pos += 1;
        }
    }
    out
}

/// Inverse of [`pack_indices`]; `bit_len` must be a multiple of `width`.
pub fn unpack_indices(bits: &[u8], bit_len: u64, width: u32) -> Result<Vec<u64>> {
    if bit_len > bits.len() as u64 * 8 {
        return Err(Error::Format(format!(
            "{bit_len} bits requested from {} bytes",
            bits.len()
        )));
    }
    if width == 0 {
        return Err(Error::Format("index width is zero".into()));
    }
    if bit_len % width as u64 != 0 {
        return Err(Error::Format(format!(
            "bit length {bit_len} is not a multiple of the index width {width}"
        )));
    }
    let count = (bit_len / width as u64) as usize;
    let mut out = Vec::with_capacity(count);
    let mut pos = 0usize;
    for _ in 0..count {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | ((bits[pos / 8] >> (7 - pos % 8)) & 1) as u64;
            pos += 1;
        }
        out.push(v);
    }
    Ok(out)
}

/// Map indices back to codewords.
pub fn decode(indices: &[u64], d: &Dictionary) -> Result<Vec<Vec<u8>>> {
    indices.iter().map(|&i| d.codeword(i).map(<[u8]>::to_vec)).collect()
}

/// Decode a packed bit sequence of `bit_len` bits.
pub fn decode_bits(bits: &[u8], bit_len: u64, d: &Dictionary) -> Result<Vec<Vec<u8>>> {
    decode(&unpack_indices(bits, bit_len, d.index_width())?, d)
}

pub fn write_stream<W: Write>(w: &mut W, d: &Dictionary, indices: &[u64]) -> Result<()> {
    let width = d.index_width();
    let mut buf = Vec::with_capacity(14 + (indices.len() * width as usize).div_ceil(8));
    buf.extend_from_slice(&d.checksum().to_le_bytes());
    buf.extend_from_slice(&(width as u16).to_le_bytes());
    buf.extend_from_slice(&(indices.len() as u64).to_le_bytes());
    buf.extend_from_slice(&pack_indices(indices, width));
    w.write_all(&buf)
        .map_err(|e| Error::Format(format!("writing stream: {e}")))
}

/// Read an encoded stream, checking it belongs to `d`.
pub fn read_stream<R: Read>(r: &mut R, d: &Dictionary) -> Result<Vec<u64>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| Error::Format(format!("reading stream: {e}")))?;
    if buf.len() < 14 {
        return Err(Error::Format("stream header truncated".into()));
    }
    let crc = u32::from_le_bytes(buf[0..4].try_into().unwrap());
    let expected = d.checksum();
    if crc != expected {
        return Err(Error::Integrity(format!(
            "stream was encoded with dictionary {crc:08x}, this one is {expected:08x}"
        )));
    }
    let width = u16::from_le_bytes(buf[4..6].try_into().unwrap()) as u32;
    if width != d.index_width() {
        return Err(Error::Format(format!(
            "index width {width} disagrees with the dictionary ({})",
            d.index_width()
        )));
    }
    let count = u64::from_le_bytes(buf[6..14].try_into().unwrap());
    let body = &buf[14..];
    let bit_len = count
        .checked_mul(width as u64)
        .filter(|&b| b.div_ceil(8) == body.len() as u64)
        .ok_or_else(|| {
            Error::Format(format!(
                "{count} indices of {width} bits do not fit {} payload bytes",
                body.len()
            ))
        })?;
    let indices = unpack_indices(body, bit_len, width)?;
    let size = d.len();
    if let Some(&index) = indices.iter().find(|&&i| i >= size) {
        return Err(Error::IndexOutOfRange { index, size });
    }
    Ok(indices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_packing_round_trips() {
        let v = vec![5u64, 0, 7, 3, 1];
        let b = pack_indices(&v, 3);
        assert_eq!(b, vec![0b1010_0011, 0b1011_0010]);
        assert_eq!(unpack_indices(&b, 15, 3).unwrap(), v);
        assert!(unpack_indices(&b, 14, 3).is_err());
        assert!(unpack_indices(&[], 0, 3).unwrap().is_empty());
    }

    #[test]
    fn pushback() {
        let mut r = SymbolReader::from_slice(&[1, 2]);
        assert_eq!(r.next_symbol(), Some(1));
        r.unread(1);
        assert_eq!(r.consumed(), 0);
        assert_eq!(r.next_symbol(), Some(1));
        assert_eq!(r.next_symbol(), Some(2));
        assert!(r.is_exhausted());
        assert_eq!(r.next_symbol(), None);
    }
}
