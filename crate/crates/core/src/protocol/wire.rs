//! Byte encodings of protocol payloads.
//!
//! All integers and reals are little-endian. Strings are a `u32` byte length
//! followed by UTF-8. Vector, threshold and match payloads are headerless
//! fixed-width rows, so their size is exactly linear in the row count:
//!
//! * private base: `(gram, f64 frequency)*`
//! * shared base: `gram*`
//! * vector set: `(u64 id, f64 × k)*`
//! * threshold set: `(u64 id, f64 threshold)*`
//! * match report: `(u64 id_a, u64 id_b, f64 distance)*`

use crate::embedding::{EmbeddedVector, GramBase, ThresholdSet};
use crate::error::{Error, Result};
use crate::mining::ScoredGram;
use crate::records::RecordId;
use crate::strings::Gram;

use super::{MatchPair, MatchResult};

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn done(&self) -> bool {
        self.pos >= self.buf.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Wire("truncated payload".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
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

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::Wire(e.to_string()))
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_private_base(grams: &[ScoredGram]) -> Vec<u8> {
    let mut out = Vec::new();
    for g in grams {
        put_str(&mut out, g.gram.as_str());
        out.extend_from_slice(&g.noisy_frequency.to_le_bytes());
    }
    out
}

pub fn decode_private_base(buf: &[u8]) -> Result<Vec<ScoredGram>> {
    let mut r = Reader::new(buf);
    let mut out = Vec::new();
    while !r.done() {
        let g = r.string()?;
        out.push(ScoredGram::new(g, r.f64()?));
    }
    Ok(out)
}

pub fn encode_shared_base(base: &GramBase) -> Vec<u8> {
    let mut out = Vec::new();
    for g in base.grams() {
        put_str(&mut out, g.as_str());
    }
    out
}

pub fn decode_shared_base(buf: &[u8]) -> Result<GramBase> {
    let mut r = Reader::new(buf);
    let mut grams = Vec::new();
    while !r.done() {
        grams.push(Gram::new(r.string()?));
    }
    GramBase::new(grams)
}

pub fn encode_vectors(vectors: &[EmbeddedVector]) -> Vec<u8> {
    let k = vectors.first().map_or(0, EmbeddedVector::dim);
    let mut out = Vec::with_capacity(vectors.len() * 8 * (k + 1));
    for v in vectors {
        out.extend_from_slice(&v.record_id.0.to_le_bytes());
        for c in &v.coordinates {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

pub fn decode_vectors(buf: &[u8], k: usize) -> Result<Vec<EmbeddedVector>> {
    let row = 8 * (k + 1);
    if !buf.len().is_multiple_of(row) {
        return Err(Error::Wire(format!(
            "vector payload of {} bytes is not a multiple of {row}",
            buf.len()
        )));
    }
    let mut r = Reader::new(buf);
    let mut out = Vec::with_capacity(buf.len() / row);
    while !r.done() {
        let id = RecordId(r.u64()?);
        let coordinates = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        out.push(EmbeddedVector {
            record_id: id,
            coordinates,
        });
    }
    Ok(out)
}

/// The edit budget is a protocol parameter and is not transmitted.
pub fn encode_thresholds(set: &ThresholdSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(set.len() * 16);
    for (id, t) in set.ids.iter().zip(&set.values) {
        out.extend_from_slice(&id.0.to_le_bytes());
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

pub fn decode_thresholds(buf: &[u8], ed: usize) -> Result<ThresholdSet> {
    let mut r = Reader::new(buf);
    let (mut ids, mut values) = (Vec::new(), Vec::new());
    while !r.done() {
        ids.push(RecordId(r.u64()?));
        values.push(r.f64()?);
    }
    Ok(ThresholdSet { ed, ids, values })
}

pub fn encode_matches(result: &MatchResult) -> Vec<u8> {
    let mut out = Vec::with_capacity(result.pairs.len() * 24);
    for p in &result.pairs {
        out.extend_from_slice(&p.id_a.0.to_le_bytes());
        out.extend_from_slice(&p.id_b.0.to_le_bytes());
        out.extend_from_slice(&p.distance.to_le_bytes());
    }
    out
}

pub fn decode_matches(buf: &[u8]) -> Result<MatchResult> {
    let mut r = Reader::new(buf);
    let mut pairs = Vec::new();
    while !r.done() {
        pairs.push(MatchPair {
            id_a: RecordId(r.u64()?),
            id_b: RecordId(r.u64()?),
            distance: r.f64()?,
        });
    }
    Ok(MatchResult { pairs })
}
