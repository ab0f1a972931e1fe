//! On-disk format: a fixed header followed by length-prefixed block records.
//!
//! ```text
//! "PZC1" | version u8 | radix u8 | n_exp u8 | scheme u8 | engine u8 | metric u8
//!        | probs r × f64 LE | threshold f64 LE | total_symbols u64 LE | block_count u32 LE
//! then block_count × ( byte_length u32 LE | body )
//! ```
//!
//! Block bodies are bit-packed MSB-first and zero-padded to a byte boundary.
//!
//! Fixed scheme body:
//! * retained count, `ceil(log2(N+1))` bits
//! * retained symbols, `ceil(log2 r)` bits each
//! * correction count in `ceil(log2(N+1))` bits, only when a correction
//!   record is shorter than 8 bits (otherwise the count follows from the length)
//! * correction records: `index-1` in `log2 N` bits, then `delta-1` in
//!   `ceil(log2(r-1))` bits when `r > 2`
//!
//! Adaptive scheme body: threshold as the 64 raw bits of an f64 (all ones =
//! nothing retained), payload length in `ceil(log2(N+1))` bits, payload symbols.

use crate::codec::{AdaptiveEncoding, Codec, Correction, FixedEncoding};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::sc::{EngineKind, SelectionMetric};
use crate::source::{is_prime, SourceModel, MAX_N_EXP};
use crate::transform::SymbolBlock;

pub const MAGIC: &[u8; 4] = b"PZC1";
pub const VERSION: u8 = 1;
/// Threshold bit pattern meaning "empty retained set".
pub const EMPTY_SENTINEL: u64 = u64::MAX;

fn bits_for(values: u64) -> u32 {
    // bits needed to represent 0..values-1
    if values <= 1 {
        0
    } else {
        64 - (values - 1).leading_zeros()
    }
}

/// Width of the retained-count field.
pub fn count_field_bits(n_exp: u32) -> u32 {
    bits_for((1u64 << n_exp) + 1)
}

fn symbol_bits(radix: u8) -> u32 {
    bits_for(radix as u64)
}

fn delta_bits(radix: u8) -> u32 {
    if radix > 2 {
        bits_for(radix as u64 - 1)
    } else {
        0
    }
}

fn record_bits(n_exp: u32, radix: u8) -> u32 {
    n_exp + delta_bits(radix)
}

/// MSB-first bit writer.
#[derive(Debug, Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    used: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, value: u64, bits: u32) {
        debug_assert!(bits == 64 || value >> bits == 0);
        for k in (0..bits).rev() {
            if self.used.is_multiple_of(8) {
                self.buf.push(0);
            }
            if (value >> k) & 1 == 1 {
                let last = self.buf.last_mut().unwrap();
                *last |= 0x80 >> (self.used % 8);
            }
            self.used += 1;
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.used as u64
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// MSB-first bit reader over a byte slice.
#[derive(Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() * 8 - self.pos
    }

    pub fn byte_offset(&self) -> usize {
        self.pos / 8
    }

    pub fn read(&mut self, bits: u32) -> Result<u64> {
        if (bits as usize) > self.remaining() {
            return Err(Error::malformed(self.byte_offset(), "truncated block body"));
        }
        let mut v = 0u64;
        for _ in 0..bits {
            let bit = (self.data[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u64;
            self.pos += 1;
        }
        Ok(v)
    }

    /// Accepts only fewer than 8 trailing zero bits.
    pub fn expect_padding(&mut self) -> Result<()> {
        let rest = self.remaining();
        if rest >= 8 {
            return Err(Error::malformed(
                self.byte_offset(),
                "trailing bytes in block body",
            ));
        }
        if self.read(rest as u32)? != 0 {
            return Err(Error::malformed(self.byte_offset(), "nonzero padding bits"));
        }
        Ok(())
    }
}

pub fn write_block_fixed(enc: &FixedEncoding, n_exp: u32, radix: u8) -> Vec<u8> {
    let mut w = BitWriter::new();
    let count_bits = count_field_bits(n_exp);
    w.write(enc.g_count as u64, count_bits);
    let sb = symbol_bits(radix);
    for &s in &enc.payload {
        w.write(s as u64, sb);
    }
    if record_bits(n_exp, radix) < 8 {
        w.write(enc.corrections.len() as u64, count_bits);
    }
    let db = delta_bits(radix);
    for c in &enc.corrections {
        w.write(c.index as u64 - 1, n_exp);
        if db > 0 {
            w.write(c.delta as u64 - 1, db);
        }
    }
    w.finish()
}

fn read_symbols(r: &mut BitReader, count: usize, radix: u8) -> Result<Vec<u8>> {
    let sb = symbol_bits(radix);
    (0..count)
        .map(|_| {
            let off = r.byte_offset();
            let s = r.read(sb)?;
            if s >= radix as u64 {
                return Err(Error::malformed(
                    off,
                    format!("symbol {s} outside radix {radix}"),
                ));
            }
            Ok(s as u8)
        })
        .collect()
}

fn read_count(r: &mut BitReader, n_exp: u32, what: &str) -> Result<usize> {
    let off = r.byte_offset();
    let v = r.read(count_field_bits(n_exp))?;
    if v > 1u64 << n_exp {
        return Err(Error::malformed(
            off,
            format!("{what} {v} exceeds block length"),
        ));
    }
    Ok(v as usize)
}

pub fn parse_block_fixed(body: &[u8], n_exp: u32, radix: u8) -> Result<FixedEncoding> {
    let n = 1u64 << n_exp;
    let mut r = BitReader::new(body);
    let g_count = read_count(&mut r, n_exp, "retained count")?;
    let payload = read_symbols(&mut r, g_count, radix)?;
    let rb = record_bits(n_exp, radix) as usize;
    let explicit = if rb < 8 {
        Some(read_count(&mut r, n_exp, "correction count")?)
    } else {
        None
    };
    let db = delta_bits(radix);
    let mut corrections = Vec::new();
    loop {
        match explicit {
            Some(k) if corrections.len() == k => break,
            None if r.remaining() < rb => break,
            _ => {}
        }
        let off = r.byte_offset();
        let idx = r.read(n_exp)?;
        if idx >= n {
            return Err(Error::malformed(
                off,
                format!("correction index {} ≥ N", idx + 1),
            ));
        }
        let delta = if db > 0 { r.read(db)? + 1 } else { 1 };
        if delta >= radix as u64 {
            return Err(Error::malformed(
                off,
                format!("correction delta {delta} ≥ radix"),
            ));
        }
        corrections.push(Correction {
            index: idx as usize + 1,
            delta: delta as u8,
        });
    }
    r.expect_padding()?;
    Ok(FixedEncoding {
        g_count,
        payload,
        corrections,
    })
}

pub fn write_block_adaptive(enc: &AdaptiveEncoding, n_exp: u32, radix: u8) -> Vec<u8> {
    let mut w = BitWriter::new();
    w.write(enc.threshold.map_or(EMPTY_SENTINEL, f64::to_bits), 64);
    w.write(enc.payload.len() as u64, count_field_bits(n_exp));
    let sb = symbol_bits(radix);
    for &s in &enc.payload {
        w.write(s as u64, sb);
    }
    w.finish()
}

pub fn parse_block_adaptive(body: &[u8], n_exp: u32, radix: u8) -> Result<AdaptiveEncoding> {
    let mut r = BitReader::new(body);
    let bits = r.read(64)?;
    let threshold = if bits == EMPTY_SENTINEL {
        None
    } else {
        let t = f64::from_bits(bits);
        if t.is_nan() {
            return Err(Error::malformed(0, "threshold is NaN"));
        }
        Some(t)
    };
    let len = read_count(&mut r, n_exp, "payload length")?;
    let payload = read_symbols(&mut r, len, radix)?;
    r.expect_padding()?;
    if threshold.is_none() && !payload.is_empty() {
        return Err(Error::malformed(
            8,
            "payload present with empty-set threshold",
        ));
    }
    Ok(AdaptiveEncoding { threshold, payload })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    #[default]
    Fixed,
    Adaptive,
}

impl Scheme {
    pub fn code(self) -> u8 {
        match self {
            Scheme::Fixed => 0,
            Scheme::Adaptive => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Scheme::Fixed),
            1 => Some(Scheme::Adaptive),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Fixed => "fixed",
            Scheme::Adaptive => "adaptive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileHeader {
    pub model: SourceModel,
    pub n_exp: u32,
    pub scheme: Scheme,
    pub engine: EngineKind,
    pub metric: SelectionMetric,
    /// Fixed-scheme threshold on the metric's scale; zero for adaptive.
    pub threshold: f64,
    pub total_symbols: u64,
    pub block_count: u32,
}

impl FileHeader {
    pub fn encoded_len(&self) -> usize {
        4 + 6 + 8 * self.model.radix() as usize + 8 + 8 + 4
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.model.radix());
        out.push(self.n_exp as u8);
        out.push(self.scheme.code());
        out.push(self.engine.code());
        out.push(self.metric.code());
        for p in self.model.probs() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out.extend_from_slice(&self.threshold.to_le_bytes());
        out.extend_from_slice(&self.total_symbols.to_le_bytes());
        out.extend_from_slice(&self.block_count.to_le_bytes());
    }

    /// Parses a header, returning it with the number of bytes consumed.
    pub fn parse(data: &[u8]) -> Result<(Self, usize)> {
        let take = |at: usize, len: usize| -> Result<&[u8]> {
            data.get(at..at + len)
                .ok_or_else(|| Error::malformed(at, "truncated file header"))
        };
        if take(0, 4)? != MAGIC {
            return Err(Error::malformed(0, "bad magic"));
        }
        let fixed = take(4, 6)?;
        if fixed[0] != VERSION {
            return Err(Error::malformed(
                4,
                format!("unsupported version {}", fixed[0]),
            ));
        }
        let radix = fixed[1];
        if !is_prime(radix as u32) {
            return Err(Error::malformed(5, format!("radix {radix} is not prime")));
        }
        let n_exp = fixed[2] as u32;
        if !(1..=MAX_N_EXP).contains(&n_exp) {
            return Err(Error::malformed(
                6,
                format!("block exponent {n_exp} out of range"),
            ));
        }
        let scheme =
            Scheme::from_code(fixed[3]).ok_or_else(|| Error::malformed(7, "unknown scheme"))?;
        let engine =
            EngineKind::from_code(fixed[4]).ok_or_else(|| Error::malformed(8, "unknown engine"))?;
        let metric = SelectionMetric::from_code(fixed[5])
            .ok_or_else(|| Error::malformed(9, "unknown metric"))?;
        let mut at = 10;
        let mut probs = Vec::with_capacity(radix as usize);
        for _ in 0..radix {
            probs.push(f64::from_le_bytes(take(at, 8)?.try_into().unwrap()));
            at += 8;
        }
        let model = SourceModel::new(probs).map_err(|e| Error::malformed(10, e.to_string()))?;
        let threshold = f64::from_le_bytes(take(at, 8)?.try_into().unwrap());
        let total_symbols = u64::from_le_bytes(take(at + 8, 8)?.try_into().unwrap());
        let block_count = u32::from_le_bytes(take(at + 16, 4)?.try_into().unwrap());
        let n = 1u64 << n_exp;
        let cap = block_count as u64 * n;
        if total_symbols > cap || (block_count > 0 && total_symbols <= cap - n) {
            return Err(Error::malformed(
                at + 8,
                format!("{total_symbols} symbols inconsistent with {block_count} blocks of {n}"),
            ));
        }
        let header = FileHeader {
            model,
            n_exp,
            scheme,
            engine,
            metric,
            threshold,
            total_symbols,
            block_count,
        };
        Ok((header, at + 20))
    }
}

/// Settings for compressing a whole file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileParams {
    pub model: SourceModel,
    pub n_exp: u32,
    pub scheme: Scheme,
    pub engine: EngineKind,
    pub metric: SelectionMetric,
    /// Fixed-scheme threshold on the metric's scale.
    pub threshold: f64,
}

/// Per-file summary of a compression run.
#[derive(Debug, Clone, PartialEq)]
pub struct FileReport {
    pub blocks: usize,
    pub total_symbols: u64,
    /// Mean analytic rate over blocks (fixed scheme only).
    pub mean_analytic_rate: Option<f64>,
    pub container_bytes: usize,
}

/// Radix-2 inputs are read as bits, MSB-first; other radices take one
/// symbol per byte.
pub fn bytes_to_symbols(data: &[u8], radix: u8) -> Result<Vec<u8>> {
    if radix == 2 {
        Ok(data
            .iter()
            .flat_map(|&b| (0..8).rev().map(move |k| (b >> k) & 1))
            .collect())
    } else {
        if let Some(pos) = data.iter().position(|&b| b >= radix) {
            return Err(Error::param(format!(
                "input byte {} at offset {pos} is not a radix-{radix} symbol",
                data[pos]
            )));
        }
        Ok(data.to_vec())
    }
}

pub fn symbols_to_bytes(symbols: &[u8], radix: u8) -> Result<Vec<u8>> {
    if radix == 2 {
        if !symbols.len().is_multiple_of(8) {
            return Err(Error::malformed(
                0,
                "bit count is not a whole number of bytes",
            ));
        }
        Ok(symbols
            .chunks_exact(8)
            .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b))
            .collect())
    } else {
        Ok(symbols.to_vec())
    }
}

pub fn compress_bytes(
    input: &[u8],
    params: &FileParams,
    exec: Exec,
) -> Result<(Vec<u8>, FileReport)> {
    let radix = params.model.radix();
    if !(1..=MAX_N_EXP).contains(&params.n_exp) {
        return Err(Error::param(format!(
            "block exponent must be in 1..={MAX_N_EXP}"
        )));
    }
    params.metric.check_engine(params.engine)?;
    if params.threshold.is_nan() {
        return Err(Error::param("threshold is NaN"));
    }
    let symbols = bytes_to_symbols(input, radix)?;
    let n = 1usize << params.n_exp;
    let block_count = symbols.len().div_ceil(n);
    let fill = params.model.most_probable();

    // a codec per worker; blocks are independent
    let encoded: Vec<Result<(Vec<u8>, Option<f64>)>> = par::map_with(
        exec,
        block_count,
        || Codec::new(&params.model, params.n_exp, params.engine, params.metric),
        |codec, b| {
            let codec = codec.as_mut().map_err(|e| Error::param(e.to_string()))?;
            let start = b * n;
            let end = (start + n).min(symbols.len());
            let mut chunk = symbols[start..end].to_vec();
            chunk.resize(n, fill);
            let x = SymbolBlock::from_parts(radix, params.n_exp, chunk);
            match params.scheme {
                Scheme::Fixed => {
                    let enc = codec.encode_fixed(&x, params.threshold)?;
                    let rate = crate::codec::analytic_rate(
                        params.n_exp,
                        radix,
                        enc.g_count,
                        enc.corrections.len(),
                    );
                    Ok((write_block_fixed(&enc, params.n_exp, radix), Some(rate)))
                }
                Scheme::Adaptive => {
                    let enc = codec.encode_adaptive(&x)?;
                    Ok((write_block_adaptive(&enc, params.n_exp, radix), None))
                }
            }
        },
    );

    let header = FileHeader {
        model: params.model.clone(),
        n_exp: params.n_exp,
        scheme: params.scheme,
        engine: params.engine,
        metric: params.metric,
        threshold: match params.scheme {
            Scheme::Fixed => params.threshold,
            Scheme::Adaptive => 0.0,
        },
        total_symbols: symbols.len() as u64,
        block_count: u32::try_from(block_count).map_err(|_| Error::param("too many blocks"))?,
    };
    let mut out = Vec::new();
    header.write_to(&mut out);
    let mut rate_sum = 0.0;
    for item in encoded {
        let (body, rate) = item?;
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(&body);
        rate_sum += rate.unwrap_or(0.0);
    }
    let mean_analytic_rate = match params.scheme {
        Scheme::Fixed if block_count > 0 => Some(rate_sum / block_count as f64),
        _ => None,
    };
    let report = FileReport {
        blocks: block_count,
        total_symbols: symbols.len() as u64,
        mean_analytic_rate,
        container_bytes: out.len(),
    };
    Ok((out, report))
}

/// Malformed-stream error tagged with the block index and absolute offset.
fn in_block(err: Error, block: usize, base: usize) -> Error {
    match err {
        Error::MalformedStream { offset, reason } => Error::MalformedStream {
            offset: base + offset,
            reason: format!("block {block}: {reason}"),
        },
        Error::NumericDegeneracy(reason) => Error::MalformedStream {
            offset: base,
            reason: format!("block {block}: {reason}"),
        },
        other => other,
    }
}

pub fn decompress_bytes(data: &[u8], exec: Exec) -> Result<Vec<u8>> {
    let (h, mut at) = FileHeader::parse(data)?;
    let radix = h.model.radix();
    h.metric
        .check_engine(h.engine)
        .map_err(|e| Error::malformed(9, e.to_string()))?;

    let mut bodies = Vec::with_capacity(h.block_count as usize);
    for b in 0..h.block_count as usize {
        let len_bytes = data
            .get(at..at + 4)
            .ok_or_else(|| Error::malformed(at, format!("block {b}: missing length prefix")))?;
        let len = u32::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        let body = data
            .get(at + 4..at + 4 + len)
            .ok_or_else(|| Error::malformed(at + 4, format!("block {b}: truncated body")))?;
        bodies.push((at + 4, body));
        at += 4 + len;
    }
    if at != data.len() {
        return Err(Error::malformed(at, "trailing bytes after last block"));
    }

    let decoded: Vec<Result<Vec<u8>>> = par::map_with(
        exec,
        bodies.len(),
        || Codec::new(&h.model, h.n_exp, h.engine, h.metric),
        |codec, b| {
            let codec = codec
                .as_mut()
                .map_err(|e| Error::malformed(0, e.to_string()))?;
            let (base, body) = bodies[b];
            let x = match h.scheme {
                Scheme::Fixed => {
                    let enc = parse_block_fixed(body, h.n_exp, radix)
                        .map_err(|e| in_block(e, b, base))?;
                    codec.decode_fixed(&enc, h.threshold)
                }
                Scheme::Adaptive => {
                    let enc = parse_block_adaptive(body, h.n_exp, radix)
                        .map_err(|e| in_block(e, b, base))?;
                    codec.decode_adaptive(&enc)
                }
            }
            .map_err(|e| in_block(e, b, base))?;
            Ok(x.into_symbols())
        },
    );

    let mut symbols = Vec::with_capacity(h.total_symbols as usize);
    for block in decoded {
        symbols.extend_from_slice(&block?);
    }
    symbols.truncate(h.total_symbols as usize);
    symbols_to_bytes(&symbols, radix)
}
