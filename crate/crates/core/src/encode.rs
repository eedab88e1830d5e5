//! Feature vectors: the `n²·d` semantic encoding, the one-hot baseline,
//! scalar quantization and the L1 metric.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::grid::GridMap;

/// Bit count of the one-hot baseline the storage report compares against.
pub const DEFAULT_BASELINE_BITS: u64 = 245_760;

/// Tolerance for values slightly outside `[-1, 1]` before quantization.
const RANGE_SLACK: f64 = 1e-9;

/// Storage precision per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    B8,
    B16,
    /// Raw IEEE-754 single precision; lossless for `f32` values.
    B32,
}

impl BitDepth {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(Self::B8),
            16 => Ok(Self::B16),
            32 => Ok(Self::B32),
            other => Err(Error::InvalidParameter(format!("bits per dimension {other} not in {{8, 16, 32}}"))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Self::B8 => 8,
            Self::B16 => 16,
            Self::B32 => 32,
        }
    }

    pub fn bytes(self) -> usize {
        self.bits() as usize / 8
    }

    /// Largest integer code, `2^b - 1`.
    fn max_code(self) -> f64 {
        match self {
            Self::B8 => 255.0,
            Self::B16 => 65535.0,
            Self::B32 => u32::MAX as f64,
        }
    }

    /// Worst-case absolute round-trip error per dimension.
    pub fn max_error(self) -> f64 {
        match self {
            Self::B32 => 0.0,
            other => 1.0 / other.max_code(),
        }
    }
}

/// Spatial aggregation `n`, semantic dimensions `d`, and storage precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EncoderConfig {
    pub n: usize,
    pub d: usize,
    pub bits: BitDepth,
}

impl EncoderConfig {
    pub fn new(n: usize, d: usize, bits: BitDepth) -> Result<Self> {
        let c = Self { n, d, bits };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > usize::from(u16::MAX) {
            return Err(Error::InvalidParameter(format!("grid side {} outside [1, 65535]", self.n)));
        }
        if !(2..=3).contains(&self.d) {
            return Err(Error::InvalidParameter(format!("semantic dimensions {} not in {{2, 3}}", self.d)));
        }
        Ok(())
    }

    /// `n²·d`.
    pub fn dims(&self) -> usize {
        self.n * self.n * self.d
    }

    /// Packed payload size of one vector in bytes.
    pub fn payload_bytes(&self) -> usize {
        (self.dims() * self.bits.bits() as usize).div_ceil(8)
    }
}

/// Row-major concatenation of per-cell concept coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticFeatureVector {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl SemanticFeatureVector {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n * d {
            return Err(Error::DimensionMismatch { expected: n * n * d, actual: values.len() });
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || v.abs() > 1.0) {
            return Err(Error::OutOfRange(*v));
        }
        Ok(Self { n, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coordinates of grid cell `i` (row-major index).
    pub fn cell(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn l1(&self, other: &Self) -> Result<f64> {
        l1_distance(&self.values, &other.values)
    }
}

/// Encodes a grid by visiting its cells in row-major order and appending
/// each cell's concept coordinates. Queries and corpus vectors share this
/// path, which keeps their cells aligned.
pub fn encode_grid(grid: &GridMap, table: &EmbeddingTable) -> Result<SemanticFeatureVector> {
    let d = table.d();
    let mut values = Vec::with_capacity(grid.cells().len() * d);
    for &id in grid.cells() {
        let coords = table.coords(id).ok_or(Error::UnknownConcept(u32::from(id)))?;
        values.extend(coords.iter().map(|&v| f64::from(v)));
    }
    Ok(SemanticFeatureVector { n: grid.n(), d, values })
}

/// One bit per (cell, concept) pair, exactly one set per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineBinaryVector {
    n: usize,
    m: usize,
    words: Vec<u64>,
}

impl BaselineBinaryVector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Total bit length `n²·m`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Hamming distance to another baseline vector of the same shape.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: other.len() });
        }
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones() as usize).sum())
    }
}

/// One-hot encoding of a grid over `m` concepts: bit `i·m + id` is set for
/// cell `i`.
pub fn encode_baseline(grid: &GridMap, m: usize) -> Result<BaselineBinaryVector> {
    if m == 0 {
        return Err(Error::InvalidParameter("concept count must be positive".into()));
    }
    grid.check_ids(m)?;
    let n = grid.n();
    let mut words = vec![0u64; (n * n * m).div_ceil(64)];
    for (i, &id) in grid.cells().iter().enumerate() {
        let bit = i * m + usize::from(id);
        words[bit / 64] |= 1 << (bit % 64);
    }
    Ok(BaselineBinaryVector { n, m, words })
}

/// Scalar-quantized feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedVector {
    n: usize,
    d: usize,
    depth: BitDepth,
    /// For `B32` the raw `f32` bit patterns.
    codes: Vec<u32>,
}

fn encode_value(x: f64, depth: BitDepth) -> Result<u32> {
    if x.is_nan() || x.abs() > 1.0 + RANGE_SLACK {
        return Err(Error::OutOfRange(x));
    }
    let x = x.clamp(-1.0, 1.0);
    Ok(match depth {
        BitDepth::B32 => (x as f32).to_bits(),
        other => libm::round((x + 1.0) / 2.0 * other.max_code()) as u32,
    })
}

/// Inverse of the quantizer's affine map for one code.
#[inline(always)]
pub fn decode_code(code: u32, depth: BitDepth) -> f64 {
    match depth {
        BitDepth::B32 => f64::from(f32::from_bits(code)),
        other => f64::from(code) * (2.0 / other.max_code()) - 1.0,
    }
}

impl QuantizedVector {
    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Packs codes little-endian, `b/8` bytes each.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.codes.len() * self.depth.bytes());
        self.write_bytes(&mut out);
        out
    }

    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        match self.depth {
            BitDepth::B8 => out.extend(self.codes.iter().map(|&c| c as u8)),
            BitDepth::B16 => self.codes.iter().for_each(|&c| out.extend_from_slice(&(c as u16).to_le_bytes())),
            BitDepth::B32 => self.codes.iter().for_each(|&c| out.extend_from_slice(&c.to_le_bytes())),
        }
    }

    pub fn from_bytes(n: usize, d: usize, depth: BitDepth, bytes: &[u8]) -> Result<Self> {
        let len = n * n * d;
        if bytes.len() != len * depth.bytes() {
            return Err(Error::DimensionMismatch { expected: len * depth.bytes(), actual: bytes.len() });
        }
        let codes: Vec<u32> = match depth {
            BitDepth::B8 => bytes.iter().map(|&b| u32::from(b)).collect(),
            BitDepth::B16 => bytes.chunks_exact(2).map(|c| u32::from(u16::from_le_bytes([c[0], c[1]]))).collect(),
            BitDepth::B32 => bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect(),
        };
        if depth == BitDepth::B32 {
            if let Some(c) = codes.iter().find(|&&c| f32::from_bits(c).is_nan() || f32::from_bits(c).abs() > 1.0) {
                return Err(Error::OutOfRange(f64::from(f32::from_bits(*c))));
            }
        }
        Ok(Self { n, d, depth, codes })
    }
}

/// `code = round((x + 1) / 2 · (2^b − 1))`; 32 bits store the `f32` value.
/// Values up to 1e-9 outside `[-1, 1]` are clamped, anything further fails.
pub fn quantize(v: &SemanticFeatureVector, depth: BitDepth) -> Result<QuantizedVector> {
    let codes = v.values.iter().map(|&x| encode_value(x, depth)).collect::<Result<_>>()?;
    Ok(QuantizedVector { n: v.n, d: v.d, depth, codes })
}

pub fn dequantize(q: &QuantizedVector) -> SemanticFeatureVector {
    SemanticFeatureVector { n: q.n, d: q.d, values: q.codes.iter().map(|&c| decode_code(c, q.depth)).collect() }
}

const LANES: usize = 8;

#[inline(always)]
fn reduce(acc: [f64; LANES]) -> f64 {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// Manhattan distance. Accumulates in eight interleaved lanes; element `i`
/// of a full chunk goes to lane `i % 8`, tail element `r` to lane `r`.
/// [`l1_packed`] follows the same order, so the two agree bit for bit.
pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    let mut acc = [0.0; LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += (x[l] - y[l]).abs();
        }
    }
    for (l, (x, y)) in ra.iter().zip(rb).enumerate() {
        acc[l] += (x - y).abs();
    }
    Ok(reduce(acc))
}

#[inline(always)]
fn packed_lanes<const W: usize>(query: &[f64], payload: &[u8], decode: impl Fn(&[u8]) -> f64) -> f64 {
    let mut acc = [0.0; LANES];
    let (cq, cp) = (query.chunks_exact(LANES), payload.chunks_exact(LANES * W));
    let (rq, rp) = (cq.remainder(), cp.remainder());
    for (q, p) in cq.zip(cp) {
        for l in 0..LANES {
            acc[l] += (q[l] - decode(&p[l * W..(l + 1) * W])).abs();
        }
    }
    for (l, (q, p)) in rq.iter().zip(rp.chunks_exact(W)).enumerate() {
        acc[l] += (q - decode(p)).abs();
    }
    reduce(acc)
}

/// L1 distance between `query` and a packed little-endian payload,
/// decoding on the fly. Equals `l1_distance(query, dequantize(payload))`.
/// The caller guarantees `payload.len() == query.len() * depth.bytes()`.
pub fn l1_packed(query: &[f64], payload: &[u8], depth: BitDepth) -> f64 {
    debug_assert_eq!(payload.len(), query.len() * depth.bytes());
    match depth {
        BitDepth::B8 => {
            let step = 2.0 / depth.max_code();
            packed_lanes::<1>(query, payload, |b| f64::from(b[0]) * step - 1.0)
        }
        BitDepth::B16 => {
            let step = 2.0 / depth.max_code();
            packed_lanes::<2>(query, payload, |b| f64::from(u16::from_le_bytes([b[0], b[1]])) * step - 1.0)
        }
        BitDepth::B32 => packed_lanes::<4>(query, payload, |b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageReport {
    pub config: EncoderConfig,
    pub baseline_bits: u64,
    /// `n²·d·b`.
    pub bits_per_vector: u64,
    /// `bits_per_vector / baseline_bits`.
    pub ratio: f64,
}

pub fn storage_report(config: EncoderConfig, baseline_bits: u64) -> Result<StorageReport> {
    if config.n == 0 || config.d == 0 {
        return Err(Error::InvalidParameter("n and d must be positive".into()));
    }
    if baseline_bits == 0 {
        return Err(Error::InvalidParameter("baseline bit count must be positive".into()));
    }
    let bits_per_vector = (config.n * config.n * config.d) as u64 * u64::from(config.bits.bits());
    Ok(StorageReport { config, baseline_bits, bits_per_vector, ratio: bits_per_vector as f64 / baseline_bits as f64 })
}
