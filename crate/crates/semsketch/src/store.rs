//! Append-only on-disk store of quantized feature vectors with exact L1
//! top-k search by linear scan.
//!
//! Layout (little-endian): magic `SVS1`, `u16` version, `u16` n, `u8` d,
//! `u8` bits, `d × f32` embedding scales, `u64` count, then `count` records
//! of `u64` segment id followed by `⌈n²·d·b/8⌉` payload bytes.
//!
//! Readers trust the header count: bytes past the last counted record
//! belong to an append still in flight and are ignored.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use semsketch_core::encode::{dequantize, l1_packed, quantize};
use semsketch_core::knn::TopK;
use semsketch_core::{BitDepth, EncoderConfig, QuantizedVector, QueryResult, SemanticFeatureVector};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SVS1";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StoreHeader {
    pub config: EncoderConfig,
    /// Per-dimension scale of the embedding table the vectors were built with.
    pub scale: Vec<f32>,
    pub count: u64,
}

impl StoreHeader {
    fn count_offset(d: usize) -> u64 {
        (4 + 2 + 2 + 1 + 1 + 4 * d) as u64
    }

    pub fn encoded_len(&self) -> u64 {
        Self::count_offset(self.config.d) + 8
    }

    /// Bytes per record: segment id plus packed payload.
    pub fn record_len(&self) -> u64 {
        8 + self.config.payload_bytes() as u64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len() as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.config.n as u16).to_le_bytes());
        out.push(self.config.d as u8);
        out.push(self.config.bits.bits() as u8);
        for s in &self.scale {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out.extend_from_slice(&self.count.to_le_bytes());
        out
    }

    fn read_from(reader: &mut impl Read) -> Result<Self> {
        let truncated = |_| Error::Format("store header truncated".into());
        let mut fixed = [0u8; 10];
        reader.read_exact(&mut fixed).map_err(truncated)?;
        if &fixed[..4] != MAGIC {
            return Err(Error::Format("not a vector store (bad magic)".into()));
        }
        let version = u16::from_le_bytes([fixed[4], fixed[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported store version {version}")));
        }
        let n = usize::from(u16::from_le_bytes([fixed[6], fixed[7]]));
        let d = usize::from(fixed[8]);
        let bits = BitDepth::from_bits(u32::from(fixed[9]))?;
        let config = EncoderConfig::new(n, d, bits)?;
        let mut rest = vec![0u8; 4 * d + 8];
        reader.read_exact(&mut rest).map_err(truncated)?;
        let scale = rest[..4 * d].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        let count = u64::from_le_bytes(rest[4 * d..].try_into().unwrap());
        Ok(Self { config, scale, count })
    }
}

struct Writer {
    file: File,
    persisted: u64,
    pending: HashSet<u64>,
}

/// A record written to disk but not yet visible to queries.
#[derive(Debug)]
pub struct PendingRecord {
    segment_id: u64,
    payload: Vec<u8>,
}

impl PendingRecord {
    pub fn segment_id(&self) -> u64 {
        self.segment_id
    }
}

/// In-memory snapshot of a store file plus, when opened for writing, the
/// single writer handle.
pub struct VectorStore {
    path: PathBuf,
    header: StoreHeader,
    ids: Vec<u64>,
    payload: Vec<u8>,
    index: HashSet<u64>,
    writer: Option<Mutex<Writer>>,
}

impl std::fmt::Debug for VectorStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorStore")
            .field("path", &self.path)
            .field("header", &self.header)
            .field("writable", &self.writer.is_some())
            .finish()
    }
}

impl VectorStore {
    /// Creates a new, empty store. Fails if `path` exists.
    pub fn create(path: &Path, config: EncoderConfig, scale: &[f32]) -> Result<Self> {
        config.validate()?;
        if scale.len() != config.d {
            return Err(Error::Invalid(format!("{} scales for d = {}", scale.len(), config.d)));
        }
        let header = StoreHeader { config, scale: scale.to_vec(), count: 0 };
        let mut file =
            OpenOptions::new().read(true).write(true).create_new(true).open(path).map_err(Error::io(path))?;
        file.write_all(&header.to_bytes()).map_err(Error::io(path))?;
        file.sync_all().map_err(Error::io(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            header,
            ids: Vec::new(),
            payload: Vec::new(),
            index: HashSet::new(),
            writer: Some(Mutex::new(Writer { file, persisted: 0, pending: HashSet::new() })),
        })
    }

    /// Opens a store read-only.
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(Error::io(path))?;
        Self::load(path, file, false)
    }

    /// Opens an existing store for appending.
    pub fn open_append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().read(true).write(true).open(path).map_err(Error::io(path))?;
        Self::load(path, file, true)
    }

    /// Opens a store and checks it was built with `expected`.
    pub fn open_expecting(path: &Path, expected: &EncoderConfig, writable: bool) -> Result<Self> {
        let store = if writable { Self::open_append(path)? } else { Self::open(path)? };
        if store.config() != expected {
            return Err(Error::Invalid(format!(
                "store {} has n={}, d={}, b={} but n={}, d={}, b={} was requested",
                path.display(),
                store.config().n,
                store.config().d,
                store.config().bits.bits(),
                expected.n,
                expected.d,
                expected.bits.bits()
            )));
        }
        Ok(store)
    }

    fn load(path: &Path, file: File, writable: bool) -> Result<Self> {
        let len = file.metadata().map_err(Error::io(path))?.len();
        let mut reader = BufReader::with_capacity(1 << 20, &file);
        let header = StoreHeader::read_from(&mut reader)?;
        let needed = header
            .count
            .checked_mul(header.record_len())
            .and_then(|b| b.checked_add(header.encoded_len()))
            .ok_or_else(|| Error::Format("store header count overflows".into()))?;
        if len < needed {
            return Err(Error::Format(format!(
                "store {} truncated: header claims {} records ({needed} bytes) but file has {len} bytes",
                path.display(),
                header.count
            )));
        }
        let count = header.count as usize;
        let payload_len = header.config.payload_bytes();
        let mut ids = Vec::with_capacity(count);
        let mut payload = vec![0u8; count * payload_len];
        let mut index = HashSet::with_capacity(count);
        let mut id_buf = [0u8; 8];
        for chunk in payload.chunks_exact_mut(payload_len.max(1)).take(count) {
            reader.read_exact(&mut id_buf).map_err(Error::io(path))?;
            reader.read_exact(chunk).map_err(Error::io(path))?;
            let id = u64::from_le_bytes(id_buf);
            if !index.insert(id) {
                return Err(Error::Format(format!("store {} repeats segment {id}", path.display())));
            }
            ids.push(id);
        }
        drop(reader);
        let writer = writable.then(|| Mutex::new(Writer { file, persisted: header.count, pending: HashSet::new() }));
        Ok(Self { path: path.to_path_buf(), header, ids, payload, index, writer })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Header as of this snapshot (count = visible records).
    pub fn header(&self) -> StoreHeader {
        StoreHeader { count: self.ids.len() as u64, ..self.header.clone() }
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.header.config
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_writable(&self) -> bool {
        self.writer.is_some()
    }

    pub fn contains(&self, segment_id: u64) -> bool {
        self.index.contains(&segment_id)
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Packed payload of the `i`-th record.
    pub fn payload(&self, i: usize) -> &[u8] {
        let len = self.header.config.payload_bytes();
        &self.payload[i * len..(i + 1) * len]
    }

    /// Dequantized vector of the `i`-th record.
    pub fn vector(&self, i: usize) -> Result<SemanticFeatureVector> {
        let c = &self.header.config;
        let q = QuantizedVector::from_bytes(c.n, c.d, c.bits, self.payload(i))?;
        Ok(dequantize(&q))
    }

    fn check_vector(&self, v: &SemanticFeatureVector) -> Result<()> {
        let c = &self.header.config;
        if v.n() != c.n || v.d() != c.d {
            return Err(Error::Invalid(format!(
                "vector has n={}, d={} but the store expects n={}, d={}",
                v.n(),
                v.d(),
                c.n,
                c.d
            )));
        }
        Ok(())
    }

    fn writer(&self) -> Result<&Mutex<Writer>> {
        self.writer.as_ref().ok_or_else(|| Error::Invalid(format!("store {} is open read-only", self.path.display())))
    }

    /// Writes one record durably without making it visible; pair with
    /// [`publish`](Self::publish). Lets a writer hold only a shared borrow
    /// while doing disk I/O.
    pub fn persist(&self, segment_id: u64, vector: &SemanticFeatureVector) -> Result<PendingRecord> {
        self.check_vector(vector)?;
        let payload = quantize(vector, self.header.config.bits)?.to_bytes();
        let mut w = self.writer()?.lock().unwrap_or_else(|e| e.into_inner());
        if self.index.contains(&segment_id) || w.pending.contains(&segment_id) {
            return Err(Error::DuplicateSegment(segment_id));
        }
        let offset = self.header.encoded_len() + w.persisted * self.header.record_len();
        let count_offset = StoreHeader::count_offset(self.header.config.d);
        let path = &self.path;
        let mut record = Vec::with_capacity(8 + payload.len());
        record.extend_from_slice(&segment_id.to_le_bytes());
        record.extend_from_slice(&payload);
        w.file.seek(SeekFrom::Start(offset)).map_err(Error::io(path))?;
        w.file.write_all(&record).map_err(Error::io(path))?;
        w.file.seek(SeekFrom::Start(count_offset)).map_err(Error::io(path))?;
        let count = w.persisted + 1;
        w.file.write_all(&count.to_le_bytes()).map_err(Error::io(path))?;
        w.file.sync_data().map_err(Error::io(path))?;
        w.persisted += 1;
        w.pending.insert(segment_id);
        Ok(PendingRecord { segment_id, payload })
    }

    /// Makes a persisted record visible to queries.
    pub fn publish(&mut self, record: PendingRecord) {
        if let Some(w) = self.writer.as_mut() {
            w.get_mut().unwrap_or_else(|e| e.into_inner()).pending.remove(&record.segment_id);
        }
        self.index.insert(record.segment_id);
        self.ids.push(record.segment_id);
        self.payload.extend_from_slice(&record.payload);
    }

    /// Durably appends one vector; it is queryable when this returns.
    pub fn append(&mut self, segment_id: u64, vector: &SemanticFeatureVector) -> Result<()> {
        let record = self.persist(segment_id, vector)?;
        self.publish(record);
        Ok(())
    }

    /// Appends many vectors with a single header update and sync. On error
    /// nothing from this batch becomes visible.
    pub fn extend<I>(&mut self, items: I) -> Result<usize>
    where
        I: IntoIterator<Item = (u64, SemanticFeatureVector)>,
    {
        let before = self.ids.len();
        let result = self.extend_inner(items);
        if result.is_err() {
            for id in self.ids.drain(before..) {
                self.index.remove(&id);
            }
            self.payload.truncate(before * self.header.config.payload_bytes());
        }
        result
    }

    fn extend_inner<I>(&mut self, items: I) -> Result<usize>
    where
        I: IntoIterator<Item = (u64, SemanticFeatureVector)>,
    {
        let header = self.header.clone();
        let path = self.path.clone();
        let mut guard = self
            .writer
            .as_ref()
            .ok_or_else(|| Error::Invalid(format!("store {} is open read-only", path.display())))?
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        let w = &mut *guard;
        let start = w.persisted;
        w.file.seek(SeekFrom::Start(header.encoded_len() + start * header.record_len())).map_err(Error::io(&path))?;
        let mut out = BufWriter::with_capacity(1 << 20, &w.file);
        let mut written = 0u64;
        for (segment_id, vector) in items {
            let c = &header.config;
            if vector.n() != c.n || vector.d() != c.d {
                return Err(Error::Invalid(format!(
                    "vector has n={}, d={} but the store expects n={}, d={}",
                    vector.n(),
                    vector.d(),
                    c.n,
                    c.d
                )));
            }
            if w.pending.contains(&segment_id) || !self.index.insert(segment_id) {
                return Err(Error::DuplicateSegment(segment_id));
            }
            self.ids.push(segment_id);
            let q = quantize(&vector, c.bits)?;
            let mark = self.payload.len();
            q.write_bytes(&mut self.payload);
            out.write_all(&segment_id.to_le_bytes()).map_err(Error::io(&path))?;
            out.write_all(&self.payload[mark..]).map_err(Error::io(&path))?;
            written += 1;
        }
        out.flush().map_err(Error::io(&path))?;
        drop(out);
        w.file.seek(SeekFrom::Start(StoreHeader::count_offset(header.config.d))).map_err(Error::io(&path))?;
        w.file.write_all(&(start + written).to_le_bytes()).map_err(Error::io(&path))?;
        w.file.sync_data().map_err(Error::io(&path))?;
        w.persisted = start + written;
        Ok(written as usize)
    }

    fn check_query(&self, query: &SemanticFeatureVector, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::Invalid("k must be at least 1".into()));
        }
        self.check_vector(query)
    }

    fn scan_range(&self, query: &[f64], k: usize, range: std::ops::Range<usize>) -> TopK {
        let bits = self.header.config.bits;
        let len = self.header.config.payload_bytes();
        let mut top = TopK::new(k);
        let payload = &self.payload[range.start * len..range.end * len];
        for (id, record) in self.ids[range].iter().zip(payload.chunks_exact(len)) {
            top.push(*id, l1_packed(query, record, bits));
        }
        top
    }

    /// Exact top-k by a single-threaded linear scan.
    pub fn knn_sequential(&self, query: &SemanticFeatureVector, k: usize) -> Result<Vec<QueryResult>> {
        self.check_query(query, k)?;
        Ok(self.scan_range(query.values(), k, 0..self.len()).into_results())
    }

    /// Exact top-k with the record range split into `partitions` chunks
    /// scanned on the current rayon pool. The result equals
    /// [`knn_sequential`](Self::knn_sequential) for any partition count.
    pub fn knn_partitioned(
        &self,
        query: &SemanticFeatureVector,
        k: usize,
        partitions: usize,
    ) -> Result<Vec<QueryResult>> {
        self.check_query(query, k)?;
        let count = self.len();
        let parts = partitions.clamp(1, count.max(1));
        if parts == 1 {
            return Ok(self.scan_range(query.values(), k, 0..count).into_results());
        }
        let chunk = count.div_ceil(parts);
        let merged = (0..parts)
            .into_par_iter()
            .map(|p| self.scan_range(query.values(), k, (p * chunk).min(count)..((p + 1) * chunk).min(count)))
            .reduce(
                || TopK::new(k),
                |mut a, b| {
                    a.merge(b);
                    a
                },
            );
        Ok(merged.into_results())
    }

    /// Exact top-k using every thread of the current rayon pool.
    pub fn knn(&self, query: &SemanticFeatureVector, k: usize) -> Result<Vec<QueryResult>> {
        self.knn_partitioned(query, k, rayon::current_num_threads())
    }
}
