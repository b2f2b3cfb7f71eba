//! On-disk caching of relation matrices and rankings, plus the PPM and CSV
//! renderers used by the command-line tool.
//!
//! Relation matrix file layout (all multi-byte integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `PORP` |
//! | 1     | format version (1) |
//! | 1     | `n` |
//! | ...   | rows `i = 2..=N`, entries `j = 1..i`, 3 bits each, MSB first: two value bits (`00` unknown, `01` higher index better, `10` higher index worse) then one source bit (`0` PO, `1` DR); each row zero-padded to a byte boundary |
//! | 4     | CRC-32 (IEEE) of the entry bytes |
//!
//! Rankings are cached in their JSON exchange format.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::construction::{ConstructionError, Inputs, SweepPoint};
use crate::order::{po_relation_matrix, OrderError, Relation, RelationMatrix, Source};
use crate::reliability::{
    rank_channels, ChannelModel, ReliabilityError, ReliabilityRanking, RANKING_FORMAT_VERSION,
};

pub const MATRIX_MAGIC: &[u8; 4] = b"PORP";
pub const MATRIX_FORMAT_VERSION: u8 = 1;

/// Environment variable naming the cache directory.
pub const CACHE_DIR_ENV: &str = "POLARPO_CACHE_DIR";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("not a relation matrix file (bad magic)")]
    BadMagic,
    #[error("cache format version {found} does not match supported version {expected}")]
    Version { found: u32, expected: u32 },
    #[error("relation matrix file truncated or oversized: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("relation matrix checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("corrupt relation matrix entry at ({i}, {j})")]
    Entry { i: u32, j: u32 },
    #[error("cached entry does not match its key: {0}")]
    KeyMismatch(String),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Ranking(#[from] ReliabilityError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serializes a relation matrix in the bit-exact cache format.
pub fn encode_matrix(matrix: &RelationMatrix) -> Vec<u8> {
    let size = matrix.block_length();
    let mut payload = Vec::with_capacity(payload_len(matrix.levels()));
    for i in 2..=size {
        let mut acc = 0u32;
        let mut filled = 0u32;
        for j in 1..i {
            let code = match matrix.get(i, j) {
                Relation::Unknown => 0b000,
                Relation::BetterHighLow => 0b010,
                Relation::WorseHighLow => 0b100,
            } | u32::from(matrix.source(i, j) == Some(Source::Dr));
            acc = (acc << 3) | code;
            filled += 3;
            while filled >= 8 {
                filled -= 8;
                payload.push((acc >> filled) as u8);
                acc &= (1 << filled) - 1;
            }
        }
        if filled > 0 {
            payload.push((acc << (8 - filled)) as u8);
        }
    }
    let mut out = Vec::with_capacity(payload.len() + 10);
    out.extend_from_slice(MATRIX_MAGIC);
    out.push(MATRIX_FORMAT_VERSION);
    out.push(matrix.levels() as u8);
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out
}

fn payload_len(n: u32) -> usize {
    let size = 1usize << n;
    (2..=size).map(|i| (3 * (i - 1)).div_ceil(8)).sum()
}

/// Parses and validates a relation matrix file.
pub fn decode_matrix(bytes: &[u8]) -> Result<RelationMatrix, CacheError> {
    if bytes.len() < 6 || &bytes[..4] != MATRIX_MAGIC {
        return Err(CacheError::BadMagic);
    }
    if bytes[4] != MATRIX_FORMAT_VERSION {
        return Err(CacheError::Version {
            found: bytes[4] as u32,
            expected: MATRIX_FORMAT_VERSION as u32,
        });
    }
    let n = bytes[5] as u32;
    let mut matrix = RelationMatrix::empty(n)?;
    let expected = 6 + payload_len(n) + 4;
    if bytes.len() != expected {
        return Err(CacheError::Length {
            expected,
            found: bytes.len(),
        });
    }
    let payload = &bytes[6..expected - 4];
    let stored = u32::from_le_bytes(bytes[expected - 4..].try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(CacheError::Checksum { stored, computed });
    }
    let mut offset = 0usize;
    for i in 2..=matrix.block_length() {
        let row_bytes = (3 * (i as usize - 1)).div_ceil(8);
        let row = &payload[offset..offset + row_bytes];
        offset += row_bytes;
        for j in 1..i {
            let bit = 3 * (j as usize - 1);
            let code = (0..3).fold(0u8, |acc, b| {
                let k = bit + b;
                (acc << 1) | ((row[k / 8] >> (7 - k % 8)) & 1)
            });
            let source = if code & 1 == 1 { Source::Dr } else { Source::Po };
            let relation = match code >> 1 {
                0 if code == 0 => Relation::Unknown,
                1 => Relation::BetterHighLow,
                2 => Relation::WorseHighLow,
                _ => return Err(CacheError::Entry { i, j }),
            };
            if relation != Relation::Unknown {
                matrix.set(i, j, relation, source);
            }
        }
    }
    Ok(matrix)
}

/// What a cache file holds.
#[derive(Debug, Clone, PartialEq)]
pub enum CacheKey {
    PoMatrix { n: u32 },
    Ranking {
        model: ChannelModel,
        levels: u32,
        evaluator: String,
    },
}

impl CacheKey {
    pub fn file_name(&self) -> String {
        match self {
            Self::PoMatrix { n } => format!("po-n{n}.porp"),
            Self::Ranking {
                model,
                levels,
                evaluator,
            } => {
                let channel: String = model
                    .to_string()
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
                    .collect();
                format!("ranking-{channel}-nu{levels}-{evaluator}.json")
            }
        }
    }

    pub fn format_version(&self) -> u32 {
        match self {
            Self::PoMatrix { .. } => MATRIX_FORMAT_VERSION as u32,
            Self::Ranking { .. } => RANKING_FORMAT_VERSION,
        }
    }
}

/// A serialized cache record.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub format_version: u32,
    pub payload: Vec<u8>,
}

impl CacheEntry {
    pub fn po_matrix(matrix: &RelationMatrix) -> Self {
        Self {
            key: CacheKey::PoMatrix { n: matrix.levels() },
            format_version: MATRIX_FORMAT_VERSION as u32,
            payload: encode_matrix(matrix),
        }
    }

    pub fn ranking(ranking: &ReliabilityRanking) -> Self {
        Self {
            key: CacheKey::Ranking {
                model: ranking.model(),
                levels: ranking.levels(),
                evaluator: ranking.evaluator().to_string(),
            },
            format_version: RANKING_FORMAT_VERSION,
            payload: ranking.to_json().into_bytes(),
        }
    }

    pub fn decode_matrix(&self) -> Result<RelationMatrix, CacheError> {
        let m = decode_matrix(&self.payload)?;
        match self.key {
            CacheKey::PoMatrix { n } if n == m.levels() => Ok(m),
            _ => Err(CacheError::KeyMismatch(format!("{:?}", self.key))),
        }
    }

    pub fn decode_ranking(&self) -> Result<ReliabilityRanking, CacheError> {
        let text = String::from_utf8_lossy(&self.payload);
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(ReliabilityError::from)?;
        let found = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != RANKING_FORMAT_VERSION {
            return Err(CacheError::Version {
                found,
                expected: RANKING_FORMAT_VERSION,
            });
        }
        let r = ReliabilityRanking::from_json(&text)?;
        match &self.key {
            CacheKey::Ranking {
                model,
                levels,
                evaluator,
            } if *model == r.model() && *levels == r.levels() && evaluator == r.evaluator() => {
                Ok(r)
            }
            key => Err(CacheError::KeyMismatch(format!("{key:?}"))),
        }
    }
}

/// A directory of cache files. Writes go through a temporary file and an
/// atomic rename, so concurrent users never observe partial files.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// The explicit directory if given, else `$POLARPO_CACHE_DIR`, else none.
    pub fn locate(explicit: Option<PathBuf>) -> Option<Self> {
        explicit
            .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
            .map(Self::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    pub fn load(&self, key: &CacheKey) -> Result<Option<CacheEntry>, CacheError> {
        let path = self.path_of(key);
        match fs::read(&path) {
            Ok(payload) => Ok(Some(CacheEntry {
                key: key.clone(),
                format_version: key.format_version(),
                payload,
            })),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    pub fn store(&self, entry: &CacheEntry) -> Result<PathBuf, CacheError> {
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let path = self.path_of(&entry.key);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io_err(&self.dir))?;
        tmp.write_all(&entry.payload).map_err(io_err(tmp.path()))?;
        tmp.as_file().sync_all().map_err(io_err(&path))?;
        tmp.persist(&path).map_err(|e| io_err(&path)(e.error))?;
        Ok(path)
    }

    /// Loads the PO matrix for `n`, computing and storing it on a miss.
    pub fn po_matrix(&self, n: u32) -> Result<RelationMatrix, CacheError> {
        let key = CacheKey::PoMatrix { n };
        if let Some(entry) = self.load(&key)? {
            return entry.decode_matrix();
        }
        let matrix = po_relation_matrix(n)?;
        self.store(&CacheEntry::po_matrix(&matrix))?;
        Ok(matrix)
    }

    /// Loads the built-in ranking for `model` at `levels`, computing and
    /// storing it on a miss.
    pub fn ranking(&self, model: ChannelModel, levels: u32) -> Result<ReliabilityRanking, CacheError> {
        let key = CacheKey::Ranking {
            model,
            levels,
            evaluator: model.evaluator().to_string(),
        };
        if let Some(entry) = self.load(&key)? {
            return entry.decode_ranking();
        }
        let ranking = rank_channels(model, levels)?;
        self.store(&CacheEntry::ranking(&ranking))?;
        Ok(ranking)
    }
}

/// [`Inputs`] backed by an optional on-disk cache.
#[derive(Debug, Clone, Default)]
pub struct CachedInputs {
    cache: Option<Cache>,
}

impl CachedInputs {
    pub fn new(cache: Option<Cache>) -> Self {
        Self { cache }
    }
}

fn input_err(e: CacheError) -> ConstructionError {
    match e {
        CacheError::Order(e) => e.into(),
        CacheError::Ranking(e) => e.into(),
        e => ConstructionError::Inputs(Box::new(e)),
    }
}

impl Inputs for CachedInputs {
    fn po_matrix(&mut self, n: u32) -> Result<RelationMatrix, ConstructionError> {
        match &self.cache {
            None => Ok(po_relation_matrix(n)?),
            Some(c) => c.po_matrix(n).map_err(input_err),
        }
    }

    fn ranking(
        &mut self,
        model: ChannelModel,
        levels: u32,
    ) -> Result<ReliabilityRanking, ConstructionError> {
        match &self.cache {
            None => Ok(rank_channels(model, levels)?),
            Some(c) => c.ranking(model, levels).map_err(input_err),
        }
    }
}

/// Binary PPM (P6) of the relation matrix: pixel (row `i`, column `j`) for
/// `i > j` is black for PO entries, red for DR entries, white otherwise.
pub fn render_ppm(matrix: &RelationMatrix) -> Vec<u8> {
    let size = matrix.block_length() as usize;
    let header = format!("P6\n{size} {size}\n255\n");
    let mut out = Vec::with_capacity(header.len() + 3 * size * size);
    out.extend_from_slice(header.as_bytes());
    for i in 1..=size as u32 {
        for j in 1..=size as u32 {
            let px: [u8; 3] = if i > j {
                match matrix.source(i, j) {
                    Some(Source::Po) => [0, 0, 0],
                    Some(Source::Dr) => [255, 0, 0],
                    None => [255, 255, 255],
                }
            } else {
                [255, 255, 255]
            };
            out.extend_from_slice(&px);
        }
    }
    out
}

/// CSV with columns `x,gamma_po,gamma_po_dr`; `gamma` to six decimals and an
/// empty last column when no channel was given.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("x,gamma_po,gamma_po_dr\n");
    for p in points {
        let dr = p.gamma_po_dr.map(|g| format!("{g:.6}")).unwrap_or_default();
        writeln!(out, "{},{:.6},{}", p.x, p.gamma_po, dr).unwrap();
    }
    out
}
