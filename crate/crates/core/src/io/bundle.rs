//! Dataset directories: JSON-lines records plus optional binary feature and
//! raw-EEG files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::eeg::EegSegment;
use crate::error::{Error, Result};
use crate::harness::{Dataset, FeatureKey, FeatureTable, RawTrial};

pub const QUERIES_FILE: &str = "queries.jsonl";
pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const SESSIONS_FILE: &str = "sessions.jsonl";
pub const FEATURES_FILE: &str = "features.bin";
pub const FEATURE_INDEX_FILE: &str = "features_index.jsonl";
pub const RAW_FILE: &str = "raw.bin";

const FEATURE_MAGIC: &[u8; 8] = b"BRFFEAT1";
const RAW_MAGIC: &[u8; 8] = b"BRFRAW01";

/// Environment variable naming the default dataset directory.
pub const DATA_ENV: &str = "BRAINRF_DATA";

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads one JSON object per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| parse_error(path, 0, format!("cannot open: {e}")))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| parse_error(path, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_error(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct IndexLine {
    row: usize,
    #[serde(flatten)]
    key: FeatureKey,
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_f32s(r: &mut impl Read, n: usize) -> std::io::Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

fn write_f32s(w: &mut impl Write, values: impl IntoIterator<Item = f32>) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Feature matrix: 8-byte magic, row count and dimension as u64 LE, then
/// row-major f32 LE values. Keys live in a JSON-lines index.
pub fn write_features(table: &FeatureTable, matrix: &Path, index: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(matrix)?);
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&(table.len() as u64).to_le_bytes())?;
    w.write_all(&(table.dim() as u64).to_le_bytes())?;
    write_f32s(&mut w, table.data().iter().copied())?;
    w.flush()?;
    let lines: Vec<IndexLine> = table
        .keys()
        .iter()
        .enumerate()
        .map(|(row, key)| IndexLine { row, key: key.clone() })
        .collect();
    write_jsonl(index, &lines)
}

pub fn read_features(matrix: &Path, index: &Path) -> Result<FeatureTable> {
    let mut r = BufReader::new(File::open(matrix)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| parse_error(matrix, 0, e.to_string()))?;
    if &magic != FEATURE_MAGIC {
        return Err(parse_error(matrix, 0, "not a feature matrix (bad magic)"));
    }
    let header = |e: std::io::Error| parse_error(matrix, 0, format!("truncated header: {e}"));
    let rows = read_u64(&mut r).map_err(header)? as usize;
    let dim = read_u64(&mut r).map_err(header)? as usize;
    let total = rows
        .checked_mul(dim)
        .filter(|n| *n <= (1 << 34))
        .ok_or_else(|| parse_error(matrix, 0, "implausible matrix size"))?;
    let data = read_f32s(&mut r, total).map_err(|e| parse_error(matrix, 0, format!("expected {rows}x{dim} values: {e}")))?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(parse_error(matrix, 0, format!("{} trailing bytes after {rows}x{dim} values", rest.len())));
    }

    let lines: Vec<IndexLine> = read_jsonl(index)?;
    if lines.len() != rows {
        return Err(parse_error(index, 0, format!("index has {} entries for {rows} matrix rows", lines.len())));
    }
    let mut keys: Vec<Option<FeatureKey>> = vec![None; rows];
    for (i, l) in lines.into_iter().enumerate() {
        match keys.get_mut(l.row) {
            Some(slot @ None) => *slot = Some(l.key),
            Some(Some(_)) => return Err(parse_error(index, i + 1, format!("row {} indexed twice", l.row))),
            None => return Err(parse_error(index, i + 1, format!("row {} out of range", l.row))),
        }
    }
    FeatureTable::from_parts(dim, data, keys.into_iter().map(|k| k.expect("every row indexed")).collect())
}

/// Raw trials: magic, trial/channel/sample counts (u64), sampling rate and
/// pre-stimulus span (f64), then per trial a u64 user, a u8 label and
/// channel-major f32 samples.
pub fn write_raw_trials(path: &Path, trials: &[RawTrial]) -> Result<()> {
    let first = trials.first().ok_or_else(|| Error::input("no raw trials to write"))?;
    let (channels, samples) = (first.segment.channel_count(), first.segment.len());
    let (rate, pre) = (first.segment.sampling_rate_hz(), first.segment.pre_stimulus_ms());
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(RAW_MAGIC)?;
    for v in [trials.len() as u64, channels as u64, samples as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&rate.to_bits().to_le_bytes())?;
    w.write_all(&pre.to_bits().to_le_bytes())?;
    for t in trials {
        let s = &t.segment;
        if s.channel_count() != channels || s.len() != samples || s.sampling_rate_hz() != rate || s.pre_stimulus_ms() != pre {
            return Err(Error::input("raw trials must share one shape"));
        }
        w.write_all(&(t.user as u64).to_le_bytes())?;
        w.write_all(&[t.relevant as u8])?;
        write_f32s(&mut w, s.channels().iter().flatten().map(|&v| v as f32))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw_trials(path: &Path) -> Result<Vec<RawTrial>> {
    let mut r = BufReader::new(File::open(path)?);
    let bad = |m: String| parse_error(path, 0, m);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| bad(e.to_string()))?;
    if &magic != RAW_MAGIC {
        return Err(bad("not a raw EEG file (bad magic)".into()));
    }
    let n = read_u64(&mut r).map_err(|e| bad(e.to_string()))? as usize;
    let channels = read_u64(&mut r).map_err(|e| bad(e.to_string()))? as usize;
    let samples = read_u64(&mut r).map_err(|e| bad(e.to_string()))? as usize;
    let rate = read_f64(&mut r).map_err(|e| bad(e.to_string()))?;
    let pre = read_f64(&mut r).map_err(|e| bad(e.to_string()))?;
    if channels.saturating_mul(samples) > (1 << 28) {
        return Err(bad("implausible trial size".into()));
    }
    let mut out = Vec::with_capacity(n.min(1 << 16));
    for t in 0..n {
        let trunc = |e: std::io::Error| bad(format!("trial {t}: {e}"));
        let user = read_u64(&mut r).map_err(trunc)? as usize;
        let mut label = [0u8; 1];
        r.read_exact(&mut label).map_err(trunc)?;
        let flat = read_f32s(&mut r, channels * samples).map_err(trunc)?;
        let chans = flat.chunks_exact(samples.max(1)).map(|c| c.iter().map(|&v| v as f64).collect()).collect();
        out.push(RawTrial {
            user,
            relevant: label[0] != 0,
            segment: EegSegment::new(chans, rate, pre)?,
        });
    }
    Ok(out)
}

/// Loads and validates a dataset directory. Every integrity problem is
/// reported at once.
pub fn load_bundle(dir: &Path) -> Result<Dataset> {
    if !dir.is_dir() {
        return Err(Error::input(format!("dataset directory {} does not exist", dir.display())));
    }
    let matrix = dir.join(FEATURES_FILE);
    let features = if matrix.exists() {
        Some(read_features(&matrix, &dir.join(FEATURE_INDEX_FILE))?)
    } else {
        None
    };
    let dataset = Dataset {
        queries: read_jsonl(&dir.join(QUERIES_FILE))?,
        documents: read_jsonl(&dir.join(DOCUMENTS_FILE))?,
        sessions: read_jsonl(&dir.join(SESSIONS_FILE))?,
        features,
    };
    dataset.validate()?;
    Ok(dataset)
}

pub fn save_bundle(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_jsonl(&dir.join(QUERIES_FILE), &dataset.queries)?;
    write_jsonl(&dir.join(DOCUMENTS_FILE), &dataset.documents)?;
    write_jsonl(&dir.join(SESSIONS_FILE), &dataset.sessions)?;
    let matrix = dir.join(FEATURES_FILE);
    match &dataset.features {
        Some(f) => write_features(f, &matrix, &dir.join(FEATURE_INDEX_FILE))?,
        None => {
            for p in [matrix, dir.join(FEATURE_INDEX_FILE)] {
                if p.exists() {
                    fs::remove_file(p)?;
                }
            }
        }
    }
    Ok(())
}

/// `explicit`, else the directory named by [`DATA_ENV`].
pub fn resolve_data_dir(explicit: Option<PathBuf>) -> Result<PathBuf> {
    explicit
        .or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from))
        .ok_or_else(|| Error::input(format!("no dataset given; pass --data DIR or set {DATA_ENV}")))
}
