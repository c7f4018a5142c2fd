//! On-disk formats.
//!
//! Binary matrix: `"ZSAR"`, u16 LE version (1), u32 LE rows, u32 LE cols,
//! then rows·cols binary64 LE values in row-major order, no padding.
//! Labels: one integer per line. Attributes: CSV rows or a binary matrix.
//! Splits: CSV with header `split_id,class_id,role`.
//! Parameter map: `"ZSPM"`, u16 LE version (1), u32 LE header length, a JSON
//! header (basis, hyperparameters, residuals), then `w_mu`, `w_sigma` and the
//! seen attributes as binary matrices.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Split};
use crate::error::{Error, LoadErrorKind, Result};
use crate::linalg::Matrix;
use crate::regression::{Basis, FitResiduals, HyperParams, ParamMap};

pub const MAGIC: &[u8; 4] = b"ZSAR";
pub const FORMAT_VERSION: u16 = 1;
pub const PARAM_MAGIC: &[u8; 4] = b"ZSPM";
const HEADER_LEN: usize = 4 + 2 + 4 + 4;

fn load_err(path: &Path, offset: u64, kind: LoadErrorKind) -> Error {
    Error::Load {
        path: path.to_path_buf(),
        offset,
        kind,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes one matrix from the front of `bytes`; returns it with the number
/// of bytes consumed. `path` only labels errors.
pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<(Matrix, usize)> {
    decode_matrix_at(bytes, path, 0)
}

pub(crate) fn decode_matrix_at(bytes: &[u8], path: &Path, base: u64) -> Result<(Matrix, usize)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(load_err(path, base, LoadErrorKind::BadMagic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(load_err(path, base + bytes.len() as u64, LoadErrorKind::Truncated));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(load_err(path, base + 4, LoadErrorKind::UnsupportedVersion(version)));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| load_err(path, base + 6, LoadErrorKind::Inconsistent("rows*cols overflows".into())))?;
    let end = n
        .checked_mul(8)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or_else(|| load_err(path, base + 6, LoadErrorKind::Inconsistent("size overflows".into())))?;
    if bytes.len() < end {
        return Err(load_err(path, base + bytes.len() as u64, LoadErrorKind::Truncated));
    }
    let mut data = Vec::with_capacity(n);
    for (k, chunk) in bytes[HEADER_LEN..end].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(load_err(
                path,
                base + (HEADER_LEN + 8 * k) as u64,
                LoadErrorKind::NonFinite,
            ));
        }
        data.push(v);
    }
    Ok((Matrix::new(rows, cols, data)?, end))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, encode_matrix(m)).map_err(io_err(path))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let (m, used) = decode_matrix(&bytes, path)?;
    if used != bytes.len() {
        return Err(load_err(path, used as u64, LoadErrorKind::TrailingBytes));
    }
    Ok(m)
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte());
    load_err(path, offset, LoadErrorKind::Parse(e.to_string()))
}

/// Labels with the byte offset of each line.
fn read_labels_with_offsets(path: &Path) -> Result<(Vec<usize>, Vec<u64>)> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let mut labels = Vec::new();
    let mut offsets = Vec::new();
    for rec in csv_reader(&bytes).records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let offset = rec.position().map_or(0, |p| p.byte());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 1 {
            return Err(load_err(
                path,
                offset,
                LoadErrorKind::Parse(format!("expected one label per line, got {} fields", rec.len())),
            ));
        }
        let label = rec[0].parse::<usize>().map_err(|e| {
            load_err(path, offset, LoadErrorKind::Parse(format!("label {:?}: {e}", &rec[0])))
        })?;
        labels.push(label);
        offsets.push(offset);
    }
    Ok((labels, offsets))
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    read_labels_with_offsets(path).map(|(l, _)| l)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

fn read_csv_matrix(path: &Path, bytes: &[u8]) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in csv_reader(bytes).records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let offset = rec.position().map_or(0, |p| p.byte());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                let v = f.parse::<f64>().map_err(|e| {
                    load_err(path, offset, LoadErrorKind::Parse(format!("value {f:?}: {e}")))
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(load_err(path, offset, LoadErrorKind::NonFinite))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(load_err(
                    path,
                    offset,
                    LoadErrorKind::Inconsistent(format!(
                        "row has {} values, expected {}",
                        row.len(),
                        first.len()
                    )),
                ));
            }
        }
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

/// Reads an attribute matrix, binary if the file starts with the magic, CSV otherwise.
pub fn read_attributes(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.starts_with(MAGIC) {
        let (m, used) = decode_matrix(&bytes, path)?;
        if used != bytes.len() {
            return Err(load_err(path, used as u64, LoadErrorKind::TrailingBytes));
        }
        Ok(m)
    } else {
        read_csv_matrix(path, &bytes)
    }
}

/// Attribute rows as CSV with shortest round-trip float formatting.
pub fn write_attributes_csv(path: &Path, attrs: &Matrix) -> Result<()> {
    let mut out = String::new();
    for row in attrs.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Loads and validates features (binary), labels (CSV) and attributes.
pub fn load_dataset(features_path: &Path, labels_path: &Path, attrs_path: &Path) -> Result<Dataset> {
    let features = read_matrix(features_path)?;
    let (labels, offsets) = read_labels_with_offsets(labels_path)?;
    let attributes = read_attributes(attrs_path)?;
    if labels.len() != features.rows() {
        return Err(load_err(
            labels_path,
            offsets.last().copied().unwrap_or(0),
            LoadErrorKind::Inconsistent(format!(
                "{} labels for {} feature rows in {}",
                labels.len(),
                features.rows(),
                features_path.display()
            )),
        ));
    }
    let n_classes = attributes.rows();
    if let Some(i) = labels.iter().position(|&l| l >= n_classes) {
        return Err(load_err(
            labels_path,
            offsets[i],
            LoadErrorKind::LabelOutOfRange {
                label: labels[i],
                n_classes,
            },
        ));
    }
    let mut ds = Dataset::new(features, labels, attributes)?;
    ds.metadata
        .insert("features_path".into(), features_path.display().to_string());
    ds.metadata
        .insert("labels_path".into(), labels_path.display().to_string());
    ds.metadata
        .insert("attributes_path".into(), attrs_path.display().to_string());
    Ok(ds)
}

/// Writes `features.zsar`, `labels.csv` and `attributes.csv` into `dir`.
pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_matrix(&dir.join("features.zsar"), ds.features())?;
    write_labels(&dir.join("labels.csv"), ds.labels())?;
    write_attributes_csv(&dir.join("attributes.csv"), ds.attributes())
}

pub fn write_splits(path: &Path, splits: &[Split]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    let mut out = String::from("split_id,class_id,role\n");
    for s in splits {
        for &c in &s.seen {
            out.push_str(&format!("{},{c},seen\n", s.id));
        }
        for &c in &s.unseen {
            out.push_str(&format!("{},{c},unseen\n", s.id));
        }
    }
    f.write_all(out.as_bytes()).map_err(io_err(path))
}

pub fn read_splits(path: &Path) -> Result<Vec<Split>> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["split_id", "class_id", "role"] {
        return Err(load_err(
            path,
            0,
            LoadErrorKind::Parse(format!("expected header split_id,class_id,role, got {headers:?}")),
        ));
    }
    let mut splits: Vec<Split> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let offset = rec.position().map_or(0, |p| p.byte());
        let parse = |i: usize| {
            rec.get(i)
                .unwrap_or("")
                .parse::<usize>()
                .map_err(|e| load_err(path, offset, LoadErrorKind::Parse(format!("field {i}: {e}"))))
        };
        let id = parse(0)?;
        let class = parse(1)?;
        let split = match splits.iter_mut().find(|s| s.id == id) {
            Some(s) => s,
            None => {
                splits.push(Split {
                    id,
                    seen: Vec::new(),
                    unseen: Vec::new(),
                    seed: 0,
                });
                splits.last_mut().unwrap()
            }
        };
        match rec.get(2) {
            Some("seen") => split.seen.push(class),
            Some("unseen") => split.unseen.push(class),
            other => {
                return Err(load_err(
                    path,
                    offset,
                    LoadErrorKind::Parse(format!("role must be seen or unseen, got {other:?}")),
                ))
            }
        }
    }
    for s in &mut splits {
        s.seen.sort_unstable();
        s.unseen.sort_unstable();
    }
    splits.sort_by_key(|s| s.id);
    Ok(splits)
}

#[derive(Serialize, Deserialize)]
struct ParamHeader {
    basis: Basis,
    hyper: HyperParams,
    residuals: FitResiduals,
}

pub fn encode_param_map(map: &ParamMap) -> Vec<u8> {
    let header = serde_json::to_vec(&ParamHeader {
        basis: map.basis,
        hyper: map.hyper,
        residuals: map.residuals,
    })
    .expect("header values are finite");
    let mut out = Vec::new();
    out.extend_from_slice(PARAM_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for m in [&map.w_mu, &map.w_sigma, &map.seen_attrs] {
        out.extend_from_slice(&encode_matrix(m));
    }
    out
}

pub fn decode_param_map(bytes: &[u8], path: &Path) -> Result<ParamMap> {
    if bytes.len() < 4 || &bytes[..4] != PARAM_MAGIC {
        return Err(load_err(path, 0, LoadErrorKind::BadMagic));
    }
    if bytes.len() < 10 {
        return Err(load_err(path, bytes.len() as u64, LoadErrorKind::Truncated));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(load_err(path, 4, LoadErrorKind::UnsupportedVersion(version)));
    }
    let len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let mut pos = 10 + len;
    if bytes.len() < pos {
        return Err(load_err(path, bytes.len() as u64, LoadErrorKind::Truncated));
    }
    let header: ParamHeader = serde_json::from_slice(&bytes[10..pos])
        .map_err(|e| load_err(path, 10, LoadErrorKind::Parse(e.to_string())))?;
    let mut mats = Vec::with_capacity(3);
    for _ in 0..3 {
        let (m, used) = decode_matrix_at(&bytes[pos..], path, pos as u64)?;
        mats.push((m, pos));
        pos += used;
    }
    if pos != bytes.len() {
        return Err(load_err(path, pos as u64, LoadErrorKind::TrailingBytes));
    }
    let [(w_mu, _), (w_sigma, sigma_at), (seen_attrs, attrs_at)]: [(Matrix, usize); 3] =
        mats.try_into().expect("three matrices decoded");
    let input_dim = match header.basis {
        Basis::Kernel { .. } => seen_attrs.rows(),
        Basis::Attributes => seen_attrs.cols(),
    };
    if w_sigma.shape() != w_mu.shape() {
        return Err(load_err(
            path,
            sigma_at as u64,
            LoadErrorKind::Inconsistent(format!("w_sigma is {:?}, w_mu is {:?}", w_sigma.shape(), w_mu.shape())),
        ));
    }
    if w_mu.cols() != input_dim {
        return Err(load_err(
            path,
            attrs_at as u64,
            LoadErrorKind::Inconsistent(format!(
                "weights take {} inputs but the seen attributes give {input_dim}",
                w_mu.cols()
            )),
        ));
    }
    Ok(ParamMap {
        w_mu,
        w_sigma,
        seen_attrs,
        basis: header.basis,
        hyper: header.hyper,
        residuals: header.residuals,
    })
}

pub fn write_param_map(path: &Path, map: &ParamMap) -> Result<()> {
    fs::write(path, encode_param_map(map)).map_err(io_err(path))
}

pub fn read_param_map(path: &Path) -> Result<ParamMap> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_param_map(&bytes, path)
}
