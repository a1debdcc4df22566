//! File formats: domains, operators, spectra and deficit maps.
//!
//! - Domains are JSON (see [`GridDomain2D`]'s serde form).
//! - Operators are Matrix Market `coordinate complex hermitian` files (lower
//!   triangle, 1-based) with a JSON sidecar holding the node map, weight,
//!   boundary condition, metadata and the SHA-256 of the domain JSON.
//! - Spectra are JSON plus a binary eigenvector file: the magic `HGEIGV01`,
//!   `dim` and `count` as little-endian `u64`, then `count` vectors of `dim`
//!   interleaved little-endian `f64` pairs `(re, im)`.
//! - Deficit maps are CSV `z_x,z_y,R` in ascending `R` plus a JSON header.
//!
//! Floats are written in shortest round-trip form, so every reader
//! reproduces the written values bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use heisengap_core::averaging::DeficitMap;
use heisengap_core::eigen::{SolverMeta, Spectrum};
use heisengap_core::operators::{BoundaryCondition, CsrMatrix, HermitianOperator, OperatorMeta};
use heisengap_core::special::{LandauParams, QuadRule};
use heisengap_core::C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const EIGV_MAGIC: &[u8; 8] = b"HGEIGV01";

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

/// SHA-256 (hex) of the compact JSON form of `value`.
pub fn content_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Sidecar of a Matrix Market operator file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSidecar {
    pub dim: usize,
    pub nnz: usize,
    /// Grid node of each unknown.
    pub nodes: Vec<usize>,
    pub weight: f64,
    pub bc: BoundaryCondition,
    pub meta: OperatorMeta,
    /// Hash of the domain the operator was assembled on, if known.
    pub domain_sha256: Option<String>,
}

/// Sidecar path of an operator or spectrum file.
pub fn sidecar_path(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

/// Writes `op` to `path` (Matrix Market) and its sidecar next to it.
pub fn write_operator(
    path: &Path,
    op: &HermitianOperator,
    domain_sha256: Option<String>,
) -> Result<()> {
    let a = op.matrix();
    let n = a.dim();
    let lower: Vec<(usize, usize, C64)> = (0..n)
        .flat_map(|r| {
            a.row(r)
                .filter(move |(c, _)| *c <= r)
                .map(move |(c, v)| (r, c, v))
        })
        .collect();
    let mut w = create(path)?;
    let io = |e| HarnessError::io(path, e);
    writeln!(w, "%%MatrixMarket matrix coordinate complex hermitian").map_err(io)?;
    writeln!(
        w,
        "% {:?} operator, {} conditions",
        op.meta().kind,
        op.bc().name()
    )
    .map_err(io)?;
    writeln!(w, "{n} {n} {}", lower.len()).map_err(io)?;
    for (r, c, v) in &lower {
        writeln!(w, "{} {} {:e} {:e}", r + 1, c + 1, v.re, v.im).map_err(io)?;
    }
    w.flush().map_err(io)?;
    let side = OperatorSidecar {
        dim: n,
        nnz: a.nnz(),
        nodes: op.nodes().to_vec(),
        weight: op.weight(),
        bc: op.bc().clone(),
        meta: op.meta().clone(),
        domain_sha256,
    };
    write_json(&sidecar_path(path, "json"), &side)
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
        HarnessError::format("Matrix Market file", format!("bad token on line {line}"))
    })
}

/// Reads an operator written by [`write_operator`].
pub fn read_operator(path: &Path) -> Result<(HermitianOperator, OperatorSidecar)> {
    let side: OperatorSidecar = read_json(&sidecar_path(path, "json"))?;
    let mut lines = open(path)?.lines().enumerate();
    let bad = |d: &str| HarnessError::format("Matrix Market file", d.to_string());
    let (_, header) = lines.next().ok_or_else(|| bad("empty file"))?;
    let header = header.map_err(|e| HarnessError::io(path, e))?;
    if header.trim() != "%%MatrixMarket matrix coordinate complex hermitian" {
        return Err(bad("expected a coordinate complex hermitian header"));
    }
    let mut size: Option<(usize, usize)> = None;
    let mut entries: Vec<(usize, usize, C64)> = Vec::new();
    for (no, line) in lines {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut tok = line.split_whitespace();
        match size {
            None => {
                let rows: usize = parse(tok.next(), no + 1)?;
                let cols: usize = parse(tok.next(), no + 1)?;
                let nnz: usize = parse(tok.next(), no + 1)?;
                if rows != cols {
                    return Err(bad("matrix is not square"));
                }
                size = Some((rows, nnz));
                entries.reserve(nnz);
            }
            Some((n, _)) => {
                let r: usize = parse(tok.next(), no + 1)?;
                let c: usize = parse(tok.next(), no + 1)?;
                let re: f64 = parse(tok.next(), no + 1)?;
                let im: f64 = parse(tok.next(), no + 1)?;
                if r == 0 || c == 0 || r > n || c > n || c > r {
                    return Err(bad(&format!("entry ({r}, {c}) outside the lower triangle")));
                }
                entries.push((r - 1, c - 1, C64::new(re, im)));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| bad("missing size line"))?;
    if entries.len() != nnz {
        return Err(bad(&format!(
            "{} entries, header says {nnz}",
            entries.len()
        )));
    }
    if n != side.dim {
        return Err(bad("dimension differs from the sidecar"));
    }
    let mut full: Vec<(usize, usize, C64)> = Vec::with_capacity(2 * entries.len());
    for &(r, c, v) in &entries {
        full.push((r, c, v));
        if r != c {
            full.push((c, r, v.conj()));
        }
    }
    full.sort_by_key(|&(r, c, _)| (r, c));
    if full
        .windows(2)
        .any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
    {
        return Err(bad("duplicate entry"));
    }
    let mut row_ptr = vec![0usize; n + 1];
    for &(r, _, _) in &full {
        row_ptr[r + 1] += 1;
    }
    for r in 0..n {
        row_ptr[r + 1] += row_ptr[r];
    }
    let col_idx = full.iter().map(|e| e.1).collect();
    let values = full.iter().map(|e| e.2).collect();
    let matrix = CsrMatrix::from_raw(n, row_ptr, col_idx, values)?;
    let op = HermitianOperator::from_parts(
        matrix,
        side.nodes.clone(),
        side.weight,
        side.bc.clone(),
        side.meta.clone(),
    )?;
    Ok((op, side))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SpectrumFile {
    dim: usize,
    count: usize,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    meta: SolverMeta,
    /// Eigenvector file, relative to the JSON file.
    vectors: String,
}

/// Writes `s` as `path` (JSON) plus `path` with extension `eigv`.
pub fn write_spectrum(path: &Path, s: &Spectrum) -> Result<()> {
    let dim = s.eigenvectors.first().map_or(0, |v| v.len());
    if s.eigenvectors.iter().any(|v| v.len() != dim) {
        return Err(HarnessError::format(
            "spectrum",
            "eigenvectors of unequal length",
        ));
    }
    let bin = sidecar_path(path, "eigv");
    let name = bin
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| HarnessError::format("spectrum path", path.display().to_string()))?
        .to_string();
    let mut w = create(&bin)?;
    let io = |e| HarnessError::io(&bin, e);
    w.write_all(EIGV_MAGIC).map_err(io)?;
    w.write_all(&(dim as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(s.eigenvectors.len() as u64).to_le_bytes())
        .map_err(io)?;
    for v in &s.eigenvectors {
        for z in v {
            w.write_all(&z.re.to_le_bytes()).map_err(io)?;
            w.write_all(&z.im.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)?;
    let file = SpectrumFile {
        dim,
        count: s.eigenvalues.len(),
        eigenvalues: s.eigenvalues.clone(),
        residuals: s.residuals.clone(),
        meta: s.meta.clone(),
        vectors: name,
    };
    write_json(path, &file)
}

/// Reads a spectrum written by [`write_spectrum`].
pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let file: SpectrumFile = read_json(path)?;
    let bin = path.with_file_name(&file.vectors);
    let mut bytes = Vec::new();
    open(&bin)?
        .read_to_end(&mut bytes)
        .map_err(|e| HarnessError::io(&bin, e))?;
    let bad = |d: &str| HarnessError::format("eigenvector file", d.to_string());
    if bytes.len() < 24 || &bytes[..8] != EIGV_MAGIC {
        return Err(bad("missing HGEIGV01 header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap_or([0; 8]));
    let (dim, count) = (word(8) as usize, word(16) as usize);
    if dim != file.dim || count != file.count {
        return Err(bad("header disagrees with the JSON file"));
    }
    if bytes.len() != 24 + 16 * dim * count {
        return Err(bad("truncated payload"));
    }
    let float = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap_or([0; 8]));
    let eigenvectors = (0..count)
        .map(|v| {
            (0..dim)
                .map(|k| {
                    let at = 24 + 16 * (v * dim + k);
                    C64::new(float(at), float(at + 8))
                })
                .collect()
        })
        .collect();
    Ok(Spectrum {
        eigenvalues: file.eigenvalues,
        eigenvectors,
        residuals: file.residuals,
        meta: file.meta,
    })
}

/// Header written next to a deficit CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitHeader {
    pub params: LandauParams,
    pub rule: QuadRule,
    pub samples: usize,
    pub integral: f64,
    pub normalized_integral: f64,
    pub slack: f64,
    pub admissible_fraction: f64,
    pub admissible_measure: f64,
    pub min_r: f64,
    pub domain_sha256: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitRow {
    pub z_x: f64,
    pub z_y: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

/// Writes the samples of `map` to `path` (CSV) and the header as JSON.
pub fn write_deficit(path: &Path, map: &DeficitMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for s in &map.samples {
        w.serialize(DeficitRow {
            z_x: s.z[0],
            z_y: s.z[1],
            r: s.r,
        })?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    let header = DeficitHeader {
        params: map.params,
        rule: map.rule.clone(),
        samples: map.samples.len(),
        integral: map.integral,
        normalized_integral: map.normalized_integral(),
        slack: map.slack,
        admissible_fraction: map.admissible_fraction(),
        admissible_measure: map.admissible_measure(),
        min_r: map.min_r(),
        domain_sha256: content_hash(&map.domain)?,
    };
    write_json(&sidecar_path(path, "json"), &header)
}

pub fn read_deficit(path: &Path) -> Result<(Vec<DeficitRow>, DeficitHeader)> {
    let header = read_json(&sidecar_path(path, "json"))?;
    let mut r = csv::Reader::from_reader(open(path)?);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<DeficitRow>, _>>()?;
    Ok((rows, header))
}
