//! Ensemble file formats.
//!
//! Binary layout, all integers little-endian:
//!
//! | bytes          | content                                         |
//! |----------------|-------------------------------------------------|
//! | 4              | magic `ANSC`                                    |
//! | 4              | format version (`u32`)                          |
//! | 8              | `n_paths` (`u64`)                               |
//! | 8              | `n_steps` (`u64`)                               |
//! | 8·paths·steps  | increments, row-major IEEE-754 `f64`            |
//! | 8              | metadata length in bytes (`u64`)                |
//! | len            | UTF-8 JSON `{"descriptor": .., "master_seed": ..}` |
//!
//! The CSV form holds one path per row with no header and no metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ANSC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Trailer {
    descriptor: String,
    master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleFormat {
    Binary,
    Csv,
}

impl EnsembleFormat {
    /// `.csv` means CSV; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => EnsembleFormat::Csv,
            _ => EnsembleFormat::Binary,
        }
    }
}

pub fn write_binary<W: Write>(ensemble: &PathEnsemble, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ensemble.n_paths() as u64).to_le_bytes())?;
    w.write_all(&(ensemble.n_steps() as u64).to_le_bytes())?;
    for v in ensemble.increments() {
        w.write_all(&v.to_le_bytes())?;
    }
    let trailer = serde_json::to_vec(&Trailer {
        descriptor: ensemble.descriptor().to_owned(),
        master_seed: ensemble.master_seed(),
    })?;
    w.write_all(&(trailer.len() as u64).to_le_bytes())?;
    w.write_all(&trailer)?;
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<PathEnsemble> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n_paths = read_u64(&mut r)? as usize;
    let n_steps = read_u64(&mut r)? as usize;
    let count = n_paths
        .checked_mul(n_steps)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let mut increments = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        increments.push(f64::from_le_bytes(buf));
    }
    let len = read_u64(&mut r)? as usize;
    let mut blob = vec![0u8; len];
    r.read_exact(&mut blob)?;
    let trailer: Trailer = serde_json::from_slice(&blob)?;
    PathEnsemble::new(
        n_paths,
        n_steps,
        increments,
        trailer.descriptor,
        trailer.master_seed,
    )
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn write_csv<W: Write>(ensemble: &PathEnsemble, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for path in ensemble.paths() {
        out.write_record(path.iter().map(|v| format!("{v:e}")))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R, descriptor: &str, master_seed: u64) -> Result<PathEnsemble> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::MalformedRow {
                    line: i as u64 + 1,
                    reason: format!("{f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    PathEnsemble::from_rows(rows, descriptor, master_seed)
}

pub fn save(ensemble: &PathEnsemble, path: &Path) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    match EnsembleFormat::from_path(path) {
        EnsembleFormat::Binary => write_binary(ensemble, w),
        EnsembleFormat::Csv => write_csv(ensemble, w),
    }
}

pub fn load(path: &Path) -> Result<PathEnsemble> {
    let r = BufReader::new(File::open(path)?);
    match EnsembleFormat::from_path(path) {
        EnsembleFormat::Binary => read_binary(r),
        EnsembleFormat::Csv => read_csv(r, &format!("csv:{}", path.display()), 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_fixed() {
        let e = PathEnsemble::new(2, 1, vec![1.5, -2.0], "label", 9).unwrap();
        let mut bytes = Vec::new();
        write_binary(&e, &mut bytes).unwrap();
        assert_eq!(&bytes[0..4], b"ANSC");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(&bytes[16..24], &1u64.to_le_bytes());
        assert_eq!(&bytes[24..32], &1.5f64.to_le_bytes());
        assert_eq!(&bytes[32..40], &(-2.0f64).to_le_bytes());
        let len = u64::from_le_bytes(bytes[40..48].try_into().unwrap()) as usize;
        let meta: serde_json::Value = serde_json::from_slice(&bytes[48..48 + len]).unwrap();
        assert_eq!(meta["descriptor"], "label");
        assert_eq!(meta["master_seed"], 9);
        assert_eq!(bytes.len(), 48 + len);
    }

    #[test]
    fn rejects_bad_magic() {
        let err = read_binary(&b"NOPE\x01\0\0\0"[..]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn csv_reads_rows() {
        let e = read_csv(&b"1,2,3\n-1, 0.5,2e-3\n"[..], "x", 0).unwrap();
        assert_eq!(e.n_paths(), 2);
        assert_eq!(e.path(1), &[-1.0, 0.5, 2e-3]);
        assert!(read_csv(&b"1,a\n"[..], "x", 0).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(
            rows in 1usize..5,
            cols in 1usize..7,
            seed in any::<u64>(),
            data in prop::collection::vec(any::<f64>(), 35),
        ) {
            let inc: Vec<f64> = data.iter().copied().cycle().take(rows * cols).collect();
            let e = PathEnsemble::new(rows, cols, inc, "d\u{e9}sc", seed).unwrap();
            let mut bytes = Vec::new();
            write_binary(&e, &mut bytes).unwrap();
            let back = read_binary(&bytes[..]).unwrap();
            prop_assert_eq!(back.master_seed(), seed);
            prop_assert_eq!(back.descriptor(), e.descriptor());
            let same = back.increments().iter().zip(e.increments()).all(|(a, b)| a.to_bits() == b.to_bits());
            prop_assert!(same);
        }

        #[test]
        fn csv_round_trip(data in prop::collection::vec(-1e300f64..1e300, 1..30)) {
            let e = PathEnsemble::new(1, data.len(), data, "", 0).unwrap();
            let mut bytes = Vec::new();
            write_csv(&e, &mut bytes).unwrap();
            let back = read_csv(&bytes[..], "", 0).unwrap();
            prop_assert_eq!(back.increments(), e.increments());
        }
    }
}
