//! Binary file formats: the dataset cache and representation dumps.
//!
//! All integers and floats are little-endian. The dataset cache is
//! columnar: a magic tag, row/column counts, length-prefixed feature names,
//! then the feature block (f64), labels (u32), sensitive attributes (u32),
//! and split tags (u8: 0 train, 1 valid, 2 test). Round-trips are lossless
//! at full 64-bit precision.
//!
//! A representation dump is a header `(n, d)` (two u64) followed by `n*d`
//! row-major f64 values. Attribute labels ride in the same format as an
//! `(n, 1)` dump of class ids.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use federate_core::data::{Dataset, Split};
use federate_core::mat::Matrix;

const DATASET_MAGIC: &[u8; 8] = b"FEDDS001";

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn save_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(DATASET_MAGIC)?;
    write_u64(&mut w, dataset.len() as u64)?;
    write_u64(&mut w, dataset.dim() as u64)?;
    write_u64(&mut w, dataset.feature_names.len() as u64)?;
    for name in &dataset.feature_names {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
    }
    for v in dataset.features.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    for &l in &dataset.labels {
        w.write_all(&(l as u32).to_le_bytes())?;
    }
    for &z in &dataset.sensitive {
        w.write_all(&(z as u32).to_le_bytes())?;
    }
    for &s in &dataset.split {
        let tag: u8 = match s {
            Split::Train => 0,
            Split::Valid => 1,
            Split::Test => 2,
        };
        w.write_all(&[tag])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file =
        std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        bail!("{} is not a dataset cache (bad magic)", path.display());
    }
    let n = read_u64(&mut r)? as usize;
    let d = read_u64(&mut r)? as usize;
    let name_count = read_u64(&mut r)? as usize;
    let mut feature_names = Vec::with_capacity(name_count);
    for _ in 0..name_count {
        let len = read_u32(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        feature_names.push(String::from_utf8(buf).context("feature name is not UTF-8")?);
    }
    let mut features = Matrix::zeros(n, d);
    for v in features.as_mut_slice() {
        *v = read_f64(&mut r)?;
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(read_u32(&mut r)? as usize);
    }
    let mut sensitive = Vec::with_capacity(n);
    for _ in 0..n {
        sensitive.push(read_u32(&mut r)? as usize);
    }
    let mut split = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        split.push(match tag[0] {
            0 => Split::Train,
            1 => Split::Valid,
            2 => Split::Test,
            other => bail!("bad split tag {other}"),
        });
    }
    let mut dataset = Dataset::new(features, labels, sensitive, feature_names)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    dataset.split = split;
    Ok(dataset)
}

/// Writes a representation dump: header `(n, d)` then row-major f64.
pub fn save_matrix(path: &Path, matrix: &Matrix) -> Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_u64(&mut w, matrix.rows() as u64)?;
    write_u64(&mut w, matrix.cols() as u64)?;
    for v in matrix.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<Matrix> {
    let file =
        std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut r = BufReader::new(file);
    let n = read_u64(&mut r)? as usize;
    let d = read_u64(&mut r)? as usize;
    let mut matrix = Matrix::zeros(n, d);
    for v in matrix.as_mut_slice() {
        *v = read_f64(&mut r)?;
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        bail!("{} has trailing bytes beyond the declared shape", path.display());
    }
    Ok(matrix)
}

/// Class ids stored as an `(n, 1)` dump.
pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let matrix = Matrix::from_fn(labels.len(), 1, |i, _| labels[i] as f64);
    save_matrix(path, &matrix)
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let matrix = load_matrix(path)?;
    if matrix.cols() != 1 {
        bail!("{} is not a label dump (expected one column)", path.display());
    }
    matrix
        .as_slice()
        .iter()
        .map(|&v| {
            if v.fract() != 0.0 || v < 0.0 {
                bail!("label value {v} is not a class id");
            }
            Ok(v as usize)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use federate_core::data::{make_synthetic, split_dataset};

    #[test]
    fn dataset_cache_round_trips_losslessly() {
        let means = vec![vec![0.25, -1.5], vec![1.0 / 3.0, 2e-17]];
        let mut ds = make_synthetic(200, 2, &means, &[0.1, 0.2], 1.0, 3).unwrap();
        split_dataset(&mut ds, [0.6, 0.2, 0.2], 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.bin");
        save_dataset(&path, &ds).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(ds, loaded);
    }

    #[test]
    fn matrix_dump_round_trips_and_rejects_junk() {
        let m = Matrix::from_fn(7, 3, |i, j| (i as f64 + 0.1) / (j as f64 + 0.7));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reps.bin");
        save_matrix(&path, &m).unwrap();
        assert_eq!(load_matrix(&path).unwrap(), m);
        std::fs::write(dir.path().join("junk.bin"), b"nope").unwrap();
        assert!(load_matrix(&dir.path().join("junk.bin")).is_err());
    }

    #[test]
    fn label_dump_round_trips() {
        let labels = vec![0usize, 1, 1, 0, 2];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.bin");
        save_labels(&path, &labels).unwrap();
        assert_eq!(load_labels(&path).unwrap(), labels);
    }
}
