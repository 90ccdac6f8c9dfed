use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnn::network::INPUT_SIDE;
use crate::cnn::{Network, Tap, Tensor3};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::label::Label;
use crate::matrix::Matrix;
use crate::patchio::{normalize_patch, Augment, LabeledPatch, NormalizedPatch};
use crate::scalar::Real;

const FMAT_MAGIC: &[u8; 4] = b"FMAT";
/// Patches pushed through the FC layers together.
const BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub origin_row: usize,
    pub origin_col: usize,
    pub augment: Augment,
}

impl Provenance {
    pub fn of(p: &LabeledPatch) -> Self {
        Self { source_id: p.source_id.clone(), origin_row: p.origin_row, origin_col: p.origin_col, augment: p.augment }
    }

    pub fn source_key(&self) -> (String, usize, usize) {
        (self.source_id.clone(), self.origin_row, self.origin_col)
    }
}

/// Observations x features, with per-row labels and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub values: Matrix<T>,
    pub labels: Vec<Label>,
    pub provenance: Vec<Provenance>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(values: Matrix<T>, labels: Vec<Label>, provenance: Vec<Provenance>) -> Result<Self> {
        if labels.len() != values.rows() || provenance.len() != values.rows() {
            return Err(Error::shape(format!(
                "{} rows but {} labels and {} provenance records",
                values.rows(),
                labels.len(),
                provenance.len()
            )));
        }
        Ok(Self { values, labels, provenance })
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            provenance: idx.iter().map(|&i| self.provenance[i].clone()).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> FeatureMatrix<U> {
        FeatureMatrix { values: self.values.cast(), labels: self.labels.clone(), provenance: self.provenance.clone() }
    }
}

/// Bilinear resize (half-pixel centres) to 224x224, then the channel copied three times.
pub fn prepare_input<T: Real>(patch: &NormalizedPatch<T>) -> Result<Tensor3<T>> {
    let g = &patch.values;
    if g.is_empty() {
        return Err(Error::shape("empty patch"));
    }
    if !g.is_square() {
        return Err(Error::shape(format!("patch must be square, got {}x{}", g.rows(), g.cols())));
    }
    let n = g.rows();
    let scale = n as f64 / INPUT_SIDE as f64;
    let taps: Vec<(usize, usize, f64)> = (0..INPUT_SIDE)
        .map(|d| {
            let src = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = src.floor() as usize;
            (i0, (i0 + 1).min(n - 1), src - i0 as f64)
        })
        .collect();
    let mut data = Vec::with_capacity(INPUT_SIDE * INPUT_SIDE * 3);
    for &(r0, r1, fr) in &taps {
        for &(c0, c1, fc) in &taps {
            let v = |r, c| g.get(r, c).as_f64();
            let top = v(r0, c0) + (v(r0, c1) - v(r0, c0)) * fc;
            let bottom = v(r1, c0) + (v(r1, c1) - v(r1, c0)) * fc;
            let x = T::of(top + (bottom - top) * fr);
            data.extend_from_slice(&[x, x, x]);
        }
    }
    Tensor3::new(INPUT_SIDE, INPUT_SIDE, 3, data)
}

/// Normalizes, resizes and taps every patch; row `i` belongs to `patches[i]`.
pub fn extract_features<T: Real>(net: &Network<T>, patches: &[LabeledPatch], tap: Tap) -> Result<FeatureMatrix<T>> {
    let mut values = Matrix::empty(tap.width());
    for chunk in patches.chunks(BATCH) {
        let inputs: Vec<Tensor3<T>> = chunk
            .par_iter()
            .map(|p| prepare_input(&normalize_patch::<T>(&p.pixels)?))
            .collect::<Result<_>>()?;
        for row in net.forward_batch(&inputs, tap)? {
            values.push_row(&row)?;
        }
    }
    FeatureMatrix::new(
        values,
        patches.iter().map(|p| p.label).collect(),
        patches.iter().map(Provenance::of).collect(),
    )
}

/// `FMAT` file: magic, `u32` rows, `u32` cols, then `f32` values row-major (little-endian).
pub fn write_fmat<T: Real>(path: &Path, m: &Matrix<T>) -> Result<()> {
    fsutil::write_atomic(path, |f| {
        let mut w = BufWriter::with_capacity(1 << 20, f);
        w.write_all(FMAT_MAGIC)?;
        w.write_all(&(m.rows() as u32).to_le_bytes())?;
        w.write_all(&(m.cols() as u32).to_le_bytes())?;
        for v in m.data() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
        w.flush()
    })
}

pub fn read_fmat<T: Real>(path: &Path) -> Result<Matrix<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 12];
    r.read_exact(&mut head).map_err(|_| Error::format("truncated FMAT header"))?;
    if &head[0..4] != FMAT_MAGIC {
        return Err(Error::format("bad FMAT magic"));
    }
    let rows = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let mut bytes = vec![0u8; rows * cols * 4];
    r.read_exact(&mut bytes).map_err(|_| Error::format("truncated FMAT data"))?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| T::of(f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

#[derive(Debug, Serialize, Deserialize)]
struct RowRecord {
    row: usize,
    label: Label,
    source_id: String,
    origin_row: usize,
    origin_col: usize,
    augment: Augment,
}

/// Writes the `FMAT` values and the companion label manifest.
pub fn write_feature_matrix<T: Real>(fmat: &Path, labels: &Path, fm: &FeatureMatrix<T>) -> Result<()> {
    write_fmat(fmat, &fm.values)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for (row, (label, p)) in fm.labels.iter().zip(&fm.provenance).enumerate() {
        wtr.serialize(RowRecord {
            row,
            label: *label,
            source_id: p.source_id.clone(),
            origin_row: p.origin_row,
            origin_col: p.origin_col,
            augment: p.augment,
        })?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::format(e.to_string()))?;
    fsutil::write_atomic(labels, |f| f.write_all(&bytes))
}

/// Labels and provenance from a companion label manifest.
pub fn read_label_manifest(labels: &Path) -> Result<(Vec<Label>, Vec<Provenance>)> {
    let mut rdr = csv::Reader::from_path(labels)?;
    let mut ls = Vec::new();
    let mut prov = Vec::new();
    for (i, rec) in rdr.deserialize::<RowRecord>().enumerate() {
        let rec = rec?;
        if rec.row != i {
            return Err(Error::format(format!("label manifest row {} out of order at line {i}", rec.row)));
        }
        ls.push(rec.label);
        prov.push(Provenance {
            source_id: rec.source_id,
            origin_row: rec.origin_row,
            origin_col: rec.origin_col,
            augment: rec.augment,
        });
    }
    Ok((ls, prov))
}

pub fn read_feature_matrix<T: Real>(fmat: &Path, labels: &Path) -> Result<FeatureMatrix<T>> {
    let values = read_fmat(fmat)?;
    let (ls, prov) = read_label_manifest(labels)?;
    FeatureMatrix::new(values, ls, prov)
}
