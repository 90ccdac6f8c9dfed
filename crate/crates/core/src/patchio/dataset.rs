use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::grid::Grid;
use crate::label::Label;
use crate::patchio::{flip_x, read_gimg, rotate90, write_gimg, GrayImage};

pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Augment {
    Original,
    Flipped,
    Rotated90,
}

impl fmt::Display for Augment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Augment::Original => "original",
            Augment::Flipped => "flipped",
            Augment::Rotated90 => "rotated90",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPatch {
    pub pixels: Grid<u16>,
    pub label: Label,
    pub augment: Augment,
    pub source_id: String,
    pub origin_row: usize,
    pub origin_col: usize,
}

impl LabeledPatch {
    pub fn original(pixels: Grid<u16>, label: Label, source_id: &str, origin_row: usize, origin_col: usize) -> Self {
        Self { pixels, label, augment: Augment::Original, source_id: source_id.to_string(), origin_row, origin_col }
    }

    /// Identity of the untransformed patch this one derives from.
    pub fn source_key(&self) -> (String, usize, usize) {
        (self.source_id.clone(), self.origin_row, self.origin_col)
    }

    pub fn file_name(&self) -> String {
        format!("{}_r{}_c{}_{}.gimg", self.source_id, self.origin_row, self.origin_col, self.augment)
    }
}

/// Appends a flipped and a rotated copy after every original patch.
pub fn augment_dataset(patches: &[LabeledPatch]) -> Result<Vec<LabeledPatch>> {
    let mut out = Vec::with_capacity(patches.len() * 3);
    for p in patches.iter().filter(|p| p.augment == Augment::Original) {
        out.push(p.clone());
        out.push(LabeledPatch { pixels: flip_x(&p.pixels), augment: Augment::Flipped, ..p.clone() });
        out.push(LabeledPatch { pixels: rotate90(&p.pixels)?, augment: Augment::Rotated90, ..p.clone() });
    }
    Ok(out)
}

/// One manifest row per patch file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub file: String,
    pub source_id: String,
    pub origin_row: usize,
    pub origin_col: usize,
    pub label: Label,
    pub augment: Augment,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes patch files plus `manifest.csv` into `dir`.
pub fn write_patch_dataset(dir: &Path, patches: &[LabeledPatch]) -> Result<Vec<ManifestRecord>> {
    std::fs::create_dir_all(dir)?;
    let mut records = Vec::with_capacity(patches.len());
    for p in patches {
        let file = p.file_name();
        write_gimg(&dir.join(&file), &GrayImage::new(file.trim_end_matches(".gimg"), p.pixels.clone())?)?;
        records.push(ManifestRecord {
            file,
            source_id: p.source_id.clone(),
            origin_row: p.origin_row,
            origin_col: p.origin_col,
            label: p.label,
            augment: p.augment,
        });
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in &records {
        wtr.serialize(r)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::format(e.to_string()))?;
    fsutil::write_atomic(&dir.join(MANIFEST_FILE), |f| std::io::Write::write_all(f, &bytes))?;
    Ok(records)
}

pub fn read_patch_dataset(dir: &Path) -> Result<Vec<LabeledPatch>> {
    read_manifest(&dir.join(MANIFEST_FILE))?
        .into_iter()
        .map(|r| {
            let img = read_gimg(&dir.join(&r.file))?;
            Ok(LabeledPatch {
                pixels: img.into_pixels(),
                label: r.label,
                augment: r.augment,
                source_id: r.source_id,
                origin_row: r.origin_row,
                origin_col: r.origin_col,
            })
        })
        .collect()
}
