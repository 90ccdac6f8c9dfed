//! Image ingestion, stride-grid patch extraction, augmentation and patch normalization.

mod augment;
mod dataset;
mod extract;
mod image;
mod normalize;

pub use augment::{flip_x, rotate90};
pub use dataset::{
    augment_dataset, read_manifest, read_patch_dataset, write_patch_dataset, Augment, LabeledPatch, ManifestRecord,
    MANIFEST_FILE,
};
pub use extract::{extract_patches, label_patch, PatchAt, PatchGridConfig, PatchLabel};
pub use image::{
    load_image, load_mask, read_gimg, read_gmsk, read_png_image, read_png_mask, write_gimg, write_gmsk, GrayImage,
    MassMask, MAX_INTENSITY,
};
pub use normalize::{normalize_patch, NormalizedPatch};
