use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::patchio::{GrayImage, MassMask};

/// Stride grid geometry and the mask-overlap labeling threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchGridConfig {
    pub patch_height: usize,
    pub patch_width: usize,
    pub stride: usize,
    /// Minimum fraction of the patch area covered by mask pixels for the mass label.
    pub positive_overlap_min: f64,
}

impl Default for PatchGridConfig {
    fn default() -> Self {
        Self { patch_height: 454, patch_width: 454, stride: 300, positive_overlap_min: 0.10 }
    }
}

impl PatchGridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_height == 0 || self.patch_width == 0 || self.stride == 0 {
            return Err(Error::domain("patch extents and stride must be at least 1"));
        }
        if !(self.positive_overlap_min > 0.0 && self.positive_overlap_min <= 1.0) {
            return Err(Error::domain(format!(
                "positive_overlap_min must lie in (0, 1], got {}",
                self.positive_overlap_min
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> usize {
        self.patch_height * self.patch_width
    }
}

/// Patch cut from a source image. Origins are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchAt {
    pub origin_row: usize,
    pub origin_col: usize,
    pub pixels: Grid<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchLabel {
    Mass,
    NonMass,
    Discard,
}

/// 1-based origins along one axis. The last patch must end strictly before `extent`.
fn axis_origins(extent: usize, patch: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..)
        .map(move |k| 1 + k * stride)
        .take_while(move |&origin| origin + patch < extent)
}

/// Cuts every patch visited by the stride scan, in row-major order.
///
/// The origin advances by `stride` from 1 along each axis and a patch is kept only
/// while `origin + extent < image extent`, so a patch ending on the last row or
/// column is never emitted.
pub fn extract_patches(image: &GrayImage, cfg: &PatchGridConfig) -> Result<Vec<PatchAt>> {
    cfg.validate()?;
    if image.rows() == 0 || image.cols() == 0 {
        return Err(Error::shape("empty image"));
    }
    let cols: Vec<usize> = axis_origins(image.cols(), cfg.patch_width, cfg.stride).collect();
    let mut out = Vec::new();
    for r in axis_origins(image.rows(), cfg.patch_height, cfg.stride) {
        for &c in &cols {
            let pixels = image.pixels().crop(r - 1, c - 1, cfg.patch_height, cfg.patch_width)?;
            out.push(PatchAt { origin_row: r, origin_col: c, pixels });
        }
    }
    Ok(out)
}

/// Labels the patch at a 1-based origin by its mask overlap.
pub fn label_patch(origin_row: usize, origin_col: usize, cfg: &PatchGridConfig, mask: &MassMask) -> Result<PatchLabel> {
    if origin_row == 0
        || origin_col == 0
        || origin_row - 1 + cfg.patch_height > mask.rows()
        || origin_col - 1 + cfg.patch_width > mask.cols()
    {
        return Err(Error::Bounds(format!(
            "patch {}x{} at ({origin_row},{origin_col}) outside {}x{} mask",
            cfg.patch_height,
            cfg.patch_width,
            mask.rows(),
            mask.cols()
        )));
    }
    let bits = mask.bits();
    let covered: usize = (origin_row - 1..origin_row - 1 + cfg.patch_height)
        .map(|r| bits.row(r)[origin_col - 1..origin_col - 1 + cfg.patch_width].iter().filter(|&&b| b).count())
        .sum();
    Ok(if covered == 0 {
        PatchLabel::NonMass
    } else if covered as f64 >= cfg.positive_overlap_min * cfg.area() as f64 {
        PatchLabel::Mass
    } else {
        PatchLabel::Discard
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blank(rows: usize, cols: usize) -> GrayImage {
        GrayImage::new("img", Grid::filled(rows, cols, 0)).unwrap()
    }

    fn cfg(patch: usize, stride: usize) -> PatchGridConfig {
        PatchGridConfig { patch_height: patch, patch_width: patch, stride, positive_overlap_min: 0.1 }
    }

    #[test]
    fn thousand_pixel_image_gives_four_patches() {
        let patches = extract_patches(&blank(1000, 1000), &PatchGridConfig::default()).unwrap();
        let origins: Vec<_> = patches.iter().map(|p| (p.origin_row, p.origin_col)).collect();
        assert_eq!(origins, vec![(1, 1), (1, 301), (301, 1), (301, 301)]);
        assert!(patches.iter().all(|p| p.pixels.rows() == 454 && p.pixels.cols() == 454));
    }

    #[test]
    fn strict_boundary_drops_touching_patch() {
        assert!(extract_patches(&blank(455, 455), &cfg(454, 300)).unwrap().is_empty());
        assert!(extract_patches(&blank(454, 454), &cfg(454, 1)).unwrap().is_empty());
        assert_eq!(extract_patches(&blank(456, 456), &cfg(454, 300)).unwrap().len(), 1);
    }

    #[test]
    fn patch_content_is_cropped_at_origin() {
        let data: Vec<u16> = (0..36).collect();
        let img = GrayImage::new("g", Grid::new(6, 6, data).unwrap()).unwrap();
        let patches = extract_patches(&img, &cfg(2, 2)).unwrap();
        // origins 1, 3 (3 + 2 < 6); 5 + 2 = 7 fails
        assert_eq!(patches.len(), 4);
        assert_eq!(patches[3].origin_row, 3);
        assert_eq!(patches[3].pixels.data(), &[14, 15, 20, 21]);
    }

    #[test]
    fn labels_by_overlap() {
        let c = cfg(10, 10);
        let mut full = MassMask::empty(20, 20);
        for r in 0..10 {
            for col in 0..10 {
                full.set(r, col, true);
            }
        }
        assert_eq!(label_patch(1, 1, &c, &full).unwrap(), PatchLabel::Mass);
        assert_eq!(label_patch(1, 1, &c, &MassMask::empty(20, 20)).unwrap(), PatchLabel::NonMass);

        let mut five = MassMask::empty(20, 20);
        for col in 0..5 {
            five.set(3, col, true);
        }
        assert_eq!(label_patch(1, 1, &c, &five).unwrap(), PatchLabel::Discard);
        for col in 5..10 {
            five.set(3, col, true);
        }
        assert_eq!(label_patch(1, 1, &c, &five).unwrap(), PatchLabel::Mass);
    }

    #[test]
    fn label_rejects_out_of_bounds() {
        let c = cfg(10, 10);
        let m = MassMask::empty(15, 15);
        assert!(matches!(label_patch(7, 1, &c, &m), Err(Error::Bounds(_))));
        assert!(matches!(label_patch(0, 1, &c, &m), Err(Error::Bounds(_))));
    }

    #[test]
    fn invalid_config() {
        assert!(cfg(0, 1).validate().is_err());
        let mut c = cfg(2, 1);
        c.positive_overlap_min = 0.0;
        assert!(c.validate().is_err());
        c.positive_overlap_min = 1.0;
        assert!(c.validate().is_ok());
    }
}
