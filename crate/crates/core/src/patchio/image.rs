use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::grid::Grid;

/// Largest 14-bit intensity.
pub const MAX_INTENSITY: u16 = (1 << 14) - 1;

const GIMG_MAGIC: &[u8; 4] = b"GIMG";
const GMSK_MAGIC: &[u8; 4] = b"GMSK";

/// Single-channel 14-bit mammogram (or patch).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub id: String,
    pixels: Grid<u16>,
}

impl GrayImage {
    pub fn new(id: impl Into<String>, pixels: Grid<u16>) -> Result<Self> {
        if let Some(&bad) = pixels.data().iter().find(|&&v| v > MAX_INTENSITY) {
            return Err(Error::domain(format!("intensity {bad} exceeds 14-bit range")));
        }
        Ok(Self { id: id.into(), pixels })
    }

    pub fn rows(&self) -> usize {
        self.pixels.rows()
    }

    pub fn cols(&self) -> usize {
        self.pixels.cols()
    }

    pub fn pixels(&self) -> &Grid<u16> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Grid<u16> {
        self.pixels
    }
}

/// Binary ground-truth mask; nonzero marks mass pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MassMask {
    bits: Grid<bool>,
}

impl MassMask {
    pub fn new(bits: Grid<bool>) -> Self {
        Self { bits }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { bits: Grid::filled(rows, cols, false) }
    }

    pub fn rows(&self) -> usize {
        self.bits.rows()
    }

    pub fn cols(&self) -> usize {
        self.bits.cols()
    }

    pub fn bits(&self) -> &Grid<bool> {
        &self.bits
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits.set(r, c, v);
    }

    pub fn count(&self) -> usize {
        self.bits.data().iter().filter(|&&b| b).count()
    }

    pub fn matches(&self, image: &GrayImage) -> bool {
        self.rows() == image.rows() && self.cols() == image.cols()
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<(usize, usize)> {
    let mut buf = [0u8; 16];
    r.read_exact(&mut buf).map_err(|_| Error::format("truncated raw header"))?;
    if &buf[0..4] != magic {
        return Err(Error::format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&buf[0..4]),
            String::from_utf8_lossy(magic)
        )));
    }
    let rows = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    Ok((rows, cols))
}

fn header(magic: &[u8; 4], rows: usize, cols: usize) -> [u8; 16] {
    let mut buf = [0u8; 16];
    buf[0..4].copy_from_slice(magic);
    buf[4..8].copy_from_slice(&(rows as u32).to_le_bytes());
    buf[8..12].copy_from_slice(&(cols as u32).to_le_bytes());
    buf
}

/// Raw `GIMG` image: 16-byte header then little-endian `u16` pixels, row-major.
pub fn read_gimg(path: &Path) -> Result<GrayImage> {
    let mut r = BufReader::new(File::open(path)?);
    let (rows, cols) = read_header(&mut r, GIMG_MAGIC)?;
    let mut bytes = vec![0u8; rows * cols * 2];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::format(format!("{}: truncated pixel data", path.display())))?;
    let data = bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    GrayImage::new(stem(path), Grid::new(rows, cols, data)?)
}

pub fn write_gimg(path: &Path, image: &GrayImage) -> Result<()> {
    fsutil::write_atomic(path, |w| {
        let mut w = BufWriter::new(w);
        w.write_all(&header(GIMG_MAGIC, image.rows(), image.cols()))?;
        for &v in image.pixels().data() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    })
}

/// Raw `GMSK` mask: same header as `GIMG`, then one byte per pixel.
pub fn read_gmsk(path: &Path) -> Result<MassMask> {
    let mut r = BufReader::new(File::open(path)?);
    let (rows, cols) = read_header(&mut r, GMSK_MAGIC)?;
    let mut bytes = vec![0u8; rows * cols];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::format(format!("{}: truncated mask data", path.display())))?;
    Ok(MassMask::new(Grid::new(rows, cols, bytes.into_iter().map(|b| b != 0).collect())?))
}

pub fn write_gmsk(path: &Path, mask: &MassMask) -> Result<()> {
    fsutil::write_atomic(path, |w| {
        let mut w = BufWriter::new(w);
        w.write_all(&header(GMSK_MAGIC, mask.rows(), mask.cols()))?;
        let bytes: Vec<u8> = mask.bits().data().iter().map(|&b| u8::from(b)).collect();
        w.write_all(&bytes)?;
        w.flush()
    })
}

fn decode_png(path: &Path) -> Result<(usize, usize, png::BitDepth, Vec<u8>)> {
    let decoder = png::Decoder::new(BufReader::new(File::open(path)?));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::format(format!("{}: expected a single-channel PNG", path.display())));
    }
    buf.truncate(info.buffer_size());
    Ok((info.height as usize, info.width as usize, info.bit_depth, buf))
}

/// 16-bit (or 8-bit) grayscale PNG.
pub fn read_png_image(path: &Path) -> Result<GrayImage> {
    let (rows, cols, depth, buf) = decode_png(path)?;
    let data: Vec<u16> = match depth {
        png::BitDepth::Sixteen => buf.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect(),
        png::BitDepth::Eight => buf.iter().map(|&b| u16::from(b)).collect(),
        other => return Err(Error::format(format!("{}: unsupported bit depth {other:?}", path.display()))),
    };
    GrayImage::new(stem(path), Grid::new(rows, cols, data)?)
}

/// 8-bit grayscale PNG mask, nonzero = mass.
pub fn read_png_mask(path: &Path) -> Result<MassMask> {
    let (rows, cols, depth, buf) = decode_png(path)?;
    if depth != png::BitDepth::Eight {
        return Err(Error::format(format!("{}: masks must be 8-bit", path.display())));
    }
    Ok(MassMask::new(Grid::new(rows, cols, buf.into_iter().map(|b| b != 0).collect())?))
}

fn extension(path: &Path) -> String {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase()).unwrap_or_default()
}

/// Dispatches on extension: `.png` or `.gimg`.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    match extension(path).as_str() {
        "png" => read_png_image(path),
        "gimg" => read_gimg(path),
        other => Err(Error::format(format!("{}: unknown image extension `{other}`", path.display()))),
    }
}

/// Dispatches on extension: `.png` or `.gmsk`.
pub fn load_mask(path: &Path) -> Result<MassMask> {
    match extension(path).as_str() {
        "png" => read_png_mask(path),
        "gmsk" => read_gmsk(path),
        other => Err(Error::format(format!("{}: unknown mask extension `{other}`", path.display()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gimg_round_trip_and_header_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.gimg");
        let img = GrayImage::new("a", Grid::new(2, 3, vec![0, 1, 2, 300, 16383, 7]).unwrap()).unwrap();
        write_gimg(&path, &img).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"GIMG");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &[0; 4]);
        assert_eq!(&bytes[16 + 6..16 + 8], &300u16.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 12);
        assert_eq!(read_gimg(&path).unwrap(), img);
    }

    #[test]
    fn rejects_out_of_range_intensity() {
        assert!(GrayImage::new("x", Grid::new(1, 1, vec![16384]).unwrap()).is_err());
    }

    #[test]
    fn truncated_and_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.gimg");
        std::fs::write(&path, b"GIMG\x02\0\0\0\x02\0\0\0\0\0\0\0\x01\0").unwrap();
        assert!(matches!(read_gimg(&path), Err(Error::Format(_))));
        std::fs::write(&path, b"GMSK\x01\0\0\0\x01\0\0\0\0\0\0\0\x01\0").unwrap();
        assert!(matches!(read_gimg(&path), Err(Error::Format(_))));
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gmsk");
        let mut m = MassMask::empty(3, 2);
        m.set(1, 1, true);
        write_gmsk(&path, &m).unwrap();
        let back = load_mask(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.count(), 1);
    }

    #[test]
    fn png_ingestion() {
        let dir = tempfile::tempdir().unwrap();
        let img_path = dir.path().join("scan.png");
        {
            let w = BufWriter::new(File::create(&img_path).unwrap());
            let mut enc = png::Encoder::new(w, 3, 2);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut writer = enc.write_header().unwrap();
            let vals: [u16; 6] = [0, 100, 16383, 5, 6, 7];
            let bytes: Vec<u8> = vals.iter().flat_map(|v| v.to_be_bytes()).collect();
            writer.write_image_data(&bytes).unwrap();
        }
        let img = load_image(&img_path).unwrap();
        assert_eq!((img.rows(), img.cols()), (2, 3));
        assert_eq!(img.pixels().data(), &[0, 100, 16383, 5, 6, 7]);
        assert_eq!(img.id, "scan");

        let mask_path = dir.path().join("scan_mask.png");
        {
            let w = BufWriter::new(File::create(&mask_path).unwrap());
            let mut enc = png::Encoder::new(w, 3, 2);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().unwrap();
            writer.write_image_data(&[0, 255, 0, 0, 1, 0]).unwrap();
        }
        let mask = load_mask(&mask_path).unwrap();
        assert!(mask.matches(&img));
        assert_eq!(mask.count(), 2);
    }
}
