//! `VGGW` weight files.
//!
//! Layout (little-endian): magic `VGGW`, `u32` version (1), `u32` tensor count, then per
//! tensor a `u16` name length, the name bytes, a `u8` rank, `u32` dims and `f32` data in
//! row-major order. Conv kernels are `(kh, kw, in, out)`, FC weights `(in, out)`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::cnn::layers::ConvWeights;
use crate::cnn::network::{vgg19_layers, FcWeights, LayerKind, Network};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::scalar::Real;

const MAGIC: &[u8; 4] = b"VGGW";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

/// Named tensors as stored on disk, plus the data checksum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorStore {
    pub tensors: BTreeMap<String, WeightTensor>,
    pub checksum: String,
}

pub(crate) fn checksum<'a>(chunks: impl IntoIterator<Item = &'a [f32]>) -> String {
    let mut hasher = Sha256::new();
    let mut buf = Vec::new();
    for chunk in chunks {
        buf.clear();
        buf.extend(chunk.iter().flat_map(|v| v.to_le_bytes()));
        hasher.update(&buf);
    }
    hex::encode(hasher.finalize())
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn parse_err(tensor: &str, reason: impl Into<String>) -> Error {
    Error::TensorParse { tensor: tensor.to_string(), reason: reason.into() }
}

/// Reads every tensor without architectural validation.
pub fn read_store(path: &Path) -> Result<TensorStore> {
    let mut r = BufReader::with_capacity(1 << 20, File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| parse_err("<header>", "truncated header"))?;
    if &magic != MAGIC {
        return Err(parse_err("<header>", "bad magic, expected VGGW"));
    }
    let version = read_u32(&mut r).map_err(|_| parse_err("<header>", "truncated header"))?;
    if version != VERSION {
        return Err(parse_err("<header>", format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r).map_err(|_| parse_err("<header>", "truncated header"))?;
    let mut hasher = Sha256::new();
    let mut tensors = BTreeMap::new();
    for index in 0..count {
        let placeholder = format!("<tensor #{index}>");
        let mut len = [0u8; 2];
        r.read_exact(&mut len).map_err(|_| parse_err(&placeholder, "truncated name length"))?;
        let mut name = vec![0u8; u16::from_le_bytes(len) as usize];
        r.read_exact(&mut name).map_err(|_| parse_err(&placeholder, "truncated name"))?;
        let name = String::from_utf8(name).map_err(|_| parse_err(&placeholder, "name is not UTF-8"))?;
        let mut ndim = [0u8; 1];
        r.read_exact(&mut ndim).map_err(|_| parse_err(&name, "truncated rank"))?;
        let dims = (0..ndim[0])
            .map(|_| read_u32(&mut r).map(|d| d as usize))
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|_| parse_err(&name, "truncated dims"))?;
        let n: usize = dims.iter().product();
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes).map_err(|_| parse_err(&name, "truncated data"))?;
        hasher.update(&bytes);
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        if tensors.insert(name.clone(), WeightTensor { dims, data }).is_some() {
            return Err(parse_err(&name, "duplicate tensor"));
        }
    }
    Ok(TensorStore { tensors, checksum: hex::encode(hasher.finalize()) })
}

fn take(store: &mut TensorStore, name: &str, expected: &[usize]) -> Result<Vec<f32>> {
    let t = store.tensors.remove(name).ok_or_else(|| Error::MissingTensor(name.to_string()))?;
    if t.dims != expected {
        return Err(Error::TensorShape { tensor: name.to_string(), expected: expected.to_vec(), found: t.dims });
    }
    Ok(t.data)
}

/// Loads and validates a full VGG19 weight file.
pub fn load_weights<T: Real>(path: &Path) -> Result<Network<T>> {
    let mut store = read_store(path)?;
    let mut convs = Vec::new();
    let mut fcs = Vec::new();
    let cast = |v: Vec<f32>| v.into_iter().map(|x| T::of(f64::from(x))).collect::<Vec<T>>();
    for layer in vgg19_layers() {
        let Some((wshape, bshape)) = layer.tensor_shapes() else { continue };
        let w = cast(take(&mut store, &format!("{}.weight", layer.name), &wshape)?);
        let b = cast(take(&mut store, &format!("{}.bias", layer.name), &bshape)?);
        match layer.kind {
            LayerKind::Conv3x3 => convs.push(ConvWeights::new(layer.in_channels, layer.out_channels, w, b)?),
            _ => fcs.push(FcWeights { weight: w, bias: b }),
        }
    }
    if let Some(extra) = store.tensors.keys().next() {
        return Err(parse_err(extra, "unexpected tensor"));
    }
    Ok(Network::from_parts(convs, fcs, store.checksum))
}

/// Writes `net` as `f32` in architecture order (weight then bias per layer).
pub fn save_weights<T: Real>(path: &Path, net: &Network<T>) -> Result<()> {
    let tensors = net.tensors();
    fsutil::write_atomic(path, |f| {
        let mut w = BufWriter::with_capacity(1 << 20, f);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(2 * tensors.len() as u32).to_le_bytes())?;
        let mut buf = Vec::new();
        for (layer, weight, bias) in &tensors {
            let (wshape, bshape) = layer.tensor_shapes().expect("weight layer");
            for (suffix, dims, data) in [("weight", wshape, *weight), ("bias", bshape, *bias)] {
                let name = format!("{}.{suffix}", layer.name);
                w.write_all(&(name.len() as u16).to_le_bytes())?;
                w.write_all(name.as_bytes())?;
                w.write_all(&[dims.len() as u8])?;
                for d in &dims {
                    w.write_all(&(*d as u32).to_le_bytes())?;
                }
                buf.clear();
                buf.extend(data.iter().flat_map(|v| (v.as_f64() as f32).to_le_bytes()));
                w.write_all(&buf)?;
            }
        }
        w.flush()
    })
}

/// Writes an arbitrary tensor list; used to build malformed files in tests.
pub fn write_store(path: &Path, tensors: &[(String, WeightTensor)]) -> Result<()> {
    fsutil::write_atomic(path, |f| {
        let mut w = BufWriter::new(f);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(tensors.len() as u32).to_le_bytes())?;
        for (name, t) in tensors {
            w.write_all(&(name.len() as u16).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&[t.dims.len() as u8])?;
            for d in &t.dims {
                w.write_all(&(*d as u32).to_le_bytes())?;
            }
            for v in &t.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_round_trip_and_byte_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.vggw");
        let t = WeightTensor { dims: vec![2, 1], data: vec![1.0, -2.5] };
        write_store(&path, &[("a.weight".into(), t.clone())]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"VGGW");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..14], &8u16.to_le_bytes());
        assert_eq!(&bytes[14..22], b"a.weight");
        assert_eq!(bytes[22], 2);
        assert_eq!(&bytes[23..27], &2u32.to_le_bytes());
        assert_eq!(&bytes[31..35], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 39);
        let store = read_store(&path).unwrap();
        assert_eq!(store.tensors["a.weight"], t);
        assert_eq!(store.checksum, checksum([t.data.as_slice()]));
    }

    #[test]
    fn truncated_tensor_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.vggw");
        let t = WeightTensor { dims: vec![4], data: vec![0.0; 4] };
        write_store(&path, &[("conv1_1.bias".into(), t)]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        match read_store(&path) {
            Err(Error::TensorParse { tensor, .. }) => assert_eq!(tensor, "conv1_1.bias"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.vggw");
        std::fs::write(&path, b"VGGX\x01\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_store(&path), Err(Error::TensorParse { .. })));
    }

    #[test]
    fn missing_first_tensor_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.vggw");
        write_store(&path, &[]).unwrap();
        match load_weights::<f32>(&path) {
            Err(Error::MissingTensor(name)) => assert_eq!(name, "conv1_1.weight"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_conv_shape_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.vggw");
        let t = WeightTensor { dims: vec![3, 3, 3, 32], data: vec![0.0; 864] };
        write_store(&path, &[("conv1_1.weight".into(), t)]).unwrap();
        match load_weights::<f32>(&path) {
            Err(Error::TensorShape { tensor, expected, found }) => {
                assert_eq!(tensor, "conv1_1.weight");
                assert_eq!(expected, vec![3, 3, 3, 64]);
                assert_eq!(found, vec![3, 3, 3, 32]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
