use crate::cnn::Tensor3;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// 3x3 kernel stored `(kh, kw, in_ch, out_ch)` row-major, plus one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvWeights<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> ConvWeights<T> {
    pub fn new(in_channels: usize, out_channels: usize, kernel: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if kernel.len() != 9 * in_channels * out_channels || bias.len() != out_channels {
            return Err(Error::shape(format!(
                "conv {in_channels}->{out_channels} needs {} kernel and {out_channels} bias values, got {} and {}",
                9 * in_channels * out_channels,
                kernel.len(),
                bias.len()
            )));
        }
        Ok(Self { in_channels, out_channels, kernel, bias })
    }
}

/// Stride-1, pad-1 cross-correlation in double precision.
///
/// Each of the nine kernel taps is one GEMM over the zero-padded input viewed as a
/// `(H * (W + 2)) x C` matrix with the tap's offset; output rows falling on the
/// padding columns are dropped.
pub(crate) fn conv3x3_f64<W: Real>(input: &Tensor3<f64>, w: &ConvWeights<W>) -> Result<Tensor3<f64>> {
    let (h, wd, c) = input.shape();
    if c != w.in_channels {
        return Err(Error::shape(format!("conv expects {} input channels, got {c}", w.in_channels)));
    }
    let oc = w.out_channels;
    let pw = wd + 2;
    let mut padded = vec![0.0f64; (h + 2) * pw * c];
    for y in 0..h {
        let dst = ((y + 1) * pw + 1) * c;
        padded[dst..dst + wd * c].copy_from_slice(&input.data[y * wd * c..(y + 1) * wd * c]);
    }
    let kernel: Vec<f64> = w.kernel.iter().map(|v| v.as_f64()).collect();
    let bias: Vec<f64> = w.bias.iter().map(|v| v.as_f64()).collect();

    let m = h * pw - 2;
    let mut wide = vec![0.0f64; m * oc];
    for row in wide.chunks_exact_mut(oc) {
        row.copy_from_slice(&bias);
    }
    if c > 0 && h > 0 {
        for kh in 0..3 {
            for kw in 0..3 {
                let offset = (kh * pw + kw) * c;
                let tap = &kernel[(kh * 3 + kw) * c * oc..(kh * 3 + kw + 1) * c * oc];
                assert!(offset + (m - 1) * c + c <= padded.len());
                // SAFETY: the last row read starts at offset + (m - 1) * c and spans c values,
                // asserted in bounds above; `tap` is c x oc and `wide` is m x oc.
                unsafe {
                    matrixmultiply::dgemm(
                        m,
                        c,
                        oc,
                        1.0,
                        padded.as_ptr().add(offset),
                        c as isize,
                        1,
                        tap.as_ptr(),
                        oc as isize,
                        1,
                        1.0,
                        wide.as_mut_ptr(),
                        oc as isize,
                        1,
                    );
                }
            }
        }
    }
    let mut out = Vec::with_capacity(h * wd * oc);
    for y in 0..h {
        out.extend_from_slice(&wide[y * pw * oc..(y * pw + wd) * oc]);
    }
    Tensor3::new(h, wd, oc, out)
}

pub fn conv3x3_forward<T: Real>(input: &Tensor3<T>, w: &ConvWeights<T>) -> Result<Tensor3<T>> {
    Ok(conv3x3_f64(&input.cast(), w)?.cast())
}

pub fn relu_in_place<T: Real>(values: &mut [T]) {
    for v in values {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Per-channel max over disjoint 2x2 windows.
pub fn maxpool2x2<T: Real>(input: &Tensor3<T>) -> Result<Tensor3<T>> {
    let (h, w, c) = input.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::shape(format!("maxpool needs even extents, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(oh * ow * c);
    for y in 0..oh {
        for x in 0..ow {
            for ch in 0..c {
                let m = input
                    .get(2 * y, 2 * x, ch)
                    .max(input.get(2 * y, 2 * x + 1, ch))
                    .max(input.get(2 * y + 1, 2 * x, ch))
                    .max(input.get(2 * y + 1, 2 * x + 1, ch));
                out.push(m);
            }
        }
    }
    Tensor3::new(oh, ow, c, out)
}

/// Fully connected layer over a batch; `weights` is `(in, out)` row-major.
///
/// Accumulates in `f64`. Zero inputs are skipped, which leaves the per-output
/// summation order unchanged, so results do not depend on batch composition.
pub fn fc_forward<W: Real>(inputs: &[Vec<f64>], weights: &[W], bias: &[W]) -> Result<Vec<Vec<f64>>> {
    let out_dim = bias.len();
    let in_dim = inputs.first().map_or(0, Vec::len);
    if out_dim == 0 || weights.len() != in_dim * out_dim {
        return Err(Error::shape(format!(
            "fc weights of length {} do not match {in_dim}x{out_dim}",
            weights.len()
        )));
    }
    if let Some(bad) = inputs.iter().find(|x| x.len() != in_dim) {
        return Err(Error::shape(format!("fc input of length {}, expected {in_dim}", bad.len())));
    }
    let mut acc: Vec<Vec<f64>> = inputs.iter().map(|_| vec![0.0; out_dim]).collect();
    let mut row = vec![0.0f64; out_dim];
    for i in 0..in_dim {
        if inputs.iter().all(|x| x[i] == 0.0) {
            continue;
        }
        for (r, w) in row.iter_mut().zip(&weights[i * out_dim..(i + 1) * out_dim]) {
            *r = w.as_f64();
        }
        for (x, a) in inputs.iter().zip(acc.iter_mut()) {
            let xi = x[i];
            if xi != 0.0 {
                for (a, r) in a.iter_mut().zip(&row) {
                    *a += xi * r;
                }
            }
        }
    }
    for a in &mut acc {
        for (v, b) in a.iter_mut().zip(bias) {
            *v += b.as_f64();
        }
    }
    Ok(acc)
}
