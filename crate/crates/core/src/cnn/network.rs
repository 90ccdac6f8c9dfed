use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cnn::layers::{conv3x3_f64, fc_forward, maxpool2x2, relu_in_place, ConvWeights};
use crate::cnn::Tensor3;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Spatial side of the network input.
pub const INPUT_SIDE: usize = 224;
/// Length of the flatten activation (7 * 7 * 512).
pub const FLATTEN_WIDTH: usize = 7 * 7 * 512;
/// Width of FC1 and FC2.
pub const FC_WIDTH: usize = 4096;
const CLASSES: usize = 1000;
const INIT_BOUND: f32 = 0.05;

/// Conv widths per block; each block ends with a 2x2 max-pool.
const BLOCKS: [(usize, usize); 5] = [(64, 2), (128, 2), (256, 4), (512, 4), (512, 4)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv3x3,
    Relu,
    MaxPool2x2,
    Flatten,
    FullyConnected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// Weight-layer name (`conv1_1`, ..., `fc3`); empty for parameter-free layers.
    pub name: String,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl LayerSpec {
    fn plain(kind: LayerKind) -> Self {
        Self { kind, name: String::new(), in_channels: 0, out_channels: 0 }
    }

    fn weighted(kind: LayerKind, name: String, in_channels: usize, out_channels: usize) -> Self {
        Self { kind, name, in_channels, out_channels }
    }

    /// Shapes of the `.weight` and `.bias` tensors.
    pub fn tensor_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match self.kind {
            LayerKind::Conv3x3 => Some((vec![3, 3, self.in_channels, self.out_channels], vec![self.out_channels])),
            LayerKind::FullyConnected => Some((vec![self.in_channels, self.out_channels], vec![self.out_channels])),
            _ => None,
        }
    }
}

/// The 19-weight-layer VGG plan: 16 convs in five pooled blocks, then FC-4096, FC-4096, FC-1000.
pub fn vgg19_layers() -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    let mut in_ch = 3;
    for (b, &(width, count)) in BLOCKS.iter().enumerate() {
        for i in 0..count {
            layers.push(LayerSpec::weighted(LayerKind::Conv3x3, format!("conv{}_{}", b + 1, i + 1), in_ch, width));
            layers.push(LayerSpec::plain(LayerKind::Relu));
            in_ch = width;
        }
        layers.push(LayerSpec::plain(LayerKind::MaxPool2x2));
    }
    layers.push(LayerSpec::plain(LayerKind::Flatten));
    layers.push(LayerSpec::weighted(LayerKind::FullyConnected, "fc1".into(), FLATTEN_WIDTH, FC_WIDTH));
    layers.push(LayerSpec::plain(LayerKind::Relu));
    layers.push(LayerSpec::weighted(LayerKind::FullyConnected, "fc2".into(), FC_WIDTH, FC_WIDTH));
    layers.push(LayerSpec::plain(LayerKind::Relu));
    layers.push(LayerSpec::weighted(LayerKind::FullyConnected, "fc3".into(), FC_WIDTH, CLASSES));
    layers
}

/// Feature export point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tap {
    /// Flattened last pooled map, 25088 values.
    Flatten,
    /// FC2 after ReLU, 4096 values.
    Fc2,
}

impl Tap {
    pub fn width(self) -> usize {
        match self {
            Tap::Flatten => FLATTEN_WIDTH,
            Tap::Fc2 => FC_WIDTH,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tap::Flatten => "flatten",
            Tap::Fc2 => "fc2",
        }
    }
}

impl std::str::FromStr for Tap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flatten" => Ok(Tap::Flatten),
            "fc2" => Ok(Tap::Fc2),
            other => Err(Error::domain(format!("unknown tap `{other}` (expected fc2 or flatten)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FcWeights<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Immutable VGG19 with weights in `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    layers: Vec<LayerSpec>,
    pub(crate) convs: Vec<ConvWeights<T>>,
    pub(crate) fcs: Vec<FcWeights<T>>,
    /// SHA-256 (hex) of the little-endian `f32` tensor bytes in file order.
    pub checksum: String,
}

impl<T: Real> Network<T> {
    pub(crate) fn from_parts(convs: Vec<ConvWeights<T>>, fcs: Vec<FcWeights<T>>, checksum: String) -> Self {
        Self { layers: vgg19_layers(), convs, fcs, checksum }
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn conv_count(&self) -> usize {
        self.convs.len()
    }

    pub fn fc_count(&self) -> usize {
        self.fcs.len()
    }

    /// Weight and bias of each weight layer, in architecture order.
    pub fn tensors(&self) -> Vec<(&LayerSpec, &[T], &[T])> {
        let mut convs = self.convs.iter();
        let mut fcs = self.fcs.iter();
        self.layers
            .iter()
            .filter_map(|l| match l.kind {
                LayerKind::Conv3x3 => convs.next().map(|c| (l, c.kernel.as_slice(), c.bias.as_slice())),
                LayerKind::FullyConnected => fcs.next().map(|f| (l, f.weight.as_slice(), f.bias.as_slice())),
                _ => None,
            })
            .collect()
    }

    /// Deterministic weights drawn uniformly from `[-0.05, 0.05]` with ChaCha8 seeded by `seed`.
    pub fn seeded_random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-INIT_BOUND, INIT_BOUND).expect("valid bounds");
        let mut draw = |n: usize| -> Vec<f32> { (0..n).map(|_| dist.sample(&mut rng)).collect() };
        let mut convs = Vec::new();
        let mut fcs = Vec::new();
        let mut raw: Vec<Vec<f32>> = Vec::new();
        for layer in vgg19_layers() {
            let Some((wshape, bshape)) = layer.tensor_shapes() else { continue };
            let w = draw(wshape.iter().product());
            let b = draw(bshape.iter().product());
            let cast = |v: &[f32]| v.iter().map(|&x| T::of(f64::from(x))).collect::<Vec<T>>();
            match layer.kind {
                LayerKind::Conv3x3 => convs.push(
                    ConvWeights::new(layer.in_channels, layer.out_channels, cast(&w), cast(&b)).expect("shape"),
                ),
                _ => fcs.push(FcWeights { weight: cast(&w), bias: cast(&b) }),
            }
            raw.push(w);
            raw.push(b);
        }
        let checksum = crate::cnn::weights::checksum(raw.iter().map(Vec::as_slice));
        Self::from_parts(convs, fcs, checksum)
    }

    fn check_input(input: &Tensor3<T>) -> Result<()> {
        if input.shape() != (INPUT_SIDE, INPUT_SIDE, 3) {
            return Err(Error::shape(format!(
                "network input must be {INPUT_SIDE}x{INPUT_SIDE}x3, got {:?}",
                input.shape()
            )));
        }
        Ok(())
    }

    /// Convolutional trunk up to and including flatten.
    fn trunk(&self, input: &Tensor3<T>) -> Result<Vec<f64>> {
        Self::check_input(input)?;
        let mut x: Tensor3<f64> = input.cast();
        let mut convs = self.convs.iter();
        for layer in &self.layers {
            match layer.kind {
                LayerKind::Conv3x3 => {
                    let w = convs.next().ok_or_else(|| Error::shape("missing conv weights"))?;
                    x = conv3x3_f64(&x, w)?;
                }
                LayerKind::Relu => relu_in_place(&mut x.data),
                LayerKind::MaxPool2x2 => x = maxpool2x2(&x)?,
                LayerKind::Flatten => return Ok(x.data),
                LayerKind::FullyConnected => unreachable!("fully connected before flatten"),
            }
        }
        Err(Error::shape("network has no flatten layer"))
    }

    /// Runs a batch to `tap`; the FC-1000 head is never evaluated.
    pub fn forward_batch(&self, inputs: &[Tensor3<T>], tap: Tap) -> Result<Vec<Vec<T>>> {
        let mut acts: Vec<Vec<f64>> = inputs.par_iter().map(|x| self.trunk(x)).collect::<Result<_>>()?;
        if tap == Tap::Fc2 && !acts.is_empty() {
            for fc in &self.fcs[..2] {
                acts = fc_forward(&acts, &fc.weight, &fc.bias)?;
                for a in &mut acts {
                    relu_in_place(a);
                }
            }
        }
        Ok(acts.into_iter().map(|a| a.into_iter().map(T::of).collect()).collect())
    }

    pub fn forward_with_tap(&self, input: &Tensor3<T>, tap: Tap) -> Result<Vec<T>> {
        Ok(self.forward_batch(std::slice::from_ref(input), tap)?.remove(0))
    }
}


/// Free-function form of [`Network::seeded_random`].
pub fn seeded_random_network<T: Real>(seed: u64) -> Network<T> {
    Network::seeded_random(seed)
}
