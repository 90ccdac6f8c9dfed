//! Forward-only VGG19 inference with flatten and FC2 feature taps.

mod features;
mod layers;
mod network;
mod tensor;
mod weights;

pub use features::{
    extract_features, prepare_input, read_feature_matrix, read_fmat, read_label_manifest, write_feature_matrix, write_fmat, FeatureMatrix,
    Provenance,
};
pub use layers::{conv3x3_forward, fc_forward, maxpool2x2, relu_in_place, ConvWeights};
pub use network::{seeded_random_network, vgg19_layers, LayerKind, LayerSpec, Network, Tap, FC_WIDTH, FLATTEN_WIDTH, INPUT_SIDE};
pub use tensor::Tensor3;
pub use weights::{load_weights, read_store, save_weights, write_store, TensorStore, WeightTensor};
