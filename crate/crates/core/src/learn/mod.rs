//! Tensor math and training engine for small 3D convolutional networks.

mod augment;
mod checkpoint;
mod layers;
mod network;
mod optim;
mod scalar;
mod spec;
mod tensor;
mod train;

pub use augment::{augment, augment_block, augment_sequence, AugmentConfig};
pub use checkpoint::{
    config_sidecar, decode_network, encode_network, load_network, load_train_state, resume_sidecar, save_network,
    save_train_state, MAGIC,
};
pub use layers::{
    apply_mask, conv_out_dims, dropout_mask, relu_backward, relu_forward, softmax, softmax_cross_entropy, BatchNorm,
    BatchNormCache, Conv3d, Dense, MaxPool3d,
};
pub use network::{Cache, Layer, Network};
pub use optim::{Adam, EarlyStopping, PlateauScheduler, StopDecision};
pub use scalar::Scalar;
pub use spec::{LayerSpec, NetworkSpec, Units, DEFAULT_SPEC, DESK_SPEC};
pub use tensor::Tensor;
pub use train::{
    argmax, evaluate, fit, mean_probabilities, predict_batch, predict_dataset, Dataset, EpochLog, TrainConfig,
    TrainOutcome, TrainState,
};
