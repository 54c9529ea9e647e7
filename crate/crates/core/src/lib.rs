//! Sparse audio coding with the Locally Competitive Algorithm over strided
//! Gammachirp dictionaries, with gradient-based adaptation of the filter
//! parameters and central frequencies.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision for common use.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod audio;
pub mod cli;
pub mod code;
pub mod dictionary;
pub mod error;
pub mod lca;
pub mod metrics;
pub mod scalar;

pub use adapt::{adamax_step, adapt_corpus, atom_jacobian, energy_gradient, AdaptConfig, AdaptMode, ParamBounds, ParamGradients};
pub use code::{CoefMatrix, Signal, SparseCode};
pub use dictionary::{
    erb, gram_kernel, init_gammatone_dictionary, project, reconstruct, synthesize_atom, Dictionary, GammachirpParams,
    GramKernel,
};
pub use error::{Error, Result};
pub use lca::{encode, encode_traced, energy, lca_step, threshold, LcaConfig, LcaState};
pub use metrics::{benchmark, snr, sparsity};
pub use scalar::Scalar;

pub type DictionaryF64 = Dictionary<f64>;
pub type DictionaryF32 = Dictionary<f32>;
pub type GammachirpParamsF64 = GammachirpParams<f64>;
pub type GammachirpParamsF32 = GammachirpParams<f32>;
pub type SparseCodeF64 = SparseCode<f64>;
pub type SparseCodeF32 = SparseCode<f32>;
pub type LcaConfigF64 = LcaConfig<f64>;
pub type LcaConfigF32 = LcaConfig<f32>;
pub type AdaptConfigF64 = AdaptConfig<f64>;
pub type AdaptConfigF32 = AdaptConfig<f32>;
