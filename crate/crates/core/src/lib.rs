//! Unsupervised clustering of roadside audio into per-vehicle groups.
//!
//! Audio is cut into fixed windows whose Fourier magnitude spectra become
//! feature vectors. A nearest-neighbor cosine similarity graph with
//! self-tuning Gaussian weights is built over the windows, and the windows
//! are clustered either by k-means on the leading nontrivial eigenvectors of
//! the symmetric normalized Laplacian or by incremental reseeding of random
//! walks on the same graph.
//!
//! ```
//! use acoustic_cluster::{graph, spectral, synth};
//!
//! let sample = synth::gen_block_similarity(&synth::BlockSpec::default()).unwrap();
//! let lap = graph::laplacian(&sample.graph).unwrap();
//! let emb = spectral::eigendecompose(&lap, 4).unwrap();
//! assert!(emb.eigenvalues[0].abs() < 1e-8);
//! ```

pub mod eval;
pub mod graph;
pub mod incres;
pub mod matrix;
pub mod partition;
pub mod rng;
pub mod signal;
pub mod spectral;
pub mod synth;

use thiserror::Error;

pub use matrix::RowMatrix;
pub use partition::Partition;
pub use rng::PortableRng;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Signal(#[from] signal::SignalError),
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
    #[error(transparent)]
    Incres(#[from] incres::IncresError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
