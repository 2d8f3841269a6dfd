//! Transfer-learned DNN filter features for acoustic event classification.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerics:
//! spectral frontend and augmentation, dense networks and their training,
//! network surgery for transfer, DCT/PCA reduction, GMM/SVM/DNN back-ends,
//! and cross-validation. File formats, dataset handling and the CLI live in
//! the companion `aec` crate.
//!
//! ```
//! use aec_core::frontend::{make_frontend_features, splice, AudioSegment, FrontendConfig};
//!
//! let seg = AudioSegment::new(vec![0.0; 48_000], 16_000).unwrap();
//! let fm = make_frontend_features(&seg, &FrontendConfig::default()).unwrap();
//! assert_eq!((fm.rows(), fm.dims()), (92, 512));
//! assert_eq!(splice(&fm, 3).unwrap().dims(), 1536);
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod classifiers;
pub mod cv;
pub mod error;
pub mod fingerprint;
pub mod frontend;
pub mod linalg;
pub mod math;
pub mod nn;
pub mod rng;
pub mod transfer;
pub mod transforms;

pub use error::{Error, Result};
pub use fingerprint::Fingerprint;
pub use linalg::Matrix;
