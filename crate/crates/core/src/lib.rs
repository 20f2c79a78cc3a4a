//! Semi-regular remeshing of triangular surface meshes and a patch-based
//! hexagonal mesh convolutional autoencoder for deforming sequences.
//!
//! The pipeline: an irregular mesh is coarsened by quadric edge collapse,
//! the coarse base is midpoint-subdivided into a semi-regular mesh, and
//! the fine geometry is fit to the original surface by gradient descent on
//! a chamfer-plus-regularizer loss. Each base face becomes a padded
//! hexagonal-lattice patch; a fixed convolutional autoencoder trained on
//! those patches reconstructs sequences and embeds them through PCA of the
//! concatenated patch latents.

pub mod error;
pub mod hexnn;
pub mod mesh;
pub mod model;
pub mod patch;
pub mod remesh;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};

pub use nalgebra;
pub use model::{build_autoencoder, Autoencoder, TrainConfig};
pub use mesh::{load_mesh, save_mesh, TopologyReport, TriMesh, UnitCubeTransform};
pub use remesh::{
    chamfer_avg, simplify, subdivide, BarycentricParam, FitConfig, Quadric, SemiRegularMesh,
};
