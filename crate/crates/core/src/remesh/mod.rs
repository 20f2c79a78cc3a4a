//! Conversion of irregular meshes into fitted semi-regular meshes:
//! quadric-error simplification, midpoint subdivision, chamfer-based
//! surface fitting, and barycentric parametrization transfer.

mod chamfer;
mod fit;
mod kdtree;
mod parametrize;
mod quadric;
mod simplify;
mod subdivide;

pub use chamfer::{chamfer_avg, chamfer_with_grad, chamfer_with_grad_prebuilt, eval_chamfer};
pub use fit::{
    edge_length_loss, finite_difference_grad, fit_semiregular, grad_relative_error,
    laplacian_loss, normal_consistency_loss, FitConfig, FitReport, FitTopology,
    CHAMFER_EVAL_SAMPLES,
};
pub use kdtree::KdTree3;
pub use parametrize::{apply_parametrization, project_parametrize, BarycentricParam, TriBvh};
pub use quadric::{collapse_cost, compute_vertex_quadrics, Quadric};
pub use simplify::{simplify, SimplifyResult};
pub use subdivide::{subdivide, PatchIndexGrid, SemiRegularMesh};
