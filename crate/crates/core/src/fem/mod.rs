//! Quadratic/linear mixed finite elements on straight-sided triangles, with
//! the saddle-point assembler and sparse solver shared by the elliptic and
//! time-stepping layers.

mod assembly;
mod norms;
mod quadrature;
mod solver;
mod space;

pub use assembly::{
    assemble_saddle, element_kinematics, min_det, p1_poisson, Loads, QuadKinematics, SaddlePattern, SaddleSolution, SaddleSystem,
    StokesOperator, VelocityConstraints, ViscousForm,
};
pub use norms::{p1_norms, p1_l2_error, vector_l2_error, vector_norms, FieldNorms};
pub use quadrature::{GAUSS3_POINTS, GAUSS3_WEIGHTS, TRI7_POINTS, TRI7_WEIGHTS};
pub use solver::{LuSolver, Solution, SparseSystem, RESIDUAL_TOL};
pub use space::{p1_shape, p2_grad, p2_hessian, p2_shape, ElementGeometry, P2Space, NQ};
