//! Finite-dimensional degree theory: Brouwer degree by regular-value counting,
//! corrector/orientation algebra for square operators, degree of box-valued
//! multitriples and the reduction to subspace preimages.

mod brouwer;
mod field;
mod multitriple;
mod orientation;
mod reduction;

pub use brouwer::{
    boundary_margin, brouwer_degree, jacobian_sign, CertificatePoint, DegreeConfig, DegreeMethod,
    DegreeResult,
};
pub use field::{central_difference_jacobian, AffineField, FnField, Region, VectorField};
pub use multitriple::{
    box_distance, multitriple_degree, AdmissibleTriple, Approximation, BoxValuedMap, ConstantBox,
    FieldOrientation, MultiConfig, Singleton,
};
pub use orientation::{corrector_det, l_equivalent, operator_sign, OrientedOperator};
pub use reduction::{
    fredholm_oriented_preimage, oriented_linear_degree, oriented_preimage, reduced_degree,
    reduction_check, OrientedPreimage, ReducedField,
};
