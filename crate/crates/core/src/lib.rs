//! Core pipeline: mesh handling, cylindrical decomposition, seamless
//! parameterization, spiral design, ribbon construction and plan export.

pub mod decomposition;
pub mod mesh;
pub mod param;
pub mod shapes;
pub mod sparse;
pub mod spiral;
