//! Planning toolkit for intraventricular baffles: labeled surface meshes, capped ventricular
//! domains, suture-line curves, centerlines, constrained section shaping, thin-plate-spline
//! surface synthesis and reduced-order hemodynamics.

pub mod boundary;
pub mod centerline;
pub mod domain;
pub mod hemo;
pub mod mesh;
pub mod phantom;
pub mod sections;
pub mod tps;
