//! Symbolic and numeric toolkit for PD-hamiltonian systems on fiber bundles.
//!
//! A PD-(pre)hamiltonian system lives on a coordinate bundle chart with base
//! coordinates `x^i` and fiber coordinates `y^a` and is given by an affine
//! 2-form with coefficients `(w^i_ab, w_a)`. The crate provides the affine
//! form calculus (differential, insertions, potentials), the induced
//! first-order PDE systems, kernel and constraint analysis, Noether pair
//! verification with the associated bracket, reduction checks, and a small
//! finite-difference charge-conservation experiment.

pub mod affcalc;
pub mod cli;
pub mod noether;
pub mod numsim;
pub mod pdham;
pub mod reduce;
pub mod report;
pub mod symexpr;
pub mod sysdef;
