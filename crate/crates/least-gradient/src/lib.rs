//! Constructive solver for the obstacle problem for functions of least
//! gradient on pixel grids.
//!
//! The solution field is built level by level: at each threshold the
//! superlevel set is obtained as an exact minimum cut of a grid flow
//! network whose cut capacity is a Cauchy-Crofton discretization of
//! Euclidean perimeter, the volume-maximal minimizer is extracted from
//! the min-cut lattice, the resulting family is audited for monotone
//! nesting, and the field is assembled by stacking. Diagnostics verify
//! the co-area identity, boundary Hölder regularity, barrier sandwiches,
//! maximum-principle contact behaviour, and density monotonicity of
//! subminimizing sets; a separate module provides exact 2-D geometry for
//! two-ball obstacle configurations and finite-stage foamy superminimizers.

pub mod cli;
pub mod diagnostics;
pub mod fields;
pub mod foam;
pub mod grid;
pub mod mincut;
pub mod oracle;
pub mod perimeter;
pub mod report;
pub mod rng;
pub mod solver;
