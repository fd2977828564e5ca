//! Effective-resistance analysis on 4N-carpets.
//!
//! A 4N-carpet is the attractor of 4N contractions of a regular 4N-gon,
//! one per outer vertex, with contraction ratio `r = 1/(1 + cot(π/4N))` so
//! that adjacent cells share full sides. This crate builds the objects the
//! resistance-scaling analysis needs:
//!
//! * [`geometry`] — the polygon, the cell maps and their symmetrized
//!   compositions, level-m cell enumeration, and the Cantor-type boundary
//!   arcs A and B on the outer sides.
//! * [`graphs`] — the two graph approximations `G_m` (side midpoints) and
//!   `D_m` (corners), built by geometric gluing.
//! * [`network`] — harmonic potentials, Dirichlet energy, effective
//!   resistance, currents, and per-side fluxes on those graphs.
//! * [`fem`] — P1 finite elements on the pre-carpets: the mixed
//!   Dirichlet/Neumann problem between A and B, sector energy splitting,
//!   and the gluing estimates behind the resistance sandwich.
//! * [`scaling`] — resistance sequences, the G/D duality check, estimates
//!   of the resistance-scaling factor ρ(N), and subadditivity (Fekete)
//!   interval reports.
//!
//! Everything is deterministic: vertex merging, solver reductions, and
//! report serialization are ordered so repeated runs produce identical
//! bytes.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod graphs;
mod locate;
pub mod network;
pub mod report;
pub mod scaling;
pub mod solver;

pub use error::{CarpetError, Result};
pub use fem::{FemSolution, Mesh, SectorAnalysis};
pub use geometry::{BoundaryClass, CarpetParams, CellAddress, Point, SideSegment, Similarity};
pub use graphs::{GraphApprox, GraphKind, GraphStats, GraphSymmetry, GraphVertex, VertexRole};
pub use network::{NetworkSolution, ResistanceResult};
pub use scaling::{DualityReport, FeketeReport, RhoEstimate, SandwichReport, ScalingReport};
pub use solver::{SolveMethod, SolverOptions};
