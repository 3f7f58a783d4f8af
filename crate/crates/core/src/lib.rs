//! Dual-mixed Crouzeix-Raviart / piecewise-constant finite elements in 2-D.
//!
//! The flux (Poisson) or pseudostress (Stokes) is approximated component-wise
//! in the lowest-order Crouzeix-Raviart space, the primal variable by
//! piecewise constants, and normal continuity of the flux is imposed weakly
//! through an interior-edge jump penalty with weight `1/|e|`.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: conforming triangulations, uniform refinement, the M-shaped,
//!   crack and Kovasznay domains.
//! * [`quadrature`]: Gauss rules on edges and triangles.
//! * [`space`]: DOF maps, CR/P0 fields, interpolants and projections.
//! * [`sparse`]: triplet / CSR storage.
//! * [`poisson`], [`stokes`]: saddle-point assembly.
//! * [`solver`]: sparse LU and MINRES.
//! * [`exact`]: manufactured solutions.
//! * [`norms`]: error norms, the local divergence identity and EOC.
//! * [`study`]: convergence studies, table/CSV output; [`vtk`] field export.

pub mod exact;
pub mod mesh;
pub mod norms;
pub mod poisson;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;
pub mod stokes;
pub mod study;
pub mod vtk;

mod error;

pub use error::{Error, Result};
pub use exact::{CaseTag, ManufacturedCase, PoissonCase, StokesCase};
pub use mesh::{DomainTag, Mesh, Point};
pub use solver::{SolveOptions, SolveReport, SolverMethod};
pub use study::{run_study, StudyConfig, StudyRecord, StudyResult};
