//! Almost-prime statistics along toral orbits: β_k constants, exact and
//! asymptotic Ω counts, the random model, orbit and surd machinery.

pub mod beta;
pub mod error;
pub mod factor;
pub mod figure;
pub mod model;
pub mod omega_stats;
pub mod orbits;
pub mod sequences;
pub mod sporadic;
pub mod surd;

pub use beta::{beta_lambert, f_k, solve_beta, BetaMethod, BetaSolution};
pub use error::{Error, Result};
pub use factor::{factor_big, omega_protocol, FactorResult, FactorTables, OmegaEstimate, SpfTable};
pub use figure::{reproduce_figure, FigureDataset};
pub use model::{ModelConfig, ModelRun, NmaxRun};
pub use omega_stats::{count_by_omega, nr_naive, nr_selberg, nu, single_draw_prob_exact, NrTable, NuValue};
pub use orbits::{is_hyperbolic, iterate_orbit, named_orbit, Mat2Q, OrbitPoint, OrbitSpec};
pub use sporadic::{naive_nmax, search_sigma, Pair, SigmaSearchResult};
pub use surd::{automorph, cf_expand, convergents, pell_fundamental, CfExpansion, QuadForm, SurdSpec};
