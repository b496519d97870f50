//! Liouville-type classification and supersolution construction for
//! polyharmonic inequalities with a nonlocal convolution term,
//!
//! ```text
//! (-Δ)^m u  ≥  ± (Ψ(|x|) * u^p) u^q   in R^N,   u ≥ 0,
//! ```
//!
//! together with the numerical machinery behind it: exact radial calculus,
//! singular-kernel convolution, radial Poisson solvers and decay fits.

pub mod barrier;
pub mod builder;
pub mod classifier;
pub mod error;
pub mod fit;
pub mod kernels;
pub mod profile;
pub mod quadrature;
pub mod radial_expr;
pub mod riesz;

pub use barrier::{
    cutoff_integral_estimate, polysuperharmonic_check, radial_poisson_cascade, taylor_bound, CascadeState, CutoffReport,
    PolySuperReport, Subject,
};
pub use builder::{
    choose_a, choose_kappa, construct, verify_supersolution, BuilderOptions, Certification, Construction, UProfile,
};
pub use classifier::{
    classify_single, classify_system, region_boundary_csv, CouplingForm, NodeStatus, ProblemParams, Sign, Status,
    StructuralVerdict, SystemSpec, SystemVerdict, Verdict,
};
pub use error::{Error, Result};
pub use kernels::{check_admissible, integral_condition_ii1, tail_condition_ii2, Decision, Kernel, TailLaw};
pub use profile::{log_grid, sphere_area, FnProfile, RadialProfile, SampledProfile, SmoothPlateau, Tail};
pub use riesz::{
    convolve_bruteforce, convolve_radial, decay_fit, finiteness_check, newtonian_potential_chain, DecayFit, DecayRegime,
    PotentialChain,
};
pub use radial_expr::{b_coefficients, power_law_coefficient, RadialExpr, RadialTerm};
