//! Exact polynomial maps into simply connected nilpotent Lie groups, the PET
//! ordering on families of such maps, Zariski-generic parameter sampling, and
//! a numerical engine for polynomial joining averages on tori and the
//! Heisenberg nilmanifold.

pub mod averaging;
pub mod dynamics;
pub mod error;
pub mod lie;
pub mod pet;
pub mod poly;
pub mod polymap;
pub mod rational;
pub mod ring;
pub mod zariski;

pub use error::{Error, ParseError, Result};
pub use lie::{
    bch_product, bracket, group_inverse, verify_algebra, Builtin, GroupElement, LieAlgebra,
    LieElement, Violation,
};
pub use poly::{MultiPoly, Vars};
pub use rational::Rational;
pub use polymap::{pointwise_inverse, pointwise_product, LeadingTerm, PolyMap, Shift};
pub use pet::{
    derived_family, family_precedes, lt_equivalent, pet_trace, pet_trace_with, pivot, weight,
    weight_assignment, weight_less, Descent, PetTrace, PolyFamily, TraceLimits, Weight,
    WeightAssignment,
};
pub use zariski::{
    generic_sample, membership, t_coefficients, vanishing_variety, GenericSample, MeagreSet,
    Variety,
};
pub use dynamics::{eval_fn, FnKind, NilPoint, NilSystem, Part, SystemKind, TestFunction};
pub use averaging::{
    convergence_scan, dichotomy, invariance_check, invariance_scan, joining_average,
    mean_ergodic_base, vdc_check, AverageReport, Estimate, JoiningKind, JoiningSpec, Settings,
    VdcReport,
};
