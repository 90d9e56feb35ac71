//! Exact quenched law of the walk on finite segments, plus the Monte
//! Carlo path simulator used as an independent oracle.

pub mod eigen;
pub mod mc;
mod solver;

pub use solver::{
    aggregate_masses, balance_time, balance_time_with_tolerance, expected_hitting, favoured_mass, mixing_time_restricted,
    truncation_wall, uniformization_row, AggregatedMasses, BalanceTime, Boundary, Distribution,
    FavouredMass, MixingTime, QuenchedSolver, Segment, SpectralDecomposition, Wall,
};
