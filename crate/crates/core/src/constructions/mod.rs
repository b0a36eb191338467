//! Channels and operators built for specific conversions, each returned with the
//! numeric side conditions that make it valid.
//!
//! Non-entangling claims are never made from sampling alone: every construction
//! states the closed-form certificate covering all separable inputs and checks
//! it, with sampled separable inputs as a secondary sanity check.

mod distill;
mod kne;
mod nonentangling;
mod stochastic;

pub use distill::{random_pt_witness, search_undetected, undetected_conversion, witness_channel, UndetectedSearch};
pub use kne::{
    certify_projected_choi, k_ne_channel, k_ne_channel_with, k_ne_sampled_test, projected_choi, projected_operator,
    three_ne_attempt, werner_projection_gurvits, werner_projection_pt_min, werner_projection_pt_min_closed, KneOutcome,
    KneStatus, ProjectionPair, ThreeNeAttempt, WernerProjection,
};
pub use nonentangling::{
    rank_raising_constants, dne_slacks, maxent_to_pure, ppt_preserving_negativity_channel, pure_to_pure, schmidt_rank_increase,
    superactivation, superactivation_two_copy, RankRaisingConstants, DneSlacks, SuperactivationOutput,
};
pub use stochastic::{stochastic_omega, StochasticOmega};

use serde::{Deserialize, Serialize};

use crate::channels::{Channel, TwoBranch};
use crate::par::Exec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Equals,
    Below,
    Above,
}

impl Relation {
    /// `Below` and `Above` are strict and ignore `tolerance`.
    pub fn holds(self, value: f64, bound: f64, tolerance: f64) -> bool {
        match self {
            Relation::AtMost => value <= bound + tolerance,
            Relation::AtLeast => value >= bound - tolerance,
            Relation::Equals => (value - bound).abs() <= tolerance,
            Relation::Below => value < bound,
            Relation::Above => value > bound,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::AtMost => "at_most",
            Relation::AtLeast => "at_least",
            Relation::Equals => "equals",
            Relation::Below => "below",
            Relation::Above => "above",
        }
    }
}

/// One named numeric predicate, evaluated when constructed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideCondition {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
}

impl SideCondition {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, bound: f64, tolerance: f64) -> Self {
        let pass = relation.holds(value, bound, tolerance);
        SideCondition { name: name.into(), value, bound, relation, tolerance, pass }
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::AtMost, bound, tolerance)
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, bound, tolerance)
    }

    pub fn equals(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::Equals, expected, tolerance)
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, Relation::Below, bound, 0.0)
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, Relation::Above, bound, 0.0)
    }

    /// A boolean fact recorded as `1 = 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::Equals, 1.0, 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct ConstructionResult {
    pub channel: Channel,
    pub side_conditions: Vec<SideCondition>,
    /// Short description of the statement the construction realises.
    pub provenance: String,
}

impl ConstructionResult {
    pub fn two_branch(&self) -> Option<&TwoBranch> {
        self.channel.two_branch()
    }

    pub fn all_pass(&self) -> bool {
        self.side_conditions.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&SideCondition> {
        self.side_conditions.iter().filter(|c| !c.pass).collect()
    }

    pub fn condition(&self, name: &str) -> Option<&SideCondition> {
        self.side_conditions.iter().find(|c| c.name == name)
    }
}

/// Sampling budget for the secondary, sampled checks of a construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { samples: 2000, seed: 0, exec: Exec::default() }
    }
}

impl SampleConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        SampleConfig { samples, seed, exec: Exec::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(SideCondition::at_most("x", 1.0 + 1e-13, 1.0, 1e-12).pass);
        assert!(!SideCondition::at_most("x", 1.1, 1.0, 1e-12).pass);
        assert!(SideCondition::at_least("x", 0.5, 0.5, 0.0).pass);
        assert!(!SideCondition::below("x", 0.0, 0.0).pass);
        assert!(SideCondition::above("x", 1e-300, 0.0).pass);
        assert!(SideCondition::equals("x", 2.0, 2.0 + 1e-11, 1e-10).pass);
        assert!(!SideCondition::holds("x", false).pass);
    }
}
