//! Enumeration budgets and the exhaustive/sampled provenance of verdicts.

use serde::{Deserialize, Serialize};

/// Default cap on emitted cubes in [`crate::cube::enumerate_cubes`].
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;
/// Default cap on tuples checked exhaustively by the morphism tests.
pub const DEFAULT_TUPLE_BUDGET: u64 = 10_000_000;
/// Number of random tuples drawn once a check falls back to sampling.
pub const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub enumeration: u64,
    pub tuples: u64,
    pub samples: u64,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            enumeration: DEFAULT_ENUMERATION_BUDGET,
            tuples: DEFAULT_TUPLE_BUDGET,
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

impl Budget {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tuples(mut self, tuples: u64) -> Self {
        self.tuples = tuples;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sampled { samples: u64 },
}

impl Mode {
    pub fn is_exhaustive(&self) -> bool {
        matches!(self, Mode::Exhaustive)
    }

    /// Sampled in either operand makes the combination sampled.
    pub fn combine(self, other: Mode) -> Mode {
        match (self, other) {
            (Mode::Exhaustive, Mode::Exhaustive) => Mode::Exhaustive,
            (Mode::Sampled { samples: a }, Mode::Sampled { samples: b }) => {
                Mode::Sampled { samples: a + b }
            }
            (Mode::Sampled { samples }, _) | (_, Mode::Sampled { samples }) => {
                Mode::Sampled { samples }
            }
        }
    }
}

/// Outcome of a verification that may have been exhaustive or sampled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check<W> {
    pub holds: bool,
    pub mode: Mode,
    pub witness: Option<W>,
}

impl<W> Check<W> {
    pub fn pass(mode: Mode) -> Self {
        Check { holds: true, mode, witness: None }
    }

    pub fn fail(mode: Mode, witness: W) -> Self {
        Check { holds: false, mode, witness: Some(witness) }
    }

    pub fn is_probabilistic(&self) -> bool {
        !self.mode.is_exhaustive()
    }
}
