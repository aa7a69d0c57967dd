//! Scoring of solution vectors: lock, simulate under wrong keys, measure.

use crate::entropy::{flip_counts, EntropyReport, WrongKeySet};
use crate::error::{Error, Result};
use crate::key::LockingKey;
use crate::locker::{apply_locking, LockedProgram};
use crate::lockpoints::{forced_budget, ObfuscationPoint, SolutionVector};
use crate::minic::Program;
use crate::sim::{golden, Compiled, InputVector, OutputBits, DEFAULT_STEP_BUDGET};

/// Everything needed to turn a solution vector into an entropy score.
pub struct Evaluator {
    pub program: Program,
    pub points: Vec<ObfuscationPoint>,
    pub key: LockingKey,
    pub tests: Vec<InputVector>,
    pub golden: Vec<OutputBits>,
    pub wrong_keys: WrongKeySet,
    pub step_budget: u64,
}

/// Per-run step budget derived from the golden runs: ten times the longest
/// golden run, clamped to `[MIN_AUTO_STEP_BUDGET, DEFAULT_STEP_BUDGET]`.
pub fn auto_step_budget(golden: &[OutputBits]) -> u64 {
    let longest = golden.iter().map(|g| g.steps).max().unwrap_or(0);
    longest.saturating_mul(10).clamp(MIN_AUTO_STEP_BUDGET, DEFAULT_STEP_BUDGET)
}

pub const MIN_AUTO_STEP_BUDGET: u64 = 1_000;

impl Evaluator {
    /// Computes golden outputs; `step_budget` of `None` selects
    /// [`auto_step_budget`].
    pub fn new(
        program: Program,
        points: Vec<ObfuscationPoint>,
        key: LockingKey,
        tests: Vec<InputVector>,
        wrong_keys: WrongKeySet,
        step_budget: Option<u64>,
    ) -> Result<Self> {
        if tests.is_empty() {
            return Err(Error::EmptyTests);
        }
        if wrong_keys.is_empty() {
            return Err(Error::EmptyWrongKeys);
        }
        if wrong_keys.keys.iter().any(|k| k.len() != key.len()) {
            return Err(Error::Key("wrong keys must match the key length".into()));
        }
        let needed = forced_budget(&points);
        if needed > key.len() {
            return Err(Error::ForcedTooExpensive { needed, available: key.len() });
        }
        let golden = golden(&program, &tests)?;
        let step_budget = step_budget.unwrap_or_else(|| auto_step_budget(&golden));
        Ok(Evaluator { program, points, key, tests, golden, wrong_keys, step_budget })
    }

    pub fn key_len(&self) -> usize {
        self.key.len()
    }

    pub fn lock(&self, solution: &SolutionVector) -> Result<LockedProgram> {
        apply_locking(&self.program, &self.points, solution, &self.key)
    }

    pub fn evaluate_locked(&self, locked: &LockedProgram) -> Result<EntropyReport> {
        let compiled = Compiled::new(&locked.ast)?;
        let prepared = self.tests.iter().map(|t| compiled.prepare(t)).collect::<Result<Vec<_>>>()?;
        let counts = flip_counts(&compiled, &prepared, &self.golden, &self.wrong_keys.keys, self.step_budget)?;
        Ok(EntropyReport::from_counts(&counts))
    }

    pub fn evaluate(&self, solution: &SolutionVector) -> Result<EntropyReport> {
        self.evaluate_locked(&self.lock(solution)?)
    }

    pub fn fitness(&self, solution: &SolutionVector) -> Result<f64> {
        Ok(self.evaluate(solution)?.h)
    }
}
