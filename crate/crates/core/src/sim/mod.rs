//! Deterministic MiniC interpreter.
//!
//! Arithmetic is two's-complement with wrap-around at each type's width,
//! shift amounts are masked to 5 bits, `&&`/`||` short-circuit and operands
//! evaluate left to right. Division by zero yields 0, out-of-range array reads
//! yield 0 and out-of-range writes are dropped; both are flagged in the status.

mod lower;
mod machine;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::LockingKey;
use crate::minic::{Direction, IntType, ParamShape, Program, KEY_PARAM};

pub use machine::Machine;

use lower::Lowered;
use machine::Binding;

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Normal,
    StepBudgetExceeded,
    DivByZero,
    IndexOutOfRange,
}

/// Output bits of one run: out-parameters in declaration order, then the
/// return value, each word little-endian.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutputBits {
    pub bits: Vec<u8>,
    pub status: RunStatus,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(i64),
    Array(Vec<i64>),
}

/// Values for the top function's parameters, keyed by name. Out-parameters
/// may be given to seed them; missing ones start at zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputVector {
    pub values: BTreeMap<String, ParamValue>,
}

impl InputVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, v: ParamValue) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }

    pub fn scalar(self, name: &str, v: i64) -> Self {
        self.with(name, ParamValue::Scalar(v))
    }

    pub fn array(self, name: &str, v: Vec<i64>) -> Self {
        self.with(name, ParamValue::Array(v))
    }
}

enum Prepared {
    Scalar(u32),
    Array(Vec<u32>),
    Key,
}

/// Inputs checked and normalized against a compiled program.
pub struct PreparedInput(Vec<Prepared>);

struct OutputWord {
    /// Index among the top's array-shaped parameters.
    array: usize,
    ty: IntType,
}

/// A program lowered once for repeated execution.
pub struct Compiled {
    lowered: Lowered,
    params: Vec<(String, IntType, ParamShape, Direction, usize)>,
    outputs: Vec<OutputWord>,
    ret: Option<IntType>,
    locked: bool,
    n_bits: usize,
}

impl Compiled {
    pub fn new(program: &Program) -> Result<Self> {
        let lowered = lower::lower(program)?;
        let top = program.top();
        let mut params = Vec::new();
        let mut outputs = Vec::new();
        let mut array_index = 0;
        for p in &top.params {
            let is_array = p.shape != ParamShape::Scalar;
            if p.direction() == Direction::Out && p.name != KEY_PARAM {
                outputs.push(OutputWord { array: array_index, ty: p.ty });
            }
            if is_array {
                array_index += 1;
            }
            params.push((p.name.clone(), p.ty, p.shape, p.direction(), p.arity()));
        }
        Ok(Compiled {
            lowered,
            params,
            outputs,
            ret: top.ret,
            locked: program.is_locked(),
            n_bits: program.output_bits(),
        })
    }

    pub fn output_bits(&self) -> usize {
        self.n_bits
    }

    pub fn is_locked(&self) -> bool {
        self.locked
    }

    pub fn prepare(&self, input: &InputVector) -> Result<PreparedInput> {
        let bad = |m: String| Error::Input(m);
        for name in input.values.keys() {
            if !self.params.iter().any(|p| &p.0 == name) || name == KEY_PARAM {
                return Err(bad(format!("unknown parameter '{name}'")));
            }
        }
        let check = |name: &str, ty: IntType, v: i64| {
            if ty.fits(v) {
                Ok(ty.normalize(v as u32))
            } else {
                Err(bad(format!("value {v} of '{name}' does not fit {ty}")))
            }
        };
        let mut out = Vec::new();
        for (name, ty, shape, dir, arity) in &self.params {
            if name == KEY_PARAM {
                out.push(Prepared::Key);
                continue;
            }
            let given = input.values.get(name);
            out.push(match (shape, given) {
                (ParamShape::Scalar, Some(ParamValue::Scalar(v))) => Prepared::Scalar(check(name, *ty, *v)?),
                (ParamShape::Scalar, None) => return Err(bad(format!("missing input '{name}'"))),
                (ParamShape::Pointer, Some(ParamValue::Scalar(v))) => Prepared::Array(vec![check(name, *ty, *v)?]),
                (ParamShape::Array(_), Some(ParamValue::Array(vs))) => {
                    if vs.len() != *arity {
                        return Err(bad(format!("'{name}' needs {arity} elements, got {}", vs.len())));
                    }
                    Prepared::Array(vs.iter().map(|&v| check(name, *ty, v)).collect::<Result<_>>()?)
                }
                (ParamShape::Array(_) | ParamShape::Pointer, None) if *dir == Direction::Out => {
                    Prepared::Array(vec![0; *arity])
                }
                (_, None) => return Err(bad(format!("missing input '{name}'"))),
                (_, Some(_)) => return Err(bad(format!("wrong shape for '{name}'"))),
            });
        }
        Ok(PreparedInput(out))
    }

    /// Runs on prepared input. `key` holds one 0/1 byte per key bit and must
    /// be given exactly when the program is locked.
    pub fn run_prepared(
        &self,
        machine: &mut Machine,
        input: &PreparedInput,
        key: Option<&[u8]>,
        budget: u64,
    ) -> Result<OutputBits> {
        if key.is_some() != self.locked {
            return Err(Error::Input(if self.locked {
                "locked program needs a key".into()
            } else {
                "unlocked program takes no key".into()
            }));
        }
        let key_words: Vec<u32> = key.unwrap_or(&[]).iter().map(|&b| u32::from(b)).collect();
        let bindings: Vec<Binding<'_>> = input
            .0
            .iter()
            .map(|p| match p {
                Prepared::Scalar(v) => Binding::Scalar(*v),
                Prepared::Array(v) => Binding::Array(v),
                Prepared::Key => Binding::Array(&key_words),
            })
            .collect();
        let mut bits = vec![0u8; self.n_bits];
        let Ok((ret, ranges)) = machine.run(&self.lowered, &bindings, budget) else {
            return Ok(OutputBits { bits, status: RunStatus::StepBudgetExceeded, steps: budget });
        };
        let mem = machine.mem();
        let mut at = 0;
        let mut put = |v: u32, width: u8| {
            for j in 0..width {
                bits[at] = ((v >> j) & 1) as u8;
                at += 1;
            }
        };
        for o in &self.outputs {
            let (base, len) = ranges[o.array];
            for &v in &mem[base as usize..(base + len) as usize] {
                put(v, o.ty.bits);
            }
        }
        if let Some(t) = self.ret {
            put(ret, t.bits);
        }
        let status = if machine.div_zero {
            RunStatus::DivByZero
        } else if machine.out_of_range {
            RunStatus::IndexOutOfRange
        } else {
            RunStatus::Normal
        };
        Ok(OutputBits { bits, status, steps: machine.steps })
    }

    pub fn run(&self, input: &InputVector, key: Option<&LockingKey>, budget: u64) -> Result<OutputBits> {
        let prepared = self.prepare(input)?;
        self.run_prepared(&mut Machine::default(), &prepared, key.map(|k| k.bits()), budget)
    }
}

/// One-shot convenience wrapper around [`Compiled::run`].
pub fn run(program: &Program, input: &InputVector, key: Option<&LockingKey>, step_budget: u64) -> Result<OutputBits> {
    Compiled::new(program)?.run(input, key, step_budget)
}

/// Golden outputs of the unlocked program. Any abnormal status rejects the
/// test set.
pub fn golden(program: &Program, tests: &[InputVector]) -> Result<Vec<OutputBits>> {
    let c = Compiled::new(program)?;
    let mut m = Machine::default();
    let mut out = Vec::with_capacity(tests.len());
    for (i, t) in tests.iter().enumerate() {
        let o = c.run_prepared(&mut m, &c.prepare(t)?, None, DEFAULT_STEP_BUDGET)?;
        if o.status != RunStatus::Normal {
            return Err(Error::Golden { test: i, status: o.status });
        }
        out.push(o);
    }
    Ok(out)
}

/// Uniform random inputs over each input parameter's range.
pub fn random_inputs(program: &Program, count: usize, seed: u64) -> Vec<InputVector> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let top = program.top();
    let mut draw = |ty: IntType| -> i64 {
        let v = ty.normalize(rng.gen::<u32>());
        if ty.signed {
            i64::from(v as i32)
        } else {
            i64::from(v)
        }
    };
    (0..count)
        .map(|_| {
            let mut v = InputVector::new();
            for p in &top.params {
                if p.direction() != Direction::In || p.name == KEY_PARAM {
                    continue;
                }
                v = match p.shape {
                    ParamShape::Scalar => v.scalar(&p.name, draw(p.ty)),
                    _ => {
                        let vals = (0..p.arity()).map(|_| draw(p.ty)).collect();
                        v.array(&p.name, vals)
                    }
                };
            }
            v
        })
        .collect()
}
