//! MiniC programs shipped with the crate.

use crate::error::{Error, Result};
use crate::minic::{parse, Program};

#[derive(Clone, Copy, Debug)]
pub struct Benchmark {
    pub name: &'static str,
    pub source: &'static str,
}

impl Benchmark {
    /// Parses with the function of the same name as top.
    pub fn program(&self) -> Program {
        parse(self.source, Some(self.name)).expect("bundled benchmark parses")
    }
}

pub const ALL: [Benchmark; 6] = [
    Benchmark { name: "bubblesort", source: include_str!("../benchmarks/bubblesort.c") },
    Benchmark { name: "arf", source: include_str!("../benchmarks/arf.c") },
    Benchmark { name: "cancel", source: include_str!("../benchmarks/cancel.c") },
    Benchmark { name: "mix", source: include_str!("../benchmarks/mix.c") },
    Benchmark { name: "shift", source: include_str!("../benchmarks/shift.c") },
    Benchmark { name: "pass", source: include_str!("../benchmarks/pass.c") },
];

/// Instances small enough to enumerate.
pub const TOYS: [&str; 4] = ["cancel", "mix", "shift", "pass"];

pub fn get(name: &str) -> Result<Benchmark> {
    ALL.iter()
        .find(|b| b.name == name)
        .copied()
        .ok_or_else(|| Error::Input(format!("no bundled benchmark named `{name}`")))
}
