//! Copy-minimizing instruction scheduling of XOR-majority graphs for
//! multi-array SIMD in-memory computing.
//!
//! The flow: parse a [`Netlist`], pick a [`MemLayout`], and call
//! [`schedule`] to get an instruction sequence of row copies and in-array
//! computations. [`validate_is`] and [`equivalence_check`] check any such
//! sequence independently of the scheduler.

pub mod baseline;
pub mod corpus;
pub mod energy;
pub mod fixtures;
pub mod improve;
pub mod memory;
pub mod netlist;
pub mod oracle;
pub mod priority;
pub mod rng;
pub mod scheduler;
pub mod sequence;
pub mod validate;

pub use baseline::{greedy_ig, naive_ig, reference_es};
pub use energy::{compare, energy_of, ComparisonTable, EnergyParams, EnergyTable, SchedulerKind};
pub use improve::{generate_instructions, improve, perturb_es, ImprovementTrace};
pub use memory::{ArrayId, Instruction, MemLayout, MemoryState, Row, RowClass, RowOperand};
pub use netlist::{
    parse_netlist, random_netlist, GateOp, Netlist, NodeId, Operand, Output, Source, ValueId,
};
pub use oracle::{min_copies, OracleError, OracleResult};
pub use priority::{calc_priority, pick_row, PriorityValue, RowPlan};
pub use scheduler::{schedule, schedule_once, ScheduleError, ScheduleResult, SchedulerConfig};
pub use validate::{
    equivalence_check, simulate_is, validate_is, ValidationReport, VectorSpec, ViolationKind,
};
