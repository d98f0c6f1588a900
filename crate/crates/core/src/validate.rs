//! Instruction-sequence checker and single-column simulator.
//!
//! Nothing here goes through [`MemoryState`](crate::memory::MemoryState):
//! the replay keeps its own row table and use counts so that a bug in the
//! scheduler's legality logic cannot hide itself.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::memory::{Instruction, MemLayout, Row, RowOperand};
use crate::netlist::{Netlist, NodeId, Output, Source, ValueId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    InputsDoNotFit,
    RowOutOfRange,
    PinnedRowWrite,
    CopyFromEmpty,
    CopyOntoItself,
    DuplicateInArray,
    SameArrayViolation,
    UnknownNode,
    RecomputedNode,
    OpMismatch,
    OperandMismatch,
    LiveValueLost,
    NodeNeverComputed,
    OutputNotStored,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Instruction index; `None` for end-of-sequence checks.
    pub index: Option<usize>,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "#{i}: {:?}: {}", self.kind, self.detail),
            None => write!(f, "end: {:?}: {}", self.kind, self.detail),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

/// Operand key used for the multiset comparison: stored value (or constant
/// bit after folding) plus polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Value(u32, bool),
    Const(bool),
    Empty,
}

struct Replay<'a> {
    net: &'a Netlist,
    layout: MemLayout,
    rows: Vec<Option<ValueId>>,
    pinned: usize,
    uses: Vec<i64>,
    computed: Vec<bool>,
    report: ValidationReport,
}

impl<'a> Replay<'a> {
    fn flag(&mut self, index: Option<usize>, kind: ViolationKind, detail: String) {
        self.report.violations.push(Violation {
            index,
            kind,
            detail,
        });
    }

    fn array(&self, row: Row) -> usize {
        row.index() / self.layout.rows_per_array
    }

    fn in_range(&mut self, i: usize, row: Row) -> bool {
        if row.index() < self.rows.len() {
            true
        } else {
            self.flag(Some(i), ViolationKind::RowOutOfRange, format!("{row}"));
            false
        }
    }

    fn held_in(&self, v: ValueId, array: usize) -> Option<usize> {
        let base = array * self.layout.rows_per_array;
        (base..base + self.layout.rows_per_array).find(|&r| self.rows[r] == Some(v))
    }

    fn holders(&self, v: ValueId) -> usize {
        self.rows.iter().filter(|o| **o == Some(v)).count()
    }

    /// Checks and performs a write of `v` into `dst`.
    fn write(&mut self, i: usize, dst: Row, v: ValueId) {
        let d = dst.index();
        if d < self.pinned {
            self.flag(Some(i), ViolationKind::PinnedRowWrite, format!("{dst}"));
            return;
        }
        if let Some(old) = self.rows[d] {
            if old == v {
                self.flag(
                    Some(i),
                    ViolationKind::DuplicateInArray,
                    format!("{dst} already holds it"),
                );
                return;
            }
            if self.uses[old.index()] > 0 && self.holders(old) == 1 {
                let name = self.net.value_name(old).to_string();
                self.flag(
                    Some(i),
                    ViolationKind::LiveValueLost,
                    format!("{name} overwritten in {dst}"),
                );
            }
        }
        if let Some(r) = self.held_in(v, self.array(dst)) {
            if r != d {
                let name = self.net.value_name(v).to_string();
                self.flag(
                    Some(i),
                    ViolationKind::DuplicateInArray,
                    format!("{name} already in R{}", r + 1),
                );
            }
        }
        self.rows[d] = Some(v);
    }

    fn copy(&mut self, i: usize, src: Row, dst: Row) {
        if !self.in_range(i, src) | !self.in_range(i, dst) {
            return;
        }
        if src == dst {
            self.flag(Some(i), ViolationKind::CopyOntoItself, format!("{src}"));
            return;
        }
        let Some(v) = self.rows[src.index()] else {
            self.flag(Some(i), ViolationKind::CopyFromEmpty, format!("{src}"));
            return;
        };
        self.write(i, dst, v);
    }

    fn compute(
        &mut self,
        i: usize,
        node: NodeId,
        op: crate::netlist::GateOp,
        dst: Row,
        operands: &[RowOperand; 3],
    ) {
        let net = self.net;
        if node.index() >= net.num_nodes() {
            self.flag(
                Some(i),
                ViolationKind::UnknownNode,
                format!("node {}", node.0),
            );
            return;
        }
        let spec = net.node(node);
        if self.computed[node.index()] {
            self.flag(Some(i), ViolationKind::RecomputedNode, spec.name.clone());
        }
        if op != spec.op {
            self.flag(
                Some(i),
                ViolationKind::OpMismatch,
                format!(
                    "{} is {}, got {}",
                    spec.name,
                    spec.op.mnemonic(),
                    op.mnemonic()
                ),
            );
        }
        if !self.in_range(i, dst) {
            return;
        }
        let array = self.array(dst);
        let mut got = Vec::with_capacity(3);
        for o in operands {
            got.push(match *o {
                RowOperand::Const(b) => Key::Const(b),
                RowOperand::Row { row, negated } => {
                    if !self.in_range(i, row) {
                        Key::Empty
                    } else {
                        if self.array(row) != array {
                            self.flag(
                                Some(i),
                                ViolationKind::SameArrayViolation,
                                format!("{row} outside array of {dst}"),
                            );
                        }
                        match self.rows[row.index()] {
                            Some(v) => Key::Value(v.0, negated),
                            None => Key::Empty,
                        }
                    }
                }
            });
        }
        let mut want: Vec<Key> = spec
            .operands
            .iter()
            .map(|o| match o.source {
                Source::Const(b) => Key::Const(b ^ o.negated),
                _ => Key::Value(net.operand_value(o).expect("non-constant").0, o.negated),
            })
            .collect();
        got.sort();
        want.sort();
        if got != want {
            self.flag(
                Some(i),
                ViolationKind::OperandMismatch,
                format!("{}: expected {want:?}, got {got:?}", spec.name),
            );
        }
        for o in &spec.operands {
            if let Some(v) = net.operand_value(o) {
                self.uses[v.index()] -= 1;
            }
        }
        self.computed[node.index()] = true;
        self.write(i, dst, net.node_value(node));
    }
}

/// Replays `is` from the initial placement and lists every rule violation.
pub fn validate_is(net: &Netlist, is: &[Instruction], layout: MemLayout) -> ValidationReport {
    let total = layout.rows_per_array * layout.num_arrays;
    let mut rp = Replay {
        net,
        layout,
        rows: vec![None; total],
        pinned: net.num_pis(),
        uses: (0..net.num_values())
            .map(|v| net.fanout_count(ValueId(v as u32)) as i64)
            .collect(),
        computed: vec![false; net.num_nodes()],
        report: ValidationReport::default(),
    };
    if net.num_pis() > total || layout.rows_per_array == 0 {
        rp.flag(
            None,
            ViolationKind::InputsDoNotFit,
            format!("{} inputs, {total} rows", net.num_pis()),
        );
        return rp.report;
    }
    for p in 0..net.num_pis() {
        rp.rows[p] = Some(ValueId(p as u32));
    }
    for (i, ins) in is.iter().enumerate() {
        match ins {
            Instruction::Copy { src, dst } => rp.copy(i, *src, *dst),
            Instruction::Compute {
                node,
                op,
                dst,
                operands,
            } => rp.compute(i, *node, *op, *dst, operands),
        }
    }
    for n in net.node_ids() {
        if !rp.computed[n.index()] {
            rp.flag(
                None,
                ViolationKind::NodeNeverComputed,
                net.node(n).name.clone(),
            );
        }
    }
    for &o in net.outputs() {
        let v = net.output_value(o);
        if !rp.rows.contains(&Some(v)) {
            rp.flag(
                None,
                ViolationKind::OutputNotStored,
                net.value_name(v).to_string(),
            );
        }
    }
    rp.report
}

/// Runs `is` on one bit column. Returns `None` if an instruction reads an
/// empty or out-of-range row or an output is not held anywhere at the end.
pub fn simulate_is(
    net: &Netlist,
    is: &[Instruction],
    layout: MemLayout,
    assignment: &[bool],
) -> Option<Vec<bool>> {
    let total = layout.rows_per_array * layout.num_arrays;
    if net.num_pis() > total || assignment.len() != net.num_pis() {
        return None;
    }
    let mut bits: Vec<Option<bool>> = vec![None; total];
    let mut tags: Vec<Option<ValueId>> = vec![None; total];
    for (p, &b) in assignment.iter().enumerate() {
        bits[p] = Some(b);
        tags[p] = Some(ValueId(p as u32));
    }
    for ins in is {
        match ins {
            Instruction::Copy { src, dst } => {
                let b = (*bits.get(src.index())?)?;
                *bits.get_mut(dst.index())? = Some(b);
                tags[dst.index()] = tags[src.index()];
            }
            Instruction::Compute {
                node,
                op,
                dst,
                operands,
            } => {
                let mut x = [false; 3];
                for (k, o) in operands.iter().enumerate() {
                    x[k] = match *o {
                        RowOperand::Const(b) => b,
                        RowOperand::Row { row, negated } => (*bits.get(row.index())?)? ^ negated,
                    };
                }
                *bits.get_mut(dst.index())? = Some(op.eval(x[0], x[1], x[2]));
                tags[dst.index()] = Some(ValueId((net.num_pis() + node.index()) as u32));
            }
        }
    }
    net.outputs()
        .iter()
        .map(|&o| {
            let v = match o {
                Output::Pi(p) => ValueId(p),
                Output::Node(n) => ValueId((net.num_pis() + n.index()) as u32),
            };
            let r = tags.iter().position(|t| *t == Some(v))?;
            bits[r]
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VectorSpec {
    Exhaustive,
    Random {
        count: usize,
        seed: u64,
    },
    /// Exhaustive up to [`VectorSpec::EXHAUSTIVE_LIMIT`] inputs, otherwise
    /// 1024 random vectors.
    Auto {
        seed: u64,
    },
}

impl VectorSpec {
    pub const EXHAUSTIVE_LIMIT: usize = 10;
    pub const RANDOM_COUNT: usize = 1024;

    pub fn vectors(self, num_pis: usize) -> Vec<Vec<bool>> {
        match self {
            VectorSpec::Exhaustive => (0..1u64 << num_pis)
                .map(|m| (0..num_pis).map(|i| m >> i & 1 == 1).collect())
                .collect(),
            VectorSpec::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| (0..num_pis).map(|_| rng.random()).collect())
                    .collect()
            }
            VectorSpec::Auto { .. } if num_pis <= Self::EXHAUSTIVE_LIMIT => {
                VectorSpec::Exhaustive.vectors(num_pis)
            }
            VectorSpec::Auto { seed } => VectorSpec::Random {
                count: Self::RANDOM_COUNT,
                seed,
            }
            .vectors(num_pis),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub vectors_checked: usize,
    /// First failing input assignment.
    pub witness: Option<Vec<bool>>,
}

/// Compares [`simulate_is`] with the netlist's own evaluation.
pub fn equivalence_check(
    net: &Netlist,
    is: &[Instruction],
    layout: MemLayout,
    spec: VectorSpec,
) -> EquivalenceReport {
    let vectors = spec.vectors(net.num_pis());
    for (k, v) in vectors.iter().enumerate() {
        if simulate_is(net, is, layout, v).as_deref() != Some(&net.simulate(v)[..]) {
            return EquivalenceReport {
                equivalent: false,
                vectors_checked: k + 1,
                witness: Some(v.clone()),
            };
        }
    }
    EquivalenceReport {
        equivalent: true,
        vectors_checked: vectors.len(),
        witness: None,
    }
}
