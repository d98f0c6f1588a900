//! Multi-array memory model.
//!
//! Rows are addressed globally: array `k` owns rows `k*r .. (k+1)*r` (zero
//! based; the text format prints them one based). Primary inputs start out in
//! the first rows and those original rows are pinned.
//!
//! The state also keeps the number of close partner pairs: two live values
//! stored in the same array that share a fanout which is not computed yet.
//! That count is maintained incrementally on every write and retirement;
//! [`MemoryState::cpp_total`] recounts it from scratch.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{GateOp, Netlist, NodeId, Source, ValueId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemLayout {
    pub rows_per_array: usize,
    pub num_arrays: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Row(pub u32);

impl Row {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0 + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrayId(pub u32);

impl ArrayId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ArrayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0 + 1)
    }
}

impl MemLayout {
    pub fn new(rows_per_array: usize, num_arrays: usize) -> Self {
        MemLayout {
            rows_per_array,
            num_arrays,
        }
    }

    pub fn total_rows(&self) -> usize {
        self.rows_per_array * self.num_arrays
    }

    #[inline]
    pub fn array_of(&self, row: Row) -> ArrayId {
        ArrayId((row.index() / self.rows_per_array) as u32)
    }

    #[inline]
    pub fn rows_of(&self, a: ArrayId) -> impl Iterator<Item = Row> {
        let Range { start, end } = self.row_range(a);
        (start as u32..end as u32).map(Row)
    }

    #[inline]
    pub fn row_range(&self, a: ArrayId) -> Range<usize> {
        a.index() * self.rows_per_array..(a.index() + 1) * self.rows_per_array
    }

    pub fn arrays(&self) -> impl Iterator<Item = ArrayId> {
        (0..self.num_arrays as u32).map(ArrayId)
    }

    pub fn contains(&self, row: Row) -> bool {
        row.index() < self.total_rows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowOperand {
    Row { row: Row, negated: bool },
    Const(bool),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Copy {
        src: Row,
        dst: Row,
    },
    Compute {
        node: NodeId,
        op: GateOp,
        dst: Row,
        operands: [RowOperand; 3],
    },
}

impl Instruction {
    pub fn is_copy(&self) -> bool {
        matches!(self, Instruction::Copy { .. })
    }

    pub fn dst(&self) -> Row {
        match *self {
            Instruction::Copy { dst, .. } | Instruction::Compute { dst, .. } => dst,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowClass {
    Pinned,
    Free,
    DuplicatedOccupant,
    UniqueLiveOccupant,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CapacityError {
    #[error("{pis} inputs do not fit in {rows} rows")]
    TooManyInputs { pis: usize, rows: usize },
    #[error("inputs fill all {rows} rows, leaving no working row")]
    NoWorkingRow { rows: usize },
    #[error("layout needs at least one row and one array")]
    EmptyLayout,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StateError {
    #[error("row {0} is outside the layout")]
    RowOutOfRange(Row),
    #[error("write to pinned input row {0}")]
    PinnedRowWrite(Row),
    #[error("copy source {0} is empty")]
    CopyFromEmpty(Row),
    #[error("copy from {0} onto itself")]
    CopyOntoItself(Row),
    #[error("value already stored in {array}")]
    AlreadyInArray { array: ArrayId },
    #[error("overwriting {row} would lose the last copy of a live value")]
    LiveValueOverwrite { row: Row },
    #[error("node {0} is already computed")]
    AlreadyComputed(u32),
    #[error("node {0} is not ready")]
    NotReady(u32),
    #[error("operation does not match node {0}")]
    OpMismatch(u32),
    #[error("operand {index} of node {node} does not match")]
    OperandMismatch { node: u32, index: usize },
    #[error("operand row {row} is not in array {array}")]
    SameArrayViolation { row: Row, array: ArrayId },
}

/// Occupancy and liveness of every row across all arrays.
#[derive(Clone, Debug)]
pub struct MemoryState<'n> {
    net: &'n Netlist,
    layout: MemLayout,
    rows: Vec<Option<ValueId>>,
    pinned: Vec<bool>,
    // value * num_arrays + array
    loc: Vec<Option<Row>>,
    stored_in: Vec<u16>,
    remaining: Vec<u32>,
    computed: Vec<bool>,
    num_computed: usize,
    cpp: i64,
}

impl PartialEq for MemoryState<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.net, other.net)
            && self.layout == other.layout
            && self.rows == other.rows
            && self.pinned == other.pinned
            && self.loc == other.loc
            && self.stored_in == other.stored_in
            && self.remaining == other.remaining
            && self.computed == other.computed
            && self.cpp == other.cpp
    }
}

impl Eq for MemoryState<'_> {}

impl Hash for MemoryState<'_> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.layout.hash(state);
        self.rows.hash(state);
        self.pinned.hash(state);
        self.loc.hash(state);
        self.remaining.hash(state);
        self.computed.hash(state);
        self.cpp.hash(state);
    }
}

impl<'n> MemoryState<'n> {
    /// Places input `i` in global row `i` and pins it. Nothing is computed.
    pub fn new(net: &'n Netlist, layout: MemLayout) -> Result<Self, CapacityError> {
        if layout.rows_per_array == 0 || layout.num_arrays == 0 {
            return Err(CapacityError::EmptyLayout);
        }
        let total = layout.total_rows();
        let pis = net.num_pis();
        if pis > total {
            return Err(CapacityError::TooManyInputs { pis, rows: total });
        }
        if pis == total && net.num_nodes() > 0 {
            return Err(CapacityError::NoWorkingRow { rows: total });
        }
        let mut st = MemoryState {
            net,
            layout,
            rows: vec![None; total],
            pinned: vec![false; total],
            loc: vec![None; net.num_values() * layout.num_arrays],
            stored_in: vec![0; net.num_values()],
            remaining: net.fanout_counts(),
            computed: vec![false; net.num_nodes()],
            num_computed: 0,
            cpp: 0,
        };
        for p in 0..pis as u32 {
            let row = Row(p);
            st.write(row, net.pi_value(p));
            st.pinned[row.index()] = true;
        }
        Ok(st)
    }

    pub fn netlist(&self) -> &'n Netlist {
        self.net
    }

    pub fn layout(&self) -> MemLayout {
        self.layout
    }

    #[inline]
    pub fn occupant(&self, row: Row) -> Option<ValueId> {
        self.rows[row.index()]
    }

    #[inline]
    pub fn is_pinned(&self, row: Row) -> bool {
        self.pinned[row.index()]
    }

    /// Row holding `v` in array `a`, if any.
    #[inline]
    pub fn location(&self, v: ValueId, a: ArrayId) -> Option<Row> {
        self.loc[v.index() * self.layout.num_arrays + a.index()]
    }

    /// Every row holding `v`, in array order.
    pub fn locations(&self, v: ValueId) -> impl Iterator<Item = Row> + '_ {
        let k = self.layout.num_arrays;
        self.loc[v.index() * k..(v.index() + 1) * k]
            .iter()
            .flatten()
            .copied()
    }

    /// Number of arrays storing `v`.
    #[inline]
    pub fn copies_of(&self, v: ValueId) -> usize {
        self.stored_in[v.index()] as usize
    }

    #[inline]
    pub fn remaining(&self, v: ValueId) -> u32 {
        self.remaining[v.index()]
    }

    #[inline]
    pub fn is_live(&self, v: ValueId) -> bool {
        self.remaining[v.index()] > 0
    }

    #[inline]
    pub fn is_computed(&self, n: NodeId) -> bool {
        self.computed[n.index()]
    }

    pub fn computed(&self) -> &[bool] {
        &self.computed
    }

    pub fn num_computed(&self) -> usize {
        self.num_computed
    }

    pub fn all_computed(&self) -> bool {
        self.num_computed == self.computed.len()
    }

    pub fn ready_set(&self) -> Vec<NodeId> {
        self.net.ready_set(&self.computed)
    }

    /// Tracked close-partner-pair count.
    #[inline]
    pub fn cpp(&self) -> i64 {
        self.cpp
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }

    #[inline]
    fn is_uncomputed_value(&self, v: ValueId) -> bool {
        self.net
            .value_node(v)
            .is_none_or(|n| !self.computed[n.index()])
    }

    /// Number of distinct partners of `x` stored in array `a`. Two values are
    /// partners when they feed a common node that is not computed yet.
    pub fn n_pa(&self, x: ValueId, a: ArrayId) -> usize {
        let net = self.net;
        let fanouts = net.fanouts(x);
        let mut count = 0;
        for (i, &f) in fanouts.iter().enumerate() {
            if self.computed[f.index()] {
                continue;
            }
            for y in net.fanin_values(f) {
                if y == x || self.location(y, a).is_none() {
                    continue;
                }
                let seen = fanouts[..i]
                    .iter()
                    .any(|&g| !self.computed[g.index()] && net.fanin_values(g).any(|z| z == y));
                if !seen {
                    count += 1;
                }
            }
        }
        count
    }

    /// [`n_pa`](Self::n_pa) ignoring the occupant `skip`.
    pub fn n_pa_without(&self, x: ValueId, a: ArrayId, skip: Option<ValueId>) -> usize {
        let n = self.n_pa(x, a);
        match skip {
            Some(s) if s != x && self.location(s, a).is_some() && self.are_partners(x, s) => n - 1,
            _ => n,
        }
    }

    pub fn are_partners(&self, x: ValueId, y: ValueId) -> bool {
        x != y
            && self
                .net
                .fanouts(x)
                .iter()
                .any(|&f| !self.computed[f.index()] && self.net.fanin_values(f).any(|z| z == y))
    }

    /// Recounts close partner pairs by enumerating every fanin pair of every
    /// uncomputed node.
    pub fn cpp_total(&self) -> i64 {
        let mut pairs = BTreeSet::new();
        for n in self.net.node_ids() {
            if self.computed[n.index()] {
                continue;
            }
            let fanins: Vec<ValueId> = self.net.fanin_values(n).collect();
            for i in 0..fanins.len() {
                for j in i + 1..fanins.len() {
                    let (x, y) = (fanins[i].min(fanins[j]), fanins[i].max(fanins[j]));
                    pairs.insert((x, y));
                }
            }
        }
        let mut total = 0;
        for (x, y) in pairs {
            for a in self.layout.arrays() {
                if self.location(x, a).is_some() && self.location(y, a).is_some() {
                    total += 1;
                }
            }
        }
        total
    }

    pub fn classify_row(&self, row: Row) -> RowClass {
        if self.pinned[row.index()] {
            return RowClass::Pinned;
        }
        match self.rows[row.index()] {
            None => RowClass::Free,
            Some(v) if !self.is_live(v) => RowClass::Free,
            Some(v) if self.stored_in[v.index()] > 1 => RowClass::DuplicatedOccupant,
            Some(_) => RowClass::UniqueLiveOccupant,
        }
    }

    /// Whether `row` can receive a new value without losing live data.
    #[inline]
    pub fn is_overwritable(&self, row: Row) -> bool {
        matches!(
            self.classify_row(row),
            RowClass::Free | RowClass::DuplicatedOccupant
        )
    }

    /// Writes `v` into `row`, evicting the occupant. No legality checks.
    pub(crate) fn write(&mut self, row: Row, v: ValueId) {
        let a = self.layout.array_of(row);
        let k = self.layout.num_arrays;
        if let Some(old) = self.rows[row.index()] {
            self.cpp -= self.n_pa(old, a) as i64;
            self.loc[old.index() * k + a.index()] = None;
            self.stored_in[old.index()] -= 1;
        }
        self.cpp += self.n_pa(v, a) as i64;
        self.rows[row.index()] = Some(v);
        self.loc[v.index() * k + a.index()] = Some(row);
        self.stored_in[v.index()] += 1;
    }

    /// Marks `n` computed and releases one use of each fanin edge. The node's
    /// own value is not stored yet.
    pub(crate) fn retire(&mut self, n: NodeId) {
        let net = self.net;
        self.computed[n.index()] = true;
        self.num_computed += 1;
        let fanins: Vec<ValueId> = net.fanin_values(n).collect();
        for i in 0..fanins.len() {
            for j in i + 1..fanins.len() {
                let (x, y) = (fanins[i], fanins[j]);
                if self.are_partners(x, y) {
                    continue;
                }
                for a in self.layout.arrays() {
                    if self.location(x, a).is_some() && self.location(y, a).is_some() {
                        self.cpp -= 1;
                    }
                }
            }
        }
        for op in &net.node(n).operands {
            if let Some(v) = net.operand_value(op) {
                self.remaining[v.index()] -= 1;
            }
        }
        let me = net.node_value(n);
        self.remaining[me.index()] = net.fanout_count(me);
    }

    fn check_row(&self, row: Row) -> Result<(), StateError> {
        if self.layout.contains(row) {
            Ok(())
        } else {
            Err(StateError::RowOutOfRange(row))
        }
    }

    /// Checks an instruction against the current state without applying it.
    pub fn check(&self, ins: &Instruction) -> Result<(), StateError> {
        match *ins {
            Instruction::Copy { src, dst } => {
                self.check_row(src)?;
                self.check_row(dst)?;
                if src == dst {
                    return Err(StateError::CopyOntoItself(src));
                }
                let v = self.rows[src.index()].ok_or(StateError::CopyFromEmpty(src))?;
                if self.pinned[dst.index()] {
                    return Err(StateError::PinnedRowWrite(dst));
                }
                let array = self.layout.array_of(dst);
                if self.location(v, array).is_some() {
                    return Err(StateError::AlreadyInArray { array });
                }
                if !self.is_overwritable(dst) {
                    return Err(StateError::LiveValueOverwrite { row: dst });
                }
                Ok(())
            }
            Instruction::Compute {
                node,
                op,
                dst,
                operands,
            } => {
                self.check_row(dst)?;
                let net = self.net;
                if node.index() >= net.num_nodes() {
                    return Err(StateError::NotReady(node.0));
                }
                if self.computed[node.index()] {
                    return Err(StateError::AlreadyComputed(node.0));
                }
                if !net.is_ready(node, &self.computed) {
                    return Err(StateError::NotReady(node.0));
                }
                let def = net.node(node);
                if def.op != op {
                    return Err(StateError::OpMismatch(node.0));
                }
                if self.pinned[dst.index()] {
                    return Err(StateError::PinnedRowWrite(dst));
                }
                let array = self.layout.array_of(dst);
                for (k, (want, got)) in def.operands.iter().zip(operands.iter()).enumerate() {
                    let ok = match (want.source, *got) {
                        (Source::Const(b), RowOperand::Const(c)) => b == c,
                        (Source::Const(_), _) | (_, RowOperand::Const(_)) => false,
                        (_, RowOperand::Row { row, negated }) => {
                            self.check_row(row)?;
                            if self.layout.array_of(row) != array {
                                return Err(StateError::SameArrayViolation { row, array });
                            }
                            negated == want.negated
                                && self.rows[row.index()] == net.operand_value(want)
                        }
                    };
                    if !ok {
                        return Err(StateError::OperandMismatch {
                            node: node.0,
                            index: k,
                        });
                    }
                }
                // The destination may hold a fanin that dies with this compute.
                if let Some(v) = self.rows[dst.index()] {
                    let left = self.remaining[v.index()] - net.edge_multiplicity(node, v);
                    if left > 0 && self.stored_in[v.index()] < 2 {
                        return Err(StateError::LiveValueOverwrite { row: dst });
                    }
                }
                Ok(())
            }
        }
    }

    /// Applies an instruction. On error the state is unchanged.
    pub fn apply(&mut self, ins: &Instruction) -> Result<(), StateError> {
        self.check(ins)?;
        match *ins {
            Instruction::Copy { src, dst } => {
                let v = self.rows[src.index()].expect("checked");
                self.write(dst, v);
            }
            Instruction::Compute { node, dst, .. } => {
                self.retire(node);
                self.write(dst, self.net.node_value(node));
            }
        }
        Ok(())
    }

    /// Functional form of [`apply`](Self::apply).
    pub fn applied(&self, ins: &Instruction) -> Result<Self, StateError> {
        let mut next = self.clone();
        next.apply(ins)?;
        Ok(next)
    }

    /// Builds the compute instruction for `n` writing `dst`, reading operands
    /// from the array of `dst`.
    pub fn compute_instruction(&self, n: NodeId, dst: Row) -> Option<Instruction> {
        let (op, operands) = self.operand_rows(n, self.layout.array_of(dst))?;
        Some(Instruction::Compute {
            node: n,
            op,
            dst,
            operands,
        })
    }

    /// Operand rows for computing `n` in array `a`, if every fanin is there.
    pub fn operand_rows(&self, n: NodeId, a: ArrayId) -> Option<(GateOp, [RowOperand; 3])> {
        let def = self.net.node(n);
        let mut operands = [RowOperand::Const(false); 3];
        for (slot, op) in operands.iter_mut().zip(def.operands.iter()) {
            *slot = match self.net.operand_value(op) {
                None => match op.source {
                    Source::Const(b) => RowOperand::Const(b),
                    _ => unreachable!(),
                },
                Some(v) => RowOperand::Row {
                    row: self.location(v, a)?,
                    negated: op.negated,
                },
            };
        }
        Some((def.op, operands))
    }

    /// Lowest-index row holding `v`.
    pub fn any_location(&self, v: ValueId) -> Option<Row> {
        self.locations(v).next()
    }

    /// Number of overwritable rows in `a` (excluding duplicated occupants).
    pub fn free_rows(&self, a: ArrayId) -> impl Iterator<Item = Row> + '_ {
        self.layout
            .rows_of(a)
            .filter(|&r| self.classify_row(r) == RowClass::Free)
    }

    /// Checks internal consistency: `loc` is the inverse of `rows`, counts
    /// agree and every live computed value is still stored.
    pub fn check_invariants(&self) -> Result<(), String> {
        let k = self.layout.num_arrays;
        let mut counts = vec![0u16; self.stored_in.len()];
        for (r, occ) in self.rows.iter().enumerate() {
            if let Some(v) = occ {
                let a = self.layout.array_of(Row(r as u32));
                if self.loc[v.index() * k + a.index()] != Some(Row(r as u32)) {
                    return Err(format!("row {} not indexed", Row(r as u32)));
                }
                counts[v.index()] += 1;
            }
        }
        for (i, l) in self.loc.iter().enumerate() {
            if let Some(r) = l {
                if self.rows[r.index()] != Some(ValueId((i / k) as u32)) {
                    return Err(format!("stale location for value {}", i / k));
                }
            }
        }
        if counts != self.stored_in {
            return Err("stored_in mismatch".into());
        }
        for v in 0..self.stored_in.len() {
            let v = ValueId(v as u32);
            if self.is_live(v) && !self.is_uncomputed_value(v) && self.stored_in[v.index()] == 0 {
                return Err(format!("live value {} lost", self.net.value_name(v)));
            }
        }
        if self.cpp != self.cpp_total() {
            return Err(format!(
                "tracked cpp {} != recount {}",
                self.cpp,
                self.cpp_total()
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netlist::parse_netlist;

    fn row_of(st: &MemoryState, name: &str, a: u32) -> Option<Row> {
        let net = st.netlist();
        let n = net.find_node(name).unwrap();
        st.location(net.node_value(n), ArrayId(a))
    }

    #[test]
    fn input_placement() {
        let net = fixtures::five_node_net();
        let st = MemoryState::new(&net, MemLayout::new(8, 2)).unwrap();
        for p in 0..8 {
            assert_eq!(st.occupant(Row(p)), Some(net.pi_value(p)));
            assert!(st.is_pinned(Row(p)));
        }
        assert!((8..16).all(|r| st.occupant(Row(r)).is_none()));

        let ten = parse_netlist(".inputs a b c d e f g h i j\n.node n = XOR(a, j, 0)\n.outputs n")
            .unwrap();
        let st = MemoryState::new(&ten, MemLayout::new(8, 2)).unwrap();
        assert_eq!(st.occupant(Row(9)), Some(ten.pi_value(9)));
        assert_eq!(st.classify_row(Row(9)), RowClass::Pinned);
        assert_eq!(st.classify_row(Row(10)), RowClass::Free);
    }

    #[test]
    fn capacity_errors() {
        let names: Vec<String> = (0..17).map(|i| format!("x{i}")).collect();
        let net = parse_netlist(&format!(
            ".inputs {}\n.node n = XOR(x0, x1, 0)",
            names.join(" ")
        ))
        .unwrap();
        assert!(matches!(
            MemoryState::new(&net, MemLayout::new(8, 2)),
            Err(CapacityError::TooManyInputs { pis: 17, rows: 16 })
        ));
        let net = parse_netlist(".inputs a b\n.node n = XOR(a, b, 0)").unwrap();
        assert!(matches!(
            MemoryState::new(&net, MemLayout::new(1, 2)),
            Err(CapacityError::NoWorkingRow { .. })
        ));
        let only_inputs = parse_netlist(".inputs a b\n.outputs a").unwrap();
        assert!(MemoryState::new(&only_inputs, MemLayout::new(1, 2)).is_ok());
    }

    #[test]
    fn copy_then_self_overwriting_compute() {
        let net = fixtures::five_node_net();
        let mut st = MemoryState::new(&net, MemLayout::new(8, 2)).unwrap();
        st.apply(&Instruction::Copy {
            src: Row(0),
            dst: Row(8),
        })
        .unwrap();
        assert_eq!(
            st.locations(net.pi_value(0)).collect::<Vec<_>>(),
            vec![Row(0), Row(8)]
        );
        st.apply(&Instruction::Copy {
            src: Row(1),
            dst: Row(9),
        })
        .unwrap();
        let n1 = net.find_node("N1").unwrap();
        let ins = st.compute_instruction(n1, Row(8)).unwrap();
        st.apply(&ins).unwrap();
        assert_eq!(st.occupant(Row(8)), Some(net.node_value(n1)));
        st.check_invariants().unwrap();
    }

    #[test]
    fn compute_rejects_cross_array_operands() {
        let net = fixtures::five_node_net();
        let mut st = MemoryState::new(&net, MemLayout::new(8, 2)).unwrap();
        let n1 = net.find_node("N1").unwrap();
        let Some(Instruction::Compute {
            node, op, operands, ..
        }) = st.compute_instruction(n1, Row(7))
        else {
            panic!()
        };
        // operands live in A1, destination in A2
        let ins = Instruction::Compute {
            node,
            op,
            dst: Row(8),
            operands,
        };
        assert!(matches!(
            st.apply(&ins),
            Err(StateError::SameArrayViolation { .. })
        ));
        assert!(matches!(
            st.apply(&Instruction::Copy {
                src: Row(2),
                dst: Row(1)
            }),
            Err(StateError::PinnedRowWrite(_))
        ));
        assert!(matches!(
            st.apply(&Instruction::Copy {
                src: Row(9),
                dst: Row(10)
            }),
            Err(StateError::CopyFromEmpty(_))
        ));
        st.apply(&Instruction::Copy {
            src: Row(0),
            dst: Row(8),
        })
        .unwrap();
        assert!(matches!(
            st.apply(&Instruction::Copy {
                src: Row(0),
                dst: Row(9)
            }),
            Err(StateError::AlreadyInArray { .. })
        ));
    }

    #[test]
    fn worked_example_partner_counts() {
        let net = fixtures::two_array_net();
        let st = &fixtures::two_array_state(&net);
        let net = &net;
        let v = |name: &str| net.node_value(net.find_node(name).unwrap());
        assert_eq!(st.n_pa(v("a"), ArrayId(0)), 1);
        assert_eq!(st.cpp_total(), 2);
        assert_eq!(st.cpp(), 2);
        // c and d are partners but sit in different arrays
        assert!(st.are_partners(v("c"), v("d")));
        assert_eq!(st.n_pa(v("c"), ArrayId(0)), 0);

        let mut after_e = st.clone();
        let e = net.find_node("e").unwrap();
        let free = after_e.free_rows(ArrayId(0)).next().unwrap();
        let ins = after_e.compute_instruction(e, free).unwrap();
        after_e.apply(&ins).unwrap();
        assert_eq!(after_e.n_pa(v("g"), ArrayId(1)), 2);
        assert_eq!(
            after_e.classify_row(row_of(&after_e, "a", 0).unwrap()),
            RowClass::Free
        );
        assert_eq!(
            after_e.classify_row(row_of(&after_e, "b", 0).unwrap()),
            RowClass::Free
        );
        assert_eq!(after_e.n_pa(v("a"), ArrayId(0)), 0);

        let c_row = row_of(&after_e, "c", 0).unwrap();
        let dst = after_e.free_rows(ArrayId(1)).next().unwrap();
        after_e
            .apply(&Instruction::Copy { src: c_row, dst })
            .unwrap();
        assert_eq!(after_e.classify_row(dst), RowClass::DuplicatedOccupant);
        assert_eq!(after_e.classify_row(Row(0)), RowClass::Pinned);
        after_e.check_invariants().unwrap();
    }

    #[test]
    fn empty_memory_has_no_pairs() {
        let net = parse_netlist(".node n = XOR(0, 0, 1)\n.outputs n").unwrap();
        let st = MemoryState::new(&net, MemLayout::new(2, 1)).unwrap();
        assert_eq!(st.cpp_total(), 0);
    }

    #[test]
    fn duplicate_without_partners_keeps_cpp() {
        let net = fixtures::two_array_net();
        let mut st = fixtures::two_array_state(&net);
        let net = &net;
        let f = net.node_value(net.find_node("f").unwrap());
        let before = st.cpp_total();
        // f's only partners (g, h) are absent from A1
        let src = st.location(f, ArrayId(1)).unwrap();
        let dst = st.free_rows(ArrayId(0)).next().unwrap();
        st.apply(&Instruction::Copy { src, dst }).unwrap();
        assert_eq!(st.cpp_total(), before);
        assert_eq!(st.cpp(), before);
    }
}
