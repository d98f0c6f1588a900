//! Simplified prior-work schedulers used as comparison points.
//!
//! [`reference_es`] orders nodes by how many fanins they release. The two
//! instruction generators then walk that order: the naive one takes the
//! lowest-index array with enough room, the greedy one the array needing the
//! fewest fanin copies. Rows are always the lowest-index free ones.
//!
//! When no array has room, both fall back to overwriting the lowest-index
//! duplicated occupant, then to moving one unique occupant to the
//! lowest-index array that can take it.

use rand::Rng;

use crate::memory::{ArrayId, Instruction, MemLayout, MemoryState, Row, RowClass};
use crate::netlist::{Netlist, NodeId, ValueId};
use crate::rng::rng_from_seed;
use crate::scheduler::{ScheduleError, ScheduleResult};

/// List scheduling that favors nodes releasing the most node fanins; ties
/// are broken uniformly by `seed`.
pub fn reference_es(net: &Netlist, seed: u64) -> Vec<NodeId> {
    let mut rng = rng_from_seed(seed);
    let mut remaining = net.fanout_counts();
    let mut computed = vec![false; net.num_nodes()];
    let mut ready: Vec<NodeId> = net.ready_set(&computed);
    let mut es = Vec::with_capacity(net.num_nodes());
    while !ready.is_empty() {
        let released = |n: NodeId| {
            net.fanin_values(n)
                .filter(|&v| !net.is_pi(v) && remaining[v.index()] == net.edge_multiplicity(n, v))
                .count()
        };
        let best = ready.iter().map(|&n| released(n)).max().expect("non-empty");
        let tied: Vec<usize> = (0..ready.len())
            .filter(|&i| released(ready[i]) == best)
            .collect();
        let n = ready.swap_remove(tied[rng.random_range(0..tied.len())]);
        for op in &net.node(n).operands {
            if let Some(v) = net.operand_value(op) {
                remaining[v.index()] -= 1;
            }
        }
        computed[n.index()] = true;
        es.push(n);
        for &f in net.fanouts(net.node_value(n)) {
            if !computed[f.index()] && !ready.contains(&f) && net.is_ready(f, &computed) {
                ready.push(f);
            }
        }
        ready.sort();
    }
    es
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Strategy {
    Naive,
    Greedy,
}

pub fn naive_ig(
    net: &Netlist,
    es: &[NodeId],
    layout: MemLayout,
) -> Result<ScheduleResult, ScheduleError> {
    let start = MemoryState::new(net, layout)?;
    naive_ig_from(&start, es)
}

pub fn greedy_ig(
    net: &Netlist,
    es: &[NodeId],
    layout: MemLayout,
) -> Result<ScheduleResult, ScheduleError> {
    let start = MemoryState::new(net, layout)?;
    greedy_ig_from(&start, es)
}

pub fn naive_ig_from(start: &MemoryState, es: &[NodeId]) -> Result<ScheduleResult, ScheduleError> {
    generate(start, es, Strategy::Naive)
}

pub fn greedy_ig_from(start: &MemoryState, es: &[NodeId]) -> Result<ScheduleResult, ScheduleError> {
    generate(start, es, Strategy::Greedy)
}

fn generate(
    start: &MemoryState,
    es: &[NodeId],
    strategy: Strategy,
) -> Result<ScheduleResult, ScheduleError> {
    let net = start.netlist();
    net.check_es_from(start.computed(), es)?;
    let layout = start.layout();
    let mut st = start.clone();
    let mut instructions = Vec::new();
    for (step, &n) in es.iter().enumerate() {
        let fanins: Vec<ValueId> = net.fanin_values(n).collect();
        let missing = |st: &MemoryState, a: ArrayId| {
            fanins
                .iter()
                .filter(|&&v| st.location(v, a).is_none())
                .count()
        };

        let mut order: Vec<ArrayId> = layout.arrays().collect();
        if strategy == Strategy::Greedy {
            order.sort_by_key(|&a| (missing(&st, a), a));
        }
        let roomy = order.iter().copied().find(|&a| has_room(&st, n, a));
        let attempt = match roomy {
            Some(a) => emit(&st, n, a, false),
            None => order.iter().find_map(|&a| emit(&st, n, a, true)),
        };
        let Some(block) = attempt else {
            return Err(ScheduleError::InsufficientCapacity {
                node: Some(n),
                step,
            });
        };
        for ins in &block {
            st.apply(ins).expect("baseline instruction is legal");
        }
        instructions.extend(block);
    }
    if !st.all_computed() {
        return Err(crate::netlist::EsError::Length {
            expected: start.computed().iter().filter(|c| !**c).count(),
            got: es.len(),
        }
        .into());
    }
    Ok(ScheduleResult::from_instructions(
        start,
        instructions,
        0,
        Vec::new(),
    ))
}

/// Free rows in `a` cover the missing fanins plus the result, counting one
/// row that a dying fanin gives back.
fn has_room(st: &MemoryState, n: NodeId, a: ArrayId) -> bool {
    let net = st.netlist();
    let mut missing = 0;
    let mut reusable = false;
    for v in net.fanin_values(n) {
        let dies = st.remaining(v) == net.edge_multiplicity(n, v);
        match st.location(v, a) {
            Some(r) => reusable |= dies && !st.is_pinned(r),
            None => {
                missing += 1;
                reusable |= dies;
            }
        }
    }
    let free = st.free_rows(a).count();
    free + reusable as usize > missing
}

/// Lowest-index row of `a` that can take new data. Without `fallback` only
/// free rows qualify.
fn acquire(
    st: &mut MemoryState,
    a: ArrayId,
    protect: &[ValueId],
    fallback: bool,
    out: &mut Vec<Instruction>,
) -> Option<Row> {
    if let Some(r) = st.free_rows(a).next() {
        return Some(r);
    }
    if !fallback {
        return None;
    }
    let layout = st.layout();
    let dup = layout.rows_of(a).find(|&r| {
        st.classify_row(r) == RowClass::DuplicatedOccupant
            && !protect.contains(&st.occupant(r).unwrap())
    });
    if dup.is_some() {
        return dup;
    }
    let victim = layout.rows_of(a).find(|&r| {
        st.classify_row(r) == RowClass::UniqueLiveOccupant
            && !protect.contains(&st.occupant(r).unwrap())
    })?;
    let target = layout.arrays().filter(|&b| b != a).find_map(|b| {
        st.free_rows(b).next().or_else(|| {
            layout
                .rows_of(b)
                .find(|&r| st.classify_row(r) == RowClass::DuplicatedOccupant)
        })
    })?;
    let ins = Instruction::Copy {
        src: victim,
        dst: target,
    };
    st.apply(&ins).ok()?;
    out.push(ins);
    Some(victim)
}

/// Instructions scheduling `n` in `a`, or `None` if rows run out.
fn emit(st: &MemoryState, n: NodeId, a: ArrayId, fallback: bool) -> Option<Vec<Instruction>> {
    let net = st.netlist();
    let mut sc = st.clone();
    let fanins: Vec<ValueId> = net.fanin_values(n).collect();
    let mut out = Vec::new();
    for &v in &fanins {
        if sc.location(v, a).is_some() {
            continue;
        }
        let dst = acquire(&mut sc, a, &fanins, fallback, &mut out)?;
        let src = sc.any_location(v)?;
        let ins = Instruction::Copy { src, dst };
        sc.apply(&ins).ok()?;
        out.push(ins);
    }
    // Rows freed by fanins that die with this compute are candidates too.
    let mut after = sc.clone();
    after.retire(n);
    let free = after.free_rows(a).next();
    let dst = match free {
        Some(r) => r,
        None => {
            let mut tmp = Vec::new();
            let r = acquire(&mut after, a, &fanins, fallback, &mut tmp)?;
            for ins in &tmp {
                sc.apply(ins).ok()?;
            }
            out.extend(tmp);
            r
        }
    };
    let ins = sc.compute_instruction(n, dst)?;
    sc.apply(&ins).ok()?;
    out.push(ins);
    Some(out)
}
