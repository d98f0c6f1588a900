//! Exact minimum copy count for tiny instances.
//!
//! Search runs over abstract states: the set of computed nodes plus, per
//! array, the set of live values held in its writable rows. Which writable
//! row holds what does not matter, and dead values are dropped as soon as
//! they die, so every concrete state maps to one abstract state. Computes
//! cost nothing and copies cost one, so a 0-1 breadth-first search returns
//! the optimum the first time a complete state is popped.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::memory::{ArrayId, CapacityError, Instruction, MemLayout, MemoryState};
use crate::netlist::{Netlist, NodeId, ValueId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_nodes: usize,
    pub max_values: usize,
    pub max_states: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_nodes: 16,
            max_values: 128,
            max_states: 4_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("no valid schedule exists")]
    Infeasible,
    #[error("instance too large for exhaustive search: {0}")]
    ResourceLimit(String),
    #[error("no schedule within {0} copies")]
    BoundExceeded(usize),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub optimum: usize,
    pub witness: Vec<Instruction>,
    pub states_explored: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct State {
    computed: u32,
    held: Vec<u128>,
}

#[derive(Clone, Copy, Debug)]
enum Move {
    Copy {
        v: ValueId,
        to: ArrayId,
        victim: Option<ValueId>,
    },
    Compute {
        n: NodeId,
        at: ArrayId,
        victim: Option<ValueId>,
    },
}

struct Search<'a> {
    net: &'a Netlist,
    k: usize,
    /// Writable rows per array.
    capacity: Vec<usize>,
    /// Array holding each input's pinned row.
    home: Vec<usize>,
    base_computed: u32,
    full: u32,
}

fn bit(v: ValueId) -> u128 {
    1u128 << v.0
}

impl Search<'_> {
    fn remaining(&self, computed: u32, v: ValueId) -> u32 {
        let net = self.net;
        let mut r = net.fanout_count(v);
        for &f in net.fanouts(v) {
            if computed >> f.0 & 1 == 1 {
                r -= net.edge_multiplicity(f, v);
            }
        }
        r
    }

    fn value_computed(&self, computed: u32, v: ValueId) -> bool {
        match self.net.value_node(v) {
            None => true,
            Some(n) => computed >> n.0 & 1 == 1,
        }
    }

    fn present(&self, s: &State, v: ValueId, a: usize) -> bool {
        s.held[a] & bit(v) != 0 || (self.net.is_pi(v) && self.home[v.index()] == a)
    }

    fn holders(&self, s: &State, v: ValueId) -> usize {
        (0..self.k).filter(|&a| self.present(s, v, a)).count()
    }

    fn prune(&self, s: &mut State) {
        for a in 0..self.k {
            let mut m = s.held[a];
            while m != 0 {
                let v = ValueId(m.trailing_zeros());
                m &= m - 1;
                if self.remaining(s.computed, v) == 0 {
                    s.held[a] &= !bit(v);
                }
            }
        }
    }

    /// Ways to obtain a writable row in `a`: a free one, or any duplicated
    /// live occupant.
    fn slots(&self, s: &State, a: usize) -> Vec<Option<ValueId>> {
        if (s.held[a].count_ones() as usize) < self.capacity[a] {
            return vec![None];
        }
        let mut out = Vec::new();
        let mut m = s.held[a];
        while m != 0 {
            let v = ValueId(m.trailing_zeros());
            m &= m - 1;
            if self.holders(s, v) > 1 {
                out.push(Some(v));
            }
        }
        out
    }

    fn successors(&self, s: &State, out: &mut Vec<(State, Move, usize)>) {
        out.clear();
        let net = self.net;
        let computed = self.computed_vec(s.computed);
        for n in net.node_ids() {
            if computed[n.index()] || !net.is_ready(n, &computed) {
                continue;
            }
            for a in 0..self.k {
                if !net.fanin_values(n).all(|v| self.present(s, v, a)) {
                    continue;
                }
                let mut t = s.clone();
                t.computed |= 1 << n.0;
                self.prune(&mut t);
                let nv = net.node_value(n);
                for victim in self.slots(&t, a) {
                    let mut u = t.clone();
                    if let Some(x) = victim {
                        u.held[a] &= !bit(x);
                    }
                    if self.remaining(u.computed, nv) > 0 {
                        u.held[a] |= bit(nv);
                    }
                    out.push((
                        u,
                        Move::Compute {
                            n,
                            at: ArrayId(a as u32),
                            victim,
                        },
                        0,
                    ));
                }
            }
        }
        for vi in 0..net.num_values() {
            let v = ValueId(vi as u32);
            if !self.value_computed(s.computed, v) || self.remaining(s.computed, v) == 0 {
                continue;
            }
            for a in 0..self.k {
                if self.present(s, v, a) {
                    continue;
                }
                for victim in self.slots(s, a) {
                    let mut u = s.clone();
                    if let Some(x) = victim {
                        u.held[a] &= !bit(x);
                    }
                    u.held[a] |= bit(v);
                    out.push((
                        u,
                        Move::Copy {
                            v,
                            to: ArrayId(a as u32),
                            victim,
                        },
                        1,
                    ));
                }
            }
        }
    }

    fn computed_vec(&self, computed: u32) -> Vec<bool> {
        (0..self.net.num_nodes())
            .map(|i| computed >> i & 1 == 1)
            .collect()
    }
}

/// Minimum number of copies over all valid instruction sequences.
pub fn min_copies(
    net: &Netlist,
    layout: MemLayout,
    bound: Option<usize>,
) -> Result<OracleResult, OracleError> {
    let start = MemoryState::new(net, layout)?;
    min_copies_from(&start, bound, OracleLimits::default())
}

pub fn min_copies_from(
    start: &MemoryState,
    bound: Option<usize>,
    limits: OracleLimits,
) -> Result<OracleResult, OracleError> {
    let net = start.netlist();
    let layout = start.layout();
    if net.num_nodes() > limits.max_nodes.min(32) {
        return Err(OracleError::ResourceLimit(format!(
            "{} nodes, limit {}",
            net.num_nodes(),
            limits.max_nodes
        )));
    }
    if net.num_values() > limits.max_values.min(128) {
        return Err(OracleError::ResourceLimit(format!(
            "{} values, limit {}",
            net.num_values(),
            limits.max_values
        )));
    }
    let k = layout.num_arrays;
    let search = Search {
        net,
        k,
        capacity: layout
            .arrays()
            .map(|a| layout.rows_of(a).filter(|&r| !start.is_pinned(r)).count())
            .collect(),
        home: (0..net.num_pis())
            .map(|p| layout.array_of(crate::memory::Row(p as u32)).index())
            .collect(),
        base_computed: start
            .computed()
            .iter()
            .enumerate()
            .fold(0u32, |m, (i, &c)| if c { m | 1 << i } else { m }),
        full: if net.num_nodes() == 32 {
            u32::MAX
        } else {
            (1u32 << net.num_nodes()) - 1
        },
    };
    let mut root = State {
        computed: search.base_computed,
        held: vec![0; k],
    };
    for a in layout.arrays() {
        for r in layout.rows_of(a) {
            if let Some(v) = start.occupant(r) {
                if !start.is_pinned(r) {
                    root.held[a.index()] |= bit(v);
                }
            }
        }
    }
    search.prune(&mut root);

    let mut states = vec![root.clone()];
    let mut parent: Vec<Option<(usize, Move)>> = vec![None];
    let mut dist = vec![0usize];
    let mut index: HashMap<State, usize> = HashMap::from([(root, 0)]);
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    let mut done = vec![false];
    let mut succ = Vec::new();
    let mut over_bound = false;
    while let Some((id, d)) = queue.pop_front() {
        if done[id] || d != dist[id] {
            continue;
        }
        done[id] = true;
        if states[id].computed == search.full {
            let witness = rebuild(start, &parent, id);
            return Ok(OracleResult {
                optimum: d,
                witness,
                states_explored: states.len(),
            });
        }
        let s = states[id].clone();
        search.successors(&s, &mut succ);
        for (t, mv, cost) in succ.drain(..) {
            let nd = d + cost;
            if bound.is_some_and(|b| nd > b) {
                over_bound = true;
                continue;
            }
            let tid = match index.get(&t) {
                Some(&tid) => {
                    if nd >= dist[tid] {
                        continue;
                    }
                    dist[tid] = nd;
                    parent[tid] = Some((id, mv));
                    tid
                }
                None => {
                    if states.len() >= limits.max_states {
                        return Err(OracleError::ResourceLimit(format!(
                            "more than {} states",
                            limits.max_states
                        )));
                    }
                    let tid = states.len();
                    states.push(t.clone());
                    parent.push(Some((id, mv)));
                    dist.push(nd);
                    done.push(false);
                    index.insert(t, tid);
                    tid
                }
            };
            if cost == 0 {
                queue.push_front((tid, nd));
            } else {
                queue.push_back((tid, nd));
            }
        }
    }
    match bound {
        Some(b) if over_bound => Err(OracleError::BoundExceeded(b)),
        _ => Err(OracleError::Infeasible),
    }
}

/// Turns the abstract move chain ending in `id` into concrete instructions.
fn rebuild(
    start: &MemoryState,
    parent: &[Option<(usize, Move)>],
    mut id: usize,
) -> Vec<Instruction> {
    let mut moves = Vec::new();
    while let Some((p, mv)) = parent[id] {
        moves.push(mv);
        id = p;
    }
    moves.reverse();
    let mut st = start.clone();
    let mut out = Vec::with_capacity(moves.len());
    for mv in moves {
        let ins = match mv {
            Move::Copy { v, to, victim } => {
                let dst = match victim {
                    Some(x) => st.location(x, to),
                    None => st.free_rows(to).next(),
                }
                .expect("abstract slot exists");
                Instruction::Copy {
                    src: st.any_location(v).expect("value stored"),
                    dst,
                }
            }
            Move::Compute { n, at, victim } => {
                let dst = match victim {
                    Some(x) => st.location(x, at),
                    None => {
                        let mut after = st.clone();
                        after.retire(n);
                        let free = after.free_rows(at).next();
                        free
                    }
                }
                .expect("abstract slot exists");
                st.compute_instruction(n, dst).expect("operands present")
            }
        };
        st.apply(&ins).expect("witness instruction is legal");
        out.push(ins);
    }
    out
}
