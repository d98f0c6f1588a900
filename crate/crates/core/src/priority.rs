//! CICPP priority: the number of copy instructions needed to schedule a node
//! in an array (minimized first), then the change in close partner pairs
//! (maximized second).
//!
//! Evaluation runs on a scratch clone of the memory state. Every missing fanin
//! gets a row through [`pick_row`] and is copied in; then the node's fanins
//! release one use each and a row is picked for the result. The reported
//! `delta_cpp` is the exact difference of the pair count between the scratch
//! state and the input state.

use std::cmp::Ordering;

use rand::Rng;

use crate::memory::{ArrayId, Instruction, MemoryState, Row, RowClass};
use crate::netlist::{NodeId, ValueId};
use crate::rng::Ties;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorityValue {
    Infeasible,
    Score { copies: u32, delta_cpp: i64 },
}

impl PriorityValue {
    pub fn copies(&self) -> Option<u32> {
        match *self {
            PriorityValue::Score { copies, .. } => Some(copies),
            PriorityValue::Infeasible => None,
        }
    }

    pub fn delta_cpp(&self) -> Option<i64> {
        match *self {
            PriorityValue::Score { delta_cpp, .. } => Some(delta_cpp),
            PriorityValue::Infeasible => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, PriorityValue::Score { .. })
    }
}

/// `Greater` means higher priority.
impl Ord for PriorityValue {
    fn cmp(&self, other: &Self) -> Ordering {
        use PriorityValue::*;
        match (self, other) {
            (Infeasible, Infeasible) => Ordering::Equal,
            (Infeasible, Score { .. }) => Ordering::Less,
            (Score { .. }, Infeasible) => Ordering::Greater,
            (
                Score {
                    copies: c1,
                    delta_cpp: d1,
                },
                Score {
                    copies: c2,
                    delta_cpp: d2,
                },
            ) => c2.cmp(c1).then(d1.cmp(d2)),
        }
    }
}

impl PartialOrd for PriorityValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PickCase {
    Free,
    Duplicated,
    Evict,
}

/// Move of a unique live occupant out of the target array before its row is
/// reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Eviction {
    pub src: Row,
    pub dst: Row,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowPick {
    pub row: Row,
    pub case: PickCase,
    pub eviction: Option<Eviction>,
    pub copies: u32,
    pub delta_cpp: i64,
}

/// Values whose rows in the target array must not be given up.
#[derive(Clone, Copy, Debug, Default)]
pub struct Guard<'a> {
    pub values: &'a [ValueId],
    /// Also refuse to overwrite guarded duplicated occupants.
    pub duplicates: bool,
}

impl Guard<'_> {
    fn blocks(&self, v: ValueId, duplicated: bool) -> bool {
        (!duplicated || self.duplicates) && self.values.contains(&v)
    }
}

/// Chooses a row in array `a` for incoming data.
///
/// 1. any free row (no copy, no pair change);
/// 2. otherwise the duplicated occupant whose overwrite loses the fewest
///    pairs;
/// 3. otherwise, if `can_copy`, move one unique occupant to another array
///    (whose row is chosen by cases 1-2 only) maximizing the pair change.
///
/// Ties are broken uniformly with `rng`. Returns `None` if nothing fits.
pub fn pick_row<R: Rng>(
    st: &MemoryState,
    a: ArrayId,
    can_copy: bool,
    guard: Guard,
    rng: &mut R,
) -> Option<RowPick> {
    let layout = st.layout();

    let mut free_pick = None;
    let mut ties = Ties::default();
    for r in layout.rows_of(a) {
        if st.classify_row(r) == RowClass::Free {
            if free_pick.is_none() {
                ties.reset();
                free_pick = Some(r);
            } else if ties.offer(rng) {
                free_pick = Some(r);
            }
        }
    }
    if let Some(row) = free_pick {
        return Some(RowPick {
            row,
            case: PickCase::Free,
            eviction: None,
            copies: 0,
            delta_cpp: 0,
        });
    }

    let mut best: Option<(Row, i64)> = None;
    for r in layout.rows_of(a) {
        if st.classify_row(r) != RowClass::DuplicatedOccupant {
            continue;
        }
        let d = st.occupant(r).expect("occupied");
        if guard.blocks(d, true) {
            continue;
        }
        let delta = -(st.n_pa(d, a) as i64);
        match best {
            Some((_, b)) if delta < b => {}
            Some((_, b)) if delta == b => {
                if ties.offer(rng) {
                    best = Some((r, delta));
                }
            }
            _ => {
                ties.reset();
                best = Some((r, delta));
            }
        }
    }
    if let Some((row, delta_cpp)) = best {
        return Some(RowPick {
            row,
            case: PickCase::Duplicated,
            eviction: None,
            copies: 0,
            delta_cpp,
        });
    }

    if !can_copy {
        return None;
    }

    // Destination in every other array, chosen without further eviction.
    let targets: Vec<(ArrayId, RowPick)> = layout
        .arrays()
        .filter(|&b| b != a)
        .filter_map(|b| pick_row(st, b, false, Guard::default(), rng).map(|p| (b, p)))
        .collect();
    if targets.is_empty() {
        return None;
    }

    let mut best: Option<(Row, Eviction, i64)> = None;
    for r in layout.rows_of(a) {
        if st.classify_row(r) != RowClass::UniqueLiveOccupant {
            continue;
        }
        let v = st.occupant(r).expect("occupied");
        if guard.blocks(v, false) {
            continue;
        }
        let loss = st.n_pa(v, a) as i64;
        for (b, target) in &targets {
            let displaced = st.occupant(target.row);
            let gain = st.n_pa_without(v, *b, displaced) as i64;
            let delta = target.delta_cpp + gain - loss;
            let ev = Eviction {
                src: r,
                dst: target.row,
            };
            match best {
                Some((_, _, d)) if delta < d => {}
                Some((_, _, d)) if delta == d => {
                    if ties.offer(rng) {
                        best = Some((r, ev, delta));
                    }
                }
                _ => {
                    ties.reset();
                    best = Some((r, ev, delta));
                }
            }
        }
    }
    best.map(|(row, ev, delta_cpp)| RowPick {
        row,
        case: PickCase::Evict,
        eviction: Some(ev),
        copies: 1,
        delta_cpp,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaninPlacement {
    pub value: ValueId,
    pub pick: RowPick,
}

/// Concrete row choices realizing one priority evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowPlan {
    pub node: NodeId,
    pub array: ArrayId,
    pub fanins: Vec<FaninPlacement>,
    pub result: RowPick,
    pub copies: u32,
    pub delta_cpp: i64,
    /// Instructions in execution order, ending with the compute.
    pub instructions: Vec<Instruction>,
}

impl RowPlan {
    pub fn score(&self) -> PriorityValue {
        PriorityValue::Score {
            copies: self.copies,
            delta_cpp: self.delta_cpp,
        }
    }
}

pub struct Evaluation<'n> {
    pub value: PriorityValue,
    pub plan: Option<RowPlan>,
    /// State after the plan, when feasible.
    pub scratch: Option<MemoryState<'n>>,
}

/// Priority of scheduling ready node `n` in array `a`. `st` is not modified.
pub fn calc_priority<'n, R: Rng>(
    st: &MemoryState<'n>,
    n: NodeId,
    a: ArrayId,
    rng: &mut R,
) -> Evaluation<'n> {
    match plan_node(st, n, a, rng) {
        Some((plan, scratch)) => Evaluation {
            value: plan.score(),
            plan: Some(plan),
            scratch: Some(scratch),
        },
        None => Evaluation {
            value: PriorityValue::Infeasible,
            plan: None,
            scratch: None,
        },
    }
}

fn plan_node<'n, R: Rng>(
    st: &MemoryState<'n>,
    n: NodeId,
    a: ArrayId,
    rng: &mut R,
) -> Option<(RowPlan, MemoryState<'n>)> {
    let net = st.netlist();
    debug_assert!(!st.is_computed(n) && net.is_ready(n, st.computed()));
    let mut sc = st.clone();
    let fanins: Vec<ValueId> = net.fanin_values(n).collect();
    let mut instructions = Vec::new();
    let mut placements = Vec::new();
    let mut copies = 0;

    for &v in &fanins {
        if sc.location(v, a).is_some() {
            continue;
        }
        let pick = pick_row(
            &sc,
            a,
            true,
            Guard {
                values: &fanins,
                duplicates: true,
            },
            rng,
        )?;
        if let Some(ev) = pick.eviction {
            let ins = Instruction::Copy {
                src: ev.src,
                dst: ev.dst,
            };
            sc.apply(&ins).expect("eviction is legal");
            instructions.push(ins);
        }
        let src = sc
            .any_location(v)
            .expect("fanins of a ready node are stored");
        let ins = Instruction::Copy { src, dst: pick.row };
        sc.apply(&ins).expect("fanin copy is legal");
        instructions.push(ins);
        copies += pick.copies + 1;
        placements.push(FaninPlacement { value: v, pick });
    }

    // Operands are read before the result is written.
    let (op, operands) = sc
        .operand_rows(n, a)
        .expect("all fanins are in the target array");
    sc.retire(n);
    let result = pick_row(
        &sc,
        a,
        true,
        Guard {
            values: &fanins,
            duplicates: false,
        },
        rng,
    )?;
    if let Some(ev) = result.eviction {
        let ins = Instruction::Copy {
            src: ev.src,
            dst: ev.dst,
        };
        sc.apply(&ins).expect("eviction is legal");
        instructions.push(ins);
    }
    copies += result.copies;
    sc.write(result.row, net.node_value(n));
    instructions.push(Instruction::Compute {
        node: n,
        op,
        dst: result.row,
        operands,
    });

    let plan = RowPlan {
        node: n,
        array: a,
        fanins: placements,
        result,
        copies,
        delta_cpp: sc.cpp() - st.cpp(),
        instructions,
    };
    Some((plan, sc))
}
