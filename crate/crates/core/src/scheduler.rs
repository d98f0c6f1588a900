//! Random CICPP-driven scheduling with best-of-R restarts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyParams;
use crate::improve::{improve_from, ImprovementTrace};
use crate::memory::{ArrayId, CapacityError, Instruction, MemLayout, MemoryState};
use crate::netlist::{EsError, Netlist, NodeId};
use crate::priority::{calc_priority, Evaluation, PriorityValue, RowPlan};
use crate::rng::{derive_seed, rng_from_seed, SchedRng, Ties};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub layout: MemLayout,
    /// Restarts of the random scheduler, and passes per improvement iteration.
    pub restarts: usize,
    pub master_seed: u64,
    pub improve: bool,
    pub energy: EnergyParams,
}

impl SchedulerConfig {
    pub const DEFAULT_RESTARTS: usize = 500;

    pub fn new(layout: MemLayout) -> Self {
        SchedulerConfig {
            layout,
            restarts: Self::DEFAULT_RESTARTS,
            master_seed: 0,
            improve: true,
            energy: EnergyParams::default(),
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_improve(mut self, improve: bool) -> Self {
        self.improve = improve;
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error("insufficient capacity: no array can host {} at step {step}", .node.map(|n| n.0.to_string()).unwrap_or_else(|| "any ready node".into()))]
    InsufficientCapacity { node: Option<NodeId>, step: usize },
    #[error("invalid execution sequence: {0}")]
    InvalidEs(#[from] EsError),
    #[error("restarts must be at least 1")]
    NoRestarts,
}

/// One scheduling decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub node: NodeId,
    pub array: ArrayId,
    pub copies: u32,
    pub delta_cpp: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleResult {
    pub layout: MemLayout,
    pub instructions: Vec<Instruction>,
    /// Compute order.
    pub es: Vec<NodeId>,
    pub copies: usize,
    pub computes: usize,
    pub arrays_used: usize,
    pub seed: u64,
    pub steps: Vec<Step>,
    pub improvement: Option<ImprovementTrace>,
}

impl ScheduleResult {
    pub fn energy(&self, params: &EnergyParams) -> f64 {
        crate::energy::energy_counts(self.computes, self.copies, params)
    }

    pub(crate) fn from_instructions(
        start: &MemoryState,
        instructions: Vec<Instruction>,
        seed: u64,
        steps: Vec<Step>,
    ) -> Self {
        let layout = start.layout();
        let mut used = vec![false; layout.num_arrays];
        for a in layout.arrays() {
            used[a.index()] = layout.rows_of(a).any(|r| start.occupant(r).is_some());
        }
        let mut es = Vec::new();
        let mut copies = 0;
        for ins in &instructions {
            used[layout.array_of(ins.dst()).index()] = true;
            match ins {
                Instruction::Copy { .. } => copies += 1,
                Instruction::Compute { node, .. } => es.push(*node),
            }
        }
        ScheduleResult {
            layout,
            computes: es.len(),
            es,
            copies,
            arrays_used: used.iter().filter(|u| **u).count(),
            instructions,
            seed,
            steps,
            improvement: None,
        }
    }
}

/// Callback view of one priority evaluation.
pub struct Probe<'a, 'n> {
    pub node: NodeId,
    pub array: ArrayId,
    pub before: &'a MemoryState<'n>,
    pub evaluation: &'a Evaluation<'n>,
}

pub(crate) type Observer<'o> = Option<&'o mut dyn FnMut(Probe<'_, '_>)>;

/// Shared instruction-generation loop. With `order`, node `i` is forced to
/// `order[i]` and only the array is chosen.
pub(crate) fn run<'n>(
    start: &MemoryState<'n>,
    order: Option<&[NodeId]>,
    rng: &mut SchedRng,
    seed: u64,
    mut observer: Observer<'_>,
) -> Result<ScheduleResult, ScheduleError> {
    if let Some(es) = order {
        start.netlist().check_es_from(start.computed(), es)?;
        let pending = start.computed().iter().filter(|c| !**c).count();
        if es.len() != pending {
            return Err(EsError::Length {
                expected: pending,
                got: es.len(),
            }
            .into());
        }
    }
    let layout = start.layout();
    let mut st = start.clone();
    let mut instructions = Vec::new();
    let mut steps = Vec::new();
    let mut step = 0;
    while !st.all_computed() {
        let candidates = match order {
            Some(es) => vec![es[step]],
            None => st.ready_set(),
        };
        let mut best: Option<(PriorityValue, RowPlan, Option<MemoryState<'n>>)> = None;
        let mut ties = Ties::default();
        for &n in &candidates {
            for a in layout.arrays() {
                let eval = calc_priority(&st, n, a, rng);
                if let Some(obs) = observer.as_mut() {
                    obs(Probe {
                        node: n,
                        array: a,
                        before: &st,
                        evaluation: &eval,
                    });
                }
                let Evaluation {
                    value,
                    plan,
                    scratch,
                } = eval;
                let Some(plan) = plan else { continue };
                let replace = match &best {
                    None => {
                        ties.reset();
                        true
                    }
                    Some((b, _, _)) if value > *b => {
                        ties.reset();
                        true
                    }
                    Some((b, _, _)) if value == *b => ties.offer(rng),
                    Some(_) => false,
                };
                if replace {
                    best = Some((value, plan, scratch));
                }
            }
        }
        let Some((_, plan, scratch)) = best else {
            return Err(ScheduleError::InsufficientCapacity {
                node: order.map(|es| es[step]),
                step,
            });
        };
        for ins in &plan.instructions {
            st.apply(ins).expect("planned instruction is legal");
        }
        debug_assert!(
            scratch.as_ref() == Some(&st),
            "plan replay diverged from evaluation"
        );
        steps.push(Step {
            node: plan.node,
            array: plan.array,
            copies: plan.copies,
            delta_cpp: plan.delta_cpp,
        });
        instructions.extend(plan.instructions);
        step += 1;
    }
    Ok(ScheduleResult::from_instructions(
        start,
        instructions,
        seed,
        steps,
    ))
}

/// One run of the random scheduler from the initial memory state.
pub fn schedule_once(
    net: &Netlist,
    config: &SchedulerConfig,
    seed: u64,
) -> Result<ScheduleResult, ScheduleError> {
    let start = MemoryState::new(net, config.layout)?;
    schedule_once_from(&start, seed)
}

pub fn schedule_once_from(start: &MemoryState, seed: u64) -> Result<ScheduleResult, ScheduleError> {
    run(start, None, &mut rng_from_seed(seed), seed, None)
}

/// [`schedule_once_from`] reporting every priority evaluation to `observer`.
pub fn schedule_once_traced(
    start: &MemoryState,
    seed: u64,
    observer: &mut dyn FnMut(Probe<'_, '_>),
) -> Result<ScheduleResult, ScheduleError> {
    run(start, None, &mut rng_from_seed(seed), seed, Some(observer))
}

/// Seed of restart `index` (one based).
pub fn restart_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, &[index as u64])
}

/// Best of `config.restarts` random runs (fewest copies, then lowest run
/// index), optionally followed by iterative improvement.
pub fn schedule(net: &Netlist, config: &SchedulerConfig) -> Result<ScheduleResult, ScheduleError> {
    let start = MemoryState::new(net, config.layout)?;
    schedule_from(&start, config)
}

pub fn schedule_from(
    start: &MemoryState,
    config: &SchedulerConfig,
) -> Result<ScheduleResult, ScheduleError> {
    if config.restarts == 0 {
        return Err(ScheduleError::NoRestarts);
    }
    let best = (1..=config.restarts)
        .into_par_iter()
        .map(|i| {
            (
                i,
                schedule_once_from(start, restart_seed(config.master_seed, i)),
            )
        })
        .reduce_with(|a, b| match (&a.1, &b.1) {
            (Ok(x), Ok(y)) => {
                if (y.copies, b.0) < (x.copies, a.0) {
                    b
                } else {
                    a
                }
            }
            (Ok(_), Err(_)) => a,
            (Err(_), Ok(_)) => b,
            (Err(_), Err(_)) => {
                if a.0 < b.0 {
                    a
                } else {
                    b
                }
            }
        })
        .expect("at least one restart")
        .1?;
    if config.improve {
        let (improved, trace) = improve_from(start, best, config);
        let mut result = improved;
        result.improvement = Some(trace);
        Ok(result)
    } else {
        Ok(best)
    }
}

/// Uniform index in `0..n`.
pub(crate) fn uniform<R: Rng>(rng: &mut R, n: usize) -> usize {
    rng.random_range(0..n)
}
