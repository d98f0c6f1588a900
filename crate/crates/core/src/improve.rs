//! Iterative improvement: perturb the execution sequence of the best result
//! and regenerate instructions for it with the CICPP priority, keeping the
//! outcome only when it needs strictly fewer copies.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::memory::MemoryState;
use crate::netlist::{Netlist, NodeId, Source};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scheduler::{run, uniform, ScheduleError, ScheduleResult, SchedulerConfig};

const IMPROVE_DOMAIN: u64 = 0x1a7e_5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub passes_tried: usize,
    pub accepted: bool,
    pub copies_before: usize,
    pub copies_after: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImprovementTrace {
    pub iterations: Vec<IterationRecord>,
}

impl ImprovementTrace {
    pub fn accepted(&self) -> usize {
        self.iterations.iter().filter(|i| i.accepted).count()
    }
}

/// Nodes other than `es[t]` that are ready once `es[..t]` (and everything not
/// in `es`) has been computed, in sequence order.
pub fn perturb_candidates(net: &Netlist, es: &[NodeId], t: usize) -> Vec<NodeId> {
    let mut computed = vec![true; net.num_nodes()];
    for &n in &es[t..] {
        computed[n.index()] = false;
    }
    es[t + 1..]
        .iter()
        .copied()
        .filter(|&n| {
            net.node(n).operands.iter().all(|op| match op.source {
                Source::Node(m) => computed[m.index()],
                _ => true,
            })
        })
        .collect()
}

/// Moves `c` to position `t`, keeping the relative order of everything else.
pub fn move_before(es: &[NodeId], t: usize, c: NodeId) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(es.len());
    out.extend_from_slice(&es[..t]);
    out.push(c);
    out.extend(es[t..].iter().copied().filter(|&n| n != c));
    out
}

/// Picks a random time step and moves another node that is ready at that
/// step right before the node originally scheduled there. Returns `es`
/// unchanged if no step admits a move within `es.len()` draws.
pub fn perturb_es<R: Rng>(es: &[NodeId], net: &Netlist, rng: &mut R) -> Vec<NodeId> {
    for _ in 0..es.len() {
        let t = uniform(rng, es.len());
        let candidates = perturb_candidates(net, es, t);
        if !candidates.is_empty() {
            let c = candidates[uniform(rng, candidates.len())];
            return move_before(es, t, c);
        }
    }
    es.to_vec()
}

/// CICPP-driven instruction generation for a fixed execution sequence.
pub fn generate_instructions(
    net: &Netlist,
    es: &[NodeId],
    config: &SchedulerConfig,
    seed: u64,
) -> Result<ScheduleResult, ScheduleError> {
    let start = MemoryState::new(net, config.layout)?;
    generate_instructions_from(&start, es, seed)
}

pub fn generate_instructions_from(
    start: &MemoryState,
    es: &[NodeId],
    seed: u64,
) -> Result<ScheduleResult, ScheduleError> {
    run(start, Some(es), &mut rng_from_seed(seed), seed, None)
}

pub fn pass_seed(master: u64, iteration: usize, pass: usize) -> u64 {
    derive_seed(master, &[IMPROVE_DOMAIN, iteration as u64, pass as u64])
}

/// Improvement loop from the initial memory state.
pub fn improve(
    net: &Netlist,
    best: ScheduleResult,
    config: &SchedulerConfig,
) -> (ScheduleResult, ImprovementTrace) {
    match MemoryState::new(net, config.layout) {
        Ok(start) => improve_from(&start, best, config),
        Err(_) => (best, ImprovementTrace::default()),
    }
}

/// Each iteration tries up to `config.restarts` passes; the first pass (in
/// pass order) that lowers the copy count is accepted and starts a new
/// iteration. An iteration without acceptance ends the loop. Passes run
/// speculatively in parallel; the outcome equals sequential execution.
pub fn improve_from(
    start: &MemoryState,
    mut best: ScheduleResult,
    config: &SchedulerConfig,
) -> (ScheduleResult, ImprovementTrace) {
    let net = start.netlist();
    let passes = config.restarts.max(1);
    let mut trace = ImprovementTrace::default();
    for iteration in 0.. {
        let copies_before = best.copies;
        let found = (0..passes)
            .into_par_iter()
            .map(|pass| {
                let seed = pass_seed(config.master_seed, iteration, pass);
                let mut rng = rng_from_seed(seed);
                let es = perturb_es(&best.es, net, &mut rng);
                let seed = rng.random();
                (pass, generate_instructions_from(start, &es, seed))
            })
            .find_first(|(_, r)| matches!(r, Ok(res) if res.copies < copies_before));
        match found {
            Some((pass, Ok(res))) => {
                trace.iterations.push(IterationRecord {
                    passes_tried: pass + 1,
                    accepted: true,
                    copies_before,
                    copies_after: res.copies,
                });
                best = ScheduleResult {
                    seed: best.seed,
                    ..res
                };
            }
            _ => {
                trace.iterations.push(IterationRecord {
                    passes_tried: passes,
                    accepted: false,
                    copies_before,
                    copies_after: copies_before,
                });
                break;
            }
        }
    }
    (best, trace)
}
