//! Deterministic random instances for tests, benchmarks and sweeps.

use crate::baseline::{greedy_ig, naive_ig, reference_es};
use crate::memory::MemLayout;
use crate::netlist::{random_netlist, Netlist};
use crate::scheduler::{schedule_once, SchedulerConfig};

#[derive(Clone, Debug)]
pub struct Instance {
    pub id: u64,
    pub net: Netlist,
    pub layout: MemLayout,
}

/// Smallest row count (from one more than the input count) at which a
/// single random run and both baselines finish on `arrays` arrays.
pub fn tight_rows(net: &Netlist, arrays: usize, seed: u64) -> usize {
    let es = reference_es(net, seed);
    (net.num_pis() + 1..)
        .find(|&r| {
            let layout = MemLayout::new(r, arrays);
            schedule_once(net, &SchedulerConfig::new(layout), seed).is_ok()
                && naive_ig(net, &es, layout).is_ok()
                && greedy_ig(net, &es, layout).is_ok()
        })
        .expect("enough rows eventually fit")
}

/// Netlist `i` of the desk corpus: 4 to 10 inputs, 10 to 60 nodes.
pub fn desk_net(i: u64) -> Netlist {
    let i = i as usize;
    let pis = 4 + i % 7;
    let nodes = 10 + (i * 37) % 51;
    let pos = 1 + i % 4;
    random_netlist(pis, nodes, pos, 1000 + i as u64).expect("valid parameters")
}

/// `count` instances on 2 or 3 arrays, each at its tight row count, so a
/// single array of that size cannot hold the computation.
pub fn desk_corpus(count: usize) -> Vec<Instance> {
    (0..count as u64)
        .map(|i| {
            let net = desk_net(i);
            let arrays = 2 + (i % 2) as usize;
            let rows = tight_rows(&net, arrays, i);
            Instance {
                id: i,
                net,
                layout: MemLayout::new(rows, arrays),
            }
        })
        .collect()
}

/// `count` instances with at most 8 nodes and 12 rows in total, at tight
/// row counts.
pub fn tiny_corpus(count: usize) -> Vec<Instance> {
    let mut out = Vec::with_capacity(count);
    let mut seed = 0u64;
    while out.len() < count {
        seed += 1;
        let pis = 2 + (seed % 3) as usize;
        let nodes = 4 + (seed % 5) as usize;
        let pos = 1 + (seed % 2) as usize;
        let net = random_netlist(pis, nodes, pos, 5000 + seed).expect("valid parameters");
        let arrays = 2 + (seed % 2) as usize;
        let rows = tight_rows(&net, arrays, seed);
        if rows * arrays <= 12 {
            out.push(Instance {
                id: seed,
                net,
                layout: MemLayout::new(rows, arrays),
            });
        }
    }
    out
}
