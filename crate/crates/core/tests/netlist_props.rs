use masim::improve::perturb_es;
use masim::netlist::XmgNode;
use masim::rng::rng_from_seed;
use masim::{parse_netlist, random_netlist, reference_es, Netlist, NodeId, Output, Source};
use proptest::prelude::*;

/// Straight recursion over the operand graph; shares nothing with
/// `Netlist::simulate` beyond the data structure.
fn eval_node(nodes: &[XmgNode], inputs: &[bool], n: usize) -> bool {
    let node = &nodes[n];
    let bits: Vec<bool> = node
        .operands
        .iter()
        .map(|o| {
            let b = match o.source {
                Source::Const(c) => c,
                Source::Pi(p) => inputs[p as usize],
                Source::Node(m) => eval_node(nodes, inputs, m.0 as usize),
            };
            b != o.negated
        })
        .collect();
    let ones = bits.iter().filter(|b| **b).count();
    match node.op.mnemonic() {
        "XOR" => ones % 2 == 1,
        _ => ones >= 2,
    }
}

fn reference_outputs(net: &Netlist, inputs: &[bool]) -> Vec<bool> {
    net.outputs()
        .iter()
        .map(|o| match *o {
            Output::Pi(p) => inputs[p as usize],
            Output::Node(n) => eval_node(net.nodes(), inputs, n.0 as usize),
        })
        .collect()
}

fn net_strategy() -> impl Strategy<Value = Netlist> {
    (1usize..8, 1usize..30, any::<u64>()).prop_flat_map(|(pis, nodes, seed)| {
        (1..=nodes).prop_map(move |pos| random_netlist(pis, nodes, pos, seed).unwrap())
    })
}

fn is_topological(net: &Netlist, es: &[NodeId]) -> bool {
    let mut done = vec![false; net.num_nodes()];
    for &n in es {
        if done[n.index()] || !net.is_ready(n, &done) {
            return false;
        }
        done[n.index()] = true;
    }
    done.iter().all(|d| *d)
}

#[test]
fn twenty_node_netlist_matches_recursion() {
    let net = random_netlist(8, 20, 4, 3).unwrap();
    for m in 0..256u32 {
        let inputs: Vec<bool> = (0..8).map(|i| m >> i & 1 == 1).collect();
        assert_eq!(net.simulate(&inputs), reference_outputs(&net, &inputs));
    }
}

#[test]
fn minimal_generated_instance() {
    for seed in 0..20 {
        let net = random_netlist(1, 1, 1, seed).unwrap();
        assert_eq!(net.num_nodes(), 1);
        assert!(net
            .node(NodeId(0))
            .operands
            .iter()
            .any(|o| o.source == Source::Pi(0)));
    }
}

#[test]
fn hundred_generated_netlists_match_recursion() {
    for seed in 0..100 {
        let net = masim::corpus::desk_net(seed);
        let mut rng = rng_from_seed(seed);
        for _ in 0..64 {
            let inputs: Vec<bool> = (0..net.num_pis())
                .map(|_| rand::Rng::random(&mut rng))
                .collect();
            assert_eq!(net.simulate(&inputs), reference_outputs(&net, &inputs));
        }
    }
}

#[test]
fn reference_orders_are_topological() {
    for seed in 0..1000u64 {
        let net =
            random_netlist(1 + (seed % 6) as usize, 1 + (seed % 40) as usize, 1, seed).unwrap();
        assert!(
            is_topological(&net, &reference_es(&net, seed)),
            "seed {seed}"
        );
    }
}

#[test]
fn perturbed_orders_are_topological() {
    let mut rng = rng_from_seed(77);
    for seed in 0..100u64 {
        let net =
            random_netlist(3 + (seed % 5) as usize, 5 + (seed % 30) as usize, 2, seed).unwrap();
        let mut es = reference_es(&net, seed);
        for _ in 0..100 {
            es = perturb_es(&es, &net, &mut rng);
            assert!(is_topological(&net, &es));
            assert!(net.check_es(&es).is_ok());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn round_trip(net in net_strategy()) {
        let text = net.to_xmg();
        let back = parse_netlist(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(back.to_xmg(), text);
        prop_assert_eq!(back.content_hash(), net.content_hash());
    }

    #[test]
    fn simulate_matches_recursion(net in net_strategy(), bits in any::<u64>()) {
        let inputs: Vec<bool> = (0..net.num_pis()).map(|i| bits >> i & 1 == 1).collect();
        prop_assert_eq!(net.simulate(&inputs), reference_outputs(&net, &inputs));
    }

    #[test]
    fn ready_set_monotone(net in net_strategy(), seed in any::<u64>(), cut in 0.0f64..1.0, extra in 0.0f64..1.0) {
        let es = reference_es(&net, seed);
        let k = (cut * es.len() as f64) as usize;
        let k2 = k + ((es.len() - k) as f64 * extra) as usize;
        let mut before = vec![false; net.num_nodes()];
        for &n in &es[..k] { before[n.index()] = true; }
        let mut after = before.clone();
        for &n in &es[k..k2] { after[n.index()] = true; }
        let later = net.ready_set(&after);
        for n in net.ready_set(&before) {
            prop_assert!(after[n.index()] || later.contains(&n));
        }
    }

    #[test]
    fn fanout_count_is_edge_count(net in net_strategy()) {
        let mut edges = vec![0u32; net.num_values()];
        for node in net.nodes() {
            for o in &node.operands {
                if let Some(v) = net.operand_value(o) { edges[v.index()] += 1; }
            }
        }
        for o in net.outputs() { edges[net.output_value(*o).index()] += 1; }
        prop_assert_eq!(net.fanout_counts(), edges);
    }
}
