use masim::rng::rng_from_seed;
use masim::validate::ViolationKind;
use masim::{random_netlist, validate_is, ArrayId, Instruction, MemLayout, MemoryState, Row};
use proptest::prelude::*;
use rand::Rng;

/// Every copy and compute the state accepts.
fn legal_moves(st: &MemoryState) -> Vec<Instruction> {
    let layout = st.layout();
    let mut out = Vec::new();
    let total = layout.total_rows() as u32;
    for src in 0..total {
        for dst in 0..total {
            let ins = Instruction::Copy {
                src: Row(src),
                dst: Row(dst),
            };
            if st.check(&ins).is_ok() {
                out.push(ins);
            }
        }
    }
    for n in st.ready_set() {
        for a in layout.arrays() {
            for dst in layout.rows_of(a) {
                if let Some(ins) = st.compute_instruction(n, dst) {
                    if st.check(&ins).is_ok() {
                        out.push(ins);
                    }
                }
            }
        }
    }
    out
}

fn walk(seed: u64, pis: usize, nodes: usize, rows: usize, arrays: usize, steps: usize) {
    let net = random_netlist(pis, nodes, 2.min(nodes), seed).unwrap();
    let layout = MemLayout::new(rows, arrays);
    let Ok(mut st) = MemoryState::new(&net, layout) else {
        return;
    };
    let mut rng = rng_from_seed(seed);
    let mut trail = Vec::new();
    for _ in 0..steps {
        let moves = legal_moves(&st);
        if moves.is_empty() {
            break;
        }
        let ins = moves[rng.random_range(0..moves.len())];
        let before = st.clone();
        st.apply(&ins).unwrap();
        assert_eq!(before.applied(&ins).unwrap(), st);
        st.check_invariants().unwrap();
        assert_eq!(st.cpp(), st.cpp_total());
        for a in layout.arrays() {
            let live = layout
                .rows_of(a)
                .filter(|&r| st.occupant(r).is_some_and(|v| st.is_live(v)))
                .count();
            for v in 0..net.num_values() {
                assert!(st.n_pa(masim::ValueId(v as u32), a) <= live);
            }
        }
        trail.push(ins);
    }
    // The independent validator agrees that every accepted move was legal.
    let rep = validate_is(&net, &trail, layout);
    assert!(
        rep.violations.iter().all(|v| v.index.is_none()),
        "{:?}",
        rep.violations
    );
    if st.all_computed() {
        assert!(rep.is_clean());
    } else {
        assert!(rep.count(ViolationKind::NodeNeverComputed) > 0);
    }
}

#[test]
fn rejected_moves_leave_state_untouched() {
    let net = masim::fixtures::five_node_net();
    let mut st = MemoryState::new(&net, MemLayout::new(8, 2)).unwrap();
    let before = st.clone();
    for ins in [
        Instruction::Copy {
            src: Row(0),
            dst: Row(1),
        },
        Instruction::Copy {
            src: Row(9),
            dst: Row(10),
        },
        Instruction::Copy {
            src: Row(0),
            dst: Row(0),
        },
        Instruction::Copy {
            src: Row(0),
            dst: Row(99),
        },
    ] {
        assert!(st.apply(&ins).is_err());
        assert_eq!(st, before);
    }
    let n3 = net.find_node("N3").unwrap();
    assert!(st.compute_instruction(n3, Row(8)).is_none());
    assert!(st.free_rows(ArrayId(1)).count() == 8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn random_walks_conserve(seed in any::<u64>(), pis in 1usize..5, nodes in 1usize..12, extra in 1usize..4, arrays in 1usize..4) {
        walk(seed, pis, nodes, pis + extra, arrays, 40);
    }
}
