//! Small hand-built netlists and memory states used by tests, examples and
//! the acceptance suite.

use crate::memory::{Instruction, MemLayout, MemoryState, Row, RowOperand};
use crate::netlist::{parse_netlist, GateOp, Netlist};

/// Two-array scheduling example. `a`, `b`, `c` sit in `A1`; `d`, `f`, `h`
/// in `A2`; `e` and `g` are ready; `i` and `j` come last.
pub const TWO_ARRAY_XMG: &str = "\
.inputs x1 x2 x3
.node a = XOR(x1, x2, x3)
.node b = MAJ(x1, x2, x3)
.node c = XOR(x1, !x2, x3)
.node d = MAJ(x1, !x2, x3)
.node f = XOR(x1, x2, !x3)
.node h = MAJ(!x1, x2, x3)
.node e = XOR(a, b, 0)
.node g = XOR(c, d, 0)
.node i = MAJ(e, g, 0)
.node j = MAJ(f, g, h)
.outputs i j
";

/// Same as [`TWO_ARRAY_XMG`] without `i` and `j`; `e` and `g` are outputs.
pub const TWO_ARRAY_PAIR_XMG: &str = "\
.inputs x1 x2 x3
.node a = XOR(x1, x2, x3)
.node b = MAJ(x1, x2, x3)
.node c = XOR(x1, !x2, x3)
.node d = MAJ(x1, !x2, x3)
.node f = XOR(x1, x2, !x3)
.node h = MAJ(!x1, x2, x3)
.node e = XOR(a, b, 0)
.node g = XOR(c, d, 0)
.outputs e g
";

/// Five nodes over eight inputs; `N1` and `N2` read only inputs.
pub const FIVE_NODE_XMG: &str = "\
.inputs x1 x2 x3 x4 x5 x6 x7 x8
.node N1 = XOR(x1, x2, 0)
.node N2 = MAJ(x3, x4, x5)
.node N3 = MAJ(N1, !N2, 1)
.node N4 = XOR(N2, x6, !x7)
.node N5 = MAJ(N3, N4, x8)
.outputs N3 N5
";

/// Perturbation example: after `d`, the nodes `a`, `b`, `f`, `c` are ready.
pub const PERTURB_XMG: &str = "\
.inputs x1 x2 x3
.node d = XOR(x1, x2, 0)
.node a = MAJ(d, x1, x3)
.node b = XOR(d, x3, 1)
.node f = MAJ(x1, x2, x3)
.node c = XOR(d, !x2, 0)
.node e = MAJ(a, b, c)
.outputs e f
";

pub fn two_array_net() -> Netlist {
    parse_netlist(TWO_ARRAY_XMG).expect("fixture parses")
}

pub fn two_array_pair_net() -> Netlist {
    parse_netlist(TWO_ARRAY_PAIR_XMG).expect("fixture parses")
}

pub fn five_node_net() -> Netlist {
    parse_netlist(FIVE_NODE_XMG).expect("fixture parses")
}

pub fn perturb_net() -> Netlist {
    parse_netlist(PERTURB_XMG).expect("fixture parses")
}

pub fn two_array_layout() -> MemLayout {
    MemLayout::new(8, 2)
}

/// Instructions that bring [`two_array_net`] (or [`two_array_pair_net`]) from the
/// initial state to the one where `e` and `g` are ready.
pub fn two_array_prefix(net: &Netlist) -> Vec<Instruction> {
    let layout = two_array_layout();
    let mut st = MemoryState::new(net, layout).expect("fits");
    let mut out = Vec::new();
    let mut emit = |st: &mut MemoryState, ins: Instruction| {
        st.apply(&ins).expect("fixture prefix is legal");
        out.push(ins);
    };
    for (name, row) in [("a", 3), ("b", 4), ("c", 5)] {
        let n = net.find_node(name).unwrap();
        let ins = st.compute_instruction(n, Row(row)).unwrap();
        emit(&mut st, ins);
    }
    for p in 0..3 {
        emit(
            &mut st,
            Instruction::Copy {
                src: Row(p),
                dst: Row(8 + p),
            },
        );
    }
    for (name, row) in [("d", 11), ("f", 12), ("h", 13)] {
        let n = net.find_node(name).unwrap();
        let ins = st.compute_instruction(n, Row(row)).unwrap();
        emit(&mut st, ins);
    }
    out
}

pub fn two_array_state(net: &Netlist) -> MemoryState<'_> {
    let mut st = MemoryState::new(net, two_array_layout()).expect("fits");
    for ins in two_array_prefix(net) {
        st.apply(&ins).expect("fixture prefix is legal");
    }
    st
}

/// A hand-written two-array sequence for [`five_node_net`] with eight rows
/// per array; the inputs fill `A1`, so everything is computed in `A2`.
pub fn five_node_sequence(net: &Netlist) -> Vec<Instruction> {
    let n = |name: &str| net.find_node(name).unwrap();
    let r = |i: u32| Row(i - 1);
    let row = |i: u32, negated: bool| RowOperand::Row { row: r(i), negated };
    vec![
        Instruction::Copy {
            src: r(1),
            dst: r(9),
        },
        Instruction::Copy {
            src: r(2),
            dst: r(10),
        },
        Instruction::Compute {
            node: n("N1"),
            op: GateOp::Xor3,
            dst: r(9),
            operands: [row(9, false), row(10, false), RowOperand::Const(false)],
        },
        Instruction::Copy {
            src: r(3),
            dst: r(10),
        },
        Instruction::Copy {
            src: r(4),
            dst: r(11),
        },
        Instruction::Copy {
            src: r(5),
            dst: r(12),
        },
        Instruction::Compute {
            node: n("N2"),
            op: GateOp::Maj3,
            dst: r(10),
            operands: [row(10, false), row(11, false), row(12, false)],
        },
        Instruction::Copy {
            src: r(6),
            dst: r(11),
        },
        Instruction::Copy {
            src: r(7),
            dst: r(12),
        },
        Instruction::Compute {
            node: n("N4"),
            op: GateOp::Xor3,
            dst: r(11),
            operands: [row(10, false), row(11, false), row(12, true)],
        },
        Instruction::Compute {
            node: n("N3"),
            op: GateOp::Maj3,
            dst: r(12),
            operands: [row(9, false), row(10, true), RowOperand::Const(true)],
        },
        Instruction::Copy {
            src: r(8),
            dst: r(9),
        },
        Instruction::Compute {
            node: n("N5"),
            op: GateOp::Maj3,
            dst: r(10),
            operands: [row(12, false), row(11, false), row(9, false)],
        },
    ]
}

/// `n` nodes, each reading the previous one; a single output at the end.
pub fn chain_net(n: usize) -> Netlist {
    let mut text = String::from(".inputs x y\n.node n0 = XOR(x, y, 0)\n");
    for i in 1..n {
        text.push_str(&format!(".node n{i} = MAJ(n{}, x, !y)\n", i - 1));
    }
    text.push_str(&format!(".outputs n{}\n", n.saturating_sub(1)));
    parse_netlist(&text).expect("chain parses")
}
