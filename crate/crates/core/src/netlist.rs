//! XOR-majority graph netlists.
//!
//! A [`Netlist`] is an immutable DAG of 3-input `XOR` and `MAJ` nodes. Every
//! node operand is a primary input, an earlier node, or a constant, with an
//! optional negation on the edge. Nodes are stored in topological order.
//!
//! Values (primary inputs and node outputs) share one dense index space,
//! [`ValueId`]: inputs come first, nodes follow.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense id over primary inputs followed by nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(pub u32);

impl ValueId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Pi(u32),
    Node(NodeId),
    Const(bool),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Operand {
    pub source: Source,
    /// Always false for constants; negation is folded into the constant.
    pub negated: bool,
}

impl Operand {
    pub fn pi(index: u32, negated: bool) -> Self {
        Operand {
            source: Source::Pi(index),
            negated,
        }
    }

    pub fn node(id: NodeId, negated: bool) -> Self {
        Operand {
            source: Source::Node(id),
            negated,
        }
    }

    pub fn constant(bit: bool) -> Self {
        Operand {
            source: Source::Const(bit),
            negated: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateOp {
    Xor3,
    Maj3,
}

impl GateOp {
    #[inline]
    pub fn eval(self, a: bool, b: bool, c: bool) -> bool {
        match self {
            GateOp::Xor3 => a ^ b ^ c,
            GateOp::Maj3 => (a & b) | (a & c) | (b & c),
        }
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            GateOp::Xor3 => "XOR",
            GateOp::Maj3 => "MAJ",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Self> {
        match s {
            "XOR" => Some(GateOp::Xor3),
            "MAJ" => Some(GateOp::Maj3),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XmgNode {
    pub name: String,
    pub op: GateOp,
    pub operands: [Operand; 3],
}

/// Primary output reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Output {
    Pi(u32),
    Node(NodeId),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetlistError {
    #[error("line {line}, col {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}: undefined name `{name}`")]
    Undefined { line: usize, name: String },
    #[error("line {line}: node `{name}` refers to itself")]
    Cycle { line: usize, name: String },
    #[error("line {line}: duplicate name `{name}`")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: expected 3 operands, found {found}")]
    OperandCount { line: usize, found: usize },
    #[error("invalid netlist: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EsError {
    #[error("node {0} appears more than once")]
    Repeated(u32),
    #[error("node {0} is scheduled before its fanin {1}")]
    FaninAfter(u32, u32),
    #[error("node {0} is out of range")]
    OutOfRange(u32),
    #[error("expected {expected} nodes, got {got}")]
    Length { expected: usize, got: usize },
}

/// Immutable XOR-majority graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    pi_names: Vec<String>,
    nodes: Vec<XmgNode>,
    outputs: Vec<Output>,
    // derived
    fanouts: Vec<Vec<NodeId>>,
    fanout_edges: Vec<u32>,
    is_output: Vec<bool>,
}

impl Netlist {
    /// Validates and builds a netlist. Node operands must refer to strictly
    /// earlier nodes.
    pub fn new(
        pi_names: Vec<String>,
        nodes: Vec<XmgNode>,
        outputs: Vec<Output>,
    ) -> Result<Self, NetlistError> {
        let num_pis = pi_names.len() as u32;
        for (i, node) in nodes.iter().enumerate() {
            for op in &node.operands {
                match op.source {
                    Source::Pi(p) if p >= num_pis => {
                        return Err(NetlistError::Invalid(format!(
                            "node `{}` reads missing input {p}",
                            node.name
                        )))
                    }
                    Source::Node(n) if n.index() >= i => {
                        return Err(NetlistError::Invalid(format!(
                            "node `{}` reads node {} which is not earlier",
                            node.name, n.0
                        )))
                    }
                    Source::Const(_) if op.negated => {
                        return Err(NetlistError::Invalid(format!(
                            "node `{}` has a negated constant",
                            node.name
                        )))
                    }
                    _ => {}
                }
            }
        }
        let mut seen = HashSet::new();
        for o in &outputs {
            let ok = match *o {
                Output::Pi(p) => p < num_pis,
                Output::Node(n) => n.index() < nodes.len(),
            };
            if !ok {
                return Err(NetlistError::Invalid(format!(
                    "output {o:?} does not resolve"
                )));
            }
            if !seen.insert(*o) {
                return Err(NetlistError::Invalid(format!("output {o:?} listed twice")));
            }
        }

        let num_values = pi_names.len() + nodes.len();
        let mut fanouts: Vec<Vec<NodeId>> = vec![Vec::new(); num_values];
        let mut fanout_edges = vec![0u32; num_values];
        let mut is_output = vec![false; num_values];
        let mut net = Netlist {
            pi_names,
            nodes,
            outputs,
            fanouts: Vec::new(),
            fanout_edges: Vec::new(),
            is_output: Vec::new(),
        };
        for (i, node) in net.nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            for op in &node.operands {
                if let Some(v) = net.operand_value(op) {
                    fanout_edges[v.index()] += 1;
                    if fanouts[v.index()].last() != Some(&id) {
                        fanouts[v.index()].push(id);
                    }
                }
            }
        }
        for o in &net.outputs {
            is_output[net.output_value(*o).index()] = true;
        }
        net.fanouts = fanouts;
        net.fanout_edges = fanout_edges;
        net.is_output = is_output;
        Ok(net)
    }

    pub fn num_pis(&self) -> usize {
        self.pi_names.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_values(&self) -> usize {
        self.pi_names.len() + self.nodes.len()
    }

    pub fn nodes(&self) -> &[XmgNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &XmgNode {
        &self.nodes[id.index()]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn outputs(&self) -> &[Output] {
        &self.outputs
    }

    pub fn pi_names(&self) -> &[String] {
        &self.pi_names
    }

    #[inline]
    pub fn pi_value(&self, index: u32) -> ValueId {
        ValueId(index)
    }

    #[inline]
    pub fn node_value(&self, id: NodeId) -> ValueId {
        ValueId(self.pi_names.len() as u32 + id.0)
    }

    /// The node that produces `v`, or `None` for a primary input.
    #[inline]
    pub fn value_node(&self, v: ValueId) -> Option<NodeId> {
        let p = self.pi_names.len() as u32;
        (v.0 >= p).then(|| NodeId(v.0 - p))
    }

    #[inline]
    pub fn is_pi(&self, v: ValueId) -> bool {
        v.index() < self.pi_names.len()
    }

    #[inline]
    pub fn operand_value(&self, op: &Operand) -> Option<ValueId> {
        match op.source {
            Source::Pi(p) => Some(self.pi_value(p)),
            Source::Node(n) => Some(self.node_value(n)),
            Source::Const(_) => None,
        }
    }

    pub fn output_value(&self, o: Output) -> ValueId {
        match o {
            Output::Pi(p) => self.pi_value(p),
            Output::Node(n) => self.node_value(n),
        }
    }

    pub fn value_name(&self, v: ValueId) -> &str {
        match self.value_node(v) {
            None => &self.pi_names[v.index()],
            Some(n) => &self.nodes[n.index()].name,
        }
    }

    /// Distinct fanout nodes of `v`, in increasing id order.
    #[inline]
    pub fn fanouts(&self, v: ValueId) -> &[NodeId] {
        &self.fanouts[v.index()]
    }

    /// Node operand values of `n` with duplicates removed, in operand order.
    pub fn fanin_values(&self, n: NodeId) -> impl Iterator<Item = ValueId> + '_ {
        let ops = &self.nodes[n.index()].operands;
        ops.iter().enumerate().filter_map(move |(k, op)| {
            let v = self.operand_value(op)?;
            let dup = ops[..k].iter().any(|o| self.operand_value(o) == Some(v));
            (!dup).then_some(v)
        })
    }

    /// Number of operand edges of `n` that read `v`.
    pub fn edge_multiplicity(&self, n: NodeId, v: ValueId) -> u32 {
        self.nodes[n.index()]
            .operands
            .iter()
            .filter(|o| self.operand_value(o) == Some(v))
            .count() as u32
    }

    pub fn is_output(&self, v: ValueId) -> bool {
        self.is_output[v.index()]
    }

    /// Operand edges reading `v`, plus one if `v` is an output.
    #[inline]
    pub fn fanout_count(&self, v: ValueId) -> u32 {
        self.fanout_edges[v.index()] + self.is_output[v.index()] as u32
    }

    /// [`fanout_count`](Self::fanout_count) for every value.
    pub fn fanout_counts(&self) -> Vec<u32> {
        (0..self.num_values() as u32)
            .map(|v| self.fanout_count(ValueId(v)))
            .collect()
    }

    /// Uncomputed nodes whose node operands are all computed.
    pub fn ready_set(&self, computed: &[bool]) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&n| !computed[n.index()] && self.is_ready(n, computed))
            .collect()
    }

    #[inline]
    pub fn is_ready(&self, n: NodeId, computed: &[bool]) -> bool {
        self.nodes[n.index()]
            .operands
            .iter()
            .all(|op| match op.source {
                Source::Node(m) => computed[m.index()],
                _ => true,
            })
    }

    /// Evaluates the netlist on one input assignment and returns one bit per
    /// output, in output order.
    pub fn simulate(&self, assignment: &[bool]) -> Vec<bool> {
        assert_eq!(assignment.len(), self.num_pis(), "assignment length");
        let mut vals: Vec<bool> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let bit = |op: &Operand| -> bool {
                let raw = match op.source {
                    Source::Pi(p) => assignment[p as usize],
                    Source::Node(m) => vals[m.index()],
                    Source::Const(b) => b,
                };
                raw ^ op.negated
            };
            let [a, b, c] = &node.operands;
            let out = node.op.eval(bit(a), bit(b), bit(c));
            vals.push(out);
        }
        self.outputs
            .iter()
            .map(|o| match *o {
                Output::Pi(p) => assignment[p as usize],
                Output::Node(n) => vals[n.index()],
            })
            .collect()
    }

    /// Checks that `es` is a permutation of all nodes in topological order.
    pub fn check_es(&self, es: &[NodeId]) -> Result<(), EsError> {
        if es.len() != self.nodes.len() {
            return Err(EsError::Length {
                expected: self.nodes.len(),
                got: es.len(),
            });
        }
        self.check_es_from(&vec![false; self.nodes.len()], es)
    }

    /// Checks a partial execution sequence starting from `computed`: each node
    /// appears once, is not yet computed, and follows its node operands.
    pub fn check_es_from(&self, computed: &[bool], es: &[NodeId]) -> Result<(), EsError> {
        let mut done = computed.to_vec();
        for &n in es {
            if n.index() >= self.nodes.len() {
                return Err(EsError::OutOfRange(n.0));
            }
            if done[n.index()] {
                return Err(EsError::Repeated(n.0));
            }
            for op in &self.nodes[n.index()].operands {
                if let Source::Node(m) = op.source {
                    if !done[m.index()] {
                        return Err(EsError::FaninAfter(n.0, m.0));
                    }
                }
            }
            done[n.index()] = true;
        }
        Ok(())
    }

    pub fn find_node(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .map(|i| NodeId(i as u32))
    }

    /// Serializes to the `.xmg` text format.
    pub fn to_xmg(&self) -> String {
        let mut out = String::new();
        if !self.pi_names.is_empty() {
            out.push_str(".inputs");
            for name in &self.pi_names {
                out.push(' ');
                out.push_str(name);
            }
            out.push('\n');
        }
        for node in &self.nodes {
            out.push_str(".node ");
            out.push_str(&node.name);
            out.push_str(" = ");
            out.push_str(node.op.mnemonic());
            out.push('(');
            for (k, op) in node.operands.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                match op.source {
                    Source::Const(b) => out.push(if b { '1' } else { '0' }),
                    Source::Pi(p) => {
                        if op.negated {
                            out.push('!');
                        }
                        out.push_str(&self.pi_names[p as usize]);
                    }
                    Source::Node(m) => {
                        if op.negated {
                            out.push('!');
                        }
                        out.push_str(&self.nodes[m.index()].name);
                    }
                }
            }
            out.push_str(")\n");
        }
        if !self.outputs.is_empty() {
            out.push_str(".outputs");
            for o in &self.outputs {
                out.push(' ');
                out.push_str(self.value_name(self.output_value(*o)));
            }
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of the canonical `.xmg` serialization.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_xmg().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_xmg())
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Copy)]
enum Def {
    Pi(u32),
    Node(NodeId),
}

/// Parses the `.xmg` text format. Nodes must appear in topological order.
pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistError> {
    let mut pi_names = Vec::new();
    let mut nodes: Vec<XmgNode> = Vec::new();
    let mut names: HashMap<String, Def> = HashMap::new();
    let mut outputs = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let syntax = |col: usize, msg: String| NetlistError::Syntax {
            line: line_no,
            col: col + 1,
            msg,
        };

        let (keyword, rest) = match trimmed.find(char::is_whitespace) {
            Some(i) => (&trimmed[..i], trimmed[i..].trim()),
            None => (trimmed, ""),
        };
        match keyword {
            ".inputs" => {
                for name in rest.split_whitespace() {
                    if !is_ident(name) {
                        let col = indent + trimmed.find(name).unwrap_or(0);
                        return Err(syntax(col, format!("invalid name `{name}`")));
                    }
                    if names.contains_key(name) {
                        return Err(NetlistError::Duplicate {
                            line: line_no,
                            name: name.into(),
                        });
                    }
                    names.insert(name.to_string(), Def::Pi(pi_names.len() as u32));
                    pi_names.push(name.to_string());
                }
            }
            ".outputs" => {
                for name in rest.split_whitespace() {
                    let o = match names.get(name) {
                        Some(Def::Pi(p)) => Output::Pi(*p),
                        Some(Def::Node(n)) => Output::Node(*n),
                        None => {
                            return Err(NetlistError::Undefined {
                                line: line_no,
                                name: name.into(),
                            })
                        }
                    };
                    if outputs.contains(&o) {
                        return Err(NetlistError::Duplicate {
                            line: line_no,
                            name: name.into(),
                        });
                    }
                    outputs.push(o);
                }
            }
            ".node" => {
                let eq = rest
                    .find('=')
                    .ok_or_else(|| syntax(indent + keyword.len(), "expected `=`".into()))?;
                let name = rest[..eq].trim();
                if !is_ident(name) {
                    return Err(syntax(
                        indent + keyword.len() + 1,
                        format!("invalid name `{name}`"),
                    ));
                }
                let rhs = rest[eq + 1..].trim();
                let rhs_col = indent + trimmed.len() - rhs.len();
                let open = rhs
                    .find('(')
                    .ok_or_else(|| syntax(rhs_col, "expected `(`".into()))?;
                let op = GateOp::from_mnemonic(rhs[..open].trim()).ok_or_else(|| {
                    syntax(
                        rhs_col,
                        format!("unknown operation `{}`", rhs[..open].trim()),
                    )
                })?;
                if !rhs.ends_with(')') {
                    return Err(syntax(rhs_col + rhs.len(), "expected `)`".into()));
                }
                let args: Vec<&str> = rhs[open + 1..rhs.len() - 1]
                    .split(',')
                    .map(str::trim)
                    .collect();
                if args.len() != 3 {
                    return Err(NetlistError::OperandCount {
                        line: line_no,
                        found: args.len(),
                    });
                }
                let mut operands = [Operand::constant(false); 3];
                for (k, arg) in args.iter().enumerate() {
                    operands[k] = match *arg {
                        "0" => Operand::constant(false),
                        "1" => Operand::constant(true),
                        _ => {
                            let (negated, ident) = match arg.strip_prefix('!') {
                                Some(s) => (true, s.trim()),
                                None => (false, *arg),
                            };
                            if !is_ident(ident) {
                                return Err(syntax(
                                    rhs_col + open + 1,
                                    format!("invalid operand `{arg}`"),
                                ));
                            }
                            if ident == name {
                                return Err(NetlistError::Cycle {
                                    line: line_no,
                                    name: name.into(),
                                });
                            }
                            match names.get(ident) {
                                Some(Def::Pi(p)) => Operand::pi(*p, negated),
                                Some(Def::Node(n)) => Operand::node(*n, negated),
                                None => {
                                    return Err(NetlistError::Undefined {
                                        line: line_no,
                                        name: ident.into(),
                                    })
                                }
                            }
                        }
                    };
                }
                if names.contains_key(name) {
                    return Err(NetlistError::Duplicate {
                        line: line_no,
                        name: name.into(),
                    });
                }
                let id = NodeId(nodes.len() as u32);
                names.insert(name.to_string(), Def::Node(id));
                nodes.push(XmgNode {
                    name: name.to_string(),
                    op,
                    operands,
                });
            }
            other => return Err(syntax(indent, format!("unknown directive `{other}`"))),
        }
    }
    Netlist::new(pi_names, nodes, outputs)
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("infeasible generator parameters: {0}")]
pub struct GenError(String);

/// Deterministic random netlist: uniform op kind, operands uniform over
/// inputs, earlier nodes and the two constants (at most one constant per
/// node), fair-coin negations, outputs drawn without replacement.
pub fn random_netlist(
    num_pis: usize,
    num_nodes: usize,
    num_pos: usize,
    seed: u64,
) -> Result<Netlist, GenError> {
    if num_pis == 0 {
        return Err(GenError("at least one input is required".into()));
    }
    if num_pos > num_nodes {
        return Err(GenError(format!(
            "{num_pos} outputs but only {num_nodes} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi_names = (0..num_pis).map(|i| format!("x{i}")).collect();
    let mut nodes = Vec::with_capacity(num_nodes);
    for i in 0..num_nodes {
        let op = if rng.random_bool(0.5) {
            GateOp::Xor3
        } else {
            GateOp::Maj3
        };
        let mut operands = [Operand::constant(false); 3];
        let mut has_const = false;
        for slot in operands.iter_mut() {
            let pool = num_pis + i + if has_const { 0 } else { 2 };
            let pick = rng.random_range(0..pool);
            *slot = if pick < num_pis {
                Operand::pi(pick as u32, rng.random_bool(0.5))
            } else if pick < num_pis + i {
                Operand::node(NodeId((pick - num_pis) as u32), rng.random_bool(0.5))
            } else {
                has_const = true;
                Operand::constant(pick == num_pis + i + 1)
            };
        }
        nodes.push(XmgNode {
            name: format!("n{i}"),
            op,
            operands,
        });
    }
    let mut pool: Vec<u32> = (0..num_nodes as u32).collect();
    let mut outputs = Vec::with_capacity(num_pos);
    for _ in 0..num_pos {
        let k = rng.random_range(0..pool.len());
        outputs.push(Output::Node(NodeId(pool.swap_remove(k))));
    }
    outputs.sort();
    Netlist::new(pi_names, nodes, outputs).map_err(|e| GenError(e.to_string()))
}
