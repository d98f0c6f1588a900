//! Text and JSON forms of instruction sequences.
//!
//! Text, one instruction per line, rows 1-based:
//!
//! ```text
//! # rows_per_array=8 num_arrays=2 netlist=<sha256>
//! R9 <- COPY(R1)
//! R9 <- XOR(R9, !R10, 0) # node=N1
//! ```
//!
//! Compute lines name their node, so a sequence can only be read back
//! against the netlist it was written for.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{Instruction, MemLayout, Row, RowOperand};
use crate::netlist::{GateOp, Netlist};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceHeader {
    pub rows_per_array: usize,
    pub num_arrays: usize,
    pub netlist_hash: String,
}

impl SequenceHeader {
    pub fn new(net: &Netlist, layout: MemLayout) -> Self {
        SequenceHeader {
            rows_per_array: layout.rows_per_array,
            num_arrays: layout.num_arrays,
            netlist_hash: net.content_hash(),
        }
    }

    pub fn layout(&self) -> MemLayout {
        MemLayout::new(self.rows_per_array, self.num_arrays)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequenceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown node '{name}'")]
    UnknownNode { line: usize, name: String },
    #[error("json: {0}")]
    Json(String),
}

fn fmt_operand(o: &RowOperand) -> String {
    match *o {
        RowOperand::Const(b) => (b as u8).to_string(),
        RowOperand::Row { row, negated } => format!("{}{row}", if negated { "!" } else { "" }),
    }
}

fn fmt_instruction(net: &Netlist, ins: &Instruction) -> String {
    match ins {
        Instruction::Copy { src, dst } => format!("{dst} <- COPY({src})"),
        Instruction::Compute {
            node,
            op,
            dst,
            operands,
        } => format!(
            "{dst} <- {}({}) # node={}",
            op.mnemonic(),
            operands
                .iter()
                .map(fmt_operand)
                .collect::<Vec<_>>()
                .join(", "),
            net.node(*node).name
        ),
    }
}

pub fn to_text(net: &Netlist, layout: MemLayout, is: &[Instruction]) -> String {
    let h = SequenceHeader::new(net, layout);
    let mut out = format!(
        "# rows_per_array={} num_arrays={} netlist={}\n",
        h.rows_per_array, h.num_arrays, h.netlist_hash
    );
    for ins in is {
        out.push_str(&fmt_instruction(net, ins));
        out.push('\n');
    }
    out
}

fn parse_row(tok: &str) -> Option<Row> {
    let n: u32 = tok.strip_prefix('R')?.parse().ok()?;
    n.checked_sub(1).map(Row)
}

fn parse_operand(tok: &str) -> Option<RowOperand> {
    match tok {
        "0" => Some(RowOperand::Const(false)),
        "1" => Some(RowOperand::Const(true)),
        _ => match tok.strip_prefix('!') {
            Some(rest) => Some(RowOperand::Row {
                row: parse_row(rest)?,
                negated: true,
            }),
            None => Some(RowOperand::Row {
                row: parse_row(tok)?,
                negated: false,
            }),
        },
    }
}

fn parse_header(line: &str) -> Option<SequenceHeader> {
    let mut rows = None;
    let mut arrays = None;
    let mut hash = None;
    for kv in line.trim_start_matches('#').split_whitespace() {
        let (k, v) = kv.split_once('=')?;
        match k {
            "rows_per_array" => rows = v.parse().ok(),
            "num_arrays" => arrays = v.parse().ok(),
            "netlist" => hash = Some(v.to_string()),
            _ => {}
        }
    }
    Some(SequenceHeader {
        rows_per_array: rows?,
        num_arrays: arrays?,
        netlist_hash: hash?,
    })
}

fn parse_line(net: &Netlist, line: usize, text: &str) -> Result<Instruction, SequenceError> {
    let syntax = |msg: &str| SequenceError::Syntax {
        line,
        msg: msg.to_string(),
    };
    let (body, comment) = match text.split_once('#') {
        Some((b, c)) => (b.trim(), Some(c.trim())),
        None => (text.trim(), None),
    };
    let (dst, rhs) = body
        .split_once("<-")
        .ok_or_else(|| syntax("expected '<-'"))?;
    let dst = parse_row(dst.trim()).ok_or_else(|| syntax("bad destination row"))?;
    let rhs = rhs.trim();
    let (name, args) = rhs.split_once('(').ok_or_else(|| syntax("expected '('"))?;
    let args = args
        .strip_suffix(')')
        .ok_or_else(|| syntax("expected ')'"))?;
    let args: Vec<&str> = args.split(',').map(str::trim).collect();
    let name = name.trim();
    if name == "COPY" {
        let [src] = args[..] else {
            return Err(syntax("COPY takes one row"));
        };
        let src = parse_row(src).ok_or_else(|| syntax("bad source row"))?;
        return Ok(Instruction::Copy { src, dst });
    }
    let op = GateOp::from_mnemonic(name).ok_or_else(|| syntax("unknown operation"))?;
    if args.len() != 3 {
        return Err(syntax("compute takes three operands"));
    }
    let mut operands = [RowOperand::Const(false); 3];
    for (slot, a) in operands.iter_mut().zip(&args) {
        *slot = parse_operand(a).ok_or_else(|| syntax("bad operand"))?;
    }
    let node_name = comment
        .and_then(|c| c.strip_prefix("node="))
        .map(str::trim)
        .ok_or_else(|| syntax("compute needs '# node=NAME'"))?;
    let node = net
        .find_node(node_name)
        .ok_or_else(|| SequenceError::UnknownNode {
            line,
            name: node_name.to_string(),
        })?;
    Ok(Instruction::Compute {
        node,
        op,
        dst,
        operands,
    })
}

/// Parses the text form. The header is optional.
pub fn from_text(
    net: &Netlist,
    text: &str,
) -> Result<(Option<SequenceHeader>, Vec<Instruction>), SequenceError> {
    let mut header = None;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if header.is_none() && out.is_empty() {
                header = parse_header(line);
            }
            continue;
        }
        out.push(parse_line(net, i + 1, line)?);
    }
    Ok((header, out))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum JsonInstruction {
    Copy {
        src: u32,
        dst: u32,
    },
    Compute {
        node: String,
        op: String,
        dst: u32,
        operands: Vec<String>,
    },
}

#[derive(Serialize, Deserialize)]
struct JsonSequence {
    header: SequenceHeader,
    instructions: Vec<JsonInstruction>,
}

pub fn to_json(net: &Netlist, layout: MemLayout, is: &[Instruction]) -> String {
    let doc = JsonSequence {
        header: SequenceHeader::new(net, layout),
        instructions: is
            .iter()
            .map(|ins| match ins {
                Instruction::Copy { src, dst } => JsonInstruction::Copy {
                    src: src.0 + 1,
                    dst: dst.0 + 1,
                },
                Instruction::Compute {
                    node,
                    op,
                    dst,
                    operands,
                } => JsonInstruction::Compute {
                    node: net.node(*node).name.clone(),
                    op: op.mnemonic().to_string(),
                    dst: dst.0 + 1,
                    operands: operands.iter().map(fmt_operand).collect(),
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("sequence serializes")
}

pub fn from_json(
    net: &Netlist,
    text: &str,
) -> Result<(SequenceHeader, Vec<Instruction>), SequenceError> {
    let doc: JsonSequence =
        serde_json::from_str(text).map_err(|e| SequenceError::Json(e.to_string()))?;
    let mut out = Vec::with_capacity(doc.instructions.len());
    for (i, ins) in doc.instructions.into_iter().enumerate() {
        let line = i + 1;
        let row = |r: u32| {
            r.checked_sub(1).map(Row).ok_or(SequenceError::Syntax {
                line,
                msg: "rows are 1-based".into(),
            })
        };
        out.push(match ins {
            JsonInstruction::Copy { src, dst } => Instruction::Copy {
                src: row(src)?,
                dst: row(dst)?,
            },
            JsonInstruction::Compute {
                node,
                op,
                dst,
                operands,
            } => {
                let bad = |msg: &str| SequenceError::Syntax {
                    line,
                    msg: msg.to_string(),
                };
                let n = net.find_node(&node).ok_or(SequenceError::UnknownNode {
                    line,
                    name: node.clone(),
                })?;
                let op = GateOp::from_mnemonic(&op).ok_or_else(|| bad("unknown operation"))?;
                if operands.len() != 3 {
                    return Err(bad("compute takes three operands"));
                }
                let mut ops = [RowOperand::Const(false); 3];
                for (slot, o) in ops.iter_mut().zip(&operands) {
                    *slot = parse_operand(o).ok_or_else(|| bad("bad operand"))?;
                }
                Instruction::Compute {
                    node: n,
                    op,
                    dst: row(dst)?,
                    operands: ops,
                }
            }
        });
    }
    Ok((doc.header, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn text_round_trip() {
        let net = fixtures::five_node_net();
        let is = fixtures::five_node_sequence(&net);
        let layout = MemLayout::new(8, 2);
        let text = to_text(&net, layout, &is);
        assert!(text.contains("R9 <- COPY(R1)\n"));
        assert!(text.contains("R11 <- XOR(R10, R11, !R12) # node=N4\n"));
        let (h, back) = from_text(&net, &text).unwrap();
        assert_eq!(back, is);
        assert_eq!(h.unwrap(), SequenceHeader::new(&net, layout));
    }

    #[test]
    fn json_round_trip() {
        let net = fixtures::five_node_net();
        let is = fixtures::five_node_sequence(&net);
        let layout = MemLayout::new(8, 2);
        let (h, back) = from_json(&net, &to_json(&net, layout, &is)).unwrap();
        assert_eq!(back, is);
        assert_eq!(h.layout(), layout);
    }

    #[test]
    fn errors() {
        let net = fixtures::five_node_net();
        assert!(matches!(
            from_text(&net, "R0 <- COPY(R1)"),
            Err(SequenceError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            from_text(&net, "R9 <- XOR(R1, R2, 0)"),
            Err(SequenceError::Syntax { .. })
        ));
        assert!(matches!(
            from_text(&net, "\nR9 <- XOR(R1, R2, 0) # node=zz"),
            Err(SequenceError::UnknownNode { line: 2, .. })
        ));
        assert!(matches!(from_json(&net, "{"), Err(SequenceError::Json(_))));
    }
}
