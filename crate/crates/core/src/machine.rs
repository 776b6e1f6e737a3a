//! Text format for wreath recursions.
//!
//! ```text
//! # z² − 1
//! group
//!   a inf        # name, order, optional label
//!   b inf
//!   c inf infinity
//! infinity c
//! basis 0 1 angle_order
//! transitions
//!   a: 0 -> b.1
//!   a: 1 -> 0
//!   b: 0 -> 0
//!   b: 1 -> b^-1*a*b.1
//! ```
//!
//! `kind cryst` switches to `Z² ⋊ Z/2` with four generators `t₁…t₄` and
//! literals `[x,y,f]`. The eliminated generator (`eliminate`, default: last
//! of infinite order) may be omitted from `transitions`; if present, its rows
//! must agree with the sphere relation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::biset::{BisetError, SphereBiset, Transitions};
use crate::group::{Group, GroupKind, Order, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("missing transition for generator `{gen}` at letter `{letter}`")]
    MissingTransition { gen: String, letter: String },
    #[error("invalid machine: {0}")]
    Invalid(#[from] BisetError),
}

/// A parsed machine together with the optional marked-point labels.
#[derive(Clone, Debug)]
pub struct MachineFile {
    pub biset: SphereBiset,
    pub labels: Vec<Option<String>>,
}

#[derive(PartialEq)]
enum Section {
    Top,
    Group,
    Transitions,
}

fn column_of(raw: &str, token: &str) -> usize {
    raw.find(token).map_or(1, |i| raw[..i].chars().count() + 1)
}

/// Parse and validate a machine file.
pub fn parse_machine(text: &str) -> Result<SphereBiset, MachineError> {
    Ok(parse_machine_file(text)?.biset)
}

pub fn parse_machine_file(text: &str) -> Result<MachineFile, MachineError> {
    let mut kind = GroupKind::Sphere;
    let mut gens: Vec<(String, Order, Option<String>)> = Vec::new();
    let mut eliminate: Option<(String, usize, usize)> = None;
    let mut infinity: Option<(String, usize, usize)> = None;
    let mut basis: Option<(Vec<String>, bool)> = None;
    // (generator, letter, word text, target, line, column)
    let mut rows: Vec<(String, String, String, String, usize, usize)> = Vec::new();
    let mut section = Section::Top;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |token: &str, msg: String| MachineError::Syntax { line: line_no, column: column_of(raw, token), msg };
        let mut words = line.split_whitespace();
        let head = words.next().unwrap();
        match head {
            "kind" => {
                let k = words.next().ok_or_else(|| syntax(head, "expected `kind sphere` or `kind cryst`".into()))?;
                kind = match k {
                    "sphere" => GroupKind::Sphere,
                    "cryst" => GroupKind::Cryst,
                    _ => return Err(syntax(k, format!("unknown kind `{k}`"))),
                };
                section = Section::Top;
                continue;
            }
            "group" => {
                section = Section::Group;
                continue;
            }
            "transitions" => {
                section = Section::Transitions;
                continue;
            }
            "eliminate" | "infinity" => {
                let name = words.next().ok_or_else(|| syntax(head, format!("`{head}` needs a generator name")))?;
                let entry = Some((name.to_string(), line_no, column_of(raw, name)));
                if head == "eliminate" {
                    eliminate = entry;
                } else {
                    infinity = entry;
                }
                section = Section::Top;
                continue;
            }
            "basis" => {
                let mut letters = Vec::new();
                let mut angle = false;
                for w in words {
                    if w == "angle_order" {
                        angle = true;
                    } else if w.contains(['.', ':', '*', '^']) {
                        return Err(syntax(w, format!("letter name `{w}` may not contain `.`, `:`, `*` or `^`")));
                    } else if letters.iter().any(|l| l == w) {
                        return Err(syntax(w, format!("duplicate letter `{w}`")));
                    } else {
                        letters.push(w.to_string());
                    }
                }
                if letters.is_empty() {
                    return Err(syntax(head, "empty basis".into()));
                }
                basis = Some((letters, angle));
                section = Section::Top;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Top => return Err(syntax(head, format!("unexpected `{head}` outside a section"))),
            Section::Group => {
                let order = match words.next() {
                    Some(o) => Order::parse(o).map_err(|e| syntax(o, e.to_string()))?,
                    None if kind == GroupKind::Cryst => Order::Finite(2),
                    None => return Err(syntax(head, format!("generator `{head}` needs an order"))),
                };
                let label = words.next().map(str::to_string);
                if gens.iter().any(|g| g.0 == head) {
                    return Err(syntax(head, format!("duplicate generator `{head}`")));
                }
                gens.push((head.to_string(), order, label));
            }
            Section::Transitions => {
                let (g, rest) = line
                    .split_once(':')
                    .ok_or_else(|| syntax(head, "expected `g: x -> w.y`".into()))?;
                let (x, rhs) = rest.split_once("->").ok_or_else(|| syntax(rest, "expected `->`".into()))?;
                let rhs = rhs.trim();
                let (w, y) = match rhs.rsplit_once('.') {
                    Some((w, y)) => (w.trim(), y.trim()),
                    None => ("1", rhs),
                };
                rows.push((
                    g.trim().to_string(),
                    x.trim().to_string(),
                    w.to_string(),
                    y.to_string(),
                    line_no,
                    column_of(raw, rhs),
                ));
            }
        }
    }
    let eof = |msg: &str| MachineError::Syntax { line: text.lines().count().max(1), column: 1, msg: msg.into() };
    let (letters, angle_order) = basis.ok_or_else(|| eof("missing `basis` line"))?;
    let names: Vec<String> = gens.iter().map(|g| g.0.clone()).collect();
    let orders: Vec<Order> = gens.iter().map(|g| g.1).collect();
    let group = match kind {
        GroupKind::Cryst => {
            if eliminate.is_some() {
                return Err(eof("a crystallographic group always eliminates its fourth generator"));
            }
            Group::cryst(&names).map_err(|e| eof(&e.to_string()))?
        }
        GroupKind::Sphere => match &eliminate {
            Some((name, line, column)) => {
                let e = names.iter().position(|n| n == name).ok_or(MachineError::Syntax {
                    line: *line,
                    column: *column,
                    msg: format!("unknown generator `{name}`"),
                })?;
                Group::sphere_with_eliminated(names.clone(), orders, e)
            }
            None => Group::sphere(names.clone(), orders),
        }
        .map_err(|e| eof(&e.to_string()))?,
    };
    let inf = match &infinity {
        Some((name, line, column)) => Some(names.iter().position(|n| n == name).ok_or(MachineError::Syntax {
            line: *line,
            column: *column,
            msg: format!("unknown generator `{name}`"),
        })?),
        None => None,
    };
    let d = letters.len();
    let mut table: BTreeMap<(usize, usize), (Word, usize)> = BTreeMap::new();
    for (g, x, w, y, line, column) in rows {
        let err = |msg: String| MachineError::Syntax { line, column, msg };
        let gi = names.iter().position(|n| *n == g).ok_or_else(|| err(format!("unknown generator `{g}`")))?;
        let xi = letters.iter().position(|l| *l == x).ok_or_else(|| err(format!("unknown letter `{x}`")))?;
        let yi = letters.iter().position(|l| *l == y).ok_or_else(|| err(format!("unknown letter `{y}`")))?;
        let word = group.parse_word(&w).map_err(|e| err(e.to_string()))?;
        if table.insert((gi, xi), (word, yi)).is_some() {
            return Err(err(format!("second transition for generator `{g}` at letter `{x}`")));
        }
    }
    let mut transitions = Vec::with_capacity(names.len());
    for (gi, name) in names.iter().enumerate() {
        let present: Vec<usize> = (0..d).filter(|&x| table.contains_key(&(gi, x))).collect();
        if gi == group.eliminated() && present.is_empty() {
            transitions.push(None);
            continue;
        }
        if let Some(x) = (0..d).find(|x| !present.contains(x)) {
            return Err(MachineError::MissingTransition { gen: name.clone(), letter: letters[x].clone() });
        }
        let (cofactor, perm) = (0..d).map(|x| table[&(gi, x)].clone()).unzip();
        transitions.push(Some(Transitions::new(perm, cofactor)));
    }
    let biset = SphereBiset::new(group, letters, transitions)?
        .with_angle_order(angle_order)
        .with_infinity(inf);
    biset.validate()?;
    Ok(MachineFile { biset, labels: gens.into_iter().map(|g| g.2).collect() })
}

/// Serialize a machine; the eliminated generator's rows are omitted.
pub fn write_machine(b: &SphereBiset) -> String {
    let g = b.group();
    let mut out = String::new();
    if g.kind() == GroupKind::Cryst {
        out.push_str("kind cryst\n");
    }
    out.push_str("group\n");
    for (name, o) in g.names().iter().zip(g.orders()) {
        out.push_str(&format!("  {name} {o}\n"));
    }
    if g.kind() == GroupKind::Sphere {
        out.push_str(&format!("eliminate {}\n", g.names()[g.eliminated()]));
    }
    if let Some(i) = b.infinity() {
        out.push_str(&format!("infinity {}\n", g.names()[i]));
    }
    out.push_str("basis");
    for l in b.letters() {
        out.push(' ');
        out.push_str(l);
    }
    if b.angle_order() {
        out.push_str(" angle_order");
    }
    out.push_str("\ntransitions\n");
    for i in (0..g.rank()).filter(|&i| i != g.eliminated()) {
        let t = b.transitions(i);
        for x in 0..b.degree() {
            let w = g.format_word(&t.cofactor[x]);
            let y = &b.letters()[t.perm[x]];
            let rhs = if t.cofactor[x].is_identity() { y.clone() } else { format!("{w}.{y}") };
            out.push_str(&format!("  {}: {} -> {}\n", g.names()[i], b.letters()[x], rhs));
        }
    }
    out
}
