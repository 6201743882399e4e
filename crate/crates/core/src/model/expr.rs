//! Mechanism expressions and their compiled, slot-indexed form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Prefix expression tree for a structural mechanism.
///
/// Boolean operators expect operands in `{0, 1}`; comparisons yield `0`/`1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(i64),
    Var(String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Ge(Box<Expr>, Box<Expr>),
    Lt(Box<Expr>, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Table(Table),
}

/// Explicit lookup table over the cartesian product of its inputs' domains.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Table {
    pub inputs: Vec<String>,
    pub entries: BTreeMap<Vec<i64>, i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Eq,
    Ge,
    Lt,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn keyword(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Xor => "xor",
            BinOp::Eq => "eq",
            BinOp::Ge => "ge",
            BinOp::Lt => "lt",
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
        }
    }

    pub fn from_keyword(kw: &str) -> Option<BinOp> {
        Some(match kw {
            "and" => BinOp::And,
            "or" => BinOp::Or,
            "xor" => BinOp::Xor,
            "eq" => BinOp::Eq,
            "ge" => BinOp::Ge,
            "lt" => BinOp::Lt,
            "add" => BinOp::Add,
            "sub" => BinOp::Sub,
            "mul" => BinOp::Mul,
            _ => return None,
        })
    }

    fn is_boolean(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Xor)
    }

    fn apply(self, a: i64, b: i64) -> Result<i64, EvalError> {
        if self.is_boolean() && !(is_bool(a) && is_bool(b)) {
            return Err(EvalError::NonBoolean { op: self.keyword(), value: if is_bool(a) { b } else { a } });
        }
        let overflow = || EvalError::Overflow { op: self.keyword() };
        Ok(match self {
            BinOp::And => a & b,
            BinOp::Or => a | b,
            BinOp::Xor => a ^ b,
            BinOp::Eq => (a == b) as i64,
            BinOp::Ge => (a >= b) as i64,
            BinOp::Lt => (a < b) as i64,
            BinOp::Add => a.checked_add(b).ok_or_else(overflow)?,
            BinOp::Sub => a.checked_sub(b).ok_or_else(overflow)?,
            BinOp::Mul => a.checked_mul(b).ok_or_else(overflow)?,
        })
    }
}

fn is_bool(v: i64) -> bool {
    v == 0 || v == 1
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("`{op}` received non-boolean operand {value}")]
    NonBoolean { op: &'static str, value: i64 },
    #[error("arithmetic overflow in `{op}`")]
    Overflow { op: &'static str },
    #[error("table has no entry for inputs {key:?}")]
    MissingTableEntry { key: Vec<i64> },
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        let (a, b) = (Box::new(a), Box::new(b));
        match op {
            BinOp::And => Expr::And(a, b),
            BinOp::Or => Expr::Or(a, b),
            BinOp::Xor => Expr::Xor(a, b),
            BinOp::Eq => Expr::Eq(a, b),
            BinOp::Ge => Expr::Ge(a, b),
            BinOp::Lt => Expr::Lt(a, b),
            BinOp::Add => Expr::Add(a, b),
            BinOp::Sub => Expr::Sub(a, b),
            BinOp::Mul => Expr::Mul(a, b),
        }
    }

    /// Splits a binary node into its operator and operands.
    pub fn as_binary(&self) -> Option<(BinOp, &Expr, &Expr)> {
        let (op, a, b) = match self {
            Expr::And(a, b) => (BinOp::And, a, b),
            Expr::Or(a, b) => (BinOp::Or, a, b),
            Expr::Xor(a, b) => (BinOp::Xor, a, b),
            Expr::Eq(a, b) => (BinOp::Eq, a, b),
            Expr::Ge(a, b) => (BinOp::Ge, a, b),
            Expr::Lt(a, b) => (BinOp::Lt, a, b),
            Expr::Add(a, b) => (BinOp::Add, a, b),
            Expr::Sub(a, b) => (BinOp::Sub, a, b),
            Expr::Mul(a, b) => (BinOp::Mul, a, b),
            _ => return None,
        };
        Some((op, a.as_ref(), b.as_ref()))
    }

    /// Every variable name the expression reads.
    pub fn references(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Not(e) => e.collect_refs(out),
            Expr::Table(t) => out.extend(t.inputs.iter().cloned()),
            other => {
                let (_, a, b) = other.as_binary().expect("binary node");
                a.collect_refs(out);
                b.collect_refs(out);
            }
        }
    }

    /// Evaluates against a name lookup. Used by tests and tooling; hot paths
    /// use [`CompiledExpr`].
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> i64) -> Result<i64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(n) => Ok(lookup(n)),
            Expr::Not(e) => {
                let v = e.eval_with(lookup)?;
                if !is_bool(v) {
                    return Err(EvalError::NonBoolean { op: "not", value: v });
                }
                Ok(1 - v)
            }
            Expr::Table(t) => {
                let key: Vec<i64> = t.inputs.iter().map(|n| lookup(n)).collect();
                t.entries.get(&key).copied().ok_or(EvalError::MissingTableEntry { key })
            }
            other => {
                let (op, a, b) = other.as_binary().expect("binary node");
                op.apply(a.eval_with(lookup)?, b.eval_with(lookup)?)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Not(e) => write!(f, "not({e})"),
            Expr::Table(t) => {
                write!(f, "table({}", t.inputs.join(", "))?;
                let mut first = true;
                for (key, out) in &t.entries {
                    let sep = if first { "; " } else { ", " };
                    first = false;
                    let key: Vec<String> = key.iter().map(i64::to_string).collect();
                    write!(f, "{sep}({}) -> {out}", key.join(","))?;
                }
                write!(f, ")")
            }
            other => {
                let (op, a, b) = other.as_binary().expect("binary node");
                write!(f, "{}({a}, {b})", op.keyword())
            }
        }
    }
}

/// Slot-indexed expression; slots address a flat value buffer.
#[derive(Debug, Clone)]
pub(crate) enum CompiledExpr {
    Const(i64),
    Slot(usize),
    Not(Box<CompiledExpr>),
    Bin(BinOp, Box<CompiledExpr>, Box<CompiledExpr>),
    Table(CompiledTable),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledTable {
    slots: Vec<usize>,
    /// Domain of each input, ascending.
    domains: Vec<Vec<i64>>,
    /// Row-major over `domains`; `None` marks a missing entry.
    values: Vec<Option<i64>>,
}

impl CompiledExpr {
    pub(crate) fn compile(
        expr: &Expr,
        slot_of: &dyn Fn(&str) -> Option<usize>,
        domain_of: &dyn Fn(usize) -> Vec<i64>,
    ) -> Result<CompiledExpr, String> {
        Ok(match expr {
            Expr::Const(c) => CompiledExpr::Const(*c),
            Expr::Var(n) => CompiledExpr::Slot(slot_of(n).ok_or_else(|| n.clone())?),
            Expr::Not(e) => CompiledExpr::Not(Box::new(Self::compile(e, slot_of, domain_of)?)),
            Expr::Table(t) => {
                let slots =
                    t.inputs.iter().map(|n| slot_of(n).ok_or_else(|| n.clone())).collect::<Result<Vec<_>, _>>()?;
                let domains: Vec<Vec<i64>> = slots.iter().map(|&s| domain_of(s)).collect();
                let size: usize = domains.iter().map(Vec::len).product();
                let mut values = vec![None; size];
                for (key, out) in &t.entries {
                    if let Some(idx) = table_index(&domains, key) {
                        values[idx] = Some(*out);
                    }
                }
                CompiledExpr::Table(CompiledTable { slots, domains, values })
            }
            other => {
                let (op, a, b) = other.as_binary().expect("binary node");
                CompiledExpr::Bin(
                    op,
                    Box::new(Self::compile(a, slot_of, domain_of)?),
                    Box::new(Self::compile(b, slot_of, domain_of)?),
                )
            }
        })
    }

    pub(crate) fn eval(&self, slots: &[i64]) -> Result<i64, EvalError> {
        match self {
            CompiledExpr::Const(c) => Ok(*c),
            CompiledExpr::Slot(s) => Ok(slots[*s]),
            CompiledExpr::Not(e) => {
                let v = e.eval(slots)?;
                if !is_bool(v) {
                    return Err(EvalError::NonBoolean { op: "not", value: v });
                }
                Ok(1 - v)
            }
            CompiledExpr::Bin(op, a, b) => op.apply(a.eval(slots)?, b.eval(slots)?),
            CompiledExpr::Table(t) => {
                let key: Vec<i64> = t.slots.iter().map(|&s| slots[s]).collect();
                table_index(&t.domains, &key).and_then(|i| t.values[i]).ok_or(EvalError::MissingTableEntry { key })
            }
        }
    }
}

fn table_index(domains: &[Vec<i64>], key: &[i64]) -> Option<usize> {
    if key.len() != domains.len() {
        return None;
    }
    let mut idx = 0usize;
    for (dom, v) in domains.iter().zip(key) {
        let pos = dom.binary_search(v).ok()?;
        idx = idx * dom.len() + pos;
    }
    Some(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn face_hair() -> Expr {
        // xor(and(not(Y), U_H1), and(Y, U_H2))
        Expr::binary(
            BinOp::Xor,
            Expr::binary(BinOp::And, Expr::not(Expr::var("Y")), Expr::var("U_H1")),
            Expr::binary(BinOp::And, Expr::var("Y"), Expr::var("U_H2")),
        )
    }

    #[test]
    fn references_are_collected() {
        let refs: Vec<_> = face_hair().references().into_iter().collect();
        assert_eq!(refs, ["U_H1", "U_H2", "Y"]);
    }

    #[test]
    fn hair_mechanism_selects_by_age() {
        let e = face_hair();
        let look = |y: i64, h1: i64, h2: i64| {
            move |n: &str| match n {
                "Y" => y,
                "U_H1" => h1,
                _ => h2,
            }
        };
        assert_eq!(e.eval_with(&look(0, 1, 0)).unwrap(), 1);
        assert_eq!(e.eval_with(&look(1, 1, 0)).unwrap(), 0);
        assert_eq!(e.eval_with(&look(1, 0, 1)).unwrap(), 1);
    }

    #[test]
    fn boolean_operands_are_checked() {
        let e = Expr::binary(BinOp::And, Expr::Const(2), Expr::Const(1));
        assert!(matches!(e.eval_with(&|_| 0), Err(EvalError::NonBoolean { .. })));
        let e = Expr::not(Expr::Const(3));
        assert!(e.eval_with(&|_| 0).is_err());
    }

    #[test]
    fn display_is_prefix() {
        assert_eq!(face_hair().to_string(), "xor(and(not(Y), U_H1), and(Y, U_H2))");
        let t = Expr::Table(Table {
            inputs: vec!["A".into()],
            entries: [(vec![0], 1), (vec![1], 0)].into_iter().collect(),
        });
        assert_eq!(t.to_string(), "table(A; (0) -> 1, (1) -> 0)");
    }
}
