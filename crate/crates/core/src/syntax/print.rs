//! Printer for the ASCII syntax. Expansions of derived connectives are
//! recognised and printed back in sugared form.

use core::fmt::{self, Write};

use super::Formula;

const IFF: u8 = 0;
const IMP: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const UNARY: u8 = 4;

enum View<'a> {
    Iff(&'a Formula, &'a Formula),
    Imp(&'a Formula, &'a Formula),
    Or(&'a Formula, &'a Formula),
    And(&'a Formula, &'a Formula),
    Prefix(&'static str, &'a Formula),
    Tangle(&'a [Formula]),
    Var(&'a str),
}

impl View<'_> {
    fn level(&self) -> u8 {
        match self {
            View::Iff(..) => IFF,
            View::Imp(..) => IMP,
            View::Or(..) => OR,
            View::And(..) => AND,
            _ => UNARY,
        }
    }
}

fn neg_inner(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Neg(x) => Some(x),
        _ => None,
    }
}

fn view(f: &Formula) -> View<'_> {
    match f {
        Formula::Var(name) => View::Var(name),
        Formula::Next(a) => View::Prefix("X ", a),
        Formula::Hence(a) => View::Prefix("G ", a),
        Formula::Tangle(m) if m.len() == 1 => View::Prefix("<>", &m[0]),
        Formula::Tangle(m) => View::Tangle(m),
        Formula::And(l, r) => {
            if let (Some(Formula::And(a, nb)), Some(Formula::And(b, na))) =
                (neg_inner(l), neg_inner(r))
            {
                if let (Some(b1), Some(a1)) = (neg_inner(nb), neg_inner(na)) {
                    if a1 == a.as_ref() && b1 == b.as_ref() {
                        return View::Iff(a, b);
                    }
                }
            }
            View::And(l, r)
        }
        Formula::Neg(inner) => match inner.as_ref() {
            Formula::And(l, r) => match (neg_inner(l), neg_inner(r)) {
                // `¬(x → y) ∨ b` reads better as `(x → y) → b`
                (Some(Formula::And(_, y)), Some(b)) if neg_inner(y).is_some() => View::Imp(l, b),
                (Some(a), Some(b)) => View::Or(a, b),
                (None, Some(b)) => View::Imp(l, b),
                _ => View::Prefix("~", inner),
            },
            Formula::Tangle(m) if m.len() == 1 => match neg_inner(&m[0]) {
                Some(a) => View::Prefix("[]", a),
                None => View::Prefix("~", inner),
            },
            Formula::Hence(h) => match neg_inner(h) {
                Some(a) => View::Prefix("F ", a),
                None => View::Prefix("~", inner),
            },
            _ => View::Prefix("~", inner),
        },
    }
}

fn write_at(out: &mut fmt::Formatter<'_>, f: &Formula, ctx: u8) -> fmt::Result {
    let v = view(f);
    let paren = v.level() < ctx;
    if paren {
        out.write_char('(')?;
    }
    match v {
        View::Iff(a, b) => binary(out, a, " <-> ", b, IFF, IMP)?,
        View::Imp(a, b) => binary(out, a, " -> ", b, OR, IMP)?,
        View::Or(a, b) => binary(out, a, " | ", b, OR, AND)?,
        View::And(a, b) => binary(out, a, " & ", b, AND, UNARY)?,
        View::Prefix(op, a) => {
            out.write_str(op)?;
            write_at(out, a, UNARY)?;
        }
        View::Tangle(members) => {
            out.write_str("<>{")?;
            for (i, m) in members.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write_at(out, m, IFF)?;
            }
            out.write_char('}')?;
        }
        View::Var(name) => out.write_str(name)?,
    }
    if paren {
        out.write_char(')')?;
    }
    Ok(())
}

fn binary(
    out: &mut fmt::Formatter<'_>,
    a: &Formula,
    op: &str,
    b: &Formula,
    left: u8,
    right: u8,
) -> fmt::Result {
    write_at(out, a, left)?;
    out.write_str(op)?;
    write_at(out, b, right)
}

pub(super) fn write_formula(out: &mut fmt::Formatter<'_>, f: &Formula) -> fmt::Result {
    write_at(out, f, IFF)
}
