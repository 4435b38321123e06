use crate::formula::{Formula, FormulaNode, Program, ProgramNode};

const OR: u8 = 0;
const AND: u8 = 1;
const UNARY: u8 = 2;

const CHOICE: u8 = 0;
const SEQ: u8 = 1;
const POSTFIX: u8 = 2;

/// Prints a formula in the concrete grammar with as few parentheses as the
/// precedence rules allow. The reserved tautology and contradiction print
/// as `true` and `false`, so constants survive a round trip.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    formula(f, OR, &mut out);
    out
}

pub fn render_program(g: &Program) -> String {
    let mut out = String::new();
    program(g, CHOICE, &mut out);
    out
}

fn reserved(f: &Formula, negative: bool) -> bool {
    match f.node() {
        FormulaNode::Var(q) => !negative && Formula::is_reserved_variable(q),
        FormulaNode::NegVar(q) => negative && Formula::is_reserved_variable(q),
        _ => false,
    }
}

fn constant(f: &Formula) -> Option<&'static str> {
    match f.node() {
        FormulaNode::Or(l, r) if reserved(l, false) && reserved(r, true) => Some("true"),
        FormulaNode::And(l, r) if reserved(l, false) && reserved(r, true) => Some("false"),
        FormulaNode::And(l, r) if reserved(l, true) && reserved(r, false) => Some("~true"),
        FormulaNode::Or(l, r) if reserved(l, true) && reserved(r, false) => Some("~false"),
        _ => None,
    }
}

fn formula(f: &Formula, ctx: u8, out: &mut String) {
    if let Some(c) = constant(f) {
        out.push_str(c);
        return;
    }
    match f.node() {
        FormulaNode::Var(p) => out.push_str(p.as_str()),
        FormulaNode::NegVar(p) => {
            out.push('~');
            out.push_str(p.as_str());
        }
        FormulaNode::And(l, r) => binary(l, r, " & ", AND, ctx, out),
        FormulaNode::Or(l, r) => binary(l, r, " | ", OR, ctx, out),
        FormulaNode::Diamond(g, body) => {
            out.push('<');
            program(g, CHOICE, out);
            out.push('>');
            formula(body, UNARY, out);
        }
        FormulaNode::Box(g, body) => {
            out.push('[');
            program(g, CHOICE, out);
            out.push(']');
            formula(body, UNARY, out);
        }
    }
}

fn binary(l: &Formula, r: &Formula, op: &str, level: u8, ctx: u8, out: &mut String) {
    let paren = ctx > level;
    if paren {
        out.push('(');
    }
    formula(l, level, out);
    out.push_str(op);
    formula(r, level + 1, out);
    if paren {
        out.push(')');
    }
}

fn program(g: &Program, ctx: u8, out: &mut String) {
    match g.node() {
        ProgramNode::Literal(l) => {
            out.push_str(l.base.name());
            if l.converse {
                out.push('^');
            }
        }
        ProgramNode::Seq(a, b) => program_binary(a, b, ";", SEQ, ctx, out),
        ProgramNode::Choice(a, b) => program_binary(a, b, " + ", CHOICE, ctx, out),
        ProgramNode::Star(a) => {
            program(a, POSTFIX, out);
            out.push('*');
        }
        ProgramNode::Test(f) => {
            formula(f, UNARY, out);
            out.push('?');
        }
    }
}

fn program_binary(a: &Program, b: &Program, op: &str, level: u8, ctx: u8, out: &mut String) {
    let paren = ctx > level;
    if paren {
        out.push('(');
    }
    program(a, level, out);
    out.push_str(op);
    program(b, level + 1, out);
    if paren {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::var("p")
    }

    fn q() -> Formula {
        Formula::var("q")
    }

    #[test]
    fn example_renders() {
        let a = Program::atom("a");
        let f = Formula::diamond(
            a.clone(),
            Formula::diamond(Program::star(a.clone()), Formula::boxed(Program::converse_atom("a"), p())),
        );
        assert_eq!(render(&f), "<a><a*>[a^]p");
    }

    #[test]
    fn minimal_parentheses() {
        let f = Formula::or(p(), Formula::and(q(), Formula::neg_var("r")));
        assert_eq!(render(&f), "p | q & ~r");
        let g = Formula::and(Formula::or(p(), q()), p());
        assert_eq!(render(&g), "(p | q) & p");
        let h = Formula::or(p(), Formula::or(q(), p()));
        assert_eq!(render(&h), "p | (q | p)");
        let k = Formula::diamond(Program::atom("a"), Formula::and(p(), q()));
        assert_eq!(render(&k), "<a>(p & q)");
    }

    #[test]
    fn program_parentheses() {
        let a = Program::atom("a");
        let b = Program::atom("b");
        let g = Program::seq(a.clone(), Program::star(Program::choice(b.clone(), a.clone())));
        assert_eq!(render_program(&g), "a;(b + a)*");
        let t = Program::star(Program::test(Formula::and(p(), q())));
        assert_eq!(render_program(&t), "(p & q)?*");
        let s = Program::seq(Program::choice(a.clone(), b.clone()), a);
        assert_eq!(render_program(&s), "(a + b);a");
    }

    #[test]
    fn constants() {
        assert_eq!(render(&Formula::top()), "true");
        assert_eq!(render(&Formula::bottom()), "false");
        assert_eq!(render(&Formula::top().negate()), "~true");
        assert_eq!(render(&Formula::bottom().negate()), "~false");
    }
}
