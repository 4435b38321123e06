use std::fmt;

use thiserror::Error;

use super::{to_nnf, SurfaceFormula, SurfaceProgram};
use crate::formula::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Tilde,
    Amp,
    Bar,
    Arrow,
    DoubleArrow,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    Semi,
    Plus,
    Star,
    Question,
    Caret,
    LParen,
    RParen,
    True,
    False,
    Ident(String),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Tilde => "`~`",
            Tok::Amp => "`&`",
            Tok::Bar => "`|`",
            Tok::Arrow => "`->`",
            Tok::DoubleArrow => "`<->`",
            Tok::LAngle => "`<`",
            Tok::RAngle => "`>`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Semi => "`;`",
            Tok::Plus => "`+`",
            Tok::Star => "`*`",
            Tok::Question => "`?`",
            Tok::Caret => "`^`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::Ident(name) => return write!(f, "identifier `{name}`"),
            Tok::End => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (line_no, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line, column) = (line_no + 1, i + 1);
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let rest = &chars[i..];
            let (tok, width) = match c {
                '~' => (Tok::Tilde, 1),
                '&' => (Tok::Amp, 1),
                '|' => (Tok::Bar, 1),
                '-' if rest.get(1) == Some(&'>') => (Tok::Arrow, 2),
                '<' if rest.get(1) == Some(&'-') && rest.get(2) == Some(&'>') => {
                    (Tok::DoubleArrow, 3)
                }
                '<' => (Tok::LAngle, 1),
                '>' => (Tok::RAngle, 1),
                '[' => (Tok::LBracket, 1),
                ']' => (Tok::RBracket, 1),
                ';' => (Tok::Semi, 1),
                '+' => (Tok::Plus, 1),
                '*' => (Tok::Star, 1),
                '?' => (Tok::Question, 1),
                '^' => (Tok::Caret, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                c if c.is_ascii_lowercase() => {
                    let len = rest
                        .iter()
                        .take_while(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || **c == '_')
                        .count();
                    let word: String = rest[..len].iter().collect();
                    let tok = match word.as_str() {
                        "true" => Tok::True,
                        "false" => Tok::False,
                        _ => Tok::Ident(word),
                    };
                    (tok, len)
                }
                other => {
                    return Err(ParseError {
                        line,
                        column,
                        message: format!("unknown token `{other}`"),
                    })
                }
            };
            out.push(Spanned { tok, line, column });
            i += width;
        }
    }
    let (line, column) = out
        .last()
        .map(|s| (s.line, s.column + 1))
        .unwrap_or((1, 1));
    out.push(Spanned { tok: Tok::End, line, column });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, message: String) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError { line: s.line, column: s.column, message }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {tok}, found {}", self.peek())))
        }
    }

    fn formula(&mut self) -> PResult<SurfaceFormula> {
        let mut lhs = self.implication()?;
        while *self.peek() == Tok::DoubleArrow {
            self.bump();
            let rhs = self.implication()?;
            lhs = SurfaceFormula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> PResult<SurfaceFormula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(SurfaceFormula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<SurfaceFormula> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = SurfaceFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<SurfaceFormula> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = SurfaceFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<SurfaceFormula> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(SurfaceFormula::not(self.unary()?))
            }
            Tok::LAngle => {
                self.bump();
                let prog = self.program()?;
                self.expect(Tok::RAngle)?;
                Ok(SurfaceFormula::Diamond(prog, Box::new(self.unary()?)))
            }
            Tok::LBracket => {
                self.bump();
                let prog = self.program()?;
                self.expect(Tok::RBracket)?;
                Ok(SurfaceFormula::Box(prog, Box::new(self.unary()?)))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(SurfaceFormula::Var(name))
            }
            Tok::True => {
                self.bump();
                Ok(SurfaceFormula::True)
            }
            Tok::False => {
                self.bump();
                Ok(SurfaceFormula::False)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            other => Err(self.error(format!("expected a formula, found {other}"))),
        }
    }

    fn program(&mut self) -> PResult<SurfaceProgram> {
        let mut lhs = self.sequence()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.sequence()?;
            lhs = SurfaceProgram::Choice(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn sequence(&mut self) -> PResult<SurfaceProgram> {
        let mut lhs = self.postfix()?;
        while *self.peek() == Tok::Semi {
            self.bump();
            let rhs = self.postfix()?;
            lhs = SurfaceProgram::Seq(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> PResult<SurfaceProgram> {
        let mut prog = self.program_atom()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    prog = SurfaceProgram::Star(Box::new(prog));
                }
                Tok::Caret => {
                    self.bump();
                    prog = SurfaceProgram::Converse(Box::new(prog));
                }
                _ => return Ok(prog),
            }
        }
    }

    fn program_atom(&mut self) -> PResult<SurfaceProgram> {
        match self.peek().clone() {
            Tok::Ident(name) if *self.peek_at(1) != Tok::Question => {
                self.bump();
                Ok(SurfaceProgram::Atom(name))
            }
            Tok::LParen => {
                let start = self.pos;
                let as_program = (|| {
                    self.bump();
                    let prog = self.program()?;
                    self.expect(Tok::RParen)?;
                    Ok(prog)
                })();
                match as_program {
                    Ok(prog) if *self.peek() != Tok::Question => Ok(prog),
                    first => {
                        let program_error = first.err();
                        let program_pos = self.pos;
                        self.pos = start;
                        match self.test() {
                            Ok(t) => Ok(t),
                            Err(e) => match program_error {
                                Some(pe) if program_pos > self.pos => Err(pe),
                                _ => Err(e),
                            },
                        }
                    }
                }
            }
            Tok::Ident(_) | Tok::Tilde | Tok::LAngle | Tok::LBracket | Tok::True | Tok::False => {
                self.test()
            }
            other => Err(self.error(format!("expected a program, found {other}"))),
        }
    }

    fn test(&mut self) -> PResult<SurfaceProgram> {
        let f = self.unary()?;
        self.expect(Tok::Question)?;
        Ok(SurfaceProgram::Test(Box::new(f)))
    }
}

/// Parses one formula; `#` starts a comment running to the end of the line.
pub fn parse(text: &str) -> Result<SurfaceFormula, ParseError> {
    let toks = tokenize(text)?;
    let mut parser = Parser { toks, pos: 0 };
    let f = parser.formula()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error(format!("unexpected {} after formula", parser.peek())));
    }
    Ok(f)
}

/// Parses and normalises in one go.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse(text).map(|f| to_nnf(&f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use SurfaceFormula as F;
    use SurfaceProgram as P;

    fn v(p: &str) -> F {
        F::Var(p.into())
    }

    fn atom(a: &str) -> P {
        P::Atom(a.into())
    }

    #[test]
    fn example_formula() {
        let parsed = parse("<a><a*>[a^]p").unwrap();
        let expected = F::Diamond(
            atom("a"),
            Box::new(F::Diamond(
                P::Star(Box::new(atom("a"))),
                Box::new(F::Box(P::Converse(Box::new(atom("a"))), Box::new(v("p")))),
            )),
        );
        assert_eq!(parsed, expected);
    }

    #[test]
    fn implication_with_modalities() {
        let parsed = parse("p -> [a]<a^>p").unwrap();
        let expected = F::imp(
            v("p"),
            F::Box(
                atom("a"),
                Box::new(F::Diamond(P::Converse(Box::new(atom("a"))), Box::new(v("p")))),
            ),
        );
        assert_eq!(parsed, expected);
    }

    #[test]
    fn nested_program() {
        let parsed = parse("<a;(b+c)*>q").unwrap();
        let expected = F::Diamond(
            P::Seq(
                Box::new(atom("a")),
                Box::new(P::Star(Box::new(P::Choice(Box::new(atom("b")), Box::new(atom("c")))))),
            ),
            Box::new(v("q")),
        );
        assert_eq!(parsed, expected);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse("p | q & r").unwrap(),
            F::or(v("p"), F::and(v("q"), v("r")))
        );
        assert_eq!(
            parse("p -> q -> r").unwrap(),
            F::imp(v("p"), F::imp(v("q"), v("r")))
        );
        assert_eq!(
            parse("p <-> q -> r").unwrap(),
            F::iff(v("p"), F::imp(v("q"), v("r")))
        );
        assert_eq!(
            parse("<a>p & q").unwrap(),
            F::and(F::Diamond(atom("a"), Box::new(v("p"))), v("q"))
        );
    }

    #[test]
    fn tests_in_program_position() {
        assert_eq!(
            parse("<p?>q").unwrap(),
            F::Diamond(P::Test(Box::new(v("p"))), Box::new(v("q")))
        );
        assert_eq!(
            parse("<(p & q)?;a>r").unwrap(),
            F::Diamond(
                P::Seq(
                    Box::new(P::Test(Box::new(F::and(v("p"), v("q"))))),
                    Box::new(atom("a"))
                ),
                Box::new(v("r"))
            )
        );
        assert_eq!(
            parse("[<a>p?*]q").unwrap(),
            F::Box(
                P::Star(Box::new(P::Test(Box::new(F::Diamond(atom("a"), Box::new(v("p"))))))),
                Box::new(v("q"))
            )
        );
        assert_eq!(
            parse("<(p)?>q").unwrap(),
            F::Diamond(P::Test(Box::new(v("p"))), Box::new(v("q")))
        );
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "# header\n  p &  # trailing\n q\n";
        assert_eq!(parse(text).unwrap(), F::and(v("p"), v("q")));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("p &\n  $").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        assert!(err.message.contains("unknown token"));
        let err = parse("<a p").unwrap_err();
        assert_eq!((err.line, err.column), (1, 4));
        assert!(parse("p q").is_err());
        assert!(parse("").is_err());
        assert!(parse("<(a;b)?>p").is_err());
    }
}
