use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::expr::{BinOp, Expr};
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, PhaseAxis, PulseEvent, Sequence, Span};
use crate::spinsys::{SpinSet, SpinSystem};

/// Parenthesis/negation nesting limit.
const MAX_DEPTH: usize = 64;

/// Parses a script against `sys`: spin references and coupling indices are
/// checked now, expressions that depend on the spin system are evaluated
/// later by [`Sequence::evaluate_durations`] or the engine.
pub fn parse(script: &str, sys: &SpinSystem) -> Result<Sequence, ParseError> {
    let tokens = tokenize(script)?;
    let mut p = Parser {
        toks: &tokens,
        pos: 0,
        sys,
        depth: 0,
    };
    let mut events = Vec::new();
    let mut spans = Vec::new();
    let mut decoupled = SpinSet::EMPTY;
    let mut groups: Vec<SpinSet> = Vec::new();

    loop {
        match &p.peek().tok {
            Tok::Eof => break,
            Tok::Newline | Tok::Semi => {
                p.bump();
                continue;
            }
            _ => {}
        }
        let start = p.peek().span;
        let ev = p.event()?;
        let end = p.toks[p.pos - 1].span;
        let span = Span {
            offset: start.offset,
            len: end.offset + end.len - start.offset,
            line: start.line,
            col: start.col,
        };
        match &ev {
            PulseEvent::DecoupleOn(s) => {
                if !s.intersection(decoupled).is_empty() {
                    return Err(ParseError::new(
                        span,
                        format!("spins {} are already decoupled", s.intersection(decoupled)),
                    ));
                }
                decoupled = decoupled.union(*s);
                groups.push(*s);
            }
            PulseEvent::DecoupleOff(s) => match groups.iter().position(|g| g == s) {
                Some(i) => {
                    groups.remove(i);
                    decoupled = decoupled.difference(*s);
                }
                None => {
                    return Err(ParseError::new(
                        span,
                        format!("`decouple off {s}` does not match an active `decouple on`"),
                    ))
                }
            },
            _ => {}
        }
        events.push(ev);
        spans.push(span);
        match &p.peek().tok {
            Tok::Newline | Tok::Semi | Tok::Eof => {}
            _ => return Err(p.unexpected("end of event")),
        }
    }
    Ok(Sequence {
        events,
        spans,
        source: String::from(script),
    })
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    sys: &'a SpinSystem,
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if !matches!(t.tok, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let t = self.peek();
        ParseError::new(
            t.span,
            format!("expected {wanted}, found {}", t.tok.describe()),
        )
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    fn event(&mut self) -> Result<PulseEvent, ParseError> {
        let head = self.peek().clone();
        let Tok::Ident(word) = &head.tok else {
            return Err(self.unexpected("an event keyword"));
        };
        self.bump();
        match word.as_str() {
            "pulse" | "readout" => {
                let axis = self.phase_axis()?;
                let angle = self.expr()?;
                self.keyword("on")?;
                let targets = self.spin_list()?;
                Ok(if word == "pulse" {
                    PulseEvent::Rf {
                        angle,
                        axis,
                        targets,
                    }
                } else {
                    PulseEvent::Readout {
                        angle,
                        axis,
                        targets,
                    }
                })
            }
            "delay" => {
                let start = self.peek().span;
                let e = self.expr()?;
                if let Some(v) = e.constant_value() {
                    if v <= 0.0 {
                        return Err(ParseError::new(
                            self.span_since(start),
                            format!("delay must be positive, got {v}"),
                        ));
                    }
                }
                Ok(PulseEvent::Delay(e))
            }
            "refocus" => {
                let start = self.peek().span;
                let e = self.expr()?;
                if let Some(v) = e.constant_value() {
                    if v < 0.0 {
                        return Err(ParseError::new(
                            self.span_since(start),
                            format!("refocus time must be non-negative, got {v}"),
                        ));
                    }
                }
                Ok(PulseEvent::Refocus(e))
            }
            "grad" => {
                self.keyword("z")?;
                Ok(PulseEvent::Gradient)
            }
            "decouple" => match &self.peek().tok {
                Tok::Ident(s) if s == "on" => {
                    self.bump();
                    Ok(PulseEvent::DecoupleOn(self.spin_list()?))
                }
                Tok::Ident(s) if s == "off" => {
                    self.bump();
                    Ok(PulseEvent::DecoupleOff(self.spin_list()?))
                }
                _ => Err(self.unexpected("`on` or `off`")),
            },
            _ => Err(ParseError::new(
                head.span,
                format!("unknown event `{word}`"),
            )),
        }
    }

    fn span_since(&self, start: Span) -> Span {
        let end = self.toks[self.pos.saturating_sub(1)].span;
        Span {
            len: (end.offset + end.len).saturating_sub(start.offset),
            ..start
        }
    }

    fn phase_axis(&mut self) -> Result<PhaseAxis, ParseError> {
        let negative = if self.peek().tok == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let axis = match &self.peek().tok {
            Tok::Ident(s) if s == "x" => {
                if negative {
                    PhaseAxis::MinusX
                } else {
                    PhaseAxis::X
                }
            }
            Tok::Ident(s) if s == "y" => {
                if negative {
                    PhaseAxis::MinusY
                } else {
                    PhaseAxis::Y
                }
            }
            _ => return Err(self.unexpected("pulse axis (x, y, -x, -y)")),
        };
        self.bump();
        Ok(axis)
    }

    fn spin_list(&mut self) -> Result<SpinSet, ParseError> {
        if matches!(&self.peek().tok, Tok::Ident(s) if s == "all") {
            self.bump();
            return Ok(self.sys.all_spins());
        }
        let mut set = SpinSet::EMPTY;
        loop {
            let t = self.peek().clone();
            let k = match &t.tok {
                Tok::Int(k) => {
                    if *k == 0 || *k > self.sys.n() {
                        return Err(ParseError::new(
                            t.span,
                            format!("spin index {k} out of range 1..={}", self.sys.n()),
                        ));
                    }
                    *k
                }
                Tok::Ident(label) => self.sys.index_of(label).ok_or_else(|| {
                    ParseError::new(t.span, format!("unknown spin label `{label}`"))
                })?,
                _ => return Err(self.unexpected("spin index or label")),
            };
            if set.contains(k) {
                return Err(ParseError::new(t.span, format!("spin {k} listed twice")));
            }
            set.insert(k);
            self.bump();
            if self.peek().tok == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(set)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::new(self.peek().span, "expression nested too deeply"));
        }
        Ok(())
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            self.enter()?;
            let e = self.unary();
            self.depth -= 1;
            return Ok(Expr::Neg(alloc::boxed::Box::new(e?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Num(*i as f64))
            }
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(*v))
            }
            Tok::Ident(s) if s == "pi" => {
                self.bump();
                Ok(Expr::Pi)
            }
            Tok::Ident(s) if s == "alpha" => {
                self.bump();
                Ok(Expr::Alpha)
            }
            Tok::Ident(s) if s == "J" => {
                self.bump();
                if self.peek().tok != Tok::LBracket {
                    return Err(self.unexpected("`[` after `J`"));
                }
                self.bump();
                let i = self.coupling_index()?;
                if self.peek().tok != Tok::Comma {
                    return Err(self.unexpected("`,`"));
                }
                self.bump();
                let j = self.coupling_index()?;
                if self.peek().tok != Tok::RBracket {
                    return Err(self.unexpected("`]`"));
                }
                self.bump();
                if i == j {
                    return Err(ParseError::new(t.span, "J[i,j] needs two distinct spins"));
                }
                Ok(Expr::Coupling(i, j))
            }
            Tok::LParen => {
                self.bump();
                self.enter()?;
                let e = self.expr();
                self.depth -= 1;
                let e = e?;
                if self.peek().tok != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(e)
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn coupling_index(&mut self) -> Result<usize, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(k) if k >= 1 && k <= self.sys.n() => {
                self.bump();
                Ok(k)
            }
            Tok::Int(k) => Err(ParseError::new(
                t.span,
                format!("spin index {k} out of range 1..={}", self.sys.n()),
            )),
            _ => Err(self.unexpected("spin index")),
        }
    }
}
