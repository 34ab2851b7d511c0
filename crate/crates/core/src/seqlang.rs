//! A small arithmetic language for sequence rules such as `1/(j+2)`.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := NUMBER | 'j' | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2` is
//! `-4` while `2^-1` is `0.5`. The only variable is `j`; the functions are
//! `min`, `max` and `pow`, each of arity two.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "min" => Some(Func::Min),
            "max" => Some(Func::Max),
            "pow" => Some(Func::Pow),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        2
    }
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum SeqExpr {
    Num(f64),
    J,
    Neg(Box<SeqExpr>),
    Bin(BinOp, Box<SeqExpr>, Box<SeqExpr>),
    Call(Func, Vec<SeqExpr>),
}

/// Prints fully parenthesized, so the output reparses to the same tree.
impl fmt::Display for SeqExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqExpr::Num(v) => write!(f, "{v}"),
            SeqExpr::J => write!(f, "j"),
            SeqExpr::Neg(e) => write!(f, "(-{e})"),
            SeqExpr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            SeqExpr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {}", expected.join(", "))]
    Syntax { offset: usize, found: String, expected: Vec<&'static str> },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdent { offset: usize, name: String },
    #[error("`{name}` at byte {offset} takes {expected} arguments, got {found}")]
    Arity { offset: usize, name: &'static str, expected: usize, found: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdent { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("cannot evaluate `{subexpr}` at j = {j}: {reason}")]
pub struct EvalError {
    pub j: usize,
    pub subexpr: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
        } else if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut k = i + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    i = k;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                found: format!("`{text}`"),
                expected: vec!["number"],
            })?;
            out.push((start, Tok::Num(v)));
        } else if b.is_ascii_alphabetic() || b == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if b"+-*/^(),".contains(&b) {
            out.push((i, Tok::Sym(b as char)));
            i += 1;
        } else {
            let c = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: i,
                found: format!("`{c}`"),
                expected: vec!["number", "j", "function", "operator", "`(`", "`)`"],
            });
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax { offset: self.offset(), found: self.peek().describe(), expected }
    }

    fn expect(&mut self, c: char, label: &'static str) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(vec![label]))
        }
    }

    fn expr(&mut self) -> Result<SeqExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = SeqExpr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<SeqExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = SeqExpr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<SeqExpr, ParseError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(SeqExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<SeqExpr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(SeqExpr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<SeqExpr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(SeqExpr::Num(v))
            }
            Tok::Ident(name) if name == "j" => {
                self.bump();
                Ok(SeqExpr::J)
            }
            Tok::Ident(name) => {
                let func = Func::from_name(&name).ok_or(ParseError::UnknownIdent { offset, name })?;
                self.bump();
                self.expect('(', "`(`")?;
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Sym(',') {
                    self.bump();
                    args.push(self.expr()?);
                }
                self.expect(')', "`)` or `,`")?;
                if args.len() != func.arity() {
                    return Err(ParseError::Arity {
                        offset,
                        name: func.name(),
                        expected: func.arity(),
                        found: args.len(),
                    });
                }
                Ok(SeqExpr::Call(func, args))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')', "`)`")?;
                Ok(e)
            }
            _ => Err(self.error(vec!["number", "j", "function", "`(`", "`-`"])),
        }
    }
}

pub fn parse(src: &str) -> Result<SeqExpr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(vec!["operator", "end of input"]));
    }
    Ok(e)
}

impl std::str::FromStr for SeqExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl SeqExpr {
    pub fn eval(&self, j: usize) -> Result<f64, EvalError> {
        let fail = |reason: &str| EvalError { j, subexpr: self.to_string(), reason: reason.to_string() };
        let v = match self {
            SeqExpr::Num(v) => *v,
            SeqExpr::J => j as f64,
            SeqExpr::Neg(e) => -e.eval(j)?,
            SeqExpr::Bin(op, l, r) => {
                let (x, y) = (l.eval(j)?, r.eval(j)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div if y == 0.0 => return Err(fail("division by zero")),
                    BinOp::Div => x / y,
                    BinOp::Pow => x.powf(y),
                }
            }
            SeqExpr::Call(func, args) => {
                let (x, y) = (args[0].eval(j)?, args[1].eval(j)?);
                match func {
                    Func::Min => x.min(y),
                    Func::Max => x.max(y),
                    Func::Pow => x.powf(y),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail("result is not finite"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ListTail {
    RepeatLast,
    Error,
}

/// A rule `j ↦ value` for `j ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum SeqRule {
    Constant(f64),
    List {
        values: Vec<f64>,
        tail: ListTail,
    },
    Expr(SeqExpr),
    /// `value(j)` wherever `indices(j)` is nonzero, `base(j)` elsewhere.
    Override {
        base: Box<SeqRule>,
        indices: SeqExpr,
        value: Box<SeqRule>,
    },
}

impl SeqRule {
    pub fn expr(src: &str) -> Result<Self, ParseError> {
        parse(src).map(SeqRule::Expr)
    }

    pub fn evaluate(&self, j: usize) -> Result<f64, EvalError> {
        let fail = |reason: String| EvalError { j, subexpr: self.describe(), reason };
        if j == 0 {
            return Err(fail("indices start at 1".into()));
        }
        let v = match self {
            SeqRule::Constant(v) => *v,
            SeqRule::List { values, tail } => match (values.get(j - 1), values.last(), tail) {
                (Some(v), _, _) => *v,
                (None, Some(v), ListTail::RepeatLast) => *v,
                _ => return Err(fail(format!("list has only {} entries", values.len()))),
            },
            SeqRule::Expr(e) => e.eval(j)?,
            SeqRule::Override { base, indices, value } => {
                if indices.eval(j)? != 0.0 {
                    value.evaluate(j)?
                } else {
                    base.evaluate(j)?
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail("result is not finite".into()))
        }
    }

    /// Values at `j = 1..=horizon`.
    pub fn materialize(&self, horizon: usize) -> Result<Vec<f64>, EvalError> {
        (1..=horizon).map(|j| self.evaluate(j)).collect()
    }

    fn describe(&self) -> String {
        match self {
            SeqRule::Constant(v) => format!("constant({v})"),
            SeqRule::List { values, .. } => format!("list({values:?})"),
            SeqRule::Expr(e) => e.to_string(),
            SeqRule::Override { base, indices, value } => {
                format!("override({}, {indices}, {})", base.describe(), value.describe())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, j: usize) -> f64 {
        parse(src).unwrap().eval(j).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(ev("1/(j+2)", 1), 1.0 / 3.0);
        assert_eq!(ev("2^j", 3), 8.0);
        assert_eq!(ev("1/3^(j+1)", 2), 1.0 / 27.0);
        assert_eq!(ev(" 1 / ( j + 2 ) ", 3), 0.2);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("2+3*4", 1), 14.0);
        assert_eq!(ev("2^3^2", 1), 512.0);
        assert_eq!(ev("-2^2", 1), -4.0);
        assert_eq!(ev("2^-1", 1), 0.5);
        assert_eq!(ev("10-4-3", 1), 3.0);
        assert_eq!(ev("8/4/2", 1), 1.0);
        assert_eq!(ev("--3", 1), 3.0);
        assert_eq!(ev("min(j, 4) + max(2, pow(2, 3))", 7), 12.0);
        assert_eq!(ev("1.5e1 + .5", 1), 15.5);
    }

    #[test]
    fn parse_errors() {
        match parse("1 + * 2") {
            Err(ParseError::Syntax { offset, expected, .. }) => {
                assert_eq!(offset, 4);
                assert!(expected.contains(&"number"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("1/(j+2"), Err(ParseError::Syntax { offset: 6, .. })));
        assert!(matches!(parse("k + 1"), Err(ParseError::UnknownIdent { offset: 0, .. })));
        assert!(matches!(parse("2 * sin(j)"), Err(ParseError::UnknownIdent { offset: 4, .. })));
        assert!(matches!(parse("min(1)"), Err(ParseError::Arity { expected: 2, found: 1, .. })));
        assert!(matches!(parse("max(1,2,3)"), Err(ParseError::Arity { found: 3, .. })));
        assert!(matches!(parse("1 2"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse(""), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("1 $ 2"), Err(ParseError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn eval_errors() {
        let e = parse("1/(j-3)").unwrap();
        let err = e.eval(3).unwrap_err();
        assert_eq!(err.j, 3);
        assert!(err.reason.contains("division by zero"));
        assert!(parse("(0-1)^0.5").unwrap().eval(1).is_err());
        assert!(parse("10^400").unwrap().eval(1).is_err());
        assert!(parse("1/j").unwrap().eval(2).is_ok());
    }

    #[test]
    fn rules() {
        assert_eq!(SeqRule::Constant(1.0 / 3.0).evaluate(17).unwrap(), 1.0 / 3.0);
        let list = SeqRule::List { values: vec![1.0 / 3.0, 0.25, 0.2], tail: ListTail::RepeatLast };
        assert_eq!(list.evaluate(7).unwrap(), 0.2);
        assert_eq!(list.evaluate(2).unwrap(), 0.25);
        let strict = SeqRule::List { values: vec![1.0], tail: ListTail::Error };
        assert!(strict.evaluate(2).is_err());
        assert_eq!(SeqRule::expr("1/(j+2)").unwrap().evaluate(3).unwrap(), 0.2);
        assert!(SeqRule::Constant(1.0).evaluate(0).is_err());

        let sub = SeqRule::Override {
            base: Box::new(SeqRule::Constant(2.0)),
            indices: parse("(j-1)*(j-3)").unwrap(),
            value: Box::new(SeqRule::Constant(9.0)),
        };
        assert_eq!(sub.materialize(4).unwrap(), vec![2.0, 9.0, 2.0, 9.0]);
    }

    fn arb_expr() -> impl Strategy<Value = SeqExpr> {
        let leaf = prop_oneof![(0u32..1000).prop_map(|n| SeqExpr::Num(n as f64 / 8.0)), Just(SeqExpr::J),];
        leaf.prop_recursive(5, 40, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| SeqExpr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| SeqExpr::Bin(op, Box::new(l), Box::new(r))),
                (prop_oneof![Just(Func::Min), Just(Func::Max), Just(Func::Pow)], inner.clone(), inner)
                    .prop_map(|(f, a, b)| SeqExpr::Call(f, vec![a, b])),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            prop_assert_eq!(parse(&printed).unwrap(), e);
        }

        #[test]
        fn evaluation_is_deterministic(e in arb_expr(), j in 1usize..50) {
            prop_assert_eq!(e.eval(j), e.eval(j));
        }
    }
}
