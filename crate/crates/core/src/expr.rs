//! Arithmetic expressions for scalar fields `f(x)`, `f(x, u)`, `a(x)`, `b(x)`.
//!
//! Grammar (`^` is right-associative and binds tighter than unary minus):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr ')' | '(' expr ')' | '|x|'
//! ```
//!
//! Names: `x1 .. x10`, `r` (= `|x|`), `u`, `pi`, `e`. Functions: `sin cos tan
//! exp ln sqrt abs`. `×`, `÷` and `−` are accepted as operator spellings.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// 0-based coordinate index.
    Coord(usize),
    Radius,
    U,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Config(format!("unexpected '{}' in expression '{src}'", p.tokens[p.pos])));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64], u: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Coord(i) => x.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Radius => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Expr::U => u,
            Expr::Neg(a) => -a.eval(x, u),
            Expr::Add(a, b) => a.eval(x, u) + b.eval(x, u),
            Expr::Sub(a, b) => a.eval(x, u) - b.eval(x, u),
            Expr::Mul(a, b) => a.eval(x, u) * b.eval(x, u),
            Expr::Div(a, b) => a.eval(x, u) / b.eval(x, u),
            Expr::Pow(a, b) => pow(a.eval(x, u), b.eval(x, u)),
            Expr::Call(f, a) => f.apply(a.eval(x, u)),
        }
    }

    pub fn uses_u(&self) -> bool {
        match self {
            Expr::U => true,
            Expr::Num(_) | Expr::Coord(_) | Expr::Radius => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_u(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.uses_u() || b.uses_u()
            }
        }
    }

    /// Largest coordinate index referenced, plus one.
    pub fn coord_span(&self) -> usize {
        match self {
            Expr::Coord(i) => i + 1,
            Expr::Num(_) | Expr::Radius | Expr::U => 0,
            Expr::Neg(a) | Expr::Call(_, a) => a.coord_span(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.coord_span().max(b.coord_span())
            }
        }
    }

    /// Symbolic derivative with respect to `u`.
    pub fn d_du(&self) -> Expr {
        use Expr::*;
        let bx = Box::new;
        match self {
            Num(_) | Coord(_) | Radius => Num(0.0),
            U => Num(1.0),
            Neg(a) => Neg(bx(a.d_du())),
            Add(a, b) => Add(bx(a.d_du()), bx(b.d_du())),
            Sub(a, b) => Sub(bx(a.d_du()), bx(b.d_du())),
            Mul(a, b) => Add(bx(Mul(bx(a.d_du()), b.clone())), bx(Mul(a.clone(), bx(b.d_du())))),
            Div(a, b) => Div(
                bx(Sub(bx(Mul(bx(a.d_du()), b.clone())), bx(Mul(a.clone(), bx(b.d_du()))))),
                bx(Mul(b.clone(), b.clone())),
            ),
            Pow(a, b) if !b.uses_u() => {
                Mul(bx(Mul(b.clone(), bx(Pow(a.clone(), bx(Sub(b.clone(), bx(Num(1.0)))))))), bx(a.d_du()))
            }
            // d(a^b) = a^b (b' ln a + b a'/a)
            Pow(a, b) => Mul(
                bx(self.clone()),
                bx(Add(
                    bx(Mul(bx(b.d_du()), bx(Call(Func::Ln, a.clone())))),
                    bx(Div(bx(Mul(b.clone(), bx(a.d_du()))), a.clone())),
                )),
            ),
            Call(f, a) => {
                let inner = a.d_du();
                let outer = match f {
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => Neg(bx(Call(Func::Sin, a.clone()))),
                    Func::Tan => Div(bx(Num(1.0)), bx(Pow(bx(Call(Func::Cos, a.clone())), bx(Num(2.0))))),
                    Func::Exp => Call(Func::Exp, a.clone()),
                    Func::Ln => Div(bx(Num(1.0)), a.clone()),
                    Func::Sqrt => Div(bx(Num(0.5)), bx(Call(Func::Sqrt, a.clone()))),
                    Func::Abs => Div(a.clone(), bx(Call(Func::Abs, a.clone()))),
                };
                Mul(bx(outer), bx(inner))
            }
        }
    }
}

/// Integer exponents use repeated multiplication so that `x^2` is exact.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Coord(i) => write!(f, "x{}", i + 1),
            Expr::Radius => f.write_str("r"),
            Expr::U => f.write_str("u"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Name(String),
    Op(char),
    Bar,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "{v}"),
            Token::Name(s) => f.write_str(s),
            Token::Op(c) => write!(f, "{c}"),
            Token::Bar => f.write_str("|"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| Error::Config(format!("bad number '{s}' in '{src}'")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Name(chars[start..i].iter().collect()));
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                out.push(Token::Op(c));
                i += 1;
            }
            '−' => {
                out.push(Token::Op('-'));
                i += 1;
            }
            '×' | '·' => {
                out.push(Token::Op('*'));
                i += 1;
            }
            '÷' => {
                out.push(Token::Op('/'));
                i += 1;
            }
            '|' => {
                out.push(Token::Bar);
                i += 1;
            }
            _ => return Err(Error::Config(format!("unexpected character '{c}' in '{src}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(Error::Config(format!("expected '{op}' at token {}", self.pos + 1)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.peek().cloned().ok_or_else(|| Error::Config("expression ended early".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Token::Bar => {
                if self.peek() == Some(&Token::Name("x".into())) {
                    self.pos += 1;
                    if self.peek() == Some(&Token::Bar) {
                        self.pos += 1;
                        return Ok(Expr::Radius);
                    }
                }
                Err(Error::Config("only '|x|' may appear between bars; use abs() otherwise".into()))
            }
            Token::Name(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.expect_op('(')?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "u" => Ok(Expr::U),
                    "r" => Ok(Expr::Radius),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    _ => {
                        if let Some(d) = name.strip_prefix('x') {
                            if let Ok(i) = d.parse::<usize>() {
                                if (1..=crate::symfun::MAX_DIM).contains(&i) {
                                    return Ok(Expr::Coord(i - 1));
                                }
                            }
                        }
                        Err(Error::Config(format!("unknown name '{name}'")))
                    }
                }
            }
            other => Err(Error::Config(format!("unexpected '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: &[f64], u: f64) -> f64 {
        Expr::parse(s).unwrap().eval(x, u)
    }

    #[test]
    fn precedence_and_names() {
        assert_eq!(ev("1 + 2 * 3", &[], 0.0), 7.0);
        assert_eq!(ev("-2^2", &[], 0.0), -4.0);
        assert_eq!(ev("2^3^2", &[], 0.0), 512.0);
        assert_eq!(ev("2^-1", &[], 0.0), 0.5);
        assert_eq!(ev("(1 + 2) * 3", &[], 0.0), 9.0);
        assert_eq!(ev("x1 + 10 * x2", &[1.5, 2.0], 0.0), 21.5);
        assert_eq!(ev("|x|^2", &[3.0, 4.0], 0.0), 25.0);
        assert_eq!(ev("r", &[3.0, 4.0], 0.0), 5.0);
        assert_eq!(ev("2 × 3 ÷ 4 − 1", &[], 0.0), 0.5);
        assert!((ev("cos(pi)", &[], 0.0) + 1.0).abs() < 1e-15);
        assert_eq!(ev("1e-3 * u", &[], 2.0), 2e-3);
        assert_eq!(ev("abs(-3)", &[], 0.0), 3.0);
    }

    #[test]
    fn errors() {
        for bad in ["", "1 +", "(1", "foo", "x0", "x11", "|u|", "2 $ 3", "sin 3", "1 2"] {
            assert!(matches!(Expr::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn derivative_in_u() {
        let e = Expr::parse("3 + exp(-u) * x1 - u^2 / (1 + u) + sin(2*u) + sqrt(u + 4)").unwrap();
        assert!(e.uses_u());
        let d = e.d_du();
        let x = [0.7];
        for &u in &[0.1, 0.5, 2.0] {
            let h = 1e-6;
            let fd = (e.eval(&x, u + h) - e.eval(&x, u - h)) / (2.0 * h);
            assert!((fd - d.eval(&x, u)).abs() < 1e-7);
        }
        assert!(!Expr::parse("x1 + r").unwrap().uses_u());
        assert_eq!(Expr::parse("x3 + r").unwrap().coord_span(), 3);
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("-x1^2 + 3*cos(r)/u").unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        for &u in &[0.5, 1.3] {
            assert_eq!(e.eval(&[0.2, 0.4], u), again.eval(&[0.2, 0.4], u));
        }
    }
}
