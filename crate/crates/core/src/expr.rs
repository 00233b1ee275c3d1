//! A small expression language over the single variable `t`.
//!
//! Grammar (no implicit multiplication):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' | 'pi' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and is right associative, so
//! `-t^2` is `-(t^2)` and `2^3^2` is `2^(3^2)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Coth,
    Csch,
    Sech,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "coth" => Func::Coth,
            "csch" => Func::Csch,
            "sech" => Func::Sech,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Coth => "coth",
            Func::Csch => "csch",
            Func::Sech => "sech",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            // 1/tanh(±0) gives the signed infinity used as the pole marker.
            Func::Coth => 1.0 / x.tanh(),
            Func::Csch => 1.0 / x.sinh(),
            Func::Sech => 1.0 / x.cosh(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::T => t,
            Expr::Neg(a) => -a.eval(t),
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Pow(a, b) => pow(a.eval(t), b.eval(t)),
            Expr::Call(f, a) => f.apply(a.eval(t)),
        }
    }

    /// True when the tree does not mention `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::T => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Analytic derivative with respect to `t`.
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            T => Num(1.0),
            Neg(a) => neg(a.derivative()),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Div(a, b) => {
                // (a'b - ab') / b^2
                let num = sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                );
                div(num, pow_e((**b).clone(), Num(2.0)))
            }
            Pow(a, b) => {
                if b.is_constant() {
                    let exponent = (**b).clone();
                    let lowered = sub(exponent.clone(), Num(1.0));
                    mul(
                        mul(exponent, pow_e((**a).clone(), lowered)),
                        a.derivative(),
                    )
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    let inner = add(
                        mul(b.derivative(), call(Func::Ln, (**a).clone())),
                        div(mul((**b).clone(), a.derivative()), (**a).clone()),
                    );
                    mul(self.clone(), inner)
                }
            }
            Call(f, a) => {
                let u = (**a).clone();
                let du = a.derivative();
                let outer = match f {
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Tan => add(Num(1.0), pow_e(call(Func::Tan, u), Num(2.0))),
                    Func::Sinh => call(Func::Cosh, u),
                    Func::Cosh => call(Func::Sinh, u),
                    Func::Tanh => sub(Num(1.0), pow_e(call(Func::Tanh, u), Num(2.0))),
                    Func::Coth => neg(pow_e(call(Func::Csch, u), Num(2.0))),
                    Func::Csch => neg(mul(call(Func::Csch, u.clone()), call(Func::Coth, u))),
                    Func::Sech => neg(mul(call(Func::Sech, u.clone()), call(Func::Tanh, u))),
                    Func::Exp => call(Func::Exp, u),
                    Func::Ln => div(Num(1.0), u),
                    Func::Sqrt => div(Num(0.5), call(Func::Sqrt, u)),
                    Func::Abs => div(u.clone(), call(Func::Abs, u)),
                };
                mul(outer, du)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }
}

fn pow(base: f64, exponent: f64) -> f64 {
    if exponent == exponent.trunc() && exponent.abs() < 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), _) if x == 0.0 => Expr::Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow_e(a: Expr, b: Expr) -> Expr {
    match as_num(&b) {
        Some(y) if y == 1.0 => a,
        Some(y) if y == 0.0 => Expr::Num(1.0),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "-{:?}", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::T => write!(f, "t"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, a.precedence() < 4)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                wrap(f, a, a.precedence() < 1)?;
                write!(f, "{}", if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                wrap(f, b, b.precedence() <= 1 || b.precedence() == 3)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                wrap(f, a, a.precedence() < 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                wrap(f, b, b.precedence() <= 3)
            }
            Expr::Pow(a, b) => {
                wrap(f, a, a.precedence() <= 4)?;
                write!(f, "^")?;
                wrap(f, b, b.precedence() < 4)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self
                .src
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos])
                .expect("ascii")
                .to_string();
            return Ok((Tok::Ident(name), start));
        }
        Err(Error::Syntax {
            offset: start,
            message: format!("unexpected character `{}`", c as char),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize)> {
        let digits = |lx: &mut Self| {
            while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                lx.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(|v| (Tok::Num(v), start))
            .map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.tok == want {
            self.bump()
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> Error {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            other => format!("{other:?}"),
        };
        Error::Syntax {
            offset: self.at,
            message: format!("expected {what}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.bump()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.tok {
            Tok::Minus => {
                self.bump()?;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.tok == Tok::Caret {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.at;
                self.bump()?;
                match name.as_str() {
                    "t" => return Ok(Expr::T),
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    _ => {}
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(Error::UnknownIdentifier { name, offset });
                };
                self.expect(Tok::LParen, "`(` after function name")?;
                let mut args = vec![self.expr()?];
                while self.tok == Tok::Comma {
                    self.bump()?;
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                if args.len() != 1 {
                    return Err(Error::Arity {
                        name,
                        offset,
                        got: args.len(),
                    });
                }
                Ok(Expr::Call(func, Box::new(args.pop().expect("one argument"))))
            }
            _ => Err(self.unexpected("a number, `t`, a function or `(`")),
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expr> {
    if !source.is_ascii() {
        let offset = source.bytes().position(|b| !b.is_ascii()).unwrap_or(0);
        return Err(Error::Syntax {
            offset,
            message: "non-ASCII input".into(),
        });
    }
    let mut parser = Parser {
        lexer: Lexer {
            src: source.as_bytes(),
            pos: 0,
        },
        tok: Tok::End,
        at: 0,
    };
    parser.bump()?;
    let expr = parser.expr()?;
    if parser.tok != Tok::End {
        return Err(parser.unexpected("end of input"));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, t: f64) -> f64 {
        parse(src).unwrap().eval(t)
    }

    #[test]
    fn evaluates_basic_forms() {
        assert_eq!(ev("sin(t)^2 - cos(t)", 0.0), -1.0);
        assert_eq!(ev("-t^2", 3.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("1.5e1 + 2", 0.0), 17.0);
        assert_eq!(ev("8/2/2", 0.0), 2.0);
    }

    #[test]
    fn bending_mu_closed_form() {
        // Independent evaluation: (2 + cosh1/sinh1) * e^{2 sinh 1} * tanh 1.
        let t: f64 = 1.0;
        let expected = (2.0 + t.cosh() / t.sinh()) * (2.0 * t.sinh()).exp() * t.tanh();
        let got = ev("(2+coth(t))*exp(2*sinh(t))*tanh(t)", 1.0);
        assert!((got - expected).abs() < 1e-13 * expected);
        assert!((got - 26.467715102775593).abs() < 1e-12, "{got}");
    }

    #[test]
    fn unbalanced_paren_reports_offset() {
        match parse("sin(") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_arity() {
        assert!(matches!(
            parse("foo(t)"),
            Err(Error::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse("1 + x"),
            Err(Error::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(parse("sin(t, 2)"), Err(Error::Arity { got: 2, .. })));
    }

    #[test]
    fn no_implicit_multiplication() {
        assert!(matches!(parse("2t"), Err(Error::Syntax { offset: 1, .. })));
        assert!(matches!(parse("2 (t)"), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn poles_evaluate_to_signed_infinity() {
        assert_eq!(ev("coth(t)", 0.0), f64::INFINITY);
        assert_eq!(ev("csch(t)", -0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn derivative_of_power_with_variable_exponent() {
        // d/dt t^t = t^t (ln t + 1)
        let d = parse("t^t").unwrap().derivative();
        let t: f64 = 1.7;
        assert!((d.eval(t) - t.powf(t) * (t.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn render_reparses() {
        for src in [
            "-(t - 1)^2",
            "(sin(t)^2 - cos(t))/4",
            "-3*exp(3 - 3*cos(t))",
            "2^-t",
            "1 - (t - 2)",
            "t/(2*t)",
            "-t^2",
        ] {
            let e = parse(src).unwrap();
            let back = parse(&e.to_string()).unwrap();
            for t in [0.3, 1.1, 2.5] {
                assert_eq!(e.eval(t), back.eval(t), "{src} -> {e}");
            }
        }
    }
}
