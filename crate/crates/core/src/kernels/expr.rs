use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Momentum triple a kernel depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Momentum {
    P1,
    P2,
    K,
}

impl Momentum {
    fn tag(self) -> &'static str {
        match self {
            Momentum::P1 => "p1",
            Momentum::P2 => "p2",
            Momentum::K => "k",
        }
    }
}

/// Variables available to kernel expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    Abs(Momentum),
    Component(Momentum, usize),
    S1,
    S2,
    Lam,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Abs(m) => write!(f, "|{}|", m.tag()),
            Var::Component(m, c) => write!(f, "{}{}", m.tag(), ["x", "y", "z"][*c]),
            Var::S1 => f.write_str("s1"),
            Var::S2 => f.write_str("s2"),
            Var::Lam => f.write_str("lam"),
        }
    }
}

fn var_from_name(name: &str) -> Option<Var> {
    let comp = |s: &str| match s {
        "x" => Some(0),
        "y" => Some(1),
        "z" => Some(2),
        _ => None,
    };
    Some(match name {
        "s1" => Var::S1,
        "s2" => Var::S2,
        "lam" => Var::Lam,
        _ => {
            for m in [Momentum::P1, Momentum::P2, Momentum::K] {
                if let Some(rest) = name.strip_prefix(m.tag()) {
                    if let Some(c) = comp(rest) {
                        return Some(Var::Component(m, c));
                    }
                }
            }
            return None;
        }
    })
}

/// Point at which a kernel expression is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelPoint {
    pub p1: [f64; 3],
    pub p2: [f64; 3],
    pub k: [f64; 3],
    pub s1: f64,
    pub s2: f64,
    pub lam: f64,
}

impl KernelPoint {
    fn momentum(&self, m: Momentum) -> &[f64; 3] {
        match m {
            Momentum::P1 => &self.p1,
            Momentum::P2 => &self.p2,
            Momentum::K => &self.k,
        }
    }

    fn momentum_mut(&mut self, m: Momentum) -> &mut [f64; 3] {
        match m {
            Momentum::P1 => &mut self.p1,
            Momentum::P2 => &mut self.p2,
            Momentum::K => &mut self.k,
        }
    }

    pub fn get(&self, v: Var) -> f64 {
        match v {
            Var::Abs(m) => {
                let p = self.momentum(m);
                (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
            }
            Var::Component(m, c) => self.momentum(m)[c],
            Var::S1 => self.s1,
            Var::S2 => self.s2,
            Var::Lam => self.lam,
        }
    }

    /// Copy with the component variable `v` shifted by `h`.
    pub fn shifted(&self, v: Var, h: f64) -> KernelPoint {
        let mut out = *self;
        if let Var::Component(m, c) = v {
            out.momentum_mut(m)[c] += h;
        }
        out
    }
}

/// Parsed kernel expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelExpr {
    Num(f64),
    Var(Var),
    Neg(Box<KernelExpr>),
    Add(Box<KernelExpr>, Box<KernelExpr>),
    Sub(Box<KernelExpr>, Box<KernelExpr>),
    Mul(Box<KernelExpr>, Box<KernelExpr>),
    Div(Box<KernelExpr>, Box<KernelExpr>),
    Pow(Box<KernelExpr>, f64),
    Exp(Box<KernelExpr>),
    Sqrt(Box<KernelExpr>),
    /// `exp(-v^2 / scale^2)`.
    Gauss(Box<KernelExpr>, Box<KernelExpr>),
}

use KernelExpr as E;

impl fmt::Display for KernelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            E::Num(x) => write!(f, "{x}"),
            E::Var(v) => write!(f, "{v}"),
            E::Neg(a) => write!(f, "-({a})"),
            E::Add(a, b) => write!(f, "({a} + {b})"),
            E::Sub(a, b) => write!(f, "({a} - {b})"),
            E::Mul(a, b) => write!(f, "({a} * {b})"),
            E::Div(a, b) => write!(f, "({a} / {b})"),
            E::Pow(a, x) => write!(f, "({a})^{x}"),
            E::Exp(a) => write!(f, "exp({a})"),
            E::Sqrt(a) => write!(f, "sqrt({a})"),
            E::Gauss(a, b) => write!(f, "gauss({a}, {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Abs(String),
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

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let err = |offset: usize, message: String| Error::Parse { offset, message };
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => Tok::Plus,
            '-' | '\u{2212}' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '|' => {
                let close = chars[i + 1..]
                    .iter()
                    .position(|&c| c == '|')
                    .ok_or_else(|| err(start, "unterminated `|`".into()))?;
                let name: String = chars[i + 1..i + 1 + close].iter().collect();
                i += close + 2;
                out.push((Tok::Abs(name), start));
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text: String = chars[i..j].iter().collect();
                let v: f64 = text.parse().map_err(|_| err(start, format!("bad number `{text}`")))?;
                i = j;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let name: String = chars[i..j].iter().collect();
                i = j;
                out.push((Tok::Ident(name), start));
                continue;
            }
            other => return Err(err(start, format!("unexpected character `{other}`"))),
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<KernelExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = E::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = E::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<KernelExpr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = E::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = E::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<KernelExpr> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(E::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<KernelExpr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let sign = match self.peek() {
            Tok::Minus => {
                self.bump();
                -1.0
            }
            Tok::Plus => {
                self.bump();
                1.0
            }
            _ => 1.0,
        };
        match self.bump() {
            Tok::Num(x) => Ok(E::Pow(Box::new(base), sign * x)),
            _ => {
                self.pos -= 1;
                self.fail("exponent must be a number")
            }
        }
    }

    fn atom(&mut self) -> Result<KernelExpr> {
        let offset = self.offset();
        match self.bump() {
            Tok::Num(x) => Ok(E::Num(x)),
            Tok::Abs(name) => match name.trim() {
                "p1" => Ok(E::Var(Var::Abs(Momentum::P1))),
                "p2" => Ok(E::Var(Var::Abs(Momentum::P2))),
                "k" => Ok(E::Var(Var::Abs(Momentum::K))),
                other => Err(Error::Parse { offset, message: format!("unknown identifier `|{other}|`") }),
            },
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(v) = var_from_name(&name) {
                    return Ok(E::Var(v));
                }
                let arity = match name.as_str() {
                    "exp" | "sqrt" => 1,
                    "gauss" => 2,
                    _ => return Err(Error::Parse { offset, message: format!("unknown identifier `{name}`") }),
                };
                self.expect(Tok::LParen, "`(` after function name")?;
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                if args.len() != arity {
                    return Err(Error::Parse {
                        offset,
                        message: format!("`{name}` takes {arity} argument(s), got {}", args.len()),
                    });
                }
                let mut it = args.into_iter().map(Box::new);
                let a = it.next().expect("arity checked");
                Ok(match name.as_str() {
                    "exp" => E::Exp(a),
                    "sqrt" => E::Sqrt(a),
                    _ => E::Gauss(a, it.next().expect("arity checked")),
                })
            }
            Tok::End => Err(Error::Parse { offset, message: "unexpected end of input".into() }),
            other => Err(Error::Parse { offset, message: format!("unexpected token {other:?}") }),
        }
    }
}

/// Parse a kernel expression.
pub fn parse_kernel(src: &str) -> Result<KernelExpr> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("trailing input");
    }
    Ok(e)
}

fn num(x: f64) -> KernelExpr {
    E::Num(x)
}

fn is_num(e: &KernelExpr, x: f64) -> bool {
    matches!(e, E::Num(v) if *v == x)
}

fn add(a: KernelExpr, b: KernelExpr) -> KernelExpr {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        E::Add(Box::new(a), Box::new(b))
    }
}

fn sub(a: KernelExpr, b: KernelExpr) -> KernelExpr {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        neg(b)
    } else {
        E::Sub(Box::new(a), Box::new(b))
    }
}

fn mul(a: KernelExpr, b: KernelExpr) -> KernelExpr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        E::Mul(Box::new(a), Box::new(b))
    }
}

fn div(a: KernelExpr, b: KernelExpr) -> KernelExpr {
    if is_num(&a, 0.0) {
        num(0.0)
    } else if is_num(&b, 1.0) {
        a
    } else {
        E::Div(Box::new(a), Box::new(b))
    }
}

fn neg(a: KernelExpr) -> KernelExpr {
    match a {
        E::Num(x) if x == 0.0 => num(0.0),
        other => E::Neg(Box::new(other)),
    }
}

impl KernelExpr {
    pub fn eval(&self, at: &KernelPoint) -> f64 {
        match self {
            E::Num(x) => *x,
            E::Var(v) => at.get(*v),
            E::Neg(a) => -a.eval(at),
            E::Add(a, b) => a.eval(at) + b.eval(at),
            E::Sub(a, b) => a.eval(at) - b.eval(at),
            E::Mul(a, b) => a.eval(at) * b.eval(at),
            E::Div(a, b) => a.eval(at) / b.eval(at),
            E::Pow(a, x) => {
                let base = a.eval(at);
                if x.fract() == 0.0 && x.abs() <= 64.0 {
                    base.powi(*x as i32)
                } else {
                    base.powf(*x)
                }
            }
            E::Exp(a) => a.eval(at).exp(),
            E::Sqrt(a) => a.eval(at).sqrt(),
            E::Gauss(v, l) => {
                let (v, l) = (v.eval(at), l.eval(at));
                (-(v * v) / (l * l)).exp()
            }
        }
    }

    /// Symbolic partial derivative with respect to a momentum component.
    ///
    /// `|p|` is differentiated as `p_i / |p|`, which is singular at the origin;
    /// callers fall back to finite differences where the result is not finite.
    pub fn derivative(&self, v: Var) -> KernelExpr {
        match self {
            E::Num(_) => num(0.0),
            E::Var(w) => {
                if *w == v {
                    num(1.0)
                } else if let (Var::Abs(m), Var::Component(mv, _)) = (w, v) {
                    if *m == mv {
                        div(E::Var(v), E::Var(*w))
                    } else {
                        num(0.0)
                    }
                } else {
                    num(0.0)
                }
            }
            E::Neg(a) => neg(a.derivative(v)),
            E::Add(a, b) => add(a.derivative(v), b.derivative(v)),
            E::Sub(a, b) => sub(a.derivative(v), b.derivative(v)),
            E::Mul(a, b) => add(
                mul(a.derivative(v), (**b).clone()),
                mul((**a).clone(), b.derivative(v)),
            ),
            E::Div(a, b) => {
                let da = a.derivative(v);
                let db = b.derivative(v);
                sub(
                    div(da, (**b).clone()),
                    div(mul((**a).clone(), db), E::Pow(b.clone(), 2.0)),
                )
            }
            E::Pow(a, x) => {
                let da = a.derivative(v);
                if is_num(&da, 0.0) {
                    return num(0.0);
                }
                let inner = if *x == 1.0 { num(1.0) } else { E::Pow(a.clone(), x - 1.0) };
                mul(mul(num(*x), inner), da)
            }
            E::Exp(a) => mul(self.clone(), a.derivative(v)),
            E::Sqrt(a) => div(a.derivative(v), mul(num(2.0), self.clone())),
            E::Gauss(a, l) => {
                let da = a.derivative(v);
                let dl = l.derivative(v);
                let t1 = div(mul(mul(num(-2.0), (**a).clone()), da), E::Pow(l.clone(), 2.0));
                let t2 = div(
                    mul(mul(num(2.0), E::Pow(a.clone(), 2.0)), dl),
                    E::Pow(l.clone(), 3.0),
                );
                mul(self.clone(), add(t1, t2))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(p2: [f64; 3]) -> KernelPoint {
        KernelPoint { p2, lam: 1.0, ..Default::default() }
    }

    #[test]
    fn parses_unary_minus_inside_exp() {
        let e = parse_kernel("exp(\u{2212}(|p1|^2))").unwrap();
        let want = E::Exp(Box::new(E::Neg(Box::new(E::Pow(
            Box::new(E::Var(Var::Abs(Momentum::P1))),
            2.0,
        )))));
        assert_eq!(e, want);
    }

    #[test]
    fn precedence() {
        let e = parse_kernel("1 + 2 * 3 ^ 2 - -4 / 2").unwrap();
        assert_eq!(e.eval(&KernelPoint::default()), 1.0 + 18.0 + 2.0);
    }

    #[test]
    fn gauss_and_variables() {
        let e = parse_kernel("gauss(|p2|, lam) * sqrt(p2z) + s1").unwrap();
        let mut x = at([0.0, 0.0, 0.25]);
        x.s1 = 0.5;
        let want = (-0.0625f64).exp() * 0.5 + 0.5;
        assert!((e.eval(&x) - want).abs() < 1e-15);
    }

    #[test]
    fn unknown_identifier_reports_offset() {
        match parse_kernel("exp(|p1|) + foo(2)") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 12);
                assert!(message.contains("foo"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_kernel("|q|").is_err());
        assert!(parse_kernel("exp(1, 2)").is_err());
        assert!(parse_kernel("(1 + 2").is_err());
        assert!(parse_kernel("1 2").is_err());
    }

    #[test]
    fn derivative_of_radial_gaussian() {
        let e = parse_kernel("gauss(|p2|, 0.5)").unwrap();
        let d = e.derivative(Var::Component(Momentum::P2, 2));
        let x = at([0.1, -0.2, 0.3]);
        let r2: f64 = 0.01 + 0.04 + 0.09;
        let want = (-r2 / 0.25).exp() * (-2.0 * 0.3 / 0.25);
        assert!((d.eval(&x) - want).abs() < 1e-14);
    }

    fn arb_expr() -> impl Strategy<Value = KernelExpr> {
        let vars = prop_oneof![
            Just(Var::Abs(Momentum::P1)),
            Just(Var::Abs(Momentum::P2)),
            Just(Var::Component(Momentum::K, 1)),
            Just(Var::Component(Momentum::P2, 0)),
            Just(Var::S2),
            Just(Var::Lam),
        ];
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(E::Num),
            vars.prop_map(E::Var),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            let b = |e| Box::new(e);
            prop_oneof![
                inner.clone().prop_map(move |a| E::Neg(b(a))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| E::Add(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| E::Sub(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| E::Mul(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| E::Div(b(x), b(y))),
                (inner.clone(), -4.0f64..4.0).prop_map(move |(x, p)| E::Pow(b(x), p)),
                inner.clone().prop_map(move |a| E::Exp(b(a))),
                inner.clone().prop_map(move |a| E::Sqrt(b(a))),
                (inner.clone(), inner).prop_map(move |(x, y)| E::Gauss(b(x), b(y))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            prop_assert_eq!(parse_kernel(&printed).unwrap(), e);
        }

        #[test]
        fn symbolic_derivative_matches_finite_difference(
            x in -1.0f64..1.0, y in -1.0f64..1.0, z in 0.2f64..1.0, c in 0usize..3,
        ) {
            let e = parse_kernel("gauss(|p2|, 0.7) * sqrt(1 + |p2|^2) / (2 + p2x) + exp(-p2y*p2z)").unwrap();
            let v = Var::Component(Momentum::P2, c);
            let pt = at([x, y, z]);
            let h = 1e-5;
            let fd = (e.eval(&pt.shifted(v, h)) - e.eval(&pt.shifted(v, -h))) / (2.0 * h);
            let sym = e.derivative(v).eval(&pt);
            prop_assert!((fd - sym).abs() < 1e-7 * (1.0 + sym.abs()), "fd {} sym {}", fd, sym);
        }
    }
}
