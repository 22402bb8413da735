//! A small expression language for lattice elements and their forms.
//!
//! ```text
//! sum     := ['-'] wedge (('+' | '-') wedge)*
//! wedge   := product ('/\' product)*
//! product := power ('*' power)*
//! power   := postfix ['^' ['-'] int]
//! postfix := atom "'"*
//! atom    := number | number 'i' | 'i' | name | '(' sum ')' | '[' sum ',' sum ']'
//!          | 'delta' '(' sum ')' | 'theta_hat' '(' real ',' real ',' sum ')'
//! ```
//!
//! `'` is the adjoint. Printing inserts only the parentheses the grammar
//! needs, so `parse(print(e)) == e`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{c64, Algebra};
use crate::forms::{BasisMode, DifferentialBasis, DifferentialForm, FormError};
use crate::qlattice::{QAlgebraSpec, QElement, QError};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Real(f64),
    Imag(f64),
    Generator(String),
    Adjoint(Box<Expr>),
    Power(Box<Expr>, i64),
    Product(Box<Expr>, Box<Expr>),
    Sum(Box<Expr>, Box<Expr>),
    Difference(Box<Expr>, Box<Expr>),
    Negate(Box<Expr>),
    Commutator(Box<Expr>, Box<Expr>),
    Delta(Box<Expr>),
    Wedge(Box<Expr>, Box<Expr>),
    ThetaHat(f64, f64, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("type error: {0}")]
    Type(String),
    #[error(transparent)]
    Lattice(#[from] QError),
    #[error(transparent)]
    Form(#[from] FormError),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    ImagNum(f64),
    Ident(String),
    Int(i64),
    Plus,
    Minus,
    Star,
    Caret,
    Quote,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Wedge,
    End,
}

fn syntax(pos: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        pos,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '^' => out.push((start, Tok::Caret)),
            '\'' => out.push((start, Tok::Quote)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            '[' => out.push((start, Tok::LBracket)),
            ']' => out.push((start, Tok::RBracket)),
            ',' => out.push((start, Tok::Comma)),
            '/' => {
                if chars.get(i + 1) == Some(&'\\') {
                    out.push((start, Tok::Wedge));
                    i += 1;
                } else {
                    return Err(syntax(start, "expected `/\\`"));
                }
            }
            d if d.is_ascii_digit() || d == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                let integral = !chars[i..j].contains(&'.');
                let mut has_exp = false;
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
                        has_exp = true;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let imag = j < chars.len()
                    && chars[j] == 'i'
                    && !chars
                        .get(j + 1)
                        .is_some_and(|c| c.is_alphanumeric() || *c == '_');
                if imag {
                    let v: f64 = s
                        .parse()
                        .map_err(|_| syntax(start, format!("bad number `{s}`")))?;
                    out.push((start, Tok::ImagNum(v)));
                    i = j + 1;
                    continue;
                }
                if integral && !has_exp {
                    if let Ok(v) = s.parse::<i64>() {
                        out.push((start, Tok::Int(v)));
                        i = j;
                        continue;
                    }
                }
                let v: f64 = s
                    .parse()
                    .map_err(|_| syntax(start, format!("bad number `{s}`")))?;
                out.push((start, Tok::Num(v)));
                i = j;
                continue;
            }
            a if a.is_alphabetic() || a == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push((start, Tok::Ident(chars[i..j].iter().collect())));
                i = j;
                continue;
            }
            other => return Err(syntax(start, format!("unexpected character `{other}`"))),
        }
        i += 1;
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {what}")))
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = if *self.peek() == Tok::Minus {
            self.bump();
            Expr::Negate(Box::new(self.wedge()?))
        } else {
            self.wedge()?
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Sum(Box::new(lhs), Box::new(self.wedge()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Difference(Box::new(lhs), Box::new(self.wedge()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn wedge(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while *self.peek() == Tok::Wedge {
            self.bump();
            lhs = Expr::Wedge(Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.power()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = Expr::Product(Box::new(lhs), Box::new(self.power()?));
        }
        Ok(lhs)
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.postfix()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Int(k) => Ok(Expr::Power(Box::new(base), if negative { -k } else { k })),
            _ => Err(syntax(self.pos(), "expected an integer exponent")),
        }
    }

    fn postfix(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.atom()?;
        while *self.peek() == Tok::Quote {
            self.bump();
            e = Expr::Adjoint(Box::new(e));
        }
        Ok(e)
    }

    fn signed_real(&mut self) -> Result<f64, ExprError> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let v = match self.bump() {
            Tok::Num(v) => v,
            Tok::Int(k) => k as f64,
            _ => return Err(syntax(self.pos(), "expected a real number")),
        };
        Ok(if negative { -v } else { v })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Real(v)),
            Tok::Int(k) => Ok(Expr::Real(k as f64)),
            Tok::ImagNum(v) => Ok(Expr::Imag(v)),
            Tok::LParen => {
                let e = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::LBracket => {
                let a = self.sum()?;
                self.expect(Tok::Comma, "`,` in commutator")?;
                let b = self.sum()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Expr::Commutator(Box::new(a), Box::new(b)))
            }
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Expr::Imag(1.0)),
                "delta" => {
                    self.expect(Tok::LParen, "`(` after delta")?;
                    let e = self.sum()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::Delta(Box::new(e)))
                }
                "theta_hat" => {
                    self.expect(Tok::LParen, "`(` after theta_hat")?;
                    let s = self.signed_real()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let t = self.signed_real()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let e = self.sum()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::ThetaHat(s, t, Box::new(e)))
                }
                _ => Ok(Expr::Generator(name)),
            },
            Tok::End => Err(syntax(pos, "unexpected end of input")),
            other => Err(syntax(pos, format!("unexpected token {other:?}"))),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.pos(), "trailing input"));
    }
    Ok(e)
}

impl Expr {
    fn level(&self) -> u8 {
        match self {
            Expr::Sum(..) | Expr::Difference(..) | Expr::Negate(_) => 1,
            Expr::Wedge(..) => 2,
            Expr::Product(..) => 3,
            Expr::Power(..) => 4,
            Expr::Adjoint(_) => 5,
            _ => 6,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.level() < min {
            f.write_str("(")?;
            self.write_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Real(v) => write!(f, "{v:?}"),
            Expr::Imag(v) => write!(f, "{v:?}i"),
            Expr::Generator(n) => f.write_str(n),
            Expr::Adjoint(x) => {
                x.write_at(f, 5)?;
                f.write_str("'")
            }
            Expr::Power(x, k) => {
                x.write_at(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Product(a, b) => {
                a.write_at(f, 3)?;
                f.write_str(" * ")?;
                b.write_at(f, 4)
            }
            Expr::Wedge(a, b) => {
                a.write_at(f, 2)?;
                f.write_str(" /\\ ")?;
                b.write_at(f, 3)
            }
            Expr::Sum(a, b) => {
                a.write_at(f, 1)?;
                f.write_str(" + ")?;
                b.write_at(f, 2)
            }
            Expr::Difference(a, b) => {
                a.write_at(f, 1)?;
                f.write_str(" - ")?;
                b.write_at(f, 2)
            }
            Expr::Negate(x) => {
                f.write_str("-")?;
                x.write_at(f, 2)
            }
            Expr::Commutator(a, b) => write!(f, "[{a}, {b}]"),
            Expr::Delta(x) => write!(f, "delta({x})"),
            Expr::ThetaHat(s, t, x) => write!(f, "theta_hat({s:?}, {t:?}, {x})"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

/// Result of evaluating an expression.
#[derive(Clone, Debug)]
pub enum Value {
    Element(QElement),
    Form(DifferentialForm<QElement>),
}

impl Value {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Element(x) => serde_json::json!({ "element": x.to_json() }),
            Value::Form(f) => serde_json::json!({ "form": f.to_json() }),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Element(x) => write!(f, "{x}"),
            Value::Form(x) => write!(f, "{x}"),
        }
    }
}

/// Spec and differential basis that expressions are evaluated against.
#[derive(Clone, Debug)]
pub struct EvalContext {
    pub spec: Arc<QAlgebraSpec>,
    pub basis: Arc<DifferentialBasis<QElement>>,
}

impl EvalContext {
    /// Uses the first generator as the differential basis.
    pub fn new(spec: Arc<QAlgebraSpec>) -> Result<Self, ExprError> {
        Self::with_basis(spec, &[0], BasisMode::Complex)
    }

    pub fn with_basis(
        spec: Arc<QAlgebraSpec>,
        generators: &[usize],
        mode: BasisMode,
    ) -> Result<Self, ExprError> {
        let elements = generators
            .iter()
            .map(|&g| QElement::generator(&spec, g))
            .collect::<Result<Vec<_>, _>>()?;
        let label = generators
            .iter()
            .map(|&g| spec.names()[g].clone())
            .collect::<Vec<_>>()
            .join(",");
        let basis = Arc::new(DifferentialBasis::new(elements, mode, &label)?);
        Ok(Self { spec, basis })
    }

    fn promote(&self, v: Value) -> Result<DifferentialForm<QElement>, ExprError> {
        match v {
            Value::Element(x) => Ok(DifferentialForm::scalar(&self.basis, x)?),
            Value::Form(f) => Ok(f),
        }
    }

    fn element(&self, v: Value, what: &str) -> Result<QElement, ExprError> {
        match v {
            Value::Element(x) => Ok(x),
            Value::Form(_) => Err(ExprError::Type(format!(
                "{what} needs an algebra element, got a form"
            ))),
        }
    }

    pub fn eval(&self, e: &Expr) -> Result<Value, ExprError> {
        let spec = &self.spec;
        Ok(match e {
            Expr::Real(v) => Value::Element(QElement::scalar(spec, c64(*v, 0.0))),
            Expr::Imag(v) => Value::Element(QElement::scalar(spec, c64(0.0, *v))),
            Expr::Generator(name) => {
                let idx = spec
                    .generator_index(name)
                    .ok_or_else(|| ExprError::UnknownGenerator(name.clone()))?;
                Value::Element(QElement::generator(spec, idx)?)
            }
            Expr::Adjoint(x) => match self.eval(x)? {
                Value::Element(a) => Value::Element(a.adjoint()),
                Value::Form(f) => Value::Form(f.star()?),
            },
            Expr::Power(x, k) => {
                let a = self.element(self.eval(x)?, "a power")?;
                Value::Element(a.pow(*k).ok_or_else(|| {
                    ExprError::Type("negative powers are only defined for single monomials".into())
                })?)
            }
            Expr::Product(a, b) => match (self.eval(a)?, self.eval(b)?) {
                (Value::Element(x), Value::Element(y)) => Value::Element(x.try_mul(&y)?),
                (x, y) => Value::Form(self.promote(x)?.wedge(&self.promote(y)?)?),
            },
            Expr::Wedge(a, b) => {
                let x = self.promote(self.eval(a)?)?;
                let y = self.promote(self.eval(b)?)?;
                Value::Form(x.wedge(&y)?)
            }
            Expr::Sum(a, b) | Expr::Difference(a, b) => {
                let sign = if matches!(e, Expr::Sum(..)) {
                    1.0
                } else {
                    -1.0
                };
                match (self.eval(a)?, self.eval(b)?) {
                    (Value::Element(x), Value::Element(y)) => {
                        Value::Element(x.try_add(&y.scale(c64(sign, 0.0)))?)
                    }
                    (x, y) => Value::Form(
                        self.promote(x)?
                            .try_add(&self.promote(y)?.scale(c64(sign, 0.0)))?,
                    ),
                }
            }
            Expr::Negate(x) => match self.eval(x)? {
                Value::Element(a) => Value::Element(a.scale(c64(-1.0, 0.0))),
                Value::Form(f) => Value::Form(f.scale(c64(-1.0, 0.0))),
            },
            Expr::Commutator(a, b) => {
                let x = self.element(self.eval(a)?, "a commutator")?;
                let y = self.element(self.eval(b)?, "a commutator")?;
                Value::Element(x.try_commutator(&y)?)
            }
            Expr::Delta(x) => Value::Form(self.promote(self.eval(x)?)?.delta()),
            Expr::ThetaHat(s, t, x) => {
                let a = self.element(self.eval(x)?, "theta_hat")?;
                Value::Element(a.theta_hat(*s, *t)?)
            }
        })
    }

    pub fn eval_str(&self, text: &str) -> Result<Value, ExprError> {
        self.eval(&parse(text)?)
    }
}

/// Scalar value of an element that is a multiple of the identity.
pub fn as_scalar(v: &Value) -> Option<Complex64> {
    match v {
        Value::Element(x) if x.terms().keys().all(|m| m.is_identity()) => Some(x.tau()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::FormIndex;
    use proptest::prelude::*;

    fn ctx(theta: f64) -> EvalContext {
        EvalContext::new(Arc::new(QAlgebraSpec::torus2(theta))).unwrap()
    }

    #[test]
    fn precedence() {
        let e = parse("U + V * U' ^ 2").unwrap();
        let expected = Expr::Sum(
            Box::new(Expr::Generator("U".into())),
            Box::new(Expr::Product(
                Box::new(Expr::Generator("V".into())),
                Box::new(Expr::Power(
                    Box::new(Expr::Adjoint(Box::new(Expr::Generator("U".into())))),
                    2,
                )),
            )),
        );
        assert_eq!(e, expected);
        let w = parse("a /\\ b + c").unwrap();
        assert!(matches!(w, Expr::Sum(..)));
        assert!(matches!(parse("-U^-3").unwrap(), Expr::Negate(_)));
    }

    #[test]
    fn syntax_errors_have_positions() {
        assert!(matches!(
            parse("U +"),
            Err(ExprError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse("[U V]"),
            Err(ExprError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse("U ? V"),
            Err(ExprError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(parse("U^x"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn commutator_example() {
        let theta = 0.7;
        let v = ctx(theta).eval_str("[U, V]").unwrap();
        let Value::Element(x) = v else { panic!() };
        let expected = c64(1.0, 0.0) - Complex64::from_polar(1.0, -theta);
        assert_eq!(x.terms().len(), 1);
        assert!((x.coefficient(&[1, 1]) - expected).norm() < 1e-12);
    }

    #[test]
    fn delta_and_unitarity() {
        let c = ctx(0.7);
        let Value::Form(f) = c.eval_str("delta(V)").unwrap() else {
            panic!()
        };
        assert_eq!(f.terms().len(), 2);
        assert!(f.terms().contains_key(&FormIndex::unstarred_slot(0)));
        assert!(f.terms().contains_key(&FormIndex::starred_slot(0)));
        assert_eq!(as_scalar(&c.eval_str("U*U'").unwrap()), Some(c64(1.0, 0.0)));
        let Value::Form(z) = c.eval_str("delta(1)").unwrap() else {
            panic!()
        };
        assert!(z.is_zero());
        assert!(matches!(
            c.eval_str("Z"),
            Err(ExprError::UnknownGenerator(_))
        ));
        assert!(matches!(
            c.eval_str("[delta(V), U]"),
            Err(ExprError::Type(_))
        ));
    }

    #[test]
    fn scalars_and_theta_hat() {
        let c = ctx(0.3);
        assert_eq!(
            as_scalar(&c.eval_str("2 + 3.5i - i").unwrap()),
            Some(c64(2.0, 2.5))
        );
        let Value::Element(x) = c.eval_str("theta_hat(-0.5, 0, U)").unwrap() else {
            panic!()
        };
        assert!((x.coefficient(&[1, 0]) - Complex64::from_polar(1.0, 0.5)).norm() < 1e-12);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Real),
            (0.0f64..1e3).prop_map(Expr::Imag),
            prop::sample::select(vec!["U", "V", "W", "U1", "U2"])
                .prop_map(|s| Expr::Generator(s.to_string())),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            let b = |e: Expr| Box::new(e);
            prop_oneof![
                inner.clone().prop_map(move |e| Expr::Adjoint(b(e))),
                (inner.clone(), -5i64..=5).prop_map(move |(e, k)| Expr::Power(b(e), k)),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Product(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Sum(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Difference(b(x), b(y))),
                inner.clone().prop_map(move |e| Expr::Negate(b(e))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Commutator(b(x), b(y))),
                inner.clone().prop_map(move |e| Expr::Delta(b(e))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Wedge(b(x), b(y))),
                (-10.0f64..10.0, -10.0f64..10.0, inner).prop_map(move |(s, t, e)| Expr::ThetaHat(
                    s,
                    t,
                    b(e)
                )),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            prop_assert_eq!(&back, &e, "printed: {}", printed);
        }
    }
}
