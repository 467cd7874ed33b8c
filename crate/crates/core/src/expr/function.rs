use std::collections::HashMap;

use thiserror::Error;

use super::ast::{BinOp, Expr, Func};
use super::parser::{parse, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown identifier `{name}` (declared channels: {declared})")]
    UnknownIdentifier { name: String, declared: String },

    #[error("missing value for channel `{0}`")]
    MissingChannel(String),

    #[error("expected {expected} channel values, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("{message} in `{node}`")]
    Domain { node: String, message: String },
}

/// How [`ExprFunction::partial`] differentiates with respect to a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialMethod {
    /// The channel does not occur; the partial is exactly zero.
    Zero,
    /// Polynomial in the channel; forward-mode dual numbers.
    Exact,
    /// Central difference.
    FiniteDifference,
}

pub const FD_RELATIVE_STEP: f64 = 1e-6;
pub const FD_ABSOLUTE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

fn compile(e: &Expr, index: &HashMap<&str, usize>) -> Node {
    match e {
        Expr::Num(x) => Node::Num(*x),
        Expr::Var(v) => Node::Var(index[v.as_str()]),
        Expr::Neg(a) => Node::Neg(Box::new(compile(a, index))),
        Expr::Binary(op, l, r) => Node::Bin(
            *op,
            Box::new(compile(l, index)),
            Box::new(compile(r, index)),
        ),
        Expr::Call(f, a) => Node::Call(*f, Box::new(compile(a, index))),
    }
}

fn apply_func(f: Func, x: f64) -> Option<f64> {
    let y = match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Log if x > 0.0 => x.ln(),
        Func::Sqrt if x >= 0.0 => x.sqrt(),
        Func::Abs => x.abs(),
        _ => return None,
    };
    y.is_finite().then_some(y)
}

fn apply_bin(op: BinOp, a: f64, b: f64) -> Option<f64> {
    let y = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div if b != 0.0 => a / b,
        BinOp::Div => return None,
        BinOp::Pow => pow(a, b),
    };
    y.is_finite().then_some(y)
}

fn pow(a: f64, b: f64) -> f64 {
    if b == b.round() && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl Node {
    fn eval(&self, x: &[f64]) -> Option<f64> {
        match self {
            Node::Num(v) => Some(*v),
            Node::Var(i) => Some(x[*i]),
            Node::Neg(a) => Some(-a.eval(x)?),
            Node::Bin(op, l, r) => apply_bin(*op, l.eval(x)?, r.eval(x)?),
            Node::Call(f, a) => apply_func(*f, a.eval(x)?),
        }
    }

    fn mentions(&self, ch: usize) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(i) => *i == ch,
            Node::Neg(a) | Node::Call(_, a) => a.mentions(ch),
            Node::Bin(_, l, r) => l.mentions(ch) || r.mentions(ch),
        }
    }

    /// Syntactically polynomial in `ch`: the channel sits only under
    /// `+ - *`, division by channel-free terms and non-negative integer
    /// literal powers.
    fn polynomial_in(&self, ch: usize) -> bool {
        if !self.mentions(ch) {
            return true;
        }
        match self {
            Node::Num(_) | Node::Var(_) => true,
            Node::Neg(a) => a.polynomial_in(ch),
            Node::Bin(BinOp::Add | BinOp::Sub | BinOp::Mul, l, r) => {
                l.polynomial_in(ch) && r.polynomial_in(ch)
            }
            Node::Bin(BinOp::Div, l, r) => l.polynomial_in(ch) && !r.mentions(ch),
            Node::Bin(BinOp::Pow, l, r) => {
                l.polynomial_in(ch) && matches!(**r, Node::Num(n) if n >= 0.0 && n == n.round())
            }
            Node::Call(..) => false,
        }
    }

    /// Value and derivative with respect to `ch`, for polynomial nodes.
    fn dual(&self, x: &[f64], ch: usize) -> Option<(f64, f64)> {
        if !self.mentions(ch) {
            return Some((self.eval(x)?, 0.0));
        }
        let (v, d) = match self {
            Node::Var(_) => (x[ch], 1.0),
            Node::Neg(a) => {
                let (v, d) = a.dual(x, ch)?;
                (-v, -d)
            }
            Node::Bin(op, l, r) => {
                let (a, da) = l.dual(x, ch)?;
                let (b, db) = r.dual(x, ch)?;
                match op {
                    BinOp::Add => (a + b, da + db),
                    BinOp::Sub => (a - b, da - db),
                    BinOp::Mul => (a * b, da * b + a * db),
                    BinOp::Div => (apply_bin(BinOp::Div, a, b)?, da / b),
                    BinOp::Pow => {
                        let n = b as i32;
                        let d = if n == 0 {
                            0.0
                        } else {
                            n as f64 * a.powi(n - 1) * da
                        };
                        (a.powi(n), d)
                    }
                }
            }
            Node::Num(_) | Node::Call(..) => unreachable!("handled by the polynomial check"),
        };
        (v.is_finite() && d.is_finite()).then_some((v, d))
    }
}

/// An expression bound to an ordered list of channels.
#[derive(Debug, Clone)]
pub struct ExprFunction {
    expr: Expr,
    channels: Vec<String>,
    node: Node,
    methods: Vec<PartialMethod>,
}

impl PartialEq for ExprFunction {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr && self.channels == other.channels
    }
}

impl ExprFunction {
    /// Binds `expr` to `channels`; every variable must be a declared channel.
    pub fn new(expr: Expr, channels: &[impl AsRef<str>]) -> Result<Self, EvalError> {
        let channels: Vec<String> = channels.iter().map(|c| c.as_ref().to_string()).collect();
        let index: HashMap<&str, usize> = channels
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        if let Some(name) = expr
            .variables()
            .into_iter()
            .find(|v| !index.contains_key(v.as_str()))
        {
            return Err(EvalError::UnknownIdentifier {
                name,
                declared: channels.join(", "),
            });
        }
        let node = compile(&expr, &index);
        let methods = (0..channels.len())
            .map(|ch| {
                if !node.mentions(ch) {
                    PartialMethod::Zero
                } else if node.polynomial_in(ch) {
                    PartialMethod::Exact
                } else {
                    PartialMethod::FiniteDifference
                }
            })
            .collect();
        Ok(Self {
            expr,
            channels,
            node,
            methods,
        })
    }

    /// Parses `src` and binds it.
    pub fn parse(src: &str, channels: &[impl AsRef<str>]) -> crate::Result<Self> {
        let expr = parse(src).map_err(|e: ParseError| crate::Error::Parse(e))?;
        Ok(Self::new(expr, channels)?)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    pub fn partial_method(&self, channel: usize) -> PartialMethod {
        self.methods[channel]
    }

    /// Whether the expression depends on the channel at all.
    pub fn uses(&self, channel: usize) -> bool {
        self.methods[channel] != PartialMethod::Zero
    }

    fn check_arity(&self, values: &[f64]) -> Result<(), EvalError> {
        if values.len() != self.channels.len() {
            return Err(EvalError::Arity {
                expected: self.channels.len(),
                got: values.len(),
            });
        }
        Ok(())
    }

    /// Evaluates with the channel values given in declaration order.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        self.check_arity(values)?;
        self.node.eval(values).ok_or_else(|| self.explain(values))
    }

    /// Evaluates from a name-value map, which must hold every channel.
    pub fn eval_map(&self, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let values = self.values_from_map(env)?;
        self.eval(&values)
    }

    fn values_from_map(&self, env: &HashMap<String, f64>) -> Result<Vec<f64>, EvalError> {
        self.channels
            .iter()
            .map(|c| {
                env.get(c)
                    .copied()
                    .ok_or_else(|| EvalError::MissingChannel(c.clone()))
            })
            .collect()
    }

    /// Partial derivative with respect to channel `channel`.
    pub fn partial(&self, channel: usize, values: &[f64]) -> Result<f64, EvalError> {
        self.check_arity(values)?;
        match self.methods[channel] {
            PartialMethod::Zero => {
                self.eval(values)?;
                Ok(0.0)
            }
            PartialMethod::Exact => match self.node.dual(values, channel) {
                Some((_, d)) => Ok(d),
                None => Err(self.explain(values)),
            },
            PartialMethod::FiniteDifference => {
                let x = values[channel];
                let step = (FD_RELATIVE_STEP * x.abs()).max(FD_ABSOLUTE_FLOOR);
                let mut v = values.to_vec();
                v[channel] = x + step;
                let hi = v[channel];
                let fp = self.eval(&v)?;
                v[channel] = x - step;
                let lo = v[channel];
                let fm = self.eval(&v)?;
                Ok((fp - fm) / (hi - lo))
            }
        }
    }

    pub fn partial_by_name(
        &self,
        channel: &str,
        env: &HashMap<String, f64>,
    ) -> Result<f64, EvalError> {
        let ch = self
            .channel_index(channel)
            .ok_or_else(|| EvalError::MissingChannel(channel.to_string()))?;
        let values = self.values_from_map(env)?;
        self.partial(ch, &values)
    }

    /// Locates the innermost failing node for the error message.
    fn explain(&self, values: &[f64]) -> EvalError {
        fn walk(e: &Expr, f: &ExprFunction, x: &[f64]) -> Result<f64, EvalError> {
            let fail = |message: &str| EvalError::Domain {
                node: e.to_string(),
                message: message.to_string(),
            };
            match e {
                Expr::Num(v) => Ok(*v),
                Expr::Var(name) => Ok(x[f.channel_index(name).expect("bound at construction")]),
                Expr::Neg(a) => Ok(-walk(a, f, x)?),
                Expr::Binary(op, l, r) => {
                    let (a, b) = (walk(l, f, x)?, walk(r, f, x)?);
                    apply_bin(*op, a, b).ok_or_else(|| {
                        fail(if *op == BinOp::Div && b == 0.0 {
                            "division by zero"
                        } else {
                            "non-finite result"
                        })
                    })
                }
                Expr::Call(func, a) => {
                    let v = walk(a, f, x)?;
                    apply_func(*func, v).ok_or_else(|| {
                        fail(match func {
                            Func::Log => "logarithm of a non-positive number",
                            Func::Sqrt => "square root of a negative number",
                            _ => "non-finite result",
                        })
                    })
                }
            }
        }
        match walk(&self.expr, self, values) {
            Err(e) => e,
            Ok(_) => EvalError::Domain {
                node: self.expr.to_string(),
                message: "non-finite derivative".into(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(src: &str, ch: &[&str]) -> ExprFunction {
        ExprFunction::parse(src, ch).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(f("1+2*3", &[] as &[&str]).eval(&[]).unwrap(), 7.0);
        assert_eq!(f("t", &["t"]).eval(&[3.0]).unwrap(), 3.0);
        assert_eq!(f("D1^2/2", &["D1"]).eval(&[3.0]).unwrap(), 4.5);
        assert_eq!(f("exp(y0)-1", &["y0"]).eval(&[0.0]).unwrap(), 0.0);
        assert_eq!(f("-2^2", &[] as &[&str]).eval(&[]).unwrap(), -4.0);
        assert_eq!(f("2^-1", &[] as &[&str]).eval(&[]).unwrap(), 0.5);
    }

    #[test]
    fn unknown_identifier_at_binding() {
        let err = ExprFunction::parse("x + y", &["x"]).unwrap_err();
        assert!(err.to_string().contains("`y`"));
    }

    #[test]
    fn map_evaluation_needs_every_channel() {
        let g = f("x", &["x", "y"]);
        let mut env = HashMap::new();
        env.insert("x".to_string(), 2.0);
        assert_eq!(g.eval_map(&env), Err(EvalError::MissingChannel("y".into())));
        env.insert("y".to_string(), 5.0);
        assert_eq!(g.eval_map(&env).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors_name_the_node() {
        let g = f("1 + log(x - 1)", &["x"]);
        match g.eval(&[0.5]).unwrap_err() {
            EvalError::Domain { node, message } => {
                assert_eq!(node, "log((x - 1.0))");
                assert!(message.contains("logarithm"));
            }
            e => panic!("{e}"),
        }
        assert!(matches!(
            f("1/x", &["x"]).eval(&[0.0]),
            Err(EvalError::Domain { .. })
        ));
        assert!(f("sqrt(x)", &["x"]).eval(&[-1.0]).is_err());
    }

    #[test]
    fn partial_methods() {
        let g = f("y0^2 + sin(D1) + t", &["t", "D1", "y0", "u"]);
        assert_eq!(g.partial_method(0), PartialMethod::Exact);
        assert_eq!(g.partial_method(1), PartialMethod::FiniteDifference);
        assert_eq!(g.partial_method(2), PartialMethod::Exact);
        assert_eq!(g.partial_method(3), PartialMethod::Zero);
        let x = [0.3, 0.0, 3.0, 1.0];
        assert_eq!(g.partial(2, &x).unwrap(), 6.0);
        assert!((g.partial(1, &x).unwrap() - 1.0).abs() < 1e-6);
        let s = f("sin(D1)", &["D1"]);
        assert!((s.partial(0, &[0.0]).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(g.partial(3, &x).unwrap(), 0.0);
    }

    #[test]
    fn division_by_constant_stays_exact() {
        let g = f("(x^3 - x)/(2 + t)", &["x", "t"]);
        assert_eq!(g.partial_method(0), PartialMethod::Exact);
        assert_eq!(g.partial_method(1), PartialMethod::FiniteDifference);
        let d = g.partial(0, &[2.0, 2.0]).unwrap();
        assert_eq!(d, 11.0 / 4.0);
        let h = f("x^2.5", &["x"]);
        assert_eq!(h.partial_method(0), PartialMethod::FiniteDifference);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let g = f("a - 2*b", &["a", "b"]);
        let mut e1 = HashMap::new();
        e1.insert("a".to_string(), 1.0);
        e1.insert("b".to_string(), 4.0);
        let mut e2 = HashMap::new();
        e2.insert("b".to_string(), 4.0);
        e2.insert("a".to_string(), 1.0);
        assert_eq!(g.eval_map(&e1).unwrap(), g.eval_map(&e2).unwrap());
    }
}
