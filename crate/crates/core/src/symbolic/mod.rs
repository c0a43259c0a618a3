//! Symbolic expressions: representation, differentiation, substitution,
//! simplification, and common-subexpression elimination.
//!
//! Expressions are immutable reference-counted DAG nodes. Sum and product
//! children are flattened and canonically ordered at construction (constants
//! first, then by structural hash), so structural equality is insensitive to
//! the order in which terms were written. Structural equality is the key used
//! by substitution maps and common-subexpression elimination.

mod cse;
mod parser;

pub use cse::eliminate_common_subexpressions;
pub use parser::parse_expression;

use crate::error::{SpecError, SymError};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Elementary functions available in expressions.
///
/// `Signum` is produced by differentiating `Abs` (with sign(0) := 0) and is
/// accepted by the parser, but it is not part of the documented model-file
/// surface.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
    Signum,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Signum => "signum",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "signum" => Func::Signum,
            _ => return None,
        })
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Abs => x.abs(),
            // sign with sign(0) := 0; NaN propagates.
            Func::Signum => {
                if x == 0.0 {
                    0.0
                } else {
                    x.signum()
                }
            }
        }
    }

    fn code(self) -> u8 {
        self as u8
    }
}

/// Power evaluation shared by every evaluator in the crate, so that all
/// backends produce bit-identical results. Small integer exponents go through
/// `powi`.
pub(crate) fn apply_pow(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp.abs() <= 64.0 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

/// Node kinds of the expression DAG.
#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Constant(f64),
    Time,
    State(usize),
    /// State `index` evaluated at the absolute time given by `at`.
    /// `at` must not contain further `PastState` nodes.
    PastState { index: usize, at: Expression },
    Parameter(Arc<str>),
    HelperRef(Arc<str>),
    Sum(Vec<Expression>),
    Product(Vec<Expression>),
    Power { base: Expression, exponent: Expression },
    Call { func: Func, arg: Expression },
}

#[derive(Debug)]
struct Node {
    kind: ExprKind,
    hash: u64,
}

/// An immutable symbolic expression.
#[derive(Clone, Debug)]
pub struct Expression {
    node: Arc<Node>,
}

/// A named subexpression computed once per derivative evaluation.
/// Definitions form an ordered list; each value may reference only earlier
/// helpers.
#[derive(Clone, Debug, PartialEq)]
pub struct HelperDefinition {
    pub name: String,
    pub value: Expression,
}

impl HelperDefinition {
    pub fn new(name: impl Into<String>, value: Expression) -> Self {
        HelperDefinition { name: name.into(), value }
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn hash_kind(kind: &ExprKind) -> u64 {
    let mut h = FNV_OFFSET;
    match kind {
        ExprKind::Constant(c) => {
            h = fnv(h, &[0]);
            h = fnv(h, &c.to_bits().to_le_bytes());
        }
        ExprKind::Time => h = fnv(h, &[1]),
        ExprKind::State(i) => {
            h = fnv(h, &[2]);
            h = fnv(h, &(*i as u64).to_le_bytes());
        }
        ExprKind::PastState { index, at } => {
            h = fnv(h, &[3]);
            h = fnv(h, &(*index as u64).to_le_bytes());
            h = fnv(h, &at.hash().to_le_bytes());
        }
        ExprKind::Parameter(name) => {
            h = fnv(h, &[4]);
            h = fnv(h, name.as_bytes());
        }
        ExprKind::HelperRef(name) => {
            h = fnv(h, &[5]);
            h = fnv(h, name.as_bytes());
        }
        ExprKind::Sum(cs) => {
            h = fnv(h, &[6]);
            for c in cs {
                h = fnv(h, &c.hash().to_le_bytes());
            }
        }
        ExprKind::Product(cs) => {
            h = fnv(h, &[7]);
            for c in cs {
                h = fnv(h, &c.hash().to_le_bytes());
            }
        }
        ExprKind::Power { base, exponent } => {
            h = fnv(h, &[8]);
            h = fnv(h, &base.hash().to_le_bytes());
            h = fnv(h, &exponent.hash().to_le_bytes());
        }
        ExprKind::Call { func, arg } => {
            h = fnv(h, &[9]);
            h = fnv(h, &[func.code()]);
            h = fnv(h, &arg.hash().to_le_bytes());
        }
    }
    h
}

fn kind_rank(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Constant(_) => 0,
        ExprKind::Time => 1,
        ExprKind::State(_) => 2,
        ExprKind::PastState { .. } => 3,
        ExprKind::Parameter(_) => 4,
        ExprKind::HelperRef(_) => 5,
        ExprKind::Call { .. } => 6,
        ExprKind::Power { .. } => 7,
        ExprKind::Product(_) => 8,
        ExprKind::Sum(_) => 9,
    }
}

/// Total order used for canonical child ordering: constants first, then by
/// structural hash with a full structural comparison as tie break.
fn canonical_cmp(a: &Expression, b: &Expression) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let ra = kind_rank(a.kind());
    let rb = kind_rank(b.kind());
    if ra != rb {
        return ra.cmp(&rb);
    }
    match a.hash().cmp(&b.hash()) {
        Ordering::Equal => structural_cmp(a, b),
        o => o,
    }
}

fn structural_cmp(a: &Expression, b: &Expression) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let ra = kind_rank(a.kind());
    let rb = kind_rank(b.kind());
    if ra != rb {
        return ra.cmp(&rb);
    }
    match (a.kind(), b.kind()) {
        (ExprKind::Constant(x), ExprKind::Constant(y)) => x.total_cmp(y),
        (ExprKind::Time, ExprKind::Time) => Ordering::Equal,
        (ExprKind::State(i), ExprKind::State(j)) => i.cmp(j),
        (ExprKind::PastState { index: i, at: ai }, ExprKind::PastState { index: j, at: aj }) => {
            i.cmp(j).then_with(|| structural_cmp(ai, aj))
        }
        (ExprKind::Parameter(x), ExprKind::Parameter(y)) => x.cmp(y),
        (ExprKind::HelperRef(x), ExprKind::HelperRef(y)) => x.cmp(y),
        (ExprKind::Call { func: f, arg: x }, ExprKind::Call { func: g, arg: y }) => {
            f.cmp(g).then_with(|| structural_cmp(x, y))
        }
        (
            ExprKind::Power { base: bx, exponent: ex },
            ExprKind::Power { base: by, exponent: ey },
        ) => structural_cmp(bx, by).then_with(|| structural_cmp(ex, ey)),
        (ExprKind::Sum(xs), ExprKind::Sum(ys)) | (ExprKind::Product(xs), ExprKind::Product(ys)) => {
            xs.len().cmp(&ys.len()).then_with(|| {
                for (x, y) in xs.iter().zip(ys) {
                    match structural_cmp(x, y) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                Ordering::Equal
            })
        }
        _ => unreachable!("rank equality guarantees matching kinds"),
    }
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.node, &other.node) {
            return true;
        }
        if self.hash() != other.hash() {
            return false;
        }
        structural_cmp(self, other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Expression {}

impl std::hash::Hash for Expression {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        state.write_u64(self.node.hash);
    }
}

impl Expression {
    fn from_kind(kind: ExprKind) -> Self {
        let hash = hash_kind(&kind);
        Expression { node: Arc::new(Node { kind, hash }) }
    }

    pub fn kind(&self) -> &ExprKind {
        &self.node.kind
    }

    pub(crate) fn hash(&self) -> u64 {
        self.node.hash
    }

    pub fn constant(value: f64) -> Self {
        Self::from_kind(ExprKind::Constant(value))
    }

    pub fn time() -> Self {
        Self::from_kind(ExprKind::Time)
    }

    pub fn state(index: usize) -> Self {
        Self::from_kind(ExprKind::State(index))
    }

    pub fn past(index: usize, at: Expression) -> Self {
        Self::from_kind(ExprKind::PastState { index, at })
    }

    pub fn parameter(name: &str) -> Self {
        Self::from_kind(ExprKind::Parameter(Arc::from(name)))
    }

    pub fn helper_ref(name: &str) -> Self {
        Self::from_kind(ExprKind::HelperRef(Arc::from(name)))
    }

    /// n-ary sum; nested sums are flattened, children canonically ordered.
    pub fn sum(children: Vec<Expression>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            if let ExprKind::Sum(cs) = c.kind() {
                flat.extend(cs.iter().cloned());
            } else {
                flat.push(c);
            }
        }
        match flat.len() {
            0 => Expression::constant(0.0),
            1 => flat.pop().unwrap(),
            _ => {
                flat.sort_by(canonical_cmp);
                Self::from_kind(ExprKind::Sum(flat))
            }
        }
    }

    /// n-ary product; nested products are flattened, children canonically
    /// ordered.
    pub fn product(children: Vec<Expression>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            if let ExprKind::Product(cs) = c.kind() {
                flat.extend(cs.iter().cloned());
            } else {
                flat.push(c);
            }
        }
        match flat.len() {
            0 => Expression::constant(1.0),
            1 => flat.pop().unwrap(),
            _ => {
                flat.sort_by(canonical_cmp);
                Self::from_kind(ExprKind::Product(flat))
            }
        }
    }

    pub fn pow(&self, exponent: Expression) -> Self {
        Self::from_kind(ExprKind::Power { base: self.clone(), exponent })
    }

    pub fn powf(&self, exponent: f64) -> Self {
        self.pow(Expression::constant(exponent))
    }

    pub fn call(func: Func, arg: Expression) -> Self {
        Self::from_kind(ExprKind::Call { func, arg })
    }

    pub fn sin(&self) -> Self {
        Self::call(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Self {
        Self::call(Func::Cos, self.clone())
    }

    pub fn tan(&self) -> Self {
        Self::call(Func::Tan, self.clone())
    }

    pub fn exp(&self) -> Self {
        Self::call(Func::Exp, self.clone())
    }

    pub fn log(&self) -> Self {
        Self::call(Func::Log, self.clone())
    }

    pub fn sqrt(&self) -> Self {
        Self::call(Func::Sqrt, self.clone())
    }

    pub fn sinh(&self) -> Self {
        Self::call(Func::Sinh, self.clone())
    }

    pub fn cosh(&self) -> Self {
        Self::call(Func::Cosh, self.clone())
    }

    pub fn tanh(&self) -> Self {
        Self::call(Func::Tanh, self.clone())
    }

    pub fn abs(&self) -> Self {
        Self::call(Func::Abs, self.clone())
    }

    pub fn is_constant(&self, value: f64) -> bool {
        matches!(self.kind(), ExprKind::Constant(c) if *c == value)
    }

    fn is_zero(&self) -> bool {
        self.is_constant(0.0)
    }

    /// Number of nodes in this expression tree (shared nodes counted once per
    /// occurrence).
    pub fn node_count(&self) -> usize {
        1 + match self.kind() {
            ExprKind::Sum(cs) | ExprKind::Product(cs) => cs.iter().map(|c| c.node_count()).sum(),
            ExprKind::Power { base, exponent } => base.node_count() + exponent.node_count(),
            ExprKind::Call { arg, .. } => arg.node_count(),
            ExprKind::PastState { at, .. } => at.node_count(),
            _ => 0,
        }
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $build:expr) => {
        impl std::ops::$trait for &Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                let f: fn(Expression, Expression) -> Expression = $build;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                let f: fn(Expression, Expression) -> Expression = $build;
                f(self, rhs)
            }
        }
        impl std::ops::$trait<f64> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: f64) -> Expression {
                let f: fn(Expression, Expression) -> Expression = $build;
                f(self.clone(), Expression::constant(rhs))
            }
        }
        impl std::ops::$trait<&Expression> for f64 {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                let f: fn(Expression, Expression) -> Expression = $build;
                f(Expression::constant(self), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, |a, b| Expression::sum(vec![a, b]));
impl_binop!(Sub, sub, |a, b| Expression::sum(vec![
    a,
    Expression::product(vec![Expression::constant(-1.0), b])
]));
impl_binop!(Mul, mul, |a, b| Expression::product(vec![a, b]));
impl_binop!(Div, div, |a, b| Expression::product(vec![
    a,
    b.pow(Expression::constant(-1.0))
]));

impl std::ops::Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::product(vec![Expression::constant(-1.0), self.clone()])
    }
}

impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::product(vec![Expression::constant(-1.0), self])
    }
}

// ---------------------------------------------------------------------------
// Display

fn prec(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Sum(_) => 1,
        ExprKind::Product(_) => 2,
        ExprKind::Power { .. } => 3,
        _ => 4,
    }
}

fn fmt_child(e: &Expression, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let needs_parens = prec(e.kind()) < min_prec
        || (min_prec > 1 && matches!(e.kind(), ExprKind::Constant(c) if *c < 0.0));
    if needs_parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ExprKind::Constant(c) => write!(f, "{c}"),
            ExprKind::Time => write!(f, "t"),
            ExprKind::State(i) => write!(f, "y({i})"),
            ExprKind::PastState { index, at } => write!(f, "y({index}, {at})"),
            ExprKind::Parameter(name) | ExprKind::HelperRef(name) => write!(f, "{name}"),
            ExprKind::Sum(cs) => {
                for (k, c) in cs.iter().enumerate() {
                    let rendered = c.to_string();
                    if k == 0 {
                        write!(f, "{rendered}")?;
                    } else if let Some(rest) = rendered.strip_prefix('-') {
                        write!(f, " - {rest}")?;
                    } else {
                        write!(f, " + {rendered}")?;
                    }
                }
                Ok(())
            }
            ExprKind::Product(cs) => {
                // A leading -1 factor renders as a sign.
                let (sign, rest) = match cs[0].kind() {
                    ExprKind::Constant(c) if *c == -1.0 && cs.len() > 1 => ("-", &cs[1..]),
                    _ => ("", &cs[..]),
                };
                write!(f, "{sign}")?;
                if rest.len() == 1 {
                    return fmt_child(&rest[0], 2, f);
                }
                for (k, c) in rest.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    fmt_child(c, 2, f)?;
                }
                Ok(())
            }
            ExprKind::Power { base, exponent } => {
                fmt_child(base, 4, f)?;
                write!(f, "^")?;
                fmt_child(exponent, 4, f)
            }
            ExprKind::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

// ---------------------------------------------------------------------------
// Direct evaluation (reference path for tests and oracles)

/// Environment for [`eval_expression`].
pub struct EvalContext<'a> {
    pub t: f64,
    pub y: &'a [f64],
    pub params: &'a dyn Fn(&str) -> Option<f64>,
    pub helpers: &'a dyn Fn(&str) -> Option<f64>,
    pub past: Option<&'a mut dyn FnMut(usize, f64) -> f64>,
}

/// Evaluates an expression tree directly, without lowering. Sums and products
/// fold left to right in canonical child order, matching the lowered program.
pub fn eval_expression(e: &Expression, ctx: &mut EvalContext) -> Result<f64, SymError> {
    Ok(match e.kind() {
        ExprKind::Constant(c) => *c,
        ExprKind::Time => ctx.t,
        ExprKind::State(i) => ctx.y[*i],
        ExprKind::PastState { index, at } => {
            let time = eval_expression(at, ctx)?;
            match ctx.past.as_mut() {
                Some(p) => p(*index, time),
                None => {
                    return Err(SymError::Unsupported(
                        "expression accesses past states but no past was supplied".into(),
                    ))
                }
            }
        }
        ExprKind::Parameter(name) => (ctx.params)(name)
            .ok_or_else(|| SymError::Unsupported(format!("unknown parameter '{name}'")))?,
        ExprKind::HelperRef(name) => (ctx.helpers)(name)
            .ok_or_else(|| SymError::Unsupported(format!("unknown helper '{name}'")))?,
        ExprKind::Sum(cs) => {
            let mut acc = eval_expression(&cs[0], ctx)?;
            for c in &cs[1..] {
                acc += eval_expression(c, ctx)?;
            }
            acc
        }
        ExprKind::Product(cs) => {
            let mut acc = eval_expression(&cs[0], ctx)?;
            for c in &cs[1..] {
                acc *= eval_expression(c, ctx)?;
            }
            acc
        }
        ExprKind::Power { base, exponent } => {
            let b = eval_expression(base, ctx)?;
            let x = eval_expression(exponent, ctx)?;
            apply_pow(b, x)
        }
        ExprKind::Call { func, arg } => func.eval(eval_expression(arg, ctx)?),
    })
}

// ---------------------------------------------------------------------------
// Differentiation

/// Partial derivative of `e` with respect to `wrt`, which must be a state, a
/// delayed state (matched structurally, including its time argument), or a
/// parameter. Delayed states are treated as variables independent of the
/// current state; their time arguments are frozen.
///
/// Helper references must be expanded (see [`expand_helpers`]) beforehand.
/// The result is simplified with [`simplify_basic`].
pub fn differentiate(e: &Expression, wrt: &Expression) -> Result<Expression, SymError> {
    match wrt.kind() {
        ExprKind::State(_) | ExprKind::PastState { .. } | ExprKind::Parameter(_) => {}
        ExprKind::Time => return Err(SymError::DifferentiateWrtTime),
        _ => return Err(SymError::InvalidDifferentiationVariable),
    }
    let raw = diff_node(e, wrt)?;
    Ok(simplify_basic(&raw))
}

fn diff_node(e: &Expression, wrt: &Expression) -> Result<Expression, SymError> {
    if e == wrt {
        return Ok(Expression::constant(1.0));
    }
    let zero = Expression::constant(0.0);
    Ok(match e.kind() {
        ExprKind::Constant(_)
        | ExprKind::Time
        | ExprKind::State(_)
        | ExprKind::PastState { .. }
        | ExprKind::Parameter(_) => zero,
        ExprKind::HelperRef(name) => {
            return Err(SymError::UnexpandedHelper(name.to_string()))
        }
        ExprKind::Sum(cs) => {
            let mut terms = Vec::new();
            for c in cs {
                let d = diff_node(c, wrt)?;
                if !d.is_zero() {
                    terms.push(d);
                }
            }
            Expression::sum(terms)
        }
        ExprKind::Product(cs) => {
            let mut terms = Vec::new();
            for (i, c) in cs.iter().enumerate() {
                let d = diff_node(c, wrt)?;
                if d.is_zero() {
                    continue;
                }
                let mut factors: Vec<Expression> =
                    cs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()).collect();
                factors.push(d);
                terms.push(Expression::product(factors));
            }
            Expression::sum(terms)
        }
        ExprKind::Power { base, exponent } => {
            let db = diff_node(base, wrt)?;
            let dx = diff_node(exponent, wrt)?;
            if let ExprKind::Constant(k) = exponent.kind() {
                if db.is_zero() {
                    zero
                } else {
                    Expression::product(vec![
                        Expression::constant(*k),
                        base.pow(Expression::constant(k - 1.0)),
                        db,
                    ])
                }
            } else {
                // d(b^x) = b^x * (dx*log(b) + x*db/b)
                let mut terms = Vec::new();
                if !dx.is_zero() {
                    terms.push(Expression::product(vec![dx, base.log()]));
                }
                if !db.is_zero() {
                    terms.push(Expression::product(vec![
                        exponent.clone(),
                        db,
                        base.pow(Expression::constant(-1.0)),
                    ]));
                }
                if terms.is_empty() {
                    zero
                } else {
                    Expression::product(vec![e.clone(), Expression::sum(terms)])
                }
            }
        }
        ExprKind::Call { func, arg } => {
            let da = diff_node(arg, wrt)?;
            if da.is_zero() {
                return Ok(zero);
            }
            let outer = match func {
                Func::Sin => arg.cos(),
                Func::Cos => -&arg.sin(),
                Func::Tan => arg.cos().powf(-2.0),
                Func::Exp => arg.exp(),
                Func::Log => arg.powf(-1.0),
                Func::Sqrt => Expression::product(vec![
                    Expression::constant(0.5),
                    arg.powf(-0.5),
                ]),
                Func::Sinh => arg.cosh(),
                Func::Cosh => arg.sinh(),
                Func::Tanh => arg.cosh().powf(-2.0),
                Func::Abs => Expression::call(Func::Signum, arg.clone()),
                Func::Signum => return Ok(zero),
            };
            Expression::product(vec![outer, da])
        }
    })
}

/// `jacobian(f, n)[k][j] = d f_k / d y_j`, simplified.
pub fn jacobian(f: &[Expression], n: usize) -> Result<Vec<Vec<Expression>>, SymError> {
    let mut rows = Vec::with_capacity(f.len());
    for fk in f {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(differentiate(fk, &Expression::state(j))?);
        }
        rows.push(row);
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Substitution and rewriting

/// Simultaneous, non-recursive replacement: nodes structurally equal to a map
/// key are replaced by the mapped expression; replacements are not re-scanned.
pub fn substitute(e: &Expression, map: &HashMap<Expression, Expression>) -> Expression {
    if let Some(r) = map.get(e) {
        return r.clone();
    }
    match e.kind() {
        ExprKind::Constant(_)
        | ExprKind::Time
        | ExprKind::State(_)
        | ExprKind::Parameter(_)
        | ExprKind::HelperRef(_) => e.clone(),
        ExprKind::PastState { index, at } => Expression::past(*index, substitute(at, map)),
        ExprKind::Sum(cs) => Expression::sum(cs.iter().map(|c| substitute(c, map)).collect()),
        ExprKind::Product(cs) => {
            Expression::product(cs.iter().map(|c| substitute(c, map)).collect())
        }
        ExprKind::Power { base, exponent } => {
            substitute(base, map).pow(substitute(exponent, map))
        }
        ExprKind::Call { func, arg } => Expression::call(*func, substitute(arg, map)),
    }
}

/// Replaces every helper reference by its (already expanded) definition.
/// Definitions may reference only earlier helpers.
pub fn expand_helpers(
    e: &Expression,
    defs: &[HelperDefinition],
) -> Result<Expression, SpecError> {
    let mut map: HashMap<&str, Expression> = HashMap::new();
    for def in defs {
        let expanded = rewrite_helpers(&def.value, &map)?;
        map.insert(def.name.as_str(), expanded);
    }
    rewrite_helpers(e, &map)
}

fn rewrite_helpers(
    e: &Expression,
    map: &HashMap<&str, Expression>,
) -> Result<Expression, SpecError> {
    Ok(match e.kind() {
        ExprKind::HelperRef(name) => map
            .get(name.as_ref())
            .cloned()
            .ok_or_else(|| SpecError::UnknownHelper(name.to_string()))?,
        ExprKind::Constant(_) | ExprKind::Time | ExprKind::State(_) | ExprKind::Parameter(_) => {
            e.clone()
        }
        ExprKind::PastState { index, at } => Expression::past(*index, rewrite_helpers(at, map)?),
        ExprKind::Sum(cs) => Expression::sum(
            cs.iter().map(|c| rewrite_helpers(c, map)).collect::<Result<_, _>>()?,
        ),
        ExprKind::Product(cs) => Expression::product(
            cs.iter().map(|c| rewrite_helpers(c, map)).collect::<Result<_, _>>()?,
        ),
        ExprKind::Power { base, exponent } => {
            rewrite_helpers(base, map)?.pow(rewrite_helpers(exponent, map)?)
        }
        ExprKind::Call { func, arg } => Expression::call(*func, rewrite_helpers(arg, map)?),
    })
}

/// Renumbers state indices (current and delayed) through `map`.
pub fn remap_states(e: &Expression, map: &dyn Fn(usize) -> usize) -> Expression {
    match e.kind() {
        ExprKind::State(i) => Expression::state(map(*i)),
        ExprKind::PastState { index, at } => Expression::past(map(*index), remap_states(at, map)),
        ExprKind::Constant(_)
        | ExprKind::Time
        | ExprKind::Parameter(_)
        | ExprKind::HelperRef(_) => e.clone(),
        ExprKind::Sum(cs) => Expression::sum(cs.iter().map(|c| remap_states(c, map)).collect()),
        ExprKind::Product(cs) => {
            Expression::product(cs.iter().map(|c| remap_states(c, map)).collect())
        }
        ExprKind::Power { base, exponent } => {
            remap_states(base, map).pow(remap_states(exponent, map))
        }
        ExprKind::Call { func, arg } => Expression::call(*func, remap_states(arg, map)),
    }
}

// ---------------------------------------------------------------------------
// Simplification

/// Basic value-preserving simplification: constant folding, removal of zero
/// summands and unit factors, `x*0 -> 0`, `x^1 -> x`, `x^0 -> 1`, flattening
/// of nested sums and products. No algebraic rewriting beyond that.
pub fn simplify_basic(e: &Expression) -> Expression {
    match e.kind() {
        ExprKind::Constant(_)
        | ExprKind::Time
        | ExprKind::State(_)
        | ExprKind::Parameter(_)
        | ExprKind::HelperRef(_) => e.clone(),
        ExprKind::PastState { index, at } => Expression::past(*index, simplify_basic(at)),
        ExprKind::Sum(cs) => {
            let flat = Expression::sum(cs.iter().map(simplify_basic).collect());
            let cs = match flat.kind() {
                ExprKind::Sum(cs) => cs,
                _ => return flat,
            };
            let mut acc = 0.0;
            let mut rest = Vec::with_capacity(cs.len());
            for c in cs {
                match c.kind() {
                    ExprKind::Constant(v) => acc += v,
                    _ => rest.push(c.clone()),
                }
            }
            if rest.is_empty() {
                return Expression::constant(acc);
            }
            if acc != 0.0 {
                rest.push(Expression::constant(acc));
            }
            Expression::sum(rest)
        }
        ExprKind::Product(cs) => {
            let flat = Expression::product(cs.iter().map(simplify_basic).collect());
            let cs = match flat.kind() {
                ExprKind::Product(cs) => cs,
                _ => return flat,
            };
            let mut acc = 1.0;
            let mut rest = Vec::with_capacity(cs.len());
            for c in cs {
                match c.kind() {
                    ExprKind::Constant(v) => acc *= v,
                    _ => rest.push(c.clone()),
                }
            }
            if acc == 0.0 {
                return Expression::constant(0.0);
            }
            if rest.is_empty() {
                return Expression::constant(acc);
            }
            if acc != 1.0 {
                rest.push(Expression::constant(acc));
            }
            Expression::product(rest)
        }
        ExprKind::Power { base, exponent } => {
            let b = simplify_basic(base);
            let x = simplify_basic(exponent);
            if let (ExprKind::Constant(bv), ExprKind::Constant(xv)) = (b.kind(), x.kind()) {
                return Expression::constant(apply_pow(*bv, *xv));
            }
            if x.is_constant(1.0) {
                return b;
            }
            if x.is_constant(0.0) {
                return Expression::constant(1.0);
            }
            b.pow(x)
        }
        ExprKind::Call { func, arg } => {
            let a = simplify_basic(arg);
            if let ExprKind::Constant(v) = a.kind() {
                return Expression::constant(func.eval(*v));
            }
            Expression::call(*func, a)
        }
    }
}

// ---------------------------------------------------------------------------
// Structure queries

/// Largest state index referenced anywhere (including delayed accesses and
/// delay arguments), or `None` if no state is referenced.
pub fn max_state_index(e: &Expression) -> Option<usize> {
    let mut max = None;
    visit(e, &mut |x| {
        let i = match x.kind() {
            ExprKind::State(i) => *i,
            ExprKind::PastState { index, .. } => *index,
            _ => return,
        };
        max = Some(max.map_or(i, |m: usize| m.max(i)));
    });
    max
}

/// Whether the expression accesses any past state.
pub fn uses_past(e: &Expression) -> bool {
    let mut found = false;
    visit(e, &mut |x| {
        if matches!(x.kind(), ExprKind::PastState { .. }) {
            found = true;
        }
    });
    found
}

/// All distinct delayed-access sites `(state index, time argument)` in order
/// of first appearance.
pub fn past_sites(exprs: &[Expression]) -> Vec<(usize, Expression)> {
    let mut seen: Vec<(usize, Expression)> = Vec::new();
    for e in exprs {
        visit(e, &mut |x| {
            if let ExprKind::PastState { index, at } = x.kind() {
                if !seen.iter().any(|(i, a)| i == index && a == at) {
                    seen.push((*index, at.clone()));
                }
            }
        });
    }
    seen
}

/// Collects names of referenced parameters and helpers.
pub fn collect_symbols(
    e: &Expression,
    params: &mut std::collections::BTreeSet<String>,
    helpers: &mut std::collections::BTreeSet<String>,
) {
    visit(e, &mut |x| match x.kind() {
        ExprKind::Parameter(name) => {
            params.insert(name.to_string());
        }
        ExprKind::HelperRef(name) => {
            helpers.insert(name.to_string());
        }
        _ => {}
    });
}

/// If `at` describes access at a constant lag behind the current time
/// (`at = t - tau`), returns `tau`. The degenerate `at = t` yields 0.
pub fn constant_delay_of(at: &Expression) -> Option<f64> {
    let s = simplify_basic(at);
    match s.kind() {
        ExprKind::Time => Some(0.0),
        ExprKind::Sum(cs) if cs.len() == 2 => match (cs[0].kind(), cs[1].kind()) {
            (ExprKind::Constant(c), ExprKind::Time) => Some(-c),
            _ => None,
        },
        _ => None,
    }
}

fn visit(e: &Expression, f: &mut impl FnMut(&Expression)) {
    f(e);
    match e.kind() {
        ExprKind::Sum(cs) | ExprKind::Product(cs) => {
            for c in cs {
                visit(c, f);
            }
        }
        ExprKind::Power { base, exponent } => {
            visit(base, f);
            visit(exponent, f);
        }
        ExprKind::Call { arg, .. } => visit(arg, f),
        ExprKind::PastState { at, .. } => visit(at, f),
        _ => {}
    }
}

#[cfg(test)]
mod tests;
