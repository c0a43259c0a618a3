//! Common-subexpression elimination over lists of expressions.

use super::{ExprKind, Expression, HelperDefinition};
use std::collections::HashMap;

/// Hoists every shared compound subexpression into a fresh helper.
///
/// A node is hoistable when it is a sum, product, power, or delayed-state
/// access, or a function call whose argument is itself compound; function
/// calls on bare symbols are not hoisted. Sharing is counted on the
/// deduplicated DAG: a node referenced from two or more distinct places
/// (across all inputs and previously hoisted definitions) becomes a helper.
///
/// Returned definitions reference only earlier definitions; expanding them
/// reproduces the inputs exactly. Helper names are `_cse0`, `_cse1`, ...,
/// which user-written identifiers cannot collide with.
pub fn eliminate_common_subexpressions(
    exprs: &[Expression],
) -> (Vec<HelperDefinition>, Vec<Expression>) {
    let mut counts: HashMap<Expression, usize> = HashMap::new();
    for e in exprs {
        count_refs(e, &mut counts);
    }

    let mut defs: Vec<HelperDefinition> = Vec::new();
    let mut rewritten_of: HashMap<Expression, Expression> = HashMap::new();
    let rewritten: Vec<Expression> =
        exprs.iter().map(|e| rewrite(e, &counts, &mut defs, &mut rewritten_of)).collect();
    (defs, rewritten)
}

/// Reference counting on the deduplicated DAG: children of a node are visited
/// only the first time that node (by structural equality) is encountered.
fn count_refs(e: &Expression, counts: &mut HashMap<Expression, usize>) {
    let c = counts.entry(e.clone()).or_insert(0);
    *c += 1;
    if *c > 1 {
        return;
    }
    match e.kind() {
        ExprKind::Sum(cs) | ExprKind::Product(cs) => {
            for c in cs {
                count_refs(c, counts);
            }
        }
        ExprKind::Power { base, exponent } => {
            count_refs(base, counts);
            count_refs(exponent, counts);
        }
        ExprKind::Call { arg, .. } => count_refs(arg, counts),
        ExprKind::PastState { at, .. } => count_refs(at, counts),
        _ => {}
    }
}

fn is_leaf(e: &Expression) -> bool {
    matches!(
        e.kind(),
        ExprKind::Constant(_)
            | ExprKind::Time
            | ExprKind::State(_)
            | ExprKind::Parameter(_)
            | ExprKind::HelperRef(_)
    )
}

fn hoistable(e: &Expression) -> bool {
    match e.kind() {
        ExprKind::Sum(_) | ExprKind::Product(_) | ExprKind::Power { .. } => true,
        ExprKind::PastState { .. } => true,
        ExprKind::Call { arg, .. } => !is_leaf(arg),
        _ => false,
    }
}

/// Rebuilds `e` with shared subexpressions replaced by helper references,
/// creating definitions children-first so each references only earlier ones.
fn rewrite(
    e: &Expression,
    counts: &HashMap<Expression, usize>,
    defs: &mut Vec<HelperDefinition>,
    memo: &mut HashMap<Expression, Expression>,
) -> Expression {
    if let Some(r) = memo.get(e) {
        return r.clone();
    }
    let body = match e.kind() {
        ExprKind::Sum(cs) => {
            Expression::sum(cs.iter().map(|c| rewrite(c, counts, defs, memo)).collect())
        }
        ExprKind::Product(cs) => {
            Expression::product(cs.iter().map(|c| rewrite(c, counts, defs, memo)).collect())
        }
        ExprKind::Power { base, exponent } => rewrite(base, counts, defs, memo)
            .pow(rewrite(exponent, counts, defs, memo)),
        ExprKind::Call { func, arg } => {
            Expression::call(*func, rewrite(arg, counts, defs, memo))
        }
        ExprKind::PastState { index, at } => {
            Expression::past(*index, rewrite(at, counts, defs, memo))
        }
        _ => e.clone(),
    };
    let result = if hoistable(e) && counts.get(e).copied().unwrap_or(0) >= 2 {
        let name = format!("_cse{}", defs.len());
        let reference = Expression::helper_ref(&name);
        defs.push(HelperDefinition::new(name, body));
        reference
    } else {
        body
    };
    memo.insert(e.clone(), result.clone());
    result
}
