//! Full problem statements: dimension, drift, optional diffusion, helpers,
//! parameters, and stochastic calculus.

use crate::error::SpecError;
use crate::symbolic::{self, ExprKind, Expression, HelperDefinition};
use std::collections::BTreeSet;

/// Interpretation of the noise term of a stochastic system.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Calculus {
    None,
    Ito,
    Stratonovich,
}

/// A complete system description prior to lowering.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub dimension: usize,
    pub drift: Vec<Expression>,
    pub diffusion: Option<Vec<Expression>>,
    pub helpers: Vec<HelperDefinition>,
    /// Names of parameters left symbolic; their order defines the slot table.
    pub parameters: Vec<String>,
    pub calculus: Calculus,
}

impl SystemSpec {
    pub fn new(dimension: usize, drift: Vec<Expression>) -> Self {
        SystemSpec {
            dimension,
            drift,
            diffusion: None,
            helpers: Vec::new(),
            parameters: Vec::new(),
            calculus: Calculus::None,
        }
    }

    /// Whether any expression (drift, diffusion, or helper) accesses the past.
    pub fn uses_past(&self) -> bool {
        self.all_expressions().any(symbolic::uses_past)
    }

    fn all_expressions(&self) -> impl Iterator<Item = &Expression> {
        self.drift
            .iter()
            .chain(self.diffusion.iter().flatten())
            .chain(self.helpers.iter().map(|h| &h.value))
    }

    /// Checks every structural invariant of the spec.
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.dimension == 0 {
            return Err(SpecError::ZeroDimension);
        }
        if self.drift.len() != self.dimension {
            return Err(SpecError::DimensionMismatch {
                expected: self.dimension,
                got: self.drift.len(),
            });
        }
        if let Some(g) = &self.diffusion {
            if g.len() != self.dimension {
                return Err(SpecError::DimensionMismatch {
                    expected: self.dimension,
                    got: g.len(),
                });
            }
            if self.calculus == Calculus::None {
                return Err(SpecError::DiffusionWithoutCalculus);
            }
            if g.iter().any(symbolic::uses_past) || self.drift.iter().any(symbolic::uses_past) {
                return Err(SpecError::DelayedDiffusion);
            }
        } else if self.calculus != Calculus::None {
            return Err(SpecError::CalculusWithoutDiffusion);
        }

        for e in self.all_expressions() {
            if let Some(max) = symbolic::max_state_index(e) {
                if max >= self.dimension {
                    return Err(SpecError::StateOutOfRange {
                        index: max,
                        dimension: self.dimension,
                    });
                }
            }
            check_no_nested_delay(e)?;
        }

        // Parameter references must be declared; helper references must obey
        // definition order.
        let declared: BTreeSet<&str> = self.parameters.iter().map(|s| s.as_str()).collect();
        let mut defined: BTreeSet<&str> = BTreeSet::new();
        for h in &self.helpers {
            check_symbols(&h.value, &declared, &defined)?;
            defined.insert(h.name.as_str());
        }
        for e in self.drift.iter().chain(self.diffusion.iter().flatten()) {
            check_symbols(e, &declared, &defined)?;
        }
        Ok(())
    }
}

fn check_no_nested_delay(e: &Expression) -> Result<(), SpecError> {
    match e.kind() {
        ExprKind::PastState { at, .. } => {
            if symbolic::uses_past(at) {
                return Err(SpecError::NestedDelay);
            }
            Ok(())
        }
        ExprKind::Sum(cs) | ExprKind::Product(cs) => {
            cs.iter().try_for_each(check_no_nested_delay)
        }
        ExprKind::Power { base, exponent } => {
            check_no_nested_delay(base)?;
            check_no_nested_delay(exponent)
        }
        ExprKind::Call { arg, .. } => check_no_nested_delay(arg),
        _ => Ok(()),
    }
}

fn check_symbols(
    e: &Expression,
    declared_params: &BTreeSet<&str>,
    defined_helpers: &BTreeSet<&str>,
) -> Result<(), SpecError> {
    let mut params = BTreeSet::new();
    let mut helpers = BTreeSet::new();
    symbolic::collect_symbols(e, &mut params, &mut helpers);
    for p in params {
        if !declared_params.contains(p.as_str()) {
            return Err(SpecError::UnlistedParameter(p));
        }
    }
    for h in helpers {
        if !defined_helpers.contains(h.as_str()) {
            return Err(SpecError::HelperOrder(h));
        }
    }
    Ok(())
}
