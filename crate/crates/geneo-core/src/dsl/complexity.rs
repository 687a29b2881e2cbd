//! The complexity functor: diagrams to nonnegative reals.
//!
//! Generators cost what the assignment says (falling back to their declared
//! default), structural wiring costs zero, and both composition operators
//! add. Infinity is a legal cost and models an inaccessible black-box block.

use std::collections::BTreeMap;

use crate::dsl::{DiagramAst, Signature, TypedDiagram};
use crate::error::DslError;

/// A total map from generator names to nonnegative costs (infinity allowed).
/// Lookups fall back to the generator's declared default complexity.
#[derive(Debug, Clone, Default)]
pub struct ComplexityAssignment {
    costs: BTreeMap<String, f64>,
}

impl ComplexityAssignment {
    pub fn new() -> ComplexityAssignment {
        ComplexityAssignment::default()
    }

    pub fn assign(&mut self, name: impl Into<String>, cost: f64) -> Result<(), DslError> {
        let name = name.into();
        if cost.is_nan() || cost < 0.0 {
            return Err(DslError::InvalidComplexity(cost, name));
        }
        self.costs.insert(name, cost);
        Ok(())
    }

    /// Cost of a generator: the explicit assignment if present, else the
    /// declared default.
    pub fn cost_of(&self, sig: &Signature, name: &str) -> Result<f64, DslError> {
        if let Some(&c) = self.costs.get(name) {
            return Ok(c);
        }
        match sig.generator(name) {
            Some(decl) => decl
                .default_complexity
                .ok_or_else(|| DslError::MissingComplexity(name.to_string())),
            None => Err(DslError::UnknownGenerator(name.to_string())),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.costs.iter()
    }
}

/// Sum of the complexities of all generator occurrences in the diagram.
pub fn complexity(
    diagram: &TypedDiagram,
    sig: &Signature,
    assignment: &ComplexityAssignment,
) -> Result<f64, DslError> {
    complexity_of_ast(&diagram.ast, sig, assignment)
}

pub fn complexity_of_ast(
    ast: &DiagramAst,
    sig: &Signature,
    assignment: &ComplexityAssignment,
) -> Result<f64, DslError> {
    Ok(match ast {
        DiagramAst::Gen(name) => assignment.cost_of(sig, name)?,
        DiagramAst::Empty
        | DiagramAst::Id(_)
        | DiagramAst::Swap(_, _)
        | DiagramAst::Copy(_)
        | DiagramAst::Discard(_) => 0.0,
        DiagramAst::Seq(a, b) | DiagramAst::Par(a, b) => {
            complexity_of_ast(a, sig, assignment)? + complexity_of_ast(b, sig, assignment)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, typecheck};

    #[test]
    fn identity_costs_zero() {
        let (sig, diagrams) = parse("sort A; diagram d = id[A];").unwrap();
        let typed = typecheck(&diagrams["d"], &sig).unwrap();
        let c = complexity(&typed, &sig, &ComplexityAssignment::new()).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn seq_and_par_both_add() {
        let (sig, diagrams) = parse(
            "sort A; gen f : A -> A @3; gen g : A -> A @5; diagram s = f ; g; diagram p = f * g;",
        )
        .unwrap();
        let assignment = ComplexityAssignment::new();
        let s = typecheck(&diagrams["s"], &sig).unwrap();
        let p = typecheck(&diagrams["p"], &sig).unwrap();
        assert_eq!(complexity(&s, &sig, &assignment).unwrap(), 8.0);
        assert_eq!(complexity(&p, &sig, &assignment).unwrap(), 8.0);
    }

    #[test]
    fn assignment_overrides_default() {
        let (sig, diagrams) = parse("sort A; gen f : A -> A @3; diagram d = f;").unwrap();
        let mut assignment = ComplexityAssignment::new();
        assignment.assign("f", 11.0).unwrap();
        let typed = typecheck(&diagrams["d"], &sig).unwrap();
        assert_eq!(complexity(&typed, &sig, &assignment).unwrap(), 11.0);
    }

    #[test]
    fn missing_assignment_is_an_error() {
        let (sig, diagrams) = parse("sort A; gen f : A -> A; diagram d = f;").unwrap();
        let typed = typecheck(&diagrams["d"], &sig).unwrap();
        assert!(matches!(
            complexity(&typed, &sig, &ComplexityAssignment::new()),
            Err(DslError::MissingComplexity(_))
        ));
    }

    #[test]
    fn infinity_is_a_legal_cost() {
        let (sig, diagrams) = parse("sort A; gen blackbox : A -> A; diagram d = blackbox;").unwrap();
        let mut assignment = ComplexityAssignment::new();
        assignment.assign("blackbox", f64::INFINITY).unwrap();
        let typed = typecheck(&diagrams["d"], &sig).unwrap();
        assert!(complexity(&typed, &sig, &assignment).unwrap().is_infinite());
        assert!(assignment.assign("bad", -1.0).is_err());
    }
}
