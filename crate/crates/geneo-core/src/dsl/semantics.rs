//! The semantics functor: diagrams to GEOs, given an interpretation of the
//! signature.

use std::collections::HashMap;
use std::sync::Arc;

use crate::dsl::{DiagramAst, Signature, TypedDiagram, Word};
use crate::error::DslError;
use crate::geo::{compose, copy, discard, swap, tensor, Geo};
use crate::space::{product_of_factors, PerceptionSpace};

/// Assigns a perception space to each sort and a GEO to each generator.
///
/// For every bound generator `g : A1*…*An -> B1*…*Bm`, the GEO's domain must
/// be the tensor of the interpreted arity sorts and its codomain the tensor
/// of the interpreted coarity sorts.
#[derive(Default, Clone)]
pub struct Interpretation {
    sorts: HashMap<String, Arc<PerceptionSpace>>,
    generators: HashMap<String, Geo>,
}

impl Interpretation {
    pub fn new() -> Interpretation {
        Interpretation::default()
    }

    pub fn bind_sort(&mut self, name: impl Into<String>, space: Arc<PerceptionSpace>) {
        self.sorts.insert(name.into(), space);
    }

    /// Binds a generator, checking its endpoints against the signature.
    pub fn bind_generator(
        &mut self,
        sig: &Signature,
        name: impl Into<String>,
        geo: Geo,
    ) -> Result<(), DslError> {
        let name = name.into();
        let decl = sig.generator(&name).ok_or_else(|| DslError::UnknownGenerator(name.clone()))?;
        let dom = self.space_of_word(&decl.arity)?;
        let cod = self.space_of_word(&decl.coarity)?;
        if geo.dom.id != dom.id || geo.cod.id != cod.id {
            return Err(DslError::BindingShape {
                name,
                detail: format!(
                    "expected '{}' -> '{}', got '{}' -> '{}'",
                    dom.id, cod.id, geo.dom.id, geo.cod.id
                ),
            });
        }
        self.generators.insert(name, geo);
        Ok(())
    }

    pub fn sort_space(&self, name: &str) -> Result<&Arc<PerceptionSpace>, DslError> {
        self.sorts.get(name).ok_or_else(|| DslError::MissingBinding(format!("sort '{name}'")))
    }

    pub fn generator_geo(&self, name: &str) -> Result<&Geo, DslError> {
        self.generators
            .get(name)
            .ok_or_else(|| DslError::MissingBinding(format!("generator '{name}'")))
    }

    /// The tensor of the interpreted sorts of a word; the empty word denotes
    /// the unit space.
    pub fn space_of_word(&self, word: &Word) -> Result<Arc<PerceptionSpace>, DslError> {
        let mut factors = Vec::with_capacity(word.len());
        for sort in word {
            factors.push(self.sort_space(sort)?.clone());
        }
        if factors.len() == 1 {
            return Ok(factors.into_iter().next().unwrap());
        }
        if factors.iter().any(|f| !f.carrier.is_finite()) {
            return Err(DslError::Geo(crate::error::GeoError::Space(
                crate::error::SpaceError::IntensionalUnsupported(
                    "tensor of words over intensional spaces".into(),
                ),
            )));
        }
        // Words tensor plain spaces, so flattening is the identity here.
        let mut flat = Vec::new();
        for f in factors {
            match f.factor_count() {
                0 => {}
                1 => flat.push(f),
                _ => flat.extend(f.factors.clone()),
            }
        }
        product_of_factors(flat).map_err(|e| DslError::Geo(e.into()))
    }
}

/// Evaluates a typed diagram into a GEO under an interpretation.
///
/// Generators map to their bound GEOs, the structural constants map to the
/// structural GENEOs, sequential composition maps to composition and parallel
/// composition to the tensor. The returned GEO's endpoints equal the
/// interpreted input and output words.
pub fn evaluate_semantics(diagram: &TypedDiagram, interp: &Interpretation) -> Result<Geo, DslError> {
    let geo = eval(&diagram.ast, interp)?;
    let dom = interp.space_of_word(&diagram.input)?;
    let cod = interp.space_of_word(&diagram.output)?;
    debug_assert_eq!(geo.dom.id, dom.id, "semantics domain disagrees with typed input word");
    debug_assert_eq!(geo.cod.id, cod.id, "semantics codomain disagrees with typed output word");
    Ok(geo)
}

fn eval(ast: &DiagramAst, interp: &Interpretation) -> Result<Geo, DslError> {
    match ast {
        DiagramAst::Gen(name) => Ok(interp.generator_geo(name)?.clone()),
        DiagramAst::Empty => Ok(Geo::identity(&PerceptionSpace::unit())),
        DiagramAst::Id(a) => Ok(Geo::identity(interp.sort_space(a)?)),
        DiagramAst::Swap(a, b) => {
            Ok(swap(interp.sort_space(a)?, interp.sort_space(b)?)?.geo)
        }
        DiagramAst::Copy(a) => Ok(copy(interp.sort_space(a)?)?.geo),
        DiagramAst::Discard(a) => Ok(discard(interp.sort_space(a)?).geo),
        DiagramAst::Seq(first, second) => {
            let f = eval(first, interp)?;
            let s = eval(second, interp)?;
            Ok(compose(&s, &f)?)
        }
        DiagramAst::Par(top, bottom) => {
            let t = eval(top, interp)?;
            let b = eval(bottom, interp)?;
            Ok(tensor(&t, &b)?)
        }
    }
}
