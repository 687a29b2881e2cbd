//! Observers: translation categories of GENEOs plus complexity assignments,
//! and the distances they induce between GEOs — the crossed-pair cost, the
//! surrogate hemi-metric, its symmetric variant, fidelity, the equivariance
//! lower bound, the explained-at-level predicate, and the induced distance
//! between perception spaces.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dsl::{complexity, ComplexityAssignment, Interpretation, Signature, TypedDiagram};
use crate::error::ObserverError;
use crate::geo::{compose, Geneo, Geo};
use crate::metric::{MetricValue, PseudoMetric, METRIC_TOL};
use crate::space::{Element, PerceptionSpace};

/// A named GENEO arrow of a translation category.
#[derive(Clone)]
pub struct Arrow {
    pub id: String,
    pub geneo: Geneo,
}

impl Arrow {
    pub fn geo(&self) -> &Geo {
        &self.geneo.geo
    }
}

/// A finite category of translation GENEOs: objects are perception spaces,
/// arrows carry certificates, and composition is given by a closure table
/// validated at construction.
pub struct TranslationCategory {
    objects: Vec<Arc<PerceptionSpace>>,
    arrows: Vec<Arrow>,
    /// (first, second) -> composite, where `first` runs before `second`.
    closure: HashMap<(usize, usize), usize>,
    /// Conditions that could not be checked (e.g. measure bookkeeping on
    /// intensional carriers), recorded instead of silently dropped.
    pub skipped_checks: Vec<String>,
}

impl TranslationCategory {
    /// Builds and validates a category. `closure` lists triples
    /// `(i, j, k)` meaning arrows[i] followed by arrows[j] equals arrows[k].
    pub fn new(
        objects: Vec<Arc<PerceptionSpace>>,
        arrows: Vec<Arrow>,
        closure_triples: Vec<(usize, usize, usize)>,
    ) -> Result<TranslationCategory, ObserverError> {
        let mut skipped_checks = Vec::new();

        let object_ids: Vec<&str> = objects.iter().map(|o| o.id.as_str()).collect();
        for arrow in &arrows {
            if !object_ids.contains(&arrow.geo().dom.id.as_str())
                || !object_ids.contains(&arrow.geo().cod.id.as_str())
            {
                return Err(ObserverError::Category(format!(
                    "arrow '{}' has endpoints outside the object set",
                    arrow.id
                )));
            }
        }

        // Every object needs its identity arrow.
        let mut identity_of: HashMap<String, usize> = HashMap::new();
        for (i, arrow) in arrows.iter().enumerate() {
            if matches!(arrow.geo().map, crate::geo::DataMap::Identity)
                && arrow.geo().dom.id == arrow.geo().cod.id
            {
                identity_of.insert(arrow.geo().dom.id.clone(), i);
            }
        }
        for object in &objects {
            if !identity_of.contains_key(&object.id) {
                return Err(ObserverError::Category(format!(
                    "missing identity arrow for object '{}'",
                    object.id
                )));
            }
        }

        let mut closure = HashMap::new();
        for (i, j, k) in closure_triples {
            if i >= arrows.len() || j >= arrows.len() || k >= arrows.len() {
                return Err(ObserverError::Category("closure triple index out of range".into()));
            }
            closure.insert((i, j), k);
        }

        // Closure totality and endpoint sanity for every composable pair.
        for i in 0..arrows.len() {
            for j in 0..arrows.len() {
                if arrows[i].geo().cod.id != arrows[j].geo().dom.id {
                    continue;
                }
                let k = *closure.get(&(i, j)).ok_or_else(|| {
                    ObserverError::Category(format!(
                        "category not closed: no composite declared for '{}' ; '{}'",
                        arrows[i].id, arrows[j].id
                    ))
                })?;
                let composite = &arrows[k];
                if composite.geo().dom.id != arrows[i].geo().dom.id
                    || composite.geo().cod.id != arrows[j].geo().cod.id
                {
                    return Err(ObserverError::Category(format!(
                        "composite '{}' of '{}' ; '{}' has wrong endpoints",
                        composite.id, arrows[i].id, arrows[j].id
                    )));
                }
            }
        }

        // Unit laws against the identity arrows.
        for (i, arrow) in arrows.iter().enumerate() {
            let id_dom = identity_of[&arrow.geo().dom.id];
            let id_cod = identity_of[&arrow.geo().cod.id];
            if closure.get(&(id_dom, i)) != Some(&i) || closure.get(&(i, id_cod)) != Some(&i) {
                return Err(ObserverError::Category(format!(
                    "identity laws fail in the closure table at arrow '{}'",
                    arrow.id
                )));
            }
        }

        // Associativity of the declared closure, exhaustively over the
        // finite arrow list.
        for i in 0..arrows.len() {
            for j in 0..arrows.len() {
                let Some(&ij) = closure.get(&(i, j)) else { continue };
                for k in 0..arrows.len() {
                    let Some(&jk) = closure.get(&(j, k)) else { continue };
                    let left = closure.get(&(ij, k));
                    let right = closure.get(&(i, jk));
                    if left != right {
                        return Err(ObserverError::Category(format!(
                            "closure not associative at ('{}','{}','{}')",
                            arrows[i].id, arrows[j].id, arrows[k].id
                        )));
                    }
                }
            }
        }

        // Declared composites must agree extensionally with actual
        // composition, on finite carriers exhaustively, on image carriers by
        // probing.
        for (&(i, j), &k) in &closure {
            let actual = compose(arrows[j].geo(), arrows[i].geo())?;
            let declared = arrows[k].geo();
            if actual.dom.carrier.is_finite() {
                if !crate::geo::extensionally_equal(&actual, declared)? {
                    return Err(ObserverError::Category(format!(
                        "declared composite '{}' disagrees with '{}' ; '{}'",
                        arrows[k].id, arrows[i].id, arrows[j].id
                    )));
                }
            } else {
                let probes = image_probes(&actual.dom, 3);
                for x in &probes {
                    let ya = actual.apply(x)?;
                    let yb = declared.apply(x)?;
                    if actual.cod.distance(&ya, &yb)?.value() > METRIC_TOL {
                        return Err(ObserverError::Category(format!(
                            "declared composite '{}' disagrees with '{}' ; '{}' on a probe image",
                            arrows[k].id, arrows[i].id, arrows[j].id
                        )));
                    }
                }
            }
        }

        // Uniform-measure bookkeeping: on finite carriers the image of the
        // carrier cannot outgrow the carrier; elsewhere the condition is
        // recorded as skipped.
        for arrow in &arrows {
            let geo = arrow.geo();
            match geo.dom.carrier.size() {
                Some(n) => {
                    let mut image: Vec<usize> = Vec::new();
                    for x in geo.dom.carrier.elements()? {
                        let y = geo.apply(&x)?;
                        let idx = geo.cod.carrier.index_of(&y)?;
                        if !image.contains(&idx) {
                            image.push(idx);
                        }
                    }
                    if image.len() > n {
                        return Err(ObserverError::Category(format!(
                            "arrow '{}' image exceeds carrier size",
                            arrow.id
                        )));
                    }
                }
                None => skipped_checks
                    .push(format!("measure-decreasing check skipped for intensional arrow '{}'", arrow.id)),
            }
        }

        Ok(TranslationCategory { objects, arrows, closure, skipped_checks })
    }

    /// Identity-only category over the given objects.
    pub fn identities(objects: Vec<Arc<PerceptionSpace>>) -> Result<TranslationCategory, ObserverError> {
        let arrows: Vec<Arrow> = objects
            .iter()
            .map(|o| Arrow { id: format!("id_{}", o.id), geneo: crate::geo::identity(o) })
            .collect();
        let triples = (0..arrows.len()).map(|i| (i, i, i)).collect();
        TranslationCategory::new(objects, arrows, triples)
    }

    pub fn objects(&self) -> &[Arc<PerceptionSpace>] {
        &self.objects
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn arrow(&self, index: usize) -> &Arrow {
        &self.arrows[index]
    }

    pub fn compose_indices(&self, first: usize, second: usize) -> Option<usize> {
        self.closure.get(&(first, second)).copied()
    }

    /// A new category restricted to a subset of arrow indices; fails unless
    /// the subset is itself closed and contains all identities.
    pub fn subcategory(&self, keep: &[usize]) -> Result<TranslationCategory, ObserverError> {
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        let remap: HashMap<usize, usize> = kept.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let arrows: Vec<Arrow> = kept.iter().map(|&i| self.arrows[i].clone()).collect();
        let mut triples = Vec::new();
        for &i in &kept {
            for &j in &kept {
                if let Some(&k) = self.closure.get(&(i, j)) {
                    let Some(&nk) = remap.get(&k) else {
                        return Err(ObserverError::Category(
                            "arrow subset is not closed under composition".into(),
                        ));
                    };
                    triples.push((remap[&i], remap[&j], nk));
                }
            }
        }
        TranslationCategory::new(self.objects.clone(), arrows, triples)
    }
}

fn image_probes(space: &PerceptionSpace, count: usize) -> Vec<Element> {
    use rand::{Rng, SeedableRng};
    let (h, w) = match &space.carrier {
        crate::space::Carrier::IntensionalImages { height, width } => (*height, *width),
        _ => return Vec::new(),
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xc105);
    (0..count)
        .map(|_| {
            let pixels = (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect();
            Element::Image(crate::space::ImageData::new(h, w, pixels).expect("in range"))
        })
        .collect()
}

/// An observer: a translation category plus a complexity assignment on
/// generators.
pub struct Observer {
    pub translations: TranslationCategory,
    pub complexity: ComplexityAssignment,
}

/// A forward arrow on inputs and a backward arrow on outputs, used to compare
/// two GEOs across spaces. Arrows run in opposite directions.
#[derive(Clone)]
pub struct CrossedPair {
    pub forward: Arrow,
    pub backward: Arrow,
}

/// Finite evaluation data and the output metric to compare codomain elements
/// with.
pub struct EvaluationSet {
    dataset: Vec<Element>,
    output_metric: PseudoMetric,
}

impl EvaluationSet {
    pub fn new(dataset: Vec<Element>, output_metric: PseudoMetric) -> Result<EvaluationSet, ObserverError> {
        if dataset.is_empty() {
            return Err(ObserverError::EmptyEvaluationSet);
        }
        Ok(EvaluationSet { dataset, output_metric })
    }

    /// The whole finite carrier of a space, under a chosen output metric.
    pub fn whole_carrier(
        space: &PerceptionSpace,
        output_metric: PseudoMetric,
    ) -> Result<EvaluationSet, ObserverError> {
        let dataset = space.carrier.elements().map_err(crate::error::GeoError::from)?;
        EvaluationSet::new(dataset, output_metric)
    }

    pub fn dataset(&self) -> &[Element] {
        &self.dataset
    }

    pub fn output_metric(&self) -> &PseudoMetric {
        &self.output_metric
    }
}

/// All crossed pairs (l, m) available in the observer's category for
/// comparing `beta` against `alpha`: l translates dom(α) to dom(β) and m
/// translates cod(β) back to cod(α). Declaration order, forward-major.
pub fn enumerate_crossed_pairs(obs: &Observer, alpha: &Geo, beta: &Geo) -> Vec<CrossedPair> {
    let arrows = obs.translations.arrows();
    let mut pairs = Vec::new();
    for l in arrows {
        if l.geo().dom.id != alpha.dom.id || l.geo().cod.id != beta.dom.id {
            continue;
        }
        for m in arrows {
            if m.geo().dom.id != beta.cod.id || m.geo().cod.id != alpha.cod.id {
                continue;
            }
            pairs.push(CrossedPair { forward: l.clone(), backward: m.clone() });
        }
    }
    pairs
}

/// The functional cost of a crossed pair: the uniform average, over the
/// evaluation set, of the output-metric gap between `m∘f_β∘l` and `f_α`.
/// Summation is in dataset index order.
pub fn cost(
    pair: &CrossedPair,
    alpha: &Geo,
    beta: &Geo,
    eval: &EvaluationSet,
) -> Result<MetricValue, ObserverError> {
    let l = pair.forward.geo();
    let m = pair.backward.geo();
    if l.dom.id != alpha.dom.id
        || l.cod.id != beta.dom.id
        || m.dom.id != beta.cod.id
        || m.cod.id != alpha.cod.id
    {
        return Err(ObserverError::SpaceMismatch(format!(
            "crossed pair ('{}', '{}') does not connect '{}' and '{}'",
            pair.forward.id, pair.backward.id, alpha.dom.id, beta.dom.id
        )));
    }
    let carrier = &alpha.cod.carrier;
    let metric = &eval.output_metric;
    let gaps: Vec<f64> = if eval.dataset.len() >= 64 {
        eval.dataset
            .par_iter()
            .map(|x| -> Result<f64, ObserverError> {
                let surrogate = m.apply(&beta.apply(&l.apply(x)?)?)?;
                let reference = alpha.apply(x)?;
                Ok(metric.distance(carrier, &surrogate, &reference)?.value())
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        eval.dataset
            .iter()
            .map(|x| -> Result<f64, ObserverError> {
                let surrogate = m.apply(&beta.apply(&l.apply(x)?)?)?;
                let reference = alpha.apply(x)?;
                Ok(metric.distance(carrier, &surrogate, &reference)?.value())
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let sum: f64 = gaps.iter().sum();
    Ok(MetricValue::from_nonneg(sum / eval.dataset.len() as f64))
}

/// Result of a surrogate-distance computation.
pub struct SurrogateDistance {
    pub value: MetricValue,
    /// The minimizing pair, if any pair exists. Ties break toward the pair
    /// enumerated first.
    pub best: Option<CrossedPair>,
    /// Every enumerated pair with its cost, in enumeration order.
    pub per_pair: Vec<(CrossedPair, MetricValue)>,
}

/// The surrogate distance of `beta` from `alpha`: the minimum crossed-pair
/// cost, or +∞ when no pair exists.
pub fn surrogate_distance(
    obs: &Observer,
    alpha: &Geo,
    beta: &Geo,
    eval: &EvaluationSet,
) -> Result<SurrogateDistance, ObserverError> {
    let pairs = enumerate_crossed_pairs(obs, alpha, beta);
    let mut per_pair = Vec::with_capacity(pairs.len());
    let mut best: Option<(usize, MetricValue)> = None;
    for (i, pair) in pairs.iter().enumerate() {
        let c = cost(pair, alpha, beta, eval)?;
        if best.map_or(true, |(_, bc)| c < bc) {
            best = Some((i, c));
        }
        per_pair.push((pair.clone(), c));
    }
    match best {
        Some((i, value)) => Ok(SurrogateDistance { value, best: Some(pairs[i].clone()), per_pair }),
        None => Ok(SurrogateDistance { value: MetricValue::INFINITE, best: None, per_pair }),
    }
}

/// Symmetrized surrogate distance: the max of the two directed values.
pub fn symmetric_distance(
    obs: &Observer,
    alpha: &Geo,
    beta: &Geo,
    eval_alpha: &EvaluationSet,
    eval_beta: &EvaluationSet,
) -> Result<MetricValue, ObserverError> {
    let ab = surrogate_distance(obs, alpha, beta, eval_alpha)?.value;
    let ba = surrogate_distance(obs, beta, alpha, eval_beta)?.value;
    Ok(ab.max(ba))
}

/// Agreement rate between two GEOs on the same spaces: one minus the
/// identity-pair cost under the discrete output metric.
pub fn fidelity(alpha: &Geo, beta: &Geo, dataset: &[Element]) -> Result<f64, ObserverError> {
    if alpha.dom.id != beta.dom.id || alpha.cod.id != beta.cod.id {
        return Err(ObserverError::SpaceMismatch(format!(
            "fidelity needs matching spaces, got '{}' -> '{}' vs '{}' -> '{}'",
            alpha.dom.id, alpha.cod.id, beta.dom.id, beta.cod.id
        )));
    }
    if dataset.is_empty() {
        return Err(ObserverError::EmptyEvaluationSet);
    }
    let carrier = &alpha.cod.carrier;
    let gaps: Vec<f64> = dataset
        .par_iter()
        .map(|x| -> Result<f64, ObserverError> {
            let ya = alpha.apply(x)?;
            let yb = beta.apply(x)?;
            Ok(PseudoMetric::Discrete.distance(carrier, &yb, &ya)?.value())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sum: f64 = gaps.iter().sum();
    Ok(1.0 - sum / dataset.len() as f64)
}

/// Brute-force equivariance deficiency bound.
///
/// Counts NE = {(g, x) : f_β(x) ≠ f_β(g*x)} over the acting space's whole
/// group and the given dataset and returns |NE| / (2·|G|). The proof behind
/// the bound counts disagreements over G×X, so the comparable surrogate
/// quantity is the discrete-metric cost over the same dataset rescaled by
/// |X| (see the verification suites).
pub fn equivariance_lower_bound(
    beta: &Geo,
    acting_space: &PerceptionSpace,
    dataset: &[Element],
) -> Result<f64, ObserverError> {
    if dataset.is_empty() {
        return Err(ObserverError::EmptyEvaluationSet);
    }
    let carrier = &beta.cod.carrier;
    let order = acting_space.group.order();
    let counts: Vec<usize> = acting_space
        .group
        .elements()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&g| -> Result<usize, ObserverError> {
            let mut ne = 0usize;
            for x in dataset {
                let moved = acting_space.act(g, x)?;
                let y1 = beta.apply(x)?;
                let y2 = beta.apply(&moved)?;
                if PseudoMetric::Discrete.distance(carrier, &y1, &y2)?.value() > METRIC_TOL {
                    ne += 1;
                }
            }
            Ok(ne)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ne: usize = counts.iter().sum();
    Ok(ne as f64 / (2.0 * order as f64))
}

/// Verdict of the explained-at-level-ε predicate.
#[derive(Debug, Clone)]
pub struct ExplanationVerdict {
    pub surrogate_distance: MetricValue,
    pub complexity_alpha: f64,
    pub complexity_beta: f64,
    pub epsilon: f64,
    pub explained: bool,
}

/// `beta` explains `alpha` at level ε iff the surrogate distance is at most ε
/// and beta's diagram complexity does not exceed alpha's.
#[allow(clippy::too_many_arguments)]
pub fn explained_at_level(
    alpha_diagram: &TypedDiagram,
    beta_diagram: &TypedDiagram,
    obs: &Observer,
    sig: &Signature,
    interp: &Interpretation,
    eval: &EvaluationSet,
    epsilon: f64,
) -> Result<ExplanationVerdict, ObserverError> {
    let alpha = crate::dsl::evaluate_semantics(alpha_diagram, interp)?;
    let beta = crate::dsl::evaluate_semantics(beta_diagram, interp)?;
    let h = surrogate_distance(obs, &alpha, &beta, eval)?.value;
    let complexity_alpha = complexity(alpha_diagram, sig, &obs.complexity)?;
    let complexity_beta = complexity(beta_diagram, sig, &obs.complexity)?;
    Ok(ExplanationVerdict {
        surrogate_distance: h,
        complexity_alpha,
        complexity_beta,
        epsilon,
        explained: h.value() <= epsilon && complexity_beta <= complexity_alpha,
    })
}

/// Distance between two perception spaces: for each direction, the cheapest
/// round trip through the category's arrows measured by average displacement,
/// then the max of the two directions. Equals the symmetric surrogate
/// distance between the identity GEOs of the two spaces.
pub fn space_distance(
    obs: &Observer,
    a: &Arc<PerceptionSpace>,
    b: &Arc<PerceptionSpace>,
    eval_a: &EvaluationSet,
    eval_b: &EvaluationSet,
) -> Result<MetricValue, ObserverError> {
    let id_a = Geo::identity(a);
    let id_b = Geo::identity(b);
    let ab = surrogate_distance(obs, &id_a, &id_b, eval_a)?.value;
    let ba = surrogate_distance(obs, &id_b, &id_a, eval_b)?.value;
    Ok(ab.max(ba))
}
