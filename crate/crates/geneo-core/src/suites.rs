//! Randomized property suites over brute-force-checkable finite instances.
//!
//! Each suite builds small perception-space universes with genuinely
//! isometric actions and genuinely non-expansive translation arrows, then
//! checks a law numerically, printing counterexamples verbatim on failure.
//!
//! Instance construction notes:
//!
//! - Carriers are `C_m × B` with the cyclic group acting on the first
//!   coordinate and the metric `max(c·[a≠a'], d_B(b,b'))`, which makes the
//!   action isometric by construction.
//! - Forward translation arrows have balanced fibers (every fiber has size
//!   `|dom| / |cod|`). Uniform averages push forward correctly only for such
//!   maps, and the triangle inequality of the surrogate distance depends on
//!   that; collapsing arrows are still exercised on the backward side, where
//!   only non-expansiveness is needed.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{
    complexity_of_ast, evaluate_semantics, typecheck, ComplexityAssignment, DiagramAst, GenDecl,
    Interpretation, Signature,
};
use crate::error::ObserverError;
use crate::geo::{Geo, GroupHom};
use crate::metric::{DistanceTable, PseudoMetric};
use crate::observer::{
    equivariance_lower_bound, surrogate_distance, Arrow, EvaluationSet, Observer,
    TranslationCategory,
};
use crate::space::{Carrier, FiniteGroup, GroupAction, PerceptionSpace};

/// Result of one suite run.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub instances: usize,
    pub failures: Vec<String>,
    pub info: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

/// An input space `C_m × B` along with the data needed to build arrows.
struct InputSpace {
    space: Arc<PerceptionSpace>,
    m: usize,
    base_size: usize,
    /// Pairwise base distances d_B.
    base_dist: Vec<Vec<f64>>,
}

fn gen_base_distances(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    // Random points in a small grid under L1; axioms hold by construction.
    let pts: Vec<(i64, i64)> = (0..n).map(|_| (rng.gen_range(0..6), rng.gen_range(0..6))).collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = 0.25 * ((pts[i].0 - pts[j].0).abs() + (pts[i].1 - pts[j].1).abs()) as f64;
        }
    }
    d
}

fn build_input_space(
    rng: &mut ChaCha8Rng,
    id: String,
    m: usize,
    base_size: usize,
    group_cost: f64,
) -> InputSpace {
    let n = m * base_size;
    let base_dist = gen_base_distances(rng, base_size);
    let mut rows = vec![vec![0.0; n]; n];
    for a1 in 0..m {
        for b1 in 0..base_size {
            for a2 in 0..m {
                for b2 in 0..base_size {
                    let sep = if a1 == a2 { 0.0 } else { group_cost };
                    rows[a1 * base_size + b1][a2 * base_size + b2] = sep.max(base_dist[b1][b2]);
                }
            }
        }
    }
    let table = DistanceTable::new(rows).expect("constructed metric satisfies the axioms");
    let mut action = Vec::with_capacity(m);
    for g in 0..m {
        let mut row = Vec::with_capacity(n);
        for a in 0..m {
            for b in 0..base_size {
                row.push(((a + g) % m) * base_size + b);
            }
        }
        action.push(row);
    }
    let space = PerceptionSpace::new(
        id,
        Carrier::tokens(n).expect("n >= 1"),
        PseudoMetric::ExplicitTable(table),
        FiniteGroup::cyclic(m),
        GroupAction::PermutationTable(action),
    );
    InputSpace { space, m, base_size, base_dist }
}

/// A fiber-balanced, non-expansive base map between two input spaces sharing
/// the same group. Returns the full-carrier lookup table.
fn gen_forward_arrow_table(
    rng: &mut ChaCha8Rng,
    from: &InputSpace,
    to: &InputSpace,
) -> Option<Vec<usize>> {
    if from.m != to.m || from.base_size % to.base_size != 0 {
        return None;
    }
    let q = from.base_size / to.base_size;
    'attempt: for _ in 0..40 {
        // Balanced assignment: each target base point receives exactly q
        // source base points.
        let mut slots: Vec<usize> = (0..from.base_size).map(|i| i / q).collect();
        for i in (1..slots.len()).rev() {
            let j = rng.gen_range(0..=i);
            slots.swap(i, j);
        }
        // Non-expansiveness of the base map.
        for b1 in 0..from.base_size {
            for b2 in 0..from.base_size {
                if to.base_dist[slots[b1]][slots[b2]] > from.base_dist[b1][b2] + 1e-12 {
                    continue 'attempt;
                }
            }
        }
        let shift = rng.gen_range(0..from.m);
        let mut table = Vec::with_capacity(from.m * from.base_size);
        for a in 0..from.m {
            for b in 0..from.base_size {
                table.push(((a + shift) % from.m) * to.base_size + slots[b]);
            }
        }
        return Some(table);
    }
    None
}

/// Universe for the metric suites: input spaces, output spaces, a closed
/// translation category, and GEOs to compare.
pub struct MetricInstance {
    pub observer: Observer,
    pub geos: Vec<Geo>,
}

fn saturate_closure(
    objects: Vec<Arc<PerceptionSpace>>,
    mut arrows: Vec<(String, Geo)>,
    cap: usize,
) -> Option<(Vec<(String, Geo)>, Vec<(usize, usize, usize)>)> {
    // Arrows here are all lookup tables, so extensional identity is table
    // equality. Saturate under composition, bounded by `cap`.
    fn table_of(geo: &Geo) -> Option<Vec<usize>> {
        let n = geo.dom.carrier.size()?;
        let mut t = Vec::with_capacity(n);
        for i in 0..n {
            let y = geo.apply(&geo.dom.carrier.element(i).ok()?).ok()?;
            t.push(geo.cod.carrier.index_of(&y).ok()?);
        }
        Some(t)
    }

    let mut triples = Vec::new();
    let mut done = false;
    while !done {
        done = true;
        let snapshot = arrows.len();
        for i in 0..snapshot {
            for j in 0..snapshot {
                if arrows[i].1.cod.id != arrows[j].1.dom.id {
                    continue;
                }
                if triples.iter().any(|&(a, b, _)| (a, b) == (i, j)) {
                    continue;
                }
                let composite = crate::geo::compose(&arrows[j].1, &arrows[i].1).ok()?;
                let ct = table_of(&composite)?;
                let found = arrows.iter().position(|(_, g)| {
                    g.dom.id == composite.dom.id
                        && g.cod.id == composite.cod.id
                        && table_of(g).as_ref() == Some(&ct)
                });
                match found {
                    Some(k) => triples.push((i, j, k)),
                    None => {
                        if arrows.len() >= cap {
                            return None;
                        }
                        let hom = composite.hom.clone();
                        let geo = Geo::lookup(&composite.dom, &composite.cod, ct, hom).ok()?;
                        arrows.push((format!("comp{}", arrows.len()), geo));
                        triples.push((i, j, arrows.len() - 1));
                        done = false;
                    }
                }
            }
        }
    }
    let _ = objects;
    Some((arrows, triples))
}

/// Builds a random metric instance: 1–2 input spaces, 1–2 output spaces, a
/// closed category of genuinely non-expansive arrows, and `geo_count` GEOs.
pub fn gen_metric_instance(rng: &mut ChaCha8Rng, geo_count: usize) -> MetricInstance {
    loop {
        if let Some(instance) = try_gen_metric_instance(rng, geo_count) {
            return instance;
        }
    }
}

fn try_gen_metric_instance(rng: &mut ChaCha8Rng, geo_count: usize) -> Option<MetricInstance> {
    let m = *[1usize, 2, 2, 3, 4].get(rng.gen_range(0..5)).unwrap();
    let group_cost = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
    let two_inputs = rng.gen_bool(0.6);
    let max_base = (6 / m).max(1);

    let b1 = rng.gen_range(1..=max_base);
    let x1 = build_input_space(rng, "X1".into(), m, b1, group_cost);
    let inputs = if two_inputs {
        // Second input with a base size dividing the first, so balanced
        // collapses are available.
        let divisors: Vec<usize> = (1..=b1).filter(|d| b1 % d == 0).collect();
        let b2 = divisors[rng.gen_range(0..divisors.len())];
        vec![x1, build_input_space(rng, "X2".into(), m, b2, group_cost)]
    } else {
        vec![x1]
    };

    let two_outputs = rng.gen_bool(0.5);
    let mut outputs = vec![PerceptionSpace::label_space("Y1", rng.gen_range(2..=4))];
    if two_outputs {
        outputs.push(PerceptionSpace::label_space("Y2", rng.gen_range(2..=4)));
    }

    let mut objects: Vec<Arc<PerceptionSpace>> = inputs.iter().map(|i| i.space.clone()).collect();
    objects.extend(outputs.iter().cloned());

    // Identities first, then a few generated arrows.
    let mut named: Vec<(String, Geo)> = objects
        .iter()
        .map(|o| (format!("id_{}", o.id), Geo::identity(o)))
        .collect();

    let forward_budget = rng.gen_range(0..=2);
    for _ in 0..forward_budget {
        let from = rng.gen_range(0..inputs.len());
        let to = rng.gen_range(0..inputs.len());
        let (from, to) = if inputs[from].base_size >= inputs[to].base_size { (from, to) } else { (to, from) };
        if let Some(table) = gen_forward_arrow_table(rng, &inputs[from], &inputs[to]) {
            let hom = GroupHom::identity(m);
            let geo =
                Geo::lookup(&inputs[from].space, &inputs[to].space, table, hom).ok()?;
            named.push((format!("f{}", named.len()), geo));
        }
    }

    let backward_budget = rng.gen_range(0..=2);
    for _ in 0..backward_budget {
        let from = rng.gen_range(0..outputs.len());
        let to = rng.gen_range(0..outputs.len());
        let nf = outputs[from].carrier.size().unwrap();
        let nt = outputs[to].carrier.size().unwrap();
        // Discrete-to-discrete maps are always non-expansive.
        let table: Vec<usize> = (0..nf).map(|_| rng.gen_range(0..nt)).collect();
        let hom = GroupHom::annihilator(1, 0, 1);
        let geo = Geo::lookup(&outputs[from], &outputs[to], table, hom).ok()?;
        named.push((format!("b{}", named.len()), geo));
    }

    let (arrows, triples) = saturate_closure(objects.clone(), named, 8)?;
    let arrows: Vec<Arrow> = arrows
        .into_iter()
        .map(|(id, geo)| {
            // All generated arrows are non-expansive by construction; record
            // an exhaustive check anyway so certificates are honest.
            match crate::geo::check_nonexpansive(&geo, crate::geo::PairProbe::Exhaustive) {
                Ok(crate::geo::NonexpansiveOutcome::Valid(geneo)) => Some(Arrow { id, geneo }),
                _ => None,
            }
        })
        .collect::<Option<Vec<_>>>()?;

    let translations = TranslationCategory::new(objects, arrows, triples).ok()?;
    let observer = Observer { translations, complexity: ComplexityAssignment::new() };

    // GEOs: orbit-constant lookups into output spaces (genuine GEOs via the
    // annihilator homomorphism).
    let mut geos = Vec::with_capacity(geo_count);
    for _ in 0..geo_count {
        let input = &inputs[rng.gen_range(0..inputs.len())];
        let output = &outputs[rng.gen_range(0..outputs.len())];
        let k = output.carrier.size().unwrap();
        let per_base: Vec<usize> = (0..input.base_size).map(|_| rng.gen_range(0..k)).collect();
        let mut table = Vec::with_capacity(input.m * input.base_size);
        for _a in 0..input.m {
            table.extend(per_base.iter().copied());
        }
        let hom = GroupHom::annihilator(input.m, 0, 1);
        geos.push(Geo::lookup(&input.space, output, table, hom).ok()?);
    }

    Some(MetricInstance { observer, geos })
}

fn full_carrier_eval(alpha: &Geo) -> Result<EvaluationSet, ObserverError> {
    EvaluationSet::whole_carrier(&alpha.dom, alpha.cod.metric.clone())
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

/// Reflexivity and triangle inequality of the surrogate distance.
pub fn hemi_metric_suite(seed: u64, instances: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut max_triangle_slack: f64 = f64::NEG_INFINITY;
    for idx in 0..instances {
        let instance = gen_metric_instance(&mut rng, 3);
        let obs = &instance.observer;
        let h = |a: &Geo, b: &Geo| -> Result<f64, ObserverError> {
            Ok(surrogate_distance(obs, a, b, &full_carrier_eval(a)?)?.value.value())
        };
        for (i, alpha) in instance.geos.iter().enumerate() {
            match h(alpha, alpha) {
                Ok(v) if v == 0.0 => {}
                Ok(v) => failures.push(format!("instance {idx}: h(geo{i}, geo{i}) = {v}, expected exactly 0")),
                Err(e) => failures.push(format!("instance {idx}: error computing h(geo{i},geo{i}): {e}")),
            }
        }
        for a in 0..instance.geos.len() {
            for b in 0..instance.geos.len() {
                for c in 0..instance.geos.len() {
                    let (ha_c, ha_b, hb_c) = match (
                        h(&instance.geos[a], &instance.geos[c]),
                        h(&instance.geos[a], &instance.geos[b]),
                        h(&instance.geos[b], &instance.geos[c]),
                    ) {
                        (Ok(x), Ok(y), Ok(z)) => (x, y, z),
                        _ => {
                            failures.push(format!("instance {idx}: error in triangle evaluation"));
                            continue;
                        }
                    };
                    if ha_b.is_finite() && hb_c.is_finite() {
                        max_triangle_slack = max_triangle_slack.max(ha_c - (ha_b + hb_c));
                    }
                    if ha_c > ha_b + hb_c + 1e-9 {
                        failures.push(format!(
                            "instance {idx}: triangle violated: h({a},{c}) = {ha_c} > h({a},{b}) + h({b},{c}) = {}",
                            ha_b + hb_c
                        ));
                    }
                }
            }
        }
    }
    SuiteReport {
        name: "hemi-metric",
        instances,
        failures,
        info: format!("max observed h(a,c) - (h(a,b)+h(b,c)) = {max_triangle_slack:.3e}"),
    }
}

/// Shrinking the arrow set can only increase the surrogate distance.
pub fn monotonicity_suite(seed: u64, instances: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for idx in 0..instances {
        let instance = gen_metric_instance(&mut rng, 2);
        let sup = &instance.observer;
        // Random closed subcategory: keep identities plus a random subset of
        // arrows, then close under composition within the supercategory.
        let arrow_count = sup.translations.arrows().len();
        let mut keep: Vec<usize> = (0..arrow_count)
            .filter(|&i| {
                matches!(sup.translations.arrow(i).geo().map, crate::geo::DataMap::Identity)
                    || rng.gen_bool(0.5)
            })
            .collect();
        loop {
            let mut grew = false;
            let snapshot = keep.clone();
            for &i in &snapshot {
                for &j in &snapshot {
                    if let Some(k) = sup.translations.compose_indices(i, j) {
                        if !keep.contains(&k) {
                            keep.push(k);
                            grew = true;
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let sub = match sup.translations.subcategory(&keep) {
            Ok(cat) => Observer { translations: cat, complexity: ComplexityAssignment::new() },
            Err(e) => {
                failures.push(format!("instance {idx}: subcategory construction failed: {e}"));
                continue;
            }
        };
        let alpha = &instance.geos[0];
        let beta = &instance.geos[1];
        let eval = match full_carrier_eval(alpha) {
            Ok(e) => e,
            Err(e) => {
                failures.push(format!("instance {idx}: {e}"));
                continue;
            }
        };
        let h_sub = surrogate_distance(&sub, alpha, beta, &eval).map(|d| d.value.value());
        let h_sup = surrogate_distance(sup, alpha, beta, &eval).map(|d| d.value.value());
        match (h_sub, h_sup) {
            (Ok(hs), Ok(ht)) => {
                checked += 1;
                if hs + 1e-12 < ht {
                    failures.push(format!(
                        "instance {idx}: h under subcategory = {hs} < h under supercategory = {ht}"
                    ));
                }
            }
            _ => failures.push(format!("instance {idx}: error computing distances")),
        }
    }
    SuiteReport {
        name: "monotonicity",
        instances,
        failures,
        info: format!("{checked} nested-category comparisons"),
    }
}

/// The equivariance-deficiency bound: with trivial translations and the
/// discrete output metric, the disagreement count over the dataset dominates
/// |NE| / (2|G|). The surrogate distance is an average, so it is rescaled by
/// |X| to the proof's pair-counting normalization before comparing.
pub fn lower_bound_suite(seed: u64, instances: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut max_gap: f64 = f64::NEG_INFINITY;
    for idx in 0..instances {
        let m = [1usize, 2, 3, 4][rng.gen_range(0..4)];
        let base = rng.gen_range(1..=(6 / m).max(1));
        let input = build_input_space(&mut rng, "X".into(), m, base, 1.0);
        let output = PerceptionSpace::label_space("Y", rng.gen_range(2..=4));
        let k = output.carrier.size().unwrap();
        let n = m * base;

        // Invariant reference classifier and an arbitrary surrogate.
        let per_base: Vec<usize> = (0..base).map(|_| rng.gen_range(0..k)).collect();
        let mut alpha_table = Vec::with_capacity(n);
        for _a in 0..m {
            alpha_table.extend(per_base.iter().copied());
        }
        let beta_table: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let hom = GroupHom::annihilator(m, 0, 1);
        let alpha = Geo::lookup(&input.space, &output, alpha_table, hom.clone()).unwrap();
        let beta = Geo::lookup(&input.space, &output, beta_table, hom).unwrap();

        let objects = vec![input.space.clone(), output.clone()];
        let translations = match TranslationCategory::identities(objects) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("instance {idx}: {e}"));
                continue;
            }
        };
        let obs = Observer { translations, complexity: ComplexityAssignment::new() };
        let eval = EvaluationSet::whole_carrier(&input.space, PseudoMetric::Discrete).unwrap();
        let h = match surrogate_distance(&obs, &alpha, &beta, &eval) {
            Ok(d) => d.value.value(),
            Err(e) => {
                failures.push(format!("instance {idx}: {e}"));
                continue;
            }
        };
        let dataset = input.space.carrier.elements().unwrap();
        let bound = match equivariance_lower_bound(&beta, &input.space, &dataset) {
            Ok(b) => b,
            Err(e) => {
                failures.push(format!("instance {idx}: {e}"));
                continue;
            }
        };
        let h_pairs = h * n as f64;
        max_gap = max_gap.max(bound - h_pairs);
        if h_pairs + 1e-12 < bound {
            failures.push(format!(
                "instance {idx}: |X|·h = {h_pairs} < |NE|/(2|G|) = {bound} (|X| = {n}, |G| = {m})"
            ));
        }
    }
    SuiteReport {
        name: "lower-bound",
        instances,
        failures,
        info: format!("max observed bound - |X|·h = {max_gap:.3e}"),
    }
}

// ---------------------------------------------------------------------------
// Functor-law suite
// ---------------------------------------------------------------------------

/// A randomly generated well-typed diagram with its interpretation data.
struct DiagramInstance {
    sig: Signature,
    interp: Interpretation,
    ast: DiagramAst,
    /// Sort sizes, used by the independent element-level oracle.
    sizes: HashMap<String, usize>,
    /// Generator lookup tables for the oracle.
    tables: HashMap<String, Vec<usize>>,
}

fn gen_diagram_instance(rng: &mut ChaCha8Rng) -> DiagramInstance {
    loop {
        if let Some(inst) = try_gen_diagram_instance(rng) {
            return inst;
        }
    }
}

fn try_gen_diagram_instance(rng: &mut ChaCha8Rng) -> Option<DiagramInstance> {
    let sort_count = rng.gen_range(1..=3);
    let mut sig = Signature::new();
    let mut sizes = HashMap::new();
    let mut interp = Interpretation::new();
    for s in 0..sort_count {
        let name = format!("S{s}");
        let size = rng.gen_range(2..=4);
        sig.declare_sort(name.clone()).unwrap();
        sizes.insert(name.clone(), size);
        interp.bind_sort(name.clone(), PerceptionSpace::label_space(name, size));
    }
    let sort_names: Vec<String> = (0..sort_count).map(|s| format!("S{s}")).collect();

    let mut tables: HashMap<String, Vec<usize>> = HashMap::new();
    let mut gen_count = 0usize;

    // Layered construction: each layer tiles the current word with factors.
    let mut word: Vec<String> =
        (0..rng.gen_range(1..=2)).map(|_| sort_names[rng.gen_range(0..sort_names.len())].clone()).collect();
    let mut layers: Vec<DiagramAst> = Vec::new();
    let layer_count = rng.gen_range(1..=3);
    for _ in 0..layer_count {
        let mut factors: Vec<DiagramAst> = Vec::new();
        let mut next_word: Vec<String> = Vec::new();
        let mut pos = 0usize;
        while pos < word.len() {
            let remaining = word.len() - pos;
            let choice = rng.gen_range(0..6);
            match choice {
                0 if remaining >= 2 => {
                    let (a, b) = (word[pos].clone(), word[pos + 1].clone());
                    factors.push(DiagramAst::Swap(a.clone(), b.clone()));
                    next_word.push(b);
                    next_word.push(a);
                    pos += 2;
                }
                1 => {
                    let a = word[pos].clone();
                    factors.push(DiagramAst::Copy(a.clone()));
                    next_word.push(a.clone());
                    next_word.push(a);
                    pos += 1;
                }
                2 if word.len() > 1 => {
                    let a = word[pos].clone();
                    factors.push(DiagramAst::Discard(a));
                    pos += 1;
                }
                3 => {
                    let a = word[pos].clone();
                    factors.push(DiagramAst::Id(a.clone()));
                    next_word.push(a);
                    pos += 1;
                }
                _ => {
                    // Fresh generator consuming 1-2 wires and emitting 1-2.
                    let take = rng.gen_range(1..=remaining.min(2));
                    let arity: Vec<String> = word[pos..pos + take].to_vec();
                    let coarity: Vec<String> = (0..rng.gen_range(1..=2))
                        .map(|_| sort_names[rng.gen_range(0..sort_names.len())].clone())
                        .collect();
                    let name = format!("g{gen_count}");
                    gen_count += 1;
                    let dom_size: usize = arity.iter().map(|s| sizes[s]).product();
                    let cod_size: usize = coarity.iter().map(|s| sizes[s]).product();
                    let table: Vec<usize> = (0..dom_size).map(|_| rng.gen_range(0..cod_size)).collect();
                    sig.declare_generator(
                        name.clone(),
                        GenDecl {
                            arity: arity.clone(),
                            coarity: coarity.clone(),
                            default_complexity: Some(rng.gen_range(0..20) as f64 / 2.0),
                        },
                    )
                    .unwrap();
                    let dom = interp.space_of_word(&arity).unwrap();
                    let cod = interp.space_of_word(&coarity).unwrap();
                    let geo = Geo::lookup(&dom, &cod, table.clone(), GroupHom::identity(1)).unwrap();
                    interp.bind_generator(&sig, name.clone(), geo).unwrap();
                    tables.insert(name.clone(), table);
                    factors.push(DiagramAst::Gen(name));
                    next_word.extend(coarity);
                    pos += take;
                }
            }
        }
        if factors.is_empty() {
            factors.push(DiagramAst::Empty);
        }
        // Random association of the parallel factors.
        layers.push(random_tree(rng, factors, true));
        word = next_word;
        // Keep intermediate carriers small enough for exhaustive checks.
        let carrier: usize = word.iter().map(|s| sizes[s]).product();
        if word.len() > 8 || carrier > 256 {
            return None;
        }
    }
    let ast = random_tree(rng, layers, false);
    Some(DiagramInstance { sig, interp, ast, sizes, tables })
}

/// Combines parts into a random binary tree of Par (parallel=true) or Seq.
fn random_tree(rng: &mut ChaCha8Rng, mut parts: Vec<DiagramAst>, parallel: bool) -> DiagramAst {
    while parts.len() > 1 {
        let i = rng.gen_range(0..parts.len() - 1);
        let right = parts.remove(i + 1);
        let left = std::mem::replace(&mut parts[i], DiagramAst::Empty);
        parts[i] = if parallel {
            DiagramAst::par(left, right)
        } else {
            DiagramAst::seq(left, right)
        };
    }
    parts.pop().unwrap_or(DiagramAst::Empty)
}

/// Element-level oracle: interprets a diagram directly as a function from
/// per-wire index vectors to per-wire index vectors, independently of the
/// GEO combinators.
fn oracle_eval(
    ast: &DiagramAst,
    inst: &DiagramInstance,
    input: &[usize],
    word: &[String],
) -> (Vec<usize>, Vec<String>) {
    match ast {
        DiagramAst::Gen(name) => {
            let decl = inst.sig.generator(name).unwrap();
            let mut flat = 0usize;
            for (sort, &idx) in decl.arity.iter().zip(input) {
                flat = flat * inst.sizes[sort] + idx;
            }
            let mut out_flat = inst.tables[name][flat];
            let mut out = vec![0usize; decl.coarity.len()];
            for i in (0..decl.coarity.len()).rev() {
                let size = inst.sizes[&decl.coarity[i]];
                out[i] = out_flat % size;
                out_flat /= size;
            }
            let _ = word;
            (out, decl.coarity.clone())
        }
        DiagramAst::Empty => (Vec::new(), Vec::new()),
        DiagramAst::Id(a) => (input.to_vec(), vec![a.clone()]),
        DiagramAst::Swap(a, b) => (vec![input[1], input[0]], vec![b.clone(), a.clone()]),
        DiagramAst::Copy(a) => (vec![input[0], input[0]], vec![a.clone(), a.clone()]),
        DiagramAst::Discard(_) => (Vec::new(), Vec::new()),
        DiagramAst::Seq(first, second) => {
            let (mid, mid_word) = oracle_eval(first, inst, input, word);
            oracle_eval(second, inst, &mid, &mid_word)
        }
        DiagramAst::Par(top, bottom) => {
            let top_typed = typecheck(top, &inst.sig).unwrap();
            let k = top_typed.input.len();
            let (mut out, mut out_word) = oracle_eval(top, inst, &input[..k], &word[..k.min(word.len())]);
            let (bout, bword) = oracle_eval(bottom, inst, &input[k..], &word[k.min(word.len())..]);
            out.extend(bout);
            out_word.extend(bword);
            (out, out_word)
        }
    }
}

/// Enumerates all rotations of Seq nodes (re-associations) of a diagram.
fn reassociate(ast: &DiagramAst) -> Vec<DiagramAst> {
    let mut variants = vec![ast.clone()];
    if let DiagramAst::Seq(a, b) = ast {
        // (a ; b) where a = (x ; y) can rotate to (x ; (y ; b)).
        if let DiagramAst::Seq(x, y) = &**a {
            variants.push(DiagramAst::seq((**x).clone(), DiagramAst::seq((**y).clone(), (**b).clone())));
        }
        if let DiagramAst::Seq(x, y) = &**b {
            variants.push(DiagramAst::seq(DiagramAst::seq((**a).clone(), (**x).clone()), (**y).clone()));
        }
    }
    variants
}

/// Functor laws: semantics respects re-association and factors through
/// composition; complexity is association-invariant and additive.
pub fn functor_law_suite(seed: u64, instances: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for idx in 0..instances {
        let inst = gen_diagram_instance(&mut rng);
        let typed = match typecheck(&inst.ast, &inst.sig) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("instance {idx}: generated diagram fails to typecheck: {e}"));
                continue;
            }
        };
        let assignment = ComplexityAssignment::new();
        let base_complexity = match complexity_of_ast(&inst.ast, &inst.sig, &assignment) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("instance {idx}: complexity error: {e}"));
                continue;
            }
        };

        // Oracle complexity: direct sum over generator occurrences.
        fn gen_sum(ast: &DiagramAst, sig: &Signature) -> f64 {
            match ast {
                DiagramAst::Gen(name) => sig.generator(name).unwrap().default_complexity.unwrap(),
                DiagramAst::Seq(a, b) | DiagramAst::Par(a, b) => gen_sum(a, sig) + gen_sum(b, sig),
                _ => 0.0,
            }
        }
        if base_complexity != gen_sum(&inst.ast, &inst.sig) {
            failures.push(format!("instance {idx}: complexity differs from generator-occurrence sum"));
        }

        for variant in reassociate(&inst.ast) {
            let vc = complexity_of_ast(&variant, &inst.sig, &assignment).unwrap_or(f64::NAN);
            if vc != base_complexity {
                failures.push(format!(
                    "instance {idx}: complexity changed under re-association: {base_complexity} vs {vc}"
                ));
            }
            let typed_variant = match typecheck(&variant, &inst.sig) {
                Ok(t) => t,
                Err(e) => {
                    failures.push(format!("instance {idx}: re-associated diagram fails typecheck: {e}"));
                    continue;
                }
            };
            let geo = match evaluate_semantics(&typed_variant, &inst.interp) {
                Ok(g) => g,
                Err(e) => {
                    failures.push(format!("instance {idx}: semantics error: {e}"));
                    continue;
                }
            };
            // Extensional agreement with the element-level oracle on every
            // domain element.
            let dom_sizes: Vec<usize> = typed.input.iter().map(|s| inst.sizes[s]).collect();
            let total: usize = dom_sizes.iter().product::<usize>().max(1);
            let dom_space = inst.interp.space_of_word(&typed.input).unwrap();
            let cod_space = inst.interp.space_of_word(&typed.output).unwrap();
            for flat in 0..total {
                let mut rem = flat;
                let mut wires = vec![0usize; dom_sizes.len()];
                for i in (0..dom_sizes.len()).rev() {
                    wires[i] = rem % dom_sizes[i];
                    rem /= dom_sizes[i];
                }
                let (oracle_out, _) = oracle_eval(&variant, &inst, &wires, &typed.input);
                let x = dom_space.carrier.element(flat).unwrap();
                let y = match geo.apply(&x) {
                    Ok(y) => y,
                    Err(e) => {
                        failures.push(format!("instance {idx}: evaluation error: {e}"));
                        break;
                    }
                };
                let got = cod_space.carrier.index_of(&y).unwrap();
                let mut expected = 0usize;
                for (sort, &idx) in typed.output.iter().zip(oracle_out.iter()) {
                    expected = expected * inst.sizes[sort] + idx;
                }
                if got != expected {
                    failures.push(format!(
                        "instance {idx}: semantics disagrees with oracle on element {flat}: got {got}, expected {expected}"
                    ));
                    break;
                }
            }
        }
    }
    SuiteReport { name: "functor-law", instances, failures, info: String::new() }
}


/// Dispatch by suite name (the model-training suites live in the model
/// crate and are dispatched by the CLI).
pub fn run_core_suite(name: &str, seed: u64, instances: usize) -> Option<SuiteReport> {
    match name {
        "hemi-metric" => Some(hemi_metric_suite(seed, instances)),
        "monotonicity" => Some(monotonicity_suite(seed, instances)),
        "lower-bound" => Some(lower_bound_suite(seed, instances)),
        "functor-law" => Some(functor_law_suite(seed, instances)),
        _ => None,
    }
}

/// Suite names owned by this crate.
pub const CORE_SUITES: &[&str] = &["hemi-metric", "monotonicity", "lower-bound", "functor-law"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::enumerate_crossed_pairs;

    #[test]
    fn metric_instances_have_identity_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let instance = gen_metric_instance(&mut rng, 2);
        let alpha = &instance.geos[0];
        let pairs = enumerate_crossed_pairs(&instance.observer, alpha, alpha);
        assert!(!pairs.is_empty());
    }

    #[test]
    fn small_suite_runs_clean() {
        assert!(hemi_metric_suite(3, 20).passed());
        assert!(monotonicity_suite(4, 10).passed());
        assert!(lower_bound_suite(5, 20).passed());
        assert!(functor_law_suite(6, 10).passed());
    }
}
