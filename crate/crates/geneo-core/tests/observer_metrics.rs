//! Observer-relative distances against hand-computed instances.

use std::sync::Arc;

use geneo_core::dsl::{parse, typecheck, ComplexityAssignment, Interpretation};
use geneo_core::geo::{identity, Geo, GroupHom};
use geneo_core::metric::DistanceTable;
use geneo_core::observer::{
    cost, enumerate_crossed_pairs, equivariance_lower_bound, explained_at_level, fidelity,
    space_distance, surrogate_distance, symmetric_distance, Arrow, CrossedPair, EvaluationSet,
    Observer, TranslationCategory,
};
use geneo_core::{Carrier, FiniteGroup, GroupAction, PerceptionSpace, PseudoMetric};

fn tokens_trivial(id: &str, n: usize) -> Arc<PerceptionSpace> {
    PerceptionSpace::new(
        id,
        Carrier::tokens(n).unwrap(),
        PseudoMetric::Discrete,
        FiniteGroup::trivial(),
        GroupAction::Trivial,
    )
}

fn table_space(id: &str, rows: Vec<Vec<f64>>) -> Arc<PerceptionSpace> {
    PerceptionSpace::new(
        id,
        Carrier::tokens(rows.len()).unwrap(),
        PseudoMetric::ExplicitTable(DistanceTable::new(rows).unwrap()),
        FiniteGroup::trivial(),
        GroupAction::Trivial,
    )
}

fn identity_observer(objects: Vec<Arc<PerceptionSpace>>) -> Observer {
    Observer {
        translations: TranslationCategory::identities(objects).unwrap(),
        complexity: ComplexityAssignment::new(),
    }
}

#[test]
fn identity_only_category_yields_one_pair_on_matching_spaces() {
    let x = tokens_trivial("x", 3);
    let y = tokens_trivial("y", 2);
    let obs = identity_observer(vec![x.clone(), y.clone()]);
    let alpha = Geo::lookup(&x, &y, vec![0, 1, 0], GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x, &y, vec![1, 1, 0], GroupHom::identity(1)).unwrap();
    let pairs = enumerate_crossed_pairs(&obs, &alpha, &beta);
    assert_eq!(pairs.len(), 1);
}

#[test]
fn disjoint_spaces_have_no_pairs_and_infinite_distance() {
    let x1 = tokens_trivial("x1", 2);
    let x2 = tokens_trivial("x2", 2);
    let y = tokens_trivial("y", 2);
    let obs = identity_observer(vec![x1.clone(), x2.clone(), y.clone()]);
    let alpha = Geo::lookup(&x1, &y, vec![0, 1], GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x2, &y, vec![0, 1], GroupHom::identity(1)).unwrap();
    assert!(enumerate_crossed_pairs(&obs, &alpha, &beta).is_empty());
    let eval = EvaluationSet::whole_carrier(&x1, PseudoMetric::Discrete).unwrap();
    let d = surrogate_distance(&obs, &alpha, &beta, &eval).unwrap();
    assert!(d.value.is_infinite());
    assert!(d.best.is_none());
}

#[test]
fn two_forward_three_backward_arrows_give_six_pairs() {
    let x = tokens_trivial("x", 2);
    let y = tokens_trivial("y", 2);
    // Arrows: id_x plus one x-endomorphism (2 forward candidates), id_y plus
    // two y-endomorphisms (3 backward candidates).
    let arrows = vec![
        Arrow { id: "id_x".into(), geneo: identity(&x) },
        Arrow { id: "id_y".into(), geneo: identity(&y) },
        Arrow {
            id: "x_flip".into(),
            geneo: validated(Geo::lookup(&x, &x, vec![1, 0], GroupHom::identity(1)).unwrap()),
        },
        Arrow {
            id: "y_c0".into(),
            geneo: validated(Geo::lookup(&y, &y, vec![0, 0], GroupHom::identity(1)).unwrap()),
        },
        Arrow {
            id: "y_c1".into(),
            geneo: validated(Geo::lookup(&y, &y, vec![1, 1], GroupHom::identity(1)).unwrap()),
        },
    ];
    // Closure: flip;flip = id, constants absorb.
    let triples = vec![
        (0, 0, 0),
        (1, 1, 1),
        (2, 2, 0),
        (0, 2, 2),
        (2, 0, 2),
        (3, 3, 3),
        (4, 4, 4),
        (1, 3, 3),
        (3, 1, 3),
        (1, 4, 4),
        (4, 1, 4),
        (3, 4, 4),
        (4, 3, 3),
    ];
    let translations = TranslationCategory::new(vec![x.clone(), y.clone()], arrows, triples).unwrap();
    let obs = Observer { translations, complexity: ComplexityAssignment::new() };
    let alpha = Geo::lookup(&x, &y, vec![0, 1], GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x, &y, vec![1, 0], GroupHom::identity(1)).unwrap();
    assert_eq!(enumerate_crossed_pairs(&obs, &alpha, &beta).len(), 6);
}

fn validated(geo: Geo) -> geneo_core::geo::Geneo {
    match geneo_core::geo::check_nonexpansive(&geo, geneo_core::geo::PairProbe::Exhaustive).unwrap() {
        geneo_core::geo::NonexpansiveOutcome::Valid(g) => g,
        geneo_core::geo::NonexpansiveOutcome::Violations(v) => panic!("not a GENEO: {v:?}"),
    }
}

#[test]
fn cost_of_identical_geos_under_identity_pair_is_zero() {
    let x = tokens_trivial("x", 4);
    let y = tokens_trivial("y", 3);
    let alpha = Geo::lookup(&x, &y, vec![0, 1, 2, 0], GroupHom::identity(1)).unwrap();
    let pair = CrossedPair {
        forward: Arrow { id: "id_x".into(), geneo: identity(&x) },
        backward: Arrow { id: "id_y".into(), geneo: identity(&y) },
    };
    let eval = EvaluationSet::whole_carrier(&x, PseudoMetric::Discrete).unwrap();
    let c = cost(&pair, &alpha, &alpha, &eval).unwrap();
    assert_eq!(c.value(), 0.0);
}

#[test]
fn cost_counts_half_when_one_of_two_points_disagrees() {
    let x = tokens_trivial("x", 2);
    let y = tokens_trivial("y", 2);
    let alpha = Geo::lookup(&x, &y, vec![0, 1], GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x, &y, vec![0, 0], GroupHom::identity(1)).unwrap();
    let pair = CrossedPair {
        forward: Arrow { id: "id_x".into(), geneo: identity(&x) },
        backward: Arrow { id: "id_y".into(), geneo: identity(&y) },
    };
    let eval = EvaluationSet::whole_carrier(&x, PseudoMetric::Discrete).unwrap();
    let c = cost(&pair, &alpha, &beta, &eval).unwrap();
    assert_eq!(c.value(), 0.5);
}

#[test]
fn cost_averages_l1_gaps_in_index_order() {
    // Outputs in a metric space with L1-style distances baked into a table;
    // gaps across the four points are 0, 1, 2, 1.
    let x = tokens_trivial("x", 4);
    let y = table_space(
        "reals",
        vec![
            vec![0.0, 1.0, 2.0, 3.0],
            vec![1.0, 0.0, 1.0, 2.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![3.0, 2.0, 1.0, 0.0],
        ],
    );
    let alpha = Geo::lookup(&x, &y, vec![0, 1, 2, 3], GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x, &y, vec![0, 2, 0, 2], GroupHom::identity(1)).unwrap();
    let pair = CrossedPair {
        forward: Arrow { id: "id_x".into(), geneo: identity(&x) },
        backward: Arrow { id: "id_y".into(), geneo: identity(&y) },
    };
    let eval = EvaluationSet::whole_carrier(&x, y.metric.clone()).unwrap();
    let c = cost(&pair, &alpha, &beta, &eval).unwrap();
    // (0 + 1 + 2 + 1) / 4
    assert_eq!(c.value(), 1.0);
}

#[test]
fn surrogate_distance_picks_the_cheaper_collapsing_pair() {
    // Four points; beta disagrees with alpha on two of them under the
    // identity pair (cost 0.5), but collapsing the outputs to label 0 fixes
    // three of four (cost 0.25).
    let x = tokens_trivial("x", 4);
    let y = tokens_trivial("y", 2);
    let alpha = Geo::lookup(&x, &y, vec![0, 0, 0, 1], GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x, &y, vec![1, 0, 1, 1], GroupHom::identity(1)).unwrap();
    let collapse = validated(Geo::lookup(&y, &y, vec![0, 0], GroupHom::identity(1)).unwrap());
    let arrows = vec![
        Arrow { id: "id_x".into(), geneo: identity(&x) },
        Arrow { id: "id_y".into(), geneo: identity(&y) },
        Arrow { id: "y_collapse".into(), geneo: collapse },
    ];
    let triples = vec![(0, 0, 0), (1, 1, 1), (2, 2, 2), (1, 2, 2), (2, 1, 2)];
    let translations = TranslationCategory::new(vec![x.clone(), y.clone()], arrows, triples).unwrap();
    let obs = Observer { translations, complexity: ComplexityAssignment::new() };
    let eval = EvaluationSet::whole_carrier(&x, PseudoMetric::Discrete).unwrap();
    let d = surrogate_distance(&obs, &alpha, &beta, &eval).unwrap();
    // identity pair: disagreements at x0 and x2 -> 0.5;
    // collapsing pair: m(beta(x)) = 0 everywhere, disagrees only at x3 -> 0.25.
    assert_eq!(d.value.value(), 0.25);
    assert_eq!(d.best.as_ref().unwrap().backward.id, "y_collapse");
    let costs: Vec<f64> = d.per_pair.iter().map(|(_, c)| c.value()).collect();
    assert!(costs.contains(&0.5));
}

#[test]
fn surrogate_distance_of_a_geo_to_itself_is_zero() {
    let x = tokens_trivial("x", 3);
    let y = tokens_trivial("y", 3);
    let obs = identity_observer(vec![x.clone(), y.clone()]);
    let alpha = Geo::lookup(&x, &y, vec![2, 0, 1], GroupHom::identity(1)).unwrap();
    let eval = EvaluationSet::whole_carrier(&x, PseudoMetric::Discrete).unwrap();
    assert_eq!(surrogate_distance(&obs, &alpha, &alpha, &eval).unwrap().value.value(), 0.0);
}

#[test]
fn surrogate_distance_returns_the_minimum_over_all_pairs() {
    let x = tokens_trivial("x", 4);
    let y = tokens_trivial("y", 3);
    let alpha = Geo::lookup(&x, &y, vec![0, 1, 2, 0], GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x, &y, vec![1, 1, 2, 2], GroupHom::identity(1)).unwrap();
    let c0 = validated(Geo::lookup(&y, &y, vec![0, 0, 0], GroupHom::identity(1)).unwrap());
    let c1 = validated(Geo::lookup(&y, &y, vec![1, 1, 1], GroupHom::identity(1)).unwrap());
    let arrows = vec![
        Arrow { id: "id_x".into(), geneo: identity(&x) },
        Arrow { id: "id_y".into(), geneo: identity(&y) },
        Arrow { id: "c0".into(), geneo: c0 },
        Arrow { id: "c1".into(), geneo: c1 },
    ];
    let triples = vec![
        (0, 0, 0),
        (1, 1, 1),
        (2, 2, 2),
        (3, 3, 3),
        (1, 2, 2),
        (2, 1, 2),
        (1, 3, 3),
        (3, 1, 3),
        (2, 3, 3),
        (3, 2, 2),
    ];
    let translations = TranslationCategory::new(vec![x.clone(), y.clone()], arrows, triples).unwrap();
    let obs = Observer { translations, complexity: ComplexityAssignment::new() };
    let eval = EvaluationSet::whole_carrier(&x, PseudoMetric::Discrete).unwrap();
    let d = surrogate_distance(&obs, &alpha, &beta, &eval).unwrap();
    for (_, c) in &d.per_pair {
        assert!(c.value() >= d.value.value());
    }
}

#[test]
fn symmetric_distance_takes_the_worse_direction() {
    // Two output spaces whose separations differ. Maps into the widely
    // separated space must collapse to stay non-expansive, so the two
    // directed distances differ.
    let x = tokens_trivial("x", 2);
    let ya = table_space("ya", vec![vec![0.0, 0.8], vec![0.8, 0.0]]);
    let yb = table_space("yb", vec![vec![0.0, 0.2], vec![0.2, 0.0]]);
    let u = validated(Geo::lookup(&ya, &yb, vec![0, 1], GroupHom::identity(1)).unwrap());
    let u0 = validated(Geo::lookup(&ya, &yb, vec![0, 0], GroupHom::identity(1)).unwrap());
    let v = validated(Geo::lookup(&yb, &ya, vec![0, 0], GroupHom::identity(1)).unwrap());
    let ca = validated(Geo::lookup(&ya, &ya, vec![0, 0], GroupHom::identity(1)).unwrap());
    let cb = validated(Geo::lookup(&yb, &yb, vec![0, 0], GroupHom::identity(1)).unwrap());
    let arrows = vec![
        Arrow { id: "id_x".into(), geneo: identity(&x) },   // 0
        Arrow { id: "id_ya".into(), geneo: identity(&ya) }, // 1
        Arrow { id: "id_yb".into(), geneo: identity(&yb) }, // 2
        Arrow { id: "u".into(), geneo: u },                 // 3: ya -> yb
        Arrow { id: "v".into(), geneo: v },                 // 4: yb -> ya (collapse)
        Arrow { id: "ca".into(), geneo: ca },               // 5: ya -> ya (collapse)
        Arrow { id: "cb".into(), geneo: cb },               // 6: yb -> yb (collapse)
        Arrow { id: "u0".into(), geneo: u0 },               // 7: ya -> yb (collapse)
    ];
    let triples = vec![
        (0, 0, 0),
        (1, 1, 1),
        (2, 2, 2),
        (1, 3, 3),
        (3, 2, 3),
        (2, 4, 4),
        (4, 1, 4),
        (1, 5, 5),
        (5, 1, 5),
        (2, 6, 6),
        (6, 2, 6),
        (1, 7, 7),
        (7, 2, 7),
        (3, 4, 5),
        (4, 3, 6),
        (5, 5, 5),
        (6, 6, 6),
        (5, 3, 7),
        (3, 6, 7),
        (6, 4, 4),
        (4, 5, 4),
        (4, 7, 6),
        (5, 7, 7),
        (7, 4, 5),
        (7, 6, 7),
    ];
    let translations =
        TranslationCategory::new(vec![x.clone(), ya.clone(), yb.clone()], arrows, triples);
    let translations = match translations {
        Ok(t) => t,
        Err(e) => panic!("category construction failed: {e}"),
    };
    let obs = Observer { translations, complexity: ComplexityAssignment::new() };
    let alpha = Geo::lookup(&x, &ya, vec![0, 1], GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x, &yb, vec![1, 0], GroupHom::identity(1)).unwrap();
    let eval_a = EvaluationSet::whole_carrier(&x, ya.metric.clone()).unwrap();
    let eval_b = EvaluationSet::whole_carrier(&x, yb.metric.clone()).unwrap();
    // alpha -> beta: every backward arrow yb -> ya is the collapse v, so the
    // cost is avg(d(ya0, ya0), d(ya0, ya1)) = 0.4.
    let hab = surrogate_distance(&obs, &alpha, &beta, &eval_a).unwrap().value.value();
    assert_eq!(hab, 0.4);
    // beta -> alpha: backward u gives avg(d(u(0)=yb0, yb1), d(u(1)=yb1, yb0))
    // = 0.2; backward u0 gives avg(d(yb0, yb1), d(yb0, yb0)) = 0.1.
    let hba = surrogate_distance(&obs, &beta, &alpha, &eval_b).unwrap().value.value();
    assert_eq!(hba, 0.1);
    let sym = symmetric_distance(&obs, &alpha, &beta, &eval_a, &eval_b).unwrap();
    assert_eq!(sym.value(), 0.4);
}

#[test]
fn symmetric_distance_of_a_geo_with_itself_is_zero_and_inf_propagates() {
    let x = tokens_trivial("x", 2);
    let y = tokens_trivial("y", 2);
    let obs = identity_observer(vec![x.clone(), y.clone()]);
    let alpha = Geo::lookup(&x, &y, vec![0, 1], GroupHom::identity(1)).unwrap();
    let eval = EvaluationSet::whole_carrier(&x, PseudoMetric::Discrete).unwrap();
    assert_eq!(symmetric_distance(&obs, &alpha, &alpha, &eval, &eval).unwrap().value(), 0.0);

    let x2 = tokens_trivial("x2", 2);
    let obs2 = identity_observer(vec![x.clone(), x2.clone(), y.clone()]);
    let beta = Geo::lookup(&x2, &y, vec![0, 1], GroupHom::identity(1)).unwrap();
    let eval2 = EvaluationSet::whole_carrier(&x2, PseudoMetric::Discrete).unwrap();
    assert!(symmetric_distance(&obs2, &alpha, &beta, &eval, &eval2).unwrap().is_infinite());
}

#[test]
fn fidelity_is_the_agreement_rate() {
    let x = tokens_trivial("x", 1000);
    let y = tokens_trivial("labels", 10);
    let table_a: Vec<usize> = (0..1000).map(|i| i % 10).collect();
    // Disagree on exactly 75 points.
    let table_b: Vec<usize> = (0..1000).map(|i| if i < 75 { (i + 1) % 10 } else { i % 10 }).collect();
    let alpha = Geo::lookup(&x, &y, table_a, GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x, &y, table_b, GroupHom::identity(1)).unwrap();
    let dataset = x.carrier.elements().unwrap();
    assert_eq!(fidelity(&alpha, &alpha, &dataset).unwrap(), 1.0);
    let f = fidelity(&alpha, &beta, &dataset).unwrap();
    assert!((f - 0.925).abs() < 1e-12);
    // And fidelity = 1 - identity-pair discrete cost, exactly.
    let pair = CrossedPair {
        forward: Arrow { id: "id_x".into(), geneo: identity(&x) },
        backward: Arrow { id: "id_y".into(), geneo: identity(&y) },
    };
    let eval = EvaluationSet::whole_carrier(&x, PseudoMetric::Discrete).unwrap();
    let c = cost(&pair, &alpha, &beta, &eval).unwrap();
    assert_eq!(f, 1.0 - c.value());
}

#[test]
fn fidelity_requires_matching_spaces() {
    let x = tokens_trivial("x", 2);
    let x2 = tokens_trivial("x2", 2);
    let y = tokens_trivial("y", 2);
    let alpha = Geo::lookup(&x, &y, vec![0, 1], GroupHom::identity(1)).unwrap();
    let beta = Geo::lookup(&x2, &y, vec![0, 1], GroupHom::identity(1)).unwrap();
    assert!(fidelity(&alpha, &beta, &x.carrier.elements().unwrap()).is_err());
}

#[test]
fn invariant_map_has_zero_lower_bound() {
    let space = PerceptionSpace::new(
        "two_c2",
        Carrier::tokens(2).unwrap(),
        PseudoMetric::Discrete,
        FiniteGroup::cyclic(2),
        GroupAction::PermutationTable(vec![vec![0, 1], vec![1, 0]]),
    );
    let y = tokens_trivial("y", 2);
    let constant = Geo::lookup(&space, &y, vec![1, 1], GroupHom::annihilator(2, 0, 1)).unwrap();
    let dataset = space.carrier.elements().unwrap();
    assert_eq!(equivariance_lower_bound(&constant, &space, &dataset).unwrap(), 0.0);
}

#[test]
fn identity_map_on_swapped_pair_gives_bound_one_half() {
    // |G| = 2 (id + swap); f_beta = identity: f(swap*x) != f(x) for both x,
    // so |NE| = 2 and the bound is 2 / (2*2) = 0.5.
    let space = PerceptionSpace::new(
        "two_c2",
        Carrier::tokens(2).unwrap(),
        PseudoMetric::Discrete,
        FiniteGroup::cyclic(2),
        GroupAction::PermutationTable(vec![vec![0, 1], vec![1, 0]]),
    );
    let y = tokens_trivial("y", 2);
    let beta = Geo::lookup(&space, &y, vec![0, 1], GroupHom::annihilator(2, 0, 1)).unwrap();
    let dataset = space.carrier.elements().unwrap();
    let bound = equivariance_lower_bound(&beta, &space, &dataset).unwrap();
    assert_eq!(bound, 0.5);
}

#[test]
fn explained_at_level_checks_both_conditions() {
    let (sig, diagrams) = parse(
        "sort X; sort Y; gen blackbox : X -> Y; gen simple : X -> Y; \
         diagram a = blackbox; diagram b = simple;",
    )
    .unwrap();
    let x = tokens_trivial("X", 1000);
    let y = tokens_trivial("Y", 10);
    let mut interp = Interpretation::new();
    interp.bind_sort("X", x.clone());
    interp.bind_sort("Y", y.clone());
    let table_a: Vec<usize> = (0..1000).map(|i| i % 10).collect();
    let table_b: Vec<usize> = (0..1000).map(|i| if i < 75 { (i + 1) % 10 } else { i % 10 }).collect();
    interp
        .bind_generator(&sig, "blackbox", Geo::lookup(&x, &y, table_a, GroupHom::identity(1)).unwrap())
        .unwrap();
    interp
        .bind_generator(&sig, "simple", Geo::lookup(&x, &y, table_b, GroupHom::identity(1)).unwrap())
        .unwrap();
    let mut assignment = ComplexityAssignment::new();
    assignment.assign("blackbox", f64::INFINITY).unwrap();
    assignment.assign("simple", 1510.0).unwrap();
    let obs = Observer {
        translations: TranslationCategory::identities(vec![x.clone(), y.clone()]).unwrap(),
        complexity: assignment,
    };
    let a = typecheck(&diagrams["a"], &sig).unwrap();
    let b = typecheck(&diagrams["b"], &sig).unwrap();
    let eval = EvaluationSet::whole_carrier(&x, PseudoMetric::Discrete).unwrap();

    // beta = alpha at epsilon 0: explained (h = 0, complexities equal).
    let same = explained_at_level(&a, &a, &obs, &sig, &interp, &eval, 0.0).unwrap();
    assert!(same.explained);

    // Black-box alpha vs finite surrogate with h = 0.075 <= 0.1.
    let v = explained_at_level(&a, &b, &obs, &sig, &interp, &eval, 0.1).unwrap();
    assert!((v.surrogate_distance.value() - 0.075).abs() < 1e-12);
    assert!(v.explained);
    assert!(v.complexity_alpha.is_infinite());

    // h = 0.075 > epsilon 0.05: not explained regardless of complexity.
    let w = explained_at_level(&a, &b, &obs, &sig, &interp, &eval, 0.05).unwrap();
    assert!(!w.explained);
}

#[test]
fn space_distance_is_zero_on_equal_spaces_and_infinite_without_arrows() {
    let a = tokens_trivial("a", 3);
    let b = tokens_trivial("b", 3);
    let obs = identity_observer(vec![a.clone(), b.clone()]);
    let eval_a = EvaluationSet::whole_carrier(&a, a.metric.clone()).unwrap();
    let eval_b = EvaluationSet::whole_carrier(&b, b.metric.clone()).unwrap();
    assert_eq!(space_distance(&obs, &a, &a, &eval_a, &eval_a).unwrap().value(), 0.0);
    assert!(space_distance(&obs, &a, &b, &eval_a, &eval_b).unwrap().is_infinite());
}
