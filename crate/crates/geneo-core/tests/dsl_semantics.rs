//! Diagram semantics and complexity against hand-computed oracles.

use std::sync::Arc;

use geneo_core::dsl::{
    complexity, evaluate_semantics, parse, print_ast, typecheck, ComplexityAssignment, DiagramAst,
    Interpretation,
};
use geneo_core::geo::{compose, extensionally_equal, Geo, GroupHom};
use geneo_core::{Carrier, FiniteGroup, GroupAction, PerceptionSpace, PseudoMetric};

use proptest::prelude::*;

fn tokens_trivial(id: &str, n: usize) -> Arc<PerceptionSpace> {
    PerceptionSpace::new(
        id,
        Carrier::tokens(n).unwrap(),
        PseudoMetric::Discrete,
        FiniteGroup::trivial(),
        GroupAction::Trivial,
    )
}

#[test]
fn identity_diagram_evaluates_to_the_identity() {
    let (sig, diagrams) = parse("sort A; diagram d = id[A];").unwrap();
    let typed = typecheck(&diagrams["d"], &sig).unwrap();
    let mut interp = Interpretation::new();
    let space = tokens_trivial("A", 4);
    interp.bind_sort("A", space.clone());
    let geo = evaluate_semantics(&typed, &interp).unwrap();
    assert!(extensionally_equal(&geo, &Geo::identity(&space)).unwrap());
}

#[test]
fn seq_semantics_equals_index_chased_composition() {
    let (sig, diagrams) = parse("sort A; gen f : A -> A; gen g : A -> A; diagram d = f ; g;").unwrap();
    let typed = typecheck(&diagrams["d"], &sig).unwrap();
    let space = tokens_trivial("A", 3);
    let mut interp = Interpretation::new();
    interp.bind_sort("A", space.clone());
    let f = Geo::lookup(&space, &space, vec![1, 2, 0], GroupHom::identity(1)).unwrap();
    let g = Geo::lookup(&space, &space, vec![0, 0, 2], GroupHom::identity(1)).unwrap();
    interp.bind_generator(&sig, "f", f.clone()).unwrap();
    interp.bind_generator(&sig, "g", g.clone()).unwrap();
    let geo = evaluate_semantics(&typed, &interp).unwrap();
    // Brute force all three inputs through the tables by hand:
    // f = [1,2,0], g = [0,0,2]  =>  g(f(x)) = [0, 2, 0]
    for (x, want) in [(0usize, 0usize), (1, 2), (2, 0)] {
        let y = geo.apply(&geneo_core::Element::Point(x)).unwrap();
        assert_eq!(y, geneo_core::Element::Point(want));
    }
    assert!(extensionally_equal(&geo, &compose(&g, &f).unwrap()).unwrap());
}

#[test]
fn copy_is_natural_for_lookup_maps() {
    // copy ; (f * f)  ==  f ; copy, extensionally.
    let (sig, diagrams) = parse(
        "sort A; sort B; gen f : A -> B; diagram lhs = copy[A] ; f * f; diagram rhs = f ; copy[B];",
    )
    .unwrap();
    let a = tokens_trivial("A", 4);
    let b = tokens_trivial("B", 3);
    let mut interp = Interpretation::new();
    interp.bind_sort("A", a.clone());
    interp.bind_sort("B", b.clone());
    let f = Geo::lookup(&a, &b, vec![2, 1, 1, 0], GroupHom::identity(1)).unwrap();
    interp.bind_generator(&sig, "f", f).unwrap();
    let lhs = evaluate_semantics(&typecheck(&diagrams["lhs"], &sig).unwrap(), &interp).unwrap();
    let rhs = evaluate_semantics(&typecheck(&diagrams["rhs"], &sig).unwrap(), &interp).unwrap();
    assert!(extensionally_equal(&lhs, &rhs).unwrap());
}

#[test]
fn pattern_classifier_diagram_counts_only_the_head_parameters() {
    // A wide pattern-matching front end feeding one linear head: match and
    // pool stages cost 0, the head carries the parameter count.
    let patterns = 500usize;
    let mut src = String::from("sort Img; sort Map; sort Feat; sort Scores;\n");
    src.push_str("gen maxpool : Map -> Feat @0;\n");
    for i in 0..patterns {
        src.push_str(&format!("gen match{i} : Img -> Map @0;\n"));
    }
    // Head consumes the concatenated features.
    src.push_str("gen head : ");
    let feats = vec!["Feat"; patterns].join("*");
    src.push_str(&feats);
    src.push_str(" -> Scores @5010;\n");
    let (sig, _) = parse(&src).unwrap();

    // Build a copy chain Img -> Img^500: at width k, copy the first wire and
    // pass the other k-1 through.
    let mut fanout = DiagramAst::Copy("Img".into());
    for width in 2..patterns {
        let mut widen = DiagramAst::Copy("Img".into());
        for _ in 0..width - 1 {
            widen = DiagramAst::par(widen, DiagramAst::Id("Img".into()));
        }
        fanout = DiagramAst::seq(fanout, widen);
    }
    let mut stage = DiagramAst::seq(DiagramAst::Gen("match0".into()), DiagramAst::Gen("maxpool".into()));
    for i in 1..patterns {
        stage = DiagramAst::par(
            stage,
            DiagramAst::seq(DiagramAst::Gen(format!("match{i}")), DiagramAst::Gen("maxpool".into())),
        );
    }
    let ast = DiagramAst::seq(DiagramAst::seq(fanout, stage), DiagramAst::Gen("head".into()));
    let typed = typecheck(&ast, &sig).unwrap();
    assert_eq!(typed.input, vec!["Img".to_string()]);
    assert_eq!(typed.output, vec!["Scores".to_string()]);
    let c = complexity(&typed, &sig, &ComplexityAssignment::new()).unwrap();
    assert_eq!(c, 5010.0);
}

#[test]
fn complexity_is_strictly_monotone_in_paid_par_branches() {
    let (sig, diagrams) =
        parse("sort A; gen f : A -> A @2; gen pricey : A -> A @0.5; diagram d = f;").unwrap();
    let base = typecheck(&diagrams["d"], &sig).unwrap();
    let c0 = complexity(&base, &sig, &ComplexityAssignment::new()).unwrap();
    let wider = typecheck(
        &DiagramAst::par(base.ast.clone(), DiagramAst::Gen("pricey".into())),
        &sig,
    )
    .unwrap();
    let c1 = complexity(&wider, &sig, &ComplexityAssignment::new()).unwrap();
    assert!(c1 > c0);
    assert_eq!(c1, c0 + 0.5);
}

fn arb_word(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(prop_oneof![Just("A".to_string()), Just("B".to_string())], 0..=max_len)
}

fn arb_ast(depth: u32) -> impl Strategy<Value = DiagramAst> {
    let leaf = prop_oneof![
        Just(DiagramAst::Empty),
        Just(DiagramAst::Id("A".into())),
        Just(DiagramAst::Id("B".into())),
        Just(DiagramAst::Swap("A".into(), "B".into())),
        Just(DiagramAst::Copy("A".into())),
        Just(DiagramAst::Discard("B".into())),
        Just(DiagramAst::Gen("f".into())),
        Just(DiagramAst::Gen("g".into())),
    ];
    leaf.prop_recursive(depth, 64, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| DiagramAst::seq(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| DiagramAst::par(a, b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]
    // Printing any AST (well-typed or not) and reparsing it preserves
    // structure exactly.
    #[test]
    fn print_parse_round_trip(ast in arb_ast(4), _w in arb_word(2)) {
        let src = format!(
            "sort A; sort B; gen f : A -> B; gen g : B -> A; diagram d = {};",
            print_ast(&ast)
        );
        let (_, reparsed) = parse(&src).unwrap();
        prop_assert_eq!(&reparsed["d"], &ast);
    }
}
