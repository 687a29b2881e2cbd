//! Thin command implementations behind the CLI surface.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use geneo_core::dsl::{self, ComplexityAssignment};
use geneo_core::json::{parse_geo, parse_observer, parse_space, read_json, SpaceRegistry};
use geneo_core::observer::{surrogate_distance, EvaluationSet};
use geneo_core::suites::{run_core_suite, SuiteReport, CORE_SUITES};
use geneo_core::PseudoMetric;

use geneo_models::suites::{run_model_suite, MODEL_SUITES};

/// Intensional image spaces for universe files.
fn parse_image_space(v: &serde_json::Value) -> Result<std::sync::Arc<geneo_core::PerceptionSpace>> {
    let id = v
        .get("id")
        .and_then(|x| x.as_str())
        .ok_or_else(|| anyhow!("image space needs an 'id'"))?;
    let height = v
        .get("height")
        .and_then(|x| x.as_u64())
        .ok_or_else(|| anyhow!("image space needs a 'height'"))? as usize;
    let width = v
        .get("width")
        .and_then(|x| x.as_u64())
        .ok_or_else(|| anyhow!("image space needs a 'width'"))? as usize;
    Ok(match v.get("group").and_then(|x| x.as_str()).unwrap_or("trivial") {
        "torus" => geneo_core::PerceptionSpace::torus_images(id, height, width),
        "trivial" => geneo_core::PerceptionSpace::plain_images(id, height, width),
        other => bail!("unknown image-space group '{other}' (use torus|trivial)"),
    })
}

/// Runs a named verification suite; prints one line per outcome and every
/// counterexample verbatim. Returns whether it passed.
pub fn cmd_verify(suite: &str, seed: u64, instances: usize) -> Result<bool> {
    let suites: Vec<&str> = if suite == "all" {
        CORE_SUITES.iter().chain(MODEL_SUITES.iter()).copied().collect()
    } else {
        vec![suite]
    };
    let mut all_passed = true;
    for name in suites {
        let report: SuiteReport = run_core_suite(name, seed, instances)
            .or_else(|| run_model_suite(name, seed, instances))
            .ok_or_else(|| {
                anyhow!(
                    "unknown suite '{name}'; available: {}, all",
                    CORE_SUITES.iter().chain(MODEL_SUITES.iter()).cloned().collect::<Vec<_>>().join(", ")
                )
            })?;
        let status = if report.passed() { "pass" } else { "FAIL" };
        println!(
            "{status} {name}: {} instances ({})",
            report.instances,
            if report.info.is_empty() { "ok".to_string() } else { report.info.clone() }
        );
        for failure in &report.failures {
            println!("  counterexample: {failure}");
        }
        all_passed &= report.passed();
    }
    Ok(all_passed)
}

/// Parses and typechecks a diagram file; prints each diagram's input/output
/// words and complexity under the given assignment (generator defaults fill
/// gaps). Ill-typed diagrams produce an error.
pub fn cmd_check_diagram(file: &Path, assignment_path: Option<&Path>) -> Result<String> {
    let source = std::fs::read_to_string(file)
        .with_context(|| format!("reading {}", file.display()))?;
    let (sig, diagrams) = dsl::parse(&source)?;
    let assignment = load_assignment(assignment_path)?;
    let mut out = String::new();
    for (name, ast) in &diagrams {
        let typed = dsl::typecheck(ast, &sig)
            .with_context(|| format!("diagram '{name}' is ill-typed"))?;
        let complexity = dsl::complexity(&typed, &sig, &assignment)?;
        out.push_str(&format!(
            "{name}: {} -> {} @ {complexity}\n",
            dsl::word_to_string(&typed.input),
            dsl::word_to_string(&typed.output),
        ));
    }
    Ok(out)
}

/// Complexity of one named diagram under a named assignment.
pub fn cmd_complexity(file: &Path, diagram: &str, assignment_path: Option<&Path>) -> Result<f64> {
    let source = std::fs::read_to_string(file)
        .with_context(|| format!("reading {}", file.display()))?;
    let (sig, diagrams) = dsl::parse(&source)?;
    let ast = diagrams
        .get(diagram)
        .ok_or_else(|| anyhow!("no diagram named '{diagram}' in {}", file.display()))?;
    let typed = dsl::typecheck(ast, &sig)?;
    let assignment = load_assignment(assignment_path)?;
    Ok(dsl::complexity(&typed, &sig, &assignment)?)
}

fn load_assignment(path: Option<&Path>) -> Result<ComplexityAssignment> {
    let mut assignment = ComplexityAssignment::new();
    let Some(path) = path else { return Ok(assignment) };
    let value = read_json(path)?;
    let map = value
        .as_object()
        .ok_or_else(|| anyhow!("assignment file must be a JSON object"))?;
    for (name, v) in map {
        let cost = match v {
            serde_json::Value::String(s) if s == "inf" => f64::INFINITY,
            serde_json::Value::Number(n) => {
                n.as_f64().ok_or_else(|| anyhow!("bad cost for '{name}'"))?
            }
            _ => bail!("cost for '{name}' must be a number or \"inf\""),
        };
        assignment.assign(name, cost)?;
    }
    Ok(assignment)
}

/// Surrogate distance between two named GEOs of a universe file, under an
/// observer file. Prints the distance, the minimizing pair and per-pair costs
/// as CSV.
///
/// Universe schema: {"spaces": [space...], "image_spaces": [{"id", "height",
/// "width", "group": "torus"|"trivial"}...], "geos": {name: geo...}}.
pub fn cmd_distance(
    universe_path: &Path,
    observer_path: &Path,
    alpha: &str,
    beta: &str,
    metric: &str,
) -> Result<String> {
    let universe = read_json(universe_path)?;
    let mut registry = SpaceRegistry::new();
    for space_v in universe
        .get("spaces")
        .and_then(|v| v.as_array())
        .ok_or_else(|| anyhow!("universe needs a 'spaces' array"))?
    {
        registry.register(parse_space(space_v)?);
    }
    if let Some(image_spaces) = universe.get("image_spaces").and_then(|v| v.as_array()) {
        for v in image_spaces {
            registry.register(parse_image_space(v)?);
        }
    }
    let geos = universe
        .get("geos")
        .and_then(|v| v.as_object())
        .ok_or_else(|| anyhow!("universe needs a 'geos' object"))?;
    let alpha_geo = parse_geo(
        geos.get(alpha).ok_or_else(|| anyhow!("no geo named '{alpha}'"))?,
        &registry,
    )?;
    let beta_geo = parse_geo(
        geos.get(beta).ok_or_else(|| anyhow!("no geo named '{beta}'"))?,
        &registry,
    )?;
    let observer = parse_observer(&read_json(observer_path)?, &registry)?;
    let output_metric = match metric {
        "discrete" => PseudoMetric::Discrete,
        "l1" => PseudoMetric::L1,
        "linfinity" => PseudoMetric::LInfinity,
        "cod" => alpha_geo.cod.metric.clone(),
        other => bail!("unknown output metric '{other}' (use discrete|l1|linfinity|cod)"),
    };
    let eval = EvaluationSet::whole_carrier(&alpha_geo.dom, output_metric)?;
    let result = surrogate_distance(&observer, &alpha_geo, &beta_geo, &eval)?;

    let mut out = String::new();
    out.push_str(&format!("h = {}\n", result.value));
    match &result.best {
        Some(pair) => out.push_str(&format!(
            "minimizing pair: forward '{}', backward '{}'\n",
            pair.forward.id, pair.backward.id
        )),
        None => out.push_str("minimizing pair: none (no crossed pairs)\n"),
    }
    out.push_str("forward_id,backward_id,cost\n");
    for (pair, cost) in &result.per_pair {
        out.push_str(&format!("{},{},{}\n", pair.forward.id, pair.backward.id, cost));
    }
    Ok(out)
}
