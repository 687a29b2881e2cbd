//! JSON loaders for finite spaces, lookup-table GEOs and observers.
//!
//! Schemas (field names are fixed):
//!
//! Space: `{"id": str, "elements": [token|vector|label, ...],
//!          "metric": {"kind": "discrete"|"l1"|"linfinity"|"table", "d": [[..]]},
//!          "group": {"compose": [[..]]},
//!          "action": {"table": [[..]]} | {"kind": "trivial"}}`
//!
//! Geo: `{"dom": id, "cod": id, "table": [cod indices],
//!        "hom": {"kind": "identity"|"annihilator"|"explicit", "map": [..]}}`
//!
//! Observer: `{"translations": {"objects": [id..],
//!              "arrows": [{"id", "dom", "cod", "kind", ...,
//!                          "certificate": "validated"|{"declared": reason}}],
//!              "closure": [[i,j,k], ..]},
//!             "complexity": {gen: number|"inf", ..}}`
//!
//! Arrow kinds: `identity`, `lookup` (with `table` and optional `hom`),
//! `rescale2x2max`, `upsample2x2nn`, and `composite` (with `of: [id, id]`,
//! first-then-second).

use std::collections::HashMap;
use std::sync::Arc;

use serde_json::Value;

use crate::dsl::ComplexityAssignment;
use crate::error::JsonError;
use crate::geo::{
    check_nonexpansive, compose, Geneo, Geo, GroupHom, NonexpansiveOutcome, PairProbe,
};
use crate::metric::{DistanceTable, PseudoMetric};
use crate::observer::{Arrow, Observer, TranslationCategory};
use crate::space::{
    Carrier, Element, FiniteGroup, GroupAction, ImageData, Payload, PerceptionSpace,
};

/// Spaces known to the loader, by id.
#[derive(Default)]
pub struct SpaceRegistry {
    spaces: HashMap<String, Arc<PerceptionSpace>>,
}

impl SpaceRegistry {
    pub fn new() -> SpaceRegistry {
        SpaceRegistry::default()
    }

    pub fn register(&mut self, space: Arc<PerceptionSpace>) {
        self.spaces.insert(space.id.clone(), space);
    }

    pub fn get(&self, id: &str) -> Result<&Arc<PerceptionSpace>, JsonError> {
        self.spaces
            .get(id)
            .ok_or_else(|| JsonError::Schema(format!("unknown space id '{id}'")))
    }
}

fn field<'v>(v: &'v Value, name: &str) -> Result<&'v Value, JsonError> {
    v.get(name).ok_or_else(|| JsonError::Schema(format!("missing field '{name}'")))
}

fn as_str<'v>(v: &'v Value, what: &str) -> Result<&'v str, JsonError> {
    v.as_str().ok_or_else(|| JsonError::Schema(format!("{what} must be a string")))
}

fn as_array<'v>(v: &'v Value, what: &str) -> Result<&'v Vec<Value>, JsonError> {
    v.as_array().ok_or_else(|| JsonError::Schema(format!("{what} must be an array")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize, JsonError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| JsonError::Schema(format!("{what} must be a nonnegative integer")))
}

fn index_matrix(v: &Value, what: &str) -> Result<Vec<Vec<usize>>, JsonError> {
    as_array(v, what)?
        .iter()
        .map(|row| {
            as_array(row, what)?
                .iter()
                .map(|x| as_usize(x, what))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

fn float_matrix(v: &Value, what: &str) -> Result<Vec<Vec<f64>>, JsonError> {
    as_array(v, what)?
        .iter()
        .map(|row| {
            as_array(row, what)?
                .iter()
                .map(|x| {
                    x.as_f64().ok_or_else(|| JsonError::Schema(format!("{what} entries must be numbers")))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

/// Parses a finite perception space and checks its axioms.
pub fn parse_space(v: &Value) -> Result<Arc<PerceptionSpace>, JsonError> {
    let id = as_str(field(v, "id")?, "id")?.to_string();

    let mut payloads = Vec::new();
    for e in as_array(field(v, "elements")?, "elements")? {
        payloads.push(match e {
            Value::String(s) => Payload::Token(s.clone()),
            Value::Array(xs) => Payload::Vector(
                xs.iter()
                    .map(|x| {
                        x.as_f64().ok_or_else(|| JsonError::Schema("vector entries must be numbers".into()))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Value::Number(n) => Payload::Label(
                n.as_u64().ok_or_else(|| JsonError::Schema("label must be a nonnegative integer".into()))?
                    as usize,
            ),
            _ => return Err(JsonError::Schema("elements must be tokens, vectors or labels".into())),
        });
    }
    let carrier = Carrier::finite(payloads)?;

    let metric_v = field(v, "metric")?;
    let metric = match as_str(field(metric_v, "kind")?, "metric.kind")? {
        "discrete" => PseudoMetric::Discrete,
        "l1" => PseudoMetric::L1,
        "linfinity" => PseudoMetric::LInfinity,
        "table" => PseudoMetric::ExplicitTable(DistanceTable::new(float_matrix(
            field(metric_v, "d")?,
            "metric.d",
        )?)?),
        other => return Err(JsonError::Schema(format!("unknown metric kind '{other}'"))),
    };

    let group = FiniteGroup::from_table(index_matrix(field(field(v, "group")?, "compose")?, "group.compose")?)?;

    let action_v = field(v, "action")?;
    let action = if let Some(table) = action_v.get("table") {
        GroupAction::PermutationTable(index_matrix(table, "action.table")?)
    } else if action_v.get("kind").and_then(|k| k.as_str()) == Some("trivial") {
        GroupAction::Trivial
    } else {
        return Err(JsonError::Schema("action must give a table or be trivial".into()));
    };

    let space = PerceptionSpace::new(id, carrier, metric, group, action);
    crate::validate::require_valid(&space, 200_000)?;
    Ok(space)
}

fn parse_hom(v: Option<&Value>, dom: &PerceptionSpace, cod: &PerceptionSpace) -> Result<GroupHom, JsonError> {
    let Some(v) = v else {
        // Default: identity when the groups match, else annihilator.
        return Ok(if dom.group.order() == cod.group.order() {
            GroupHom::identity(dom.group.order())
        } else {
            GroupHom::annihilator(dom.group.order(), cod.group.identity(), cod.group.order())
        });
    };
    match as_str(field(v, "kind")?, "hom.kind")? {
        "identity" => {
            if dom.group.order() != cod.group.order() {
                return Err(JsonError::Schema("identity hom needs equal group orders".into()));
            }
            Ok(GroupHom::identity(dom.group.order()))
        }
        "annihilator" => Ok(GroupHom::annihilator(
            dom.group.order(),
            cod.group.identity(),
            cod.group.order(),
        )),
        "explicit" => {
            let map = as_array(field(v, "map")?, "hom.map")?
                .iter()
                .map(|x| as_usize(x, "hom.map"))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GroupHom::explicit(map, &dom.group, &cod.group)?)
        }
        other => Err(JsonError::Schema(format!("unknown hom kind '{other}'"))),
    }
}

/// Parses a lookup-table GEO against registered spaces.
pub fn parse_geo(v: &Value, registry: &SpaceRegistry) -> Result<Geo, JsonError> {
    let dom = registry.get(as_str(field(v, "dom")?, "dom")?)?.clone();
    let cod = registry.get(as_str(field(v, "cod")?, "cod")?)?.clone();
    let table = as_array(field(v, "table")?, "table")?
        .iter()
        .map(|x| as_usize(x, "table"))
        .collect::<Result<Vec<_>, _>>()?;
    let hom = parse_hom(v.get("hom"), &dom, &cod)?;
    Ok(Geo::lookup(&dom, &cod, table, hom)?)
}

/// Nearest-neighbour 2x up-sampling of an image.
fn upsample_2x2_nn(img: &ImageData) -> ImageData {
    let (h, w) = (img.height, img.width);
    let mut out = vec![0.0; 4 * h * w];
    for r in 0..2 * h {
        for c in 0..2 * w {
            out[r * 2 * w + c] = img.get(r / 2, c / 2);
        }
    }
    ImageData { height: 2 * h, width: 2 * w, pixels: out }
}

/// Block max 2x down-sampling of an image (even dimensions).
fn downsample_2x2_max(img: &ImageData) -> Result<ImageData, JsonError> {
    if img.height % 2 != 0 || img.width % 2 != 0 {
        return Err(JsonError::Schema("rescale2x2max needs even image dimensions".into()));
    }
    let (h, w) = (img.height / 2, img.width / 2);
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let m = img
                .get(2 * r, 2 * c)
                .max(img.get(2 * r, 2 * c + 1))
                .max(img.get(2 * r + 1, 2 * c))
                .max(img.get(2 * r + 1, 2 * c + 1));
            out[r * w + c] = m;
        }
    }
    Ok(ImageData { height: h, width: w, pixels: out })
}

fn image_dims(space: &PerceptionSpace) -> Result<(usize, usize), JsonError> {
    match &space.carrier {
        Carrier::IntensionalImages { height, width } => Ok((*height, *width)),
        _ => Err(JsonError::Schema(format!("space '{}' is not an image space", space.id))),
    }
}

fn certify(geo: Geo, cert: Option<&Value>, arrow_id: &str) -> Result<Geneo, JsonError> {
    match cert {
        None | Some(Value::String(_)) => {
            // "validated": run the checker, exhaustively when possible.
            if let Some(Value::String(s)) = cert {
                if s != "validated" {
                    return Err(JsonError::Schema(format!(
                        "certificate must be \"validated\" or {{\"declared\": reason}}, got '{s}'"
                    )));
                }
            }
            let outcome = if geo.dom.carrier.is_finite() {
                check_nonexpansive(&geo, PairProbe::Exhaustive)?
            } else {
                let probes = sample_image_pairs(&geo.dom, 8);
                check_nonexpansive(&geo, PairProbe::Sample(&probes))?
            };
            match outcome {
                NonexpansiveOutcome::Valid(geneo) => Ok(geneo),
                NonexpansiveOutcome::Violations(vs) => Err(JsonError::Schema(format!(
                    "arrow '{arrow_id}' failed non-expansiveness: {}",
                    vs[0].detail
                ))),
            }
        }
        Some(decl) => {
            let reason = decl
                .get("declared")
                .and_then(|r| r.as_str())
                .ok_or_else(|| JsonError::Schema("certificate must be \"validated\" or {\"declared\": reason}".into()))?;
            // Declared arrows still get a sampled sanity check.
            if !geo.dom.carrier.is_finite() {
                let probes = sample_image_pairs(&geo.dom, 4);
                if let NonexpansiveOutcome::Violations(vs) = check_nonexpansive(&geo, PairProbe::Sample(&probes))? {
                    return Err(JsonError::Schema(format!(
                        "declared arrow '{arrow_id}' failed its sampled check: {}",
                        vs[0].detail
                    )));
                }
            }
            Ok(Geneo::declared(geo, reason))
        }
    }
}

fn sample_image_pairs(space: &Arc<PerceptionSpace>, count: usize) -> Vec<(Element, Element)> {
    use rand::{Rng, SeedableRng};
    let Ok((h, w)) = image_dims(space) else { return Vec::new() };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9a1);
    (0..count)
        .map(|_| {
            let a: Vec<f64> = (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let b: Vec<f64> = (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect();
            (
                Element::Image(ImageData::new(h, w, a).expect("in range")),
                Element::Image(ImageData::new(h, w, b).expect("in range")),
            )
        })
        .collect()
}

/// Parses an observer: translation category plus complexity assignment.
pub fn parse_observer(v: &Value, registry: &SpaceRegistry) -> Result<Observer, JsonError> {
    let translations_v = field(v, "translations")?;
    let objects: Vec<Arc<PerceptionSpace>> = as_array(field(translations_v, "objects")?, "objects")?
        .iter()
        .map(|id| Ok(registry.get(as_str(id, "object id")?)?.clone()))
        .collect::<Result<Vec<_>, JsonError>>()?;

    let arrows_v = as_array(field(translations_v, "arrows")?, "arrows")?;
    let mut arrows: Vec<Arrow> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for arrow_v in arrows_v {
        let id = as_str(field(arrow_v, "id")?, "arrow id")?.to_string();
        let dom = registry.get(as_str(field(arrow_v, "dom")?, "arrow dom")?)?.clone();
        let cod = registry.get(as_str(field(arrow_v, "cod")?, "arrow cod")?)?.clone();
        let kind = as_str(field(arrow_v, "kind")?, "arrow kind")?;
        let geo = match kind {
            "identity" => {
                if dom.id != cod.id {
                    return Err(JsonError::Schema(format!("identity arrow '{id}' needs dom == cod")));
                }
                Geo::identity(&dom)
            }
            "lookup" => {
                let table = as_array(field(arrow_v, "table")?, "arrow table")?
                    .iter()
                    .map(|x| as_usize(x, "arrow table"))
                    .collect::<Result<Vec<_>, _>>()?;
                let hom = parse_hom(arrow_v.get("hom"), &dom, &cod)?;
                Geo::lookup(&dom, &cod, table, hom)?
            }
            "rescale2x2max" => {
                let (dh, dw) = image_dims(&dom)?;
                let (ch, cw) = image_dims(&cod)?;
                if dh != 2 * ch || dw != 2 * cw {
                    return Err(JsonError::Schema(format!(
                        "rescale arrow '{id}' needs codomain of half size"
                    )));
                }
                let hom = parse_hom(arrow_v.get("hom"), &dom, &cod)?;
                Geo::builtin("rescale2x2max", &dom, &cod, hom, move |x| {
                    let img = x.as_image().ok_or_else(|| {
                        crate::error::GeoError::RangeViolation("rescale needs an image".into())
                    })?;
                    let out = downsample_2x2_max(img)
                        .map_err(|e| crate::error::GeoError::RangeViolation(e.to_string()))?;
                    Ok(Element::Image(out))
                })?
            }
            "upsample2x2nn" => {
                let (dh, dw) = image_dims(&dom)?;
                let (ch, cw) = image_dims(&cod)?;
                if ch != 2 * dh || cw != 2 * dw {
                    return Err(JsonError::Schema(format!(
                        "upsample arrow '{id}' needs codomain of double size"
                    )));
                }
                let hom = parse_hom(arrow_v.get("hom"), &dom, &cod)?;
                Geo::builtin("upsample2x2nn", &dom, &cod, hom, move |x| {
                    let img = x.as_image().ok_or_else(|| {
                        crate::error::GeoError::RangeViolation("upsample needs an image".into())
                    })?;
                    Ok(Element::Image(upsample_2x2_nn(img)))
                })?
            }
            "composite" => {
                let of = as_array(field(arrow_v, "of")?, "composite of")?;
                if of.len() != 2 {
                    return Err(JsonError::Schema("composite arrow needs exactly two components".into()));
                }
                let first = *by_id
                    .get(as_str(&of[0], "composite component")?)
                    .ok_or_else(|| JsonError::Schema("composite references an undeclared arrow".into()))?;
                let second = *by_id
                    .get(as_str(&of[1], "composite component")?)
                    .ok_or_else(|| JsonError::Schema("composite references an undeclared arrow".into()))?;
                compose(arrows[second].geo(), arrows[first].geo())?
            }
            other => return Err(JsonError::Schema(format!("unknown arrow kind '{other}'"))),
        };
        let geneo = certify(geo, arrow_v.get("certificate"), &id)?;
        by_id.insert(id.clone(), arrows.len());
        arrows.push(Arrow { id, geneo });
    }

    let closure = index_matrix(field(translations_v, "closure")?, "closure")?
        .into_iter()
        .map(|row| {
            if row.len() != 3 {
                Err(JsonError::Schema("closure entries must be [i, j, k] triples".into()))
            } else {
                Ok((row[0], row[1], row[2]))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let translations = TranslationCategory::new(objects, arrows, closure)?;

    let mut assignment = ComplexityAssignment::new();
    if let Some(costs) = v.get("complexity") {
        let map = costs
            .as_object()
            .ok_or_else(|| JsonError::Schema("complexity must be an object".into()))?;
        for (name, value) in map {
            let cost = match value {
                Value::String(s) if s == "inf" => f64::INFINITY,
                Value::Number(n) => n
                    .as_f64()
                    .ok_or_else(|| JsonError::Schema(format!("bad complexity for '{name}'")))?,
                _ => return Err(JsonError::Schema(format!("complexity for '{name}' must be a number or \"inf\""))),
            };
            assignment
                .assign(name, cost)
                .map_err(|e| JsonError::Schema(e.to_string()))?;
        }
    }

    Ok(Observer { translations, complexity: assignment })
}

/// Reads a JSON value from a file path.
pub fn read_json(path: &std::path::Path) -> Result<Value, JsonError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
