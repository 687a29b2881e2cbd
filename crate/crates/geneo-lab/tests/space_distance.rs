//! Distance between the 28×28 and 14×14 image perception spaces through the
//! rescale observer, checked against a direct reconstruction-error oracle on
//! bundled images.

use std::path::{Path, PathBuf};

use geneo_core::json::{parse_observer, read_json, SpaceRegistry};
use geneo_core::observer::{space_distance, EvaluationSet};
use geneo_core::space::{Element, ImageData, PerceptionSpace};
use geneo_core::PseudoMetric;

use geneo_models::load_mnist;

fn workspace_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn to_element(image: &geneo_models::Image) -> Element {
    Element::Image(
        ImageData::new(
            image.height,
            image.width,
            image.pixels.iter().map(|&p| p as f64).collect(),
        )
        .unwrap(),
    )
}

/// f64 block-max downscale followed by nearest-neighbour upsample, exactly as
/// the observer arrows compute them.
fn round_trip_gap(x: &ImageData) -> f64 {
    let (h, w) = (x.height / 2, x.width / 2);
    let mut down = vec![0.0f64; h * w];
    for r in 0..h {
        for c in 0..w {
            down[r * w + c] = x
                .get(2 * r, 2 * c)
                .max(x.get(2 * r, 2 * c + 1))
                .max(x.get(2 * r + 1, 2 * c))
                .max(x.get(2 * r + 1, 2 * c + 1));
        }
    }
    let mut gap = 0.0f64;
    for r in 0..x.height {
        for c in 0..x.width {
            let up = down[(r / 2) * w + c / 2];
            gap = gap.max((x.get(r, c) - up).abs());
        }
    }
    gap
}

#[test]
fn rescale_observer_distance_matches_the_reconstruction_oracle() {
    let (images, _labels) = load_mnist(
        &workspace_path("data/mnist/images-idx3-ubyte"),
        &workspace_path("data/mnist/labels-idx1-ubyte"),
    )
    .expect("bundled dataset");

    let img28 = PerceptionSpace::plain_images("img28", 28, 28);
    let img14 = PerceptionSpace::plain_images("img14", 14, 14);
    let mut registry = SpaceRegistry::new();
    registry.register(img28.clone());
    registry.register(img14.clone());
    let observer = parse_observer(
        &read_json(&workspace_path("configs/observers/rescale28.json")).unwrap(),
        &registry,
    )
    .expect("rescale observer");

    let sample: Vec<Element> = images.iter().take(100).map(to_element).collect();
    let down_geo = observer
        .translations
        .arrows()
        .iter()
        .find(|a| a.id == "down")
        .expect("down arrow")
        .geo()
        .clone();
    let downscaled: Vec<Element> = sample.iter().map(|e| down_geo.apply(e).unwrap()).collect();

    let eval28 = EvaluationSet::new(sample.clone(), PseudoMetric::LInfinity).unwrap();
    let eval14 = EvaluationSet::new(downscaled, PseudoMetric::LInfinity).unwrap();
    let delta = space_distance(&observer, &img28, &img14, &eval28, &eval14).unwrap();

    // Oracle: the 14×14 direction reconstructs exactly (down of up is the
    // identity), so the distance is the average up∘down sup-norm gap on the
    // 28×28 side.
    let mut expected = 0.0f64;
    for e in &sample {
        let img = e.as_image().unwrap();
        expected += round_trip_gap(img);
    }
    expected /= sample.len() as f64;

    assert!(delta.is_finite());
    assert!(expected > 0.0, "digits are not 2x2-constant, so the gap is positive");
    assert!(
        (delta.value() - expected).abs() < 1e-12,
        "observer distance {} vs oracle {}",
        delta.value(),
        expected
    );
}

#[test]
fn no_arrow_pair_means_infinite_space_distance() {
    let img28 = PerceptionSpace::plain_images("img28", 28, 28);
    let img7 = PerceptionSpace::plain_images("img7", 7, 7);
    let mut registry = SpaceRegistry::new();
    registry.register(img28.clone());
    registry.register(img7.clone());
    // Identity-only observer over both spaces.
    let observer = parse_observer(
        &serde_json::json!({
            "translations": {
                "objects": ["img28", "img7"],
                "arrows": [
                    {"id": "id28", "dom": "img28", "cod": "img28", "kind": "identity"},
                    {"id": "id7", "dom": "img7", "cod": "img7", "kind": "identity"}
                ],
                "closure": [[0, 0, 0], [1, 1, 1]]
            }
        }),
        &registry,
    )
    .unwrap();
    let probe28 = EvaluationSet::new(
        vec![Element::Image(ImageData::constant(28, 28, 0.5).unwrap())],
        PseudoMetric::LInfinity,
    )
    .unwrap();
    let probe7 = EvaluationSet::new(
        vec![Element::Image(ImageData::constant(7, 7, 0.5).unwrap())],
        PseudoMetric::LInfinity,
    )
    .unwrap();
    let delta = space_distance(&observer, &img28, &img7, &probe28, &probe7).unwrap();
    assert!(delta.is_infinite());
}
