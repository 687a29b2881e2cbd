//! Registers trained models as GEOs over image perception spaces so the
//! observer-relative metrics apply to them directly.
//!
//! The shift-invariant pattern classifier lives over the full torus group
//! with the annihilator homomorphism into the trivial group on labels; the
//! position-sensitive models live over the trivial group. Each wrapper
//! captures a frozen parameter snapshot.

use std::sync::Arc;

use geneo_core::geo::{Geo, GroupHom};
use geneo_core::GeoError;
use geneo_core::space::{Element, ImageData, PerceptionSpace};

use crate::activation::{channel_wise_max_sparse, extract_features, pattern_activation_map};
use crate::dataset::Image;
use crate::models::{CnnModel, Geo1Model, Geo2Model, MlpModel};
use crate::patterns::PatternBank;

/// Core image element to model image.
pub fn element_to_image(e: &Element) -> Result<Image, GeoError> {
    let img = e
        .as_image()
        .ok_or_else(|| GeoError::RangeViolation("expected an image element".into()))?;
    Ok(Image {
        height: img.height,
        width: img.width,
        pixels: img.pixels.iter().map(|&p| p as f32).collect(),
    })
}

/// Model image to core image element.
pub fn image_to_element(image: &Image) -> Element {
    let pixels = image.pixels.iter().map(|&p| (p as f64).clamp(0.0, 1.0)).collect();
    Element::Image(
        ImageData::new(image.height, image.width, pixels).expect("pixels stay in [0,1]"),
    )
}

fn expect_dims(space: &PerceptionSpace) -> (usize, usize) {
    match &space.carrier {
        geneo_core::space::Carrier::IntensionalImages { height, width } => (*height, *width),
        _ => panic!("model bridge needs an image space"),
    }
}

/// The pooled-pattern classifier as a GEO over the torus-translation group.
pub fn geo1_as_geo(
    model: &Geo1Model,
    images: &Arc<PerceptionSpace>,
    labels: &Arc<PerceptionSpace>,
) -> Result<Geo, GeoError> {
    let (h, w) = expect_dims(images);
    let model = model.clone();
    let hom = GroupHom::annihilator(images.group.order(), labels.group.identity(), labels.group.order());
    Geo::builtin(format!("geo1x{}", model.patterns()), images, labels, hom, move |e| {
        let image = element_to_image(e)?;
        if image.height != h || image.width != w {
            return Err(GeoError::RangeViolation("image dims mismatch".into()));
        }
        let features = extract_features(std::slice::from_ref(&image), &model.bank);
        Ok(Element::Point(model.predict(features.row(0))))
    })
}

/// The position-sensitive pattern classifier, trivial group.
pub fn geo2_as_geo(
    model: &Geo2Model,
    images: &Arc<PerceptionSpace>,
    labels: &Arc<PerceptionSpace>,
) -> Result<Geo, GeoError> {
    let model = model.clone();
    let hom = GroupHom::annihilator(images.group.order(), labels.group.identity(), labels.group.order());
    Geo::builtin(format!("geo2x{}", model.patterns()), images, labels, hom, move |e| {
        let image = element_to_image(e)?;
        let cwm: Vec<Vec<(u32, f32)>> = model
            .bank
            .patterns
            .iter()
            .map(|p| {
                let map = pattern_activation_map(&image, p, model.bank.patch_w, model.bank.patch_h);
                channel_wise_max_sparse(&map)
            })
            .collect();
        Ok(Element::Point(model.predict(&cwm)))
    })
}

/// An MLP baseline as a GEO, trivial group.
pub fn mlp_as_geo(
    model: &MlpModel,
    images: &Arc<PerceptionSpace>,
    labels: &Arc<PerceptionSpace>,
) -> Result<Geo, GeoError> {
    let model = model.clone();
    let hom = GroupHom::annihilator(images.group.order(), labels.group.identity(), labels.group.order());
    Geo::builtin("mlp", images, labels, hom, move |e| {
        let image = element_to_image(e)?;
        Ok(Element::Point(model.predict(&image.pixels)))
    })
}

/// The CNN as a GEO, trivial group.
pub fn cnn_as_geo(
    model: &CnnModel,
    images: &Arc<PerceptionSpace>,
    labels: &Arc<PerceptionSpace>,
) -> Result<Geo, GeoError> {
    let model = model.clone();
    let hom = GroupHom::annihilator(images.group.order(), labels.group.identity(), labels.group.order());
    Geo::builtin("cnn", images, labels, hom, move |e| {
        let image = element_to_image(e)?;
        Ok(Element::Point(model.predict(&image)))
    })
}

/// Score-vector variant of the pooled-pattern classifier: the codomain is the
/// 1×10 image space under the sup metric, for regression-style comparisons.
pub fn geo1_scores_as_geo(
    model: &Geo1Model,
    images: &Arc<PerceptionSpace>,
    score_space: &Arc<PerceptionSpace>,
) -> Result<Geo, GeoError> {
    let model = model.clone();
    let hom = GroupHom::annihilator(
        images.group.order(),
        score_space.group.identity(),
        score_space.group.order(),
    );
    Geo::builtin(
        format!("geo1x{}_scores", model.patterns()),
        images,
        score_space,
        hom,
        move |e| {
            let image = element_to_image(e)?;
            let features = extract_features(std::slice::from_ref(&image), &model.bank);
            let scores = model.scores(features.row(0));
            Ok(Element::Image(
                ImageData::new(1, 10, scores.to_vec()).expect("sigmoid outputs lie in (0,1)"),
            ))
        },
    )
}

/// The raw activation-map operator for one pattern, image space to image
/// space over the torus group with the identity homomorphism.
pub fn activation_map_as_geo(
    bank: &PatternBank,
    pattern_index: usize,
    images: &Arc<PerceptionSpace>,
) -> Result<Geo, GeoError> {
    let (h, w) = expect_dims(images);
    let pattern = bank.patterns[pattern_index].clone();
    let (pw, ph) = (bank.patch_w, bank.patch_h);
    let hom = GroupHom::identity(images.group.order());
    Geo::builtin(format!("match_p{pattern_index}"), images, images, hom, move |e| {
        let image = element_to_image(e)?;
        if image.height != h || image.width != w {
            return Err(GeoError::RangeViolation("image dims mismatch".into()));
        }
        let map = pattern_activation_map(&image, &pattern, pw, ph);
        Ok(Element::Image(
            ImageData::new(h, w, map.iter().map(|&v| (v as f64).clamp(0.0, 1.0)).collect())
                .expect("activation values lie in [0,1]"),
        ))
    })
}

/// The 2×2 max-downscale as a GEO between plain image spaces.
pub fn downscale_as_geo(
    images: &Arc<PerceptionSpace>,
    downscaled: &Arc<PerceptionSpace>,
) -> Result<Geo, GeoError> {
    let hom = GroupHom::annihilator(
        images.group.order(),
        downscaled.group.identity(),
        downscaled.group.order(),
    );
    Geo::builtin("downscale2x2max", images, downscaled, hom, move |e| {
        let image = element_to_image(e)?;
        let down = crate::activation::downscale_2x2_max(&image)
            .map_err(|err| GeoError::RangeViolation(err.to_string()))?;
        Ok(image_to_element(&down))
    })
}
