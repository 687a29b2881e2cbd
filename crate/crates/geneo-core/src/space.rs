//! Perception spaces: metric-equipped carriers with isometric finite-group
//! actions, plus the induced group pseudo-metric and direct products.
//!
//! Products are kept flat (a product never nests another product and the
//! unit drops out), so the tensor is strictly associative and unital. The
//! mixed-radix index arithmetic used for product carriers and product groups
//! agrees with iterated pairwise products.

use std::sync::Arc;

use crate::error::SpaceError;
use crate::metric::{MetricValue, PseudoMetric};

/// A grayscale image with entries in `[0,1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageData {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl ImageData {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<ImageData, SpaceError> {
        if pixels.len() != height * width {
            return Err(SpaceError::ImageShape {
                expected_h: height,
                expected_w: width,
                got_h: if width == 0 { 0 } else { pixels.len() / width },
                got_w: width,
            });
        }
        for &p in &pixels {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(SpaceError::PixelOutOfRange(p));
            }
        }
        Ok(ImageData { height, width, pixels })
    }

    pub fn constant(height: usize, width: usize, v: f64) -> Result<ImageData, SpaceError> {
        ImageData::new(height, width, vec![v; height * width])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Cyclic shift: output(r, c) = input(r - dy, c - dx) on the torus, i.e.
    /// the image content moves down by `dy` and right by `dx`.
    pub fn torus_shift(&self, dy: usize, dx: usize) -> ImageData {
        let (h, w) = (self.height, self.width);
        let mut out = vec![0.0; h * w];
        for r in 0..h {
            let src_r = (r + h - dy % h) % h;
            for c in 0..w {
                let src_c = (c + w - dx % w) % w;
                out[r * w + c] = self.pixels[src_r * w + src_c];
            }
        }
        ImageData { height: h, width: w, pixels: out }
    }
}

/// Payload attached to an element of a finite extensional carrier.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Abstract token, identified by name.
    Token(String),
    /// Real vector.
    Vector(Vec<f64>),
    /// Class label.
    Label(usize),
}

impl Payload {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Payload::Token(_) => "token",
            Payload::Vector(_) => "vector",
            Payload::Label(_) => "label",
        }
    }
}

/// An element of some carrier. Finite extensional elements are referenced by
/// index; intensional image elements carry their data; product elements are
/// flat tuples.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Point(usize),
    Image(ImageData),
    Tuple(Vec<Element>),
    Unit,
}

impl Element {
    pub fn as_point(&self) -> Option<usize> {
        match self {
            Element::Point(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_image(&self) -> Option<&ImageData> {
        match self {
            Element::Image(img) => Some(img),
            _ => None,
        }
    }
}

/// The data set of a perception space.
#[derive(Debug, Clone)]
pub enum Carrier {
    /// Indexed list of elements, indices dense `0..n-1`, `n >= 1`.
    FiniteExtensional(Vec<Payload>),
    /// All h×w grayscale images with entries in `[0,1]`.
    IntensionalImages { height: usize, width: usize },
    /// Flat cartesian product of two or more finite carriers; elements are
    /// `Element::Tuple`s. Factors are never products or units themselves.
    Product(Vec<Arc<Carrier>>),
    /// One-point carrier; tensor unit.
    Unit,
}

impl Carrier {
    pub fn finite(payloads: Vec<Payload>) -> Result<Carrier, SpaceError> {
        if payloads.is_empty() {
            return Err(SpaceError::EmptyCarrier);
        }
        Ok(Carrier::FiniteExtensional(payloads))
    }

    /// Simple finite carrier of abstract tokens `p0..p{n-1}`.
    pub fn tokens(n: usize) -> Result<Carrier, SpaceError> {
        Carrier::finite((0..n).map(|i| Payload::Token(format!("p{i}"))).collect())
    }

    /// Finite carrier of class labels `0..n-1`.
    pub fn labels(n: usize) -> Result<Carrier, SpaceError> {
        Carrier::finite((0..n).map(Payload::Label).collect())
    }

    /// Number of elements for finite carriers; `None` for intensional ones.
    pub fn size(&self) -> Option<usize> {
        match self {
            Carrier::FiniteExtensional(p) => Some(p.len()),
            Carrier::IntensionalImages { .. } => None,
            Carrier::Product(fs) => fs.iter().map(|f| f.size()).product(),
            Carrier::Unit => Some(1),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.size().is_some()
    }

    pub fn payload(&self, index: usize) -> Result<&Payload, SpaceError> {
        match self {
            Carrier::FiniteExtensional(p) => {
                p.get(index).ok_or(SpaceError::IndexOutOfRange { index, size: p.len() })
            }
            _ => Err(SpaceError::ElementKind("payload lookup needs a finite extensional carrier".into())),
        }
    }

    /// The `i`-th element of a finite carrier (mixed-radix for products).
    pub fn element(&self, index: usize) -> Result<Element, SpaceError> {
        let size = self.size().ok_or_else(|| {
            SpaceError::IntensionalUnsupported("cannot enumerate an intensional carrier".into())
        })?;
        if index >= size {
            return Err(SpaceError::IndexOutOfRange { index, size });
        }
        Ok(match self {
            Carrier::FiniteExtensional(_) => Element::Point(index),
            Carrier::Product(fs) => {
                let mut rem = index;
                let mut parts = vec![Element::Unit; fs.len()];
                for (slot, f) in parts.iter_mut().zip(fs.iter()).rev() {
                    let n = f.size().expect("finite product factor");
                    *slot = f.element(rem % n)?;
                    rem /= n;
                }
                Element::Tuple(parts)
            }
            Carrier::Unit => Element::Unit,
            Carrier::IntensionalImages { .. } => unreachable!(),
        })
    }

    /// All elements of a finite carrier, in index order.
    pub fn elements(&self) -> Result<Vec<Element>, SpaceError> {
        let n = self.size().ok_or_else(|| {
            SpaceError::IntensionalUnsupported("cannot enumerate an intensional carrier".into())
        })?;
        (0..n).map(|i| self.element(i)).collect()
    }

    /// Dense index of a finite-carrier element (inverse of [`Carrier::element`]).
    pub fn index_of(&self, e: &Element) -> Result<usize, SpaceError> {
        match (self, e) {
            (Carrier::FiniteExtensional(p), Element::Point(i)) if *i < p.len() => Ok(*i),
            (Carrier::Product(fs), Element::Tuple(parts)) if fs.len() == parts.len() => {
                let mut index = 0;
                for (f, part) in fs.iter().zip(parts.iter()) {
                    let n = f.size().ok_or_else(|| {
                        SpaceError::IntensionalUnsupported("product of intensional carriers".into())
                    })?;
                    index = index * n + f.index_of(part)?;
                }
                Ok(index)
            }
            (Carrier::Unit, Element::Unit) => Ok(0),
            _ => Err(SpaceError::ElementKind("element does not belong to carrier".into())),
        }
    }

    /// Checks that `e` is a well-formed element of this carrier.
    pub fn contains(&self, e: &Element) -> bool {
        match (self, e) {
            (Carrier::FiniteExtensional(p), Element::Point(i)) => *i < p.len(),
            (Carrier::IntensionalImages { height, width }, Element::Image(img)) => {
                img.height == *height
                    && img.width == *width
                    && img.pixels.iter().all(|&p| (0.0..=1.0).contains(&p))
            }
            (Carrier::Product(fs), Element::Tuple(parts)) => {
                fs.len() == parts.len() && fs.iter().zip(parts).all(|(f, p)| f.contains(p))
            }
            (Carrier::Unit, Element::Unit) => true,
            _ => false,
        }
    }
}

/// Finite group given extensionally by its composition table.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    order: usize,
    compose: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Builds a group from its composition table, deriving identity and
    /// inverses and checking the group laws exhaustively.
    pub fn from_table(compose: Vec<Vec<usize>>) -> Result<FiniteGroup, SpaceError> {
        let order = compose.len();
        if order == 0 {
            return Err(SpaceError::MalformedTable("empty composition table".into()));
        }
        if compose.iter().any(|r| r.len() != order) {
            return Err(SpaceError::MalformedTable("composition table is not square".into()));
        }
        let mut flat = Vec::with_capacity(order * order);
        for row in &compose {
            for &v in row {
                if v >= order {
                    return Err(SpaceError::IndexOutOfRange { index: v, size: order });
                }
                flat.push(v);
            }
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| flat[e * order + g] == g && flat[g * order + e] == g))
            .ok_or(SpaceError::GroupLaw { law: "identity", witness: "no two-sided identity".into() })?;
        let mut inverse = vec![usize::MAX; order];
        for g in 0..order {
            match (0..order).find(|&h| flat[g * order + h] == identity && flat[h * order + g] == identity) {
                Some(h) => inverse[g] = h,
                None => {
                    return Err(SpaceError::GroupLaw {
                        law: "inverses",
                        witness: format!("element {g} has no inverse"),
                    })
                }
            }
        }
        let group = FiniteGroup { order, compose: flat, identity, inverse };
        group.check_associativity_exhaustive()?;
        Ok(group)
    }

    /// Exhaustive associativity check, O(order³).
    pub fn check_associativity_exhaustive(&self) -> Result<(), SpaceError> {
        let n = self.order;
        for a in 0..n {
            for b in 0..n {
                let ab = self.compose(a, b);
                for c in 0..n {
                    if self.compose(ab, c) != self.compose(a, self.compose(b, c)) {
                        return Err(SpaceError::GroupLaw {
                            law: "associativity",
                            witness: format!("({a}∘{b})∘{c} != {a}∘({b}∘{c})"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn trivial() -> FiniteGroup {
        FiniteGroup { order: 1, compose: vec![0], identity: 0, inverse: vec![0] }
    }

    /// Cyclic group Z_n with addition mod n.
    pub fn cyclic(n: usize) -> FiniteGroup {
        assert!(n >= 1);
        let mut compose = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                compose.push((a + b) % n);
            }
        }
        let inverse = (0..n).map(|a| (n - a) % n).collect();
        FiniteGroup { order: n, compose, identity: 0, inverse }
    }

    /// Direct product; element (a, b) has id `a * |H| + b`. This encoding is
    /// strictly associative.
    pub fn direct_product(g: &FiniteGroup, h: &FiniteGroup) -> FiniteGroup {
        let n = g.order * h.order;
        let mut compose = Vec::with_capacity(n * n);
        for a in 0..n {
            let (ga, ha) = (a / h.order, a % h.order);
            for b in 0..n {
                let (gb, hb) = (b / h.order, b % h.order);
                compose.push(g.compose(ga, gb) * h.order + h.compose(ha, hb));
            }
        }
        let identity = g.identity * h.order + h.identity;
        let inverse = (0..n)
            .map(|a| g.inverse(a / h.order) * h.order + h.inverse(a % h.order))
            .collect();
        FiniteGroup { order: n, compose, identity, inverse }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.compose[a * self.order + b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }
}

/// How a group acts on a carrier.
#[derive(Debug, Clone)]
pub enum GroupAction {
    /// `table[g][element_index] -> element_index`, for finite carriers.
    PermutationTable(Vec<Vec<usize>>),
    /// Z_h × Z_w acting by cyclic pixel shift; group element `g = dy * w + dx`.
    TorusTranslation { height: usize, width: usize },
    /// Componentwise action on a flat product; `orders[i]` is the order of
    /// the i-th factor group (mixed-radix decoding of the group element).
    Product(Vec<Arc<GroupAction>>, Vec<usize>),
    /// Trivial action (every g fixes every element).
    Trivial,
}

impl GroupAction {
    /// Applies group element `g` to `x`.
    pub fn apply(&self, g: usize, x: &Element) -> Result<Element, SpaceError> {
        match self {
            GroupAction::PermutationTable(table) => {
                let i = x
                    .as_point()
                    .ok_or_else(|| SpaceError::ElementKind("permutation action needs point elements".into()))?;
                let row = table.get(g).ok_or(SpaceError::IndexOutOfRange { index: g, size: table.len() })?;
                let j = *row.get(i).ok_or(SpaceError::IndexOutOfRange { index: i, size: row.len() })?;
                Ok(Element::Point(j))
            }
            GroupAction::TorusTranslation { height, width } => {
                let img = x
                    .as_image()
                    .ok_or_else(|| SpaceError::ElementKind("torus action needs image elements".into()))?;
                if img.height != *height || img.width != *width {
                    return Err(SpaceError::ImageShape {
                        expected_h: *height,
                        expected_w: *width,
                        got_h: img.height,
                        got_w: img.width,
                    });
                }
                let (dy, dx) = (g / width, g % width);
                Ok(Element::Image(img.torus_shift(dy, dx)))
            }
            GroupAction::Product(actions, orders) => match x {
                Element::Tuple(parts) if parts.len() == actions.len() => {
                    let mut rem = g;
                    let mut gs = vec![0usize; actions.len()];
                    for (slot, order) in gs.iter_mut().zip(orders.iter()).rev() {
                        *slot = rem % order;
                        rem /= order;
                    }
                    let moved = actions
                        .iter()
                        .zip(gs)
                        .zip(parts)
                        .map(|((a, gi), p)| a.apply(gi, p))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Element::Tuple(moved))
                }
                _ => Err(SpaceError::ElementKind("product action needs tuple elements".into())),
            },
            GroupAction::Trivial => Ok(x.clone()),
        }
    }
}

/// Identifier of a perception space; equality of spaces is by id.
pub type SpaceId = String;

/// A pseudo-metric data set with an isometric finite-group action on it.
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct PerceptionSpace {
    pub id: SpaceId,
    pub carrier: Carrier,
    pub metric: PseudoMetric,
    pub group: FiniteGroup,
    pub action: GroupAction,
    /// Factor spaces when this space is a tensor product; empty otherwise.
    pub factors: Vec<Arc<PerceptionSpace>>,
}

impl PerceptionSpace {
    pub fn new(
        id: impl Into<SpaceId>,
        carrier: Carrier,
        metric: PseudoMetric,
        group: FiniteGroup,
        action: GroupAction,
    ) -> Arc<PerceptionSpace> {
        Arc::new(PerceptionSpace { id: id.into(), carrier, metric, group, action, factors: Vec::new() })
    }

    /// One-point space with the trivial group; unit of the tensor.
    pub fn unit() -> Arc<PerceptionSpace> {
        PerceptionSpace::new("1", Carrier::Unit, PseudoMetric::Discrete, FiniteGroup::trivial(), GroupAction::Trivial)
    }

    /// Intensional image space over the full torus-translation group.
    pub fn torus_images(id: impl Into<SpaceId>, height: usize, width: usize) -> Arc<PerceptionSpace> {
        PerceptionSpace::new(
            id,
            Carrier::IntensionalImages { height, width },
            PseudoMetric::LInfinity,
            FiniteGroup::direct_product(&FiniteGroup::cyclic(height), &FiniteGroup::cyclic(width)),
            GroupAction::TorusTranslation { height, width },
        )
    }

    /// Intensional image space with only the trivial group acting.
    pub fn plain_images(id: impl Into<SpaceId>, height: usize, width: usize) -> Arc<PerceptionSpace> {
        PerceptionSpace::new(
            id,
            Carrier::IntensionalImages { height, width },
            PseudoMetric::LInfinity,
            FiniteGroup::trivial(),
            GroupAction::Trivial,
        )
    }

    /// Finite space of class labels `0..n-1` under the discrete metric and the
    /// trivial group.
    pub fn label_space(id: impl Into<SpaceId>, n: usize) -> Arc<PerceptionSpace> {
        PerceptionSpace::new(
            id,
            Carrier::labels(n).expect("n >= 1"),
            PseudoMetric::Discrete,
            FiniteGroup::trivial(),
            GroupAction::Trivial,
        )
    }

    pub fn distance(&self, a: &Element, b: &Element) -> Result<MetricValue, SpaceError> {
        self.metric.distance(&self.carrier, a, b)
    }

    pub fn act(&self, g: usize, x: &Element) -> Result<Element, SpaceError> {
        self.action.apply(g, x)
    }

    /// Number of tensor factors: 0 for the unit, n for products, 1 otherwise.
    pub fn factor_count(&self) -> usize {
        match &self.carrier {
            Carrier::Unit => 0,
            Carrier::Product(fs) => fs.len(),
            _ => 1,
        }
    }

    /// Splits an element into its tensor components.
    pub fn unpack(&self, e: &Element) -> Result<Vec<Element>, SpaceError> {
        match (&self.carrier, e) {
            (Carrier::Unit, Element::Unit) => Ok(Vec::new()),
            (Carrier::Product(fs), Element::Tuple(parts)) if fs.len() == parts.len() => Ok(parts.clone()),
            (Carrier::Product(_), _) | (Carrier::Unit, _) => {
                Err(SpaceError::ElementKind("element does not match tensor shape".into()))
            }
            _ => Ok(vec![e.clone()]),
        }
    }

    /// Reassembles an element from tensor components (inverse of `unpack`).
    pub fn pack(&self, parts: Vec<Element>) -> Result<Element, SpaceError> {
        match &self.carrier {
            Carrier::Unit => {
                if parts.is_empty() {
                    Ok(Element::Unit)
                } else {
                    Err(SpaceError::ElementKind("unit space packs zero components".into()))
                }
            }
            Carrier::Product(fs) => {
                if parts.len() == fs.len() {
                    Ok(Element::Tuple(parts))
                } else {
                    Err(SpaceError::ElementKind(format!(
                        "expected {} components, got {}",
                        fs.len(),
                        parts.len()
                    )))
                }
            }
            _ => {
                if parts.len() == 1 {
                    Ok(parts.into_iter().next().unwrap())
                } else {
                    Err(SpaceError::ElementKind(format!("expected 1 component, got {}", parts.len())))
                }
            }
        }
    }
}

/// Whether a computed supremum is exact or only a probe-based lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    LowerBound,
}

/// The induced group pseudo-metric `d_G(g1,g2) = sup_x d(g1*x, g2*x)`.
///
/// Exact for finite carriers (max over all elements). For intensional
/// carriers the supremum is taken over `probe` and flagged as a lower bound.
pub fn induced_group_metric(
    space: &PerceptionSpace,
    g1: usize,
    g2: usize,
    probe: Option<&[Element]>,
) -> Result<(MetricValue, Exactness), SpaceError> {
    if g1 >= space.group.order() || g2 >= space.group.order() {
        return Err(SpaceError::IndexOutOfRange { index: g1.max(g2), size: space.group.order() });
    }
    let (elements, exactness): (Vec<Element>, Exactness) = if space.carrier.is_finite() {
        (space.carrier.elements()?, Exactness::Exact)
    } else {
        let probe = probe.ok_or(SpaceError::EmptyProbeSet)?;
        if probe.is_empty() {
            return Err(SpaceError::EmptyProbeSet);
        }
        (probe.to_vec(), Exactness::LowerBound)
    };
    let mut sup = MetricValue::ZERO;
    for x in &elements {
        let d = space.distance(&space.act(g1, x)?, &space.act(g2, x)?)?;
        sup = sup.max(d);
    }
    Ok((sup, exactness))
}

fn space_factors(s: &Arc<PerceptionSpace>) -> Vec<Arc<PerceptionSpace>> {
    match &s.carrier {
        Carrier::Unit => Vec::new(),
        Carrier::Product(_) => s.factors.clone(),
        _ => vec![s.clone()],
    }
}

/// Direct product of two finite perception spaces: cartesian carrier, max
/// metric, direct-product group, pointwise action. Flattens nested products
/// and drops unit factors, so the tensor is strictly associative and unital.
pub fn product_space(
    a: &Arc<PerceptionSpace>,
    b: &Arc<PerceptionSpace>,
) -> Result<Arc<PerceptionSpace>, SpaceError> {
    if !a.carrier.is_finite() || !b.carrier.is_finite() {
        return Err(SpaceError::IntensionalUnsupported(format!(
            "product of '{}' and '{}'",
            a.id, b.id
        )));
    }
    let mut factors = space_factors(a);
    factors.extend(space_factors(b));
    product_of_factors(factors)
}

/// Tensor of an arbitrary list of plain finite spaces.
pub fn product_of_factors(
    factors: Vec<Arc<PerceptionSpace>>,
) -> Result<Arc<PerceptionSpace>, SpaceError> {
    match factors.len() {
        0 => Ok(PerceptionSpace::unit()),
        1 => Ok(factors.into_iter().next().unwrap()),
        _ => {
            let id = format!(
                "({})",
                factors.iter().map(|f| f.id.as_str()).collect::<Vec<_>>().join("x")
            );
            let carrier = Carrier::Product(factors.iter().map(|f| Arc::new(f.carrier.clone())).collect());
            let metric = build_product_metric(&factors, &carrier)?;
            let group = factors
                .iter()
                .skip(1)
                .fold(factors[0].group.clone(), |acc, f| FiniteGroup::direct_product(&acc, &f.group));
            let action = GroupAction::Product(
                factors.iter().map(|f| Arc::new(f.action.clone())).collect(),
                factors.iter().map(|f| f.group.order()).collect(),
            );
            Ok(Arc::new(PerceptionSpace { id, carrier, metric, group, action, factors }))
        }
    }
}

/// Max-combination metric of a flat product, materialized as a table.
fn build_product_metric(
    factors: &[Arc<PerceptionSpace>],
    carrier: &Carrier,
) -> Result<PseudoMetric, SpaceError> {
    let n = carrier.size().expect("finite product");
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        let ei = carrier.element(i)?;
        let pi = match &ei {
            Element::Tuple(parts) => parts.clone(),
            _ => unreachable!("product elements are tuples"),
        };
        for j in 0..n {
            let ej = carrier.element(j)?;
            let pj = match &ej {
                Element::Tuple(parts) => parts.clone(),
                _ => unreachable!(),
            };
            let mut d = MetricValue::ZERO;
            for ((f, a), b) in factors.iter().zip(pi.iter()).zip(pj.iter()) {
                d = d.max(f.distance(a, b)?);
            }
            rows[i][j] = d.value();
        }
    }
    Ok(PseudoMetric::ExplicitTable(crate::metric::DistanceTable::new(rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::DistanceTable;

    #[test]
    fn cyclic_group_laws() {
        let g = FiniteGroup::cyclic(4);
        assert_eq!(g.identity(), 0);
        assert_eq!(g.compose(3, 2), 1);
        assert_eq!(g.inverse(3), 1);
        g.check_associativity_exhaustive().unwrap();
    }

    #[test]
    fn from_table_finds_identity_and_inverses() {
        // C_2 written with swapped element order: element 1 is the identity.
        let g = FiniteGroup::from_table(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(g.identity(), 1);
        assert_eq!(g.inverse(0), 0);
    }

    #[test]
    fn from_table_rejects_non_square() {
        assert!(matches!(
            FiniteGroup::from_table(vec![vec![0, 1], vec![1]]),
            Err(SpaceError::MalformedTable(_))
        ));
        assert!(matches!(
            FiniteGroup::from_table(vec![vec![5]]),
            Err(SpaceError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn torus_shift_wraps() {
        let img = ImageData::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let shifted = img.torus_shift(1, 0);
        assert_eq!(shifted.pixels, vec![0.3, 0.4, 0.1, 0.2]);
        let round = img.torus_shift(2, 2);
        assert_eq!(round.pixels, img.pixels);
    }

    #[test]
    fn torus_action_composes_exactly_up_to_8x8() {
        for (h, w) in [(2usize, 3usize), (4, 4), (8, 8)] {
            let space = PerceptionSpace::torus_images("imgs", h, w);
            let img = Element::Image(
                ImageData::new(h, w, (0..h * w).map(|i| (i as f64) / (h * w) as f64).collect()).unwrap(),
            );
            for g1 in space.group.elements() {
                for g2 in space.group.elements() {
                    let lhs = space.act(space.group.compose(g1, g2), &img).unwrap();
                    let rhs = space.act(g1, &space.act(g2, &img).unwrap()).unwrap();
                    assert_eq!(lhs, rhs, "shift composition mismatch at h={h} w={w} g1={g1} g2={g2}");
                }
            }
        }
    }

    fn two_point_c2() -> Arc<PerceptionSpace> {
        PerceptionSpace::new(
            "a",
            Carrier::tokens(2).unwrap(),
            PseudoMetric::Discrete,
            FiniteGroup::cyclic(2),
            GroupAction::PermutationTable(vec![vec![0, 1], vec![1, 0]]),
        )
    }

    #[test]
    fn product_space_sizes_multiply() {
        let a = two_point_c2();
        let b = PerceptionSpace::new(
            "b",
            Carrier::tokens(3).unwrap(),
            PseudoMetric::Discrete,
            FiniteGroup::trivial(),
            GroupAction::Trivial,
        );
        let p = product_space(&a, &b).unwrap();
        assert_eq!(p.carrier.size(), Some(6));
        assert_eq!(p.group.order(), 2);
        assert_eq!(p.factor_count(), 2);
    }

    #[test]
    fn unit_is_strict_tensor_unit() {
        let s = two_point_c2();
        let left = product_space(&PerceptionSpace::unit(), &s).unwrap();
        let right = product_space(&s, &PerceptionSpace::unit()).unwrap();
        assert_eq!(left.id, s.id);
        assert_eq!(right.id, s.id);
        assert_eq!(left.carrier.size(), Some(2));
    }

    #[test]
    fn product_is_strictly_associative() {
        let a = two_point_c2();
        let b = PerceptionSpace::label_space("b", 3);
        let c = PerceptionSpace::label_space("c", 2);
        let left = product_space(&product_space(&a, &b).unwrap(), &c).unwrap();
        let right = product_space(&a, &product_space(&b, &c).unwrap()).unwrap();
        assert_eq!(left.id, right.id);
        assert_eq!(left.carrier.size(), right.carrier.size());
        // Mixed-radix indices agree on both sides.
        for i in 0..left.carrier.size().unwrap() {
            assert_eq!(left.carrier.element(i).unwrap(), right.carrier.element(i).unwrap());
        }
    }

    #[test]
    fn product_metric_is_max_of_components() {
        let ta = DistanceTable::new(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let tb = DistanceTable::new(vec![vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        let a = PerceptionSpace::new(
            "a",
            Carrier::tokens(2).unwrap(),
            PseudoMetric::ExplicitTable(ta),
            FiniteGroup::trivial(),
            GroupAction::Trivial,
        );
        let b = PerceptionSpace::new(
            "b",
            Carrier::tokens(2).unwrap(),
            PseudoMetric::ExplicitTable(tb),
            FiniteGroup::trivial(),
            GroupAction::Trivial,
        );
        let p = product_space(&a, &b).unwrap();
        // d((0,0),(1,1)) = max(3, 5) = 5
        let d = p.distance(&p.carrier.element(0).unwrap(), &p.carrier.element(3).unwrap()).unwrap();
        assert_eq!(d.value(), 5.0);
    }

    #[test]
    fn product_of_intensional_is_unsupported() {
        let imgs = PerceptionSpace::torus_images("imgs", 2, 2);
        let pt = PerceptionSpace::unit();
        assert!(matches!(
            product_space(&imgs, &pt),
            Err(SpaceError::IntensionalUnsupported(_))
        ));
    }

    #[test]
    fn induced_metric_on_intensional_needs_probe() {
        let imgs = PerceptionSpace::torus_images("imgs", 2, 2);
        assert!(matches!(
            induced_group_metric(&imgs, 0, 1, None),
            Err(SpaceError::EmptyProbeSet)
        ));
        assert!(matches!(
            induced_group_metric(&imgs, 0, 1, Some(&[])),
            Err(SpaceError::EmptyProbeSet)
        ));
    }
}
