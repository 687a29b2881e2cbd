//! GEOs and GENEOs as first-class values, with equivariance and
//! non-expansiveness checking and the structural combinators (identity, copy,
//! discard, swap, sequential and parallel composition).

use std::sync::Arc;

use crate::error::GeoError;
use crate::metric::{MetricValue, METRIC_TOL};
use crate::space::{product_space, Element, Exactness, PerceptionSpace};
use crate::space::induced_group_metric;

/// Group homomorphism between the (finite) groups of two perception spaces,
/// given extensionally by an element-index table.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupHom {
    map: Vec<usize>,
    dst_order: usize,
    kind: HomKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomKind {
    Identity,
    /// Everything maps to the target identity.
    Annihilator,
    Explicit,
}

impl GroupHom {
    pub fn identity(order: usize) -> GroupHom {
        GroupHom { map: (0..order).collect(), dst_order: order, kind: HomKind::Identity }
    }

    pub fn annihilator(src_order: usize, dst_identity: usize, dst_order: usize) -> GroupHom {
        GroupHom { map: vec![dst_identity; src_order], dst_order, kind: HomKind::Annihilator }
    }

    /// Builds an explicit homomorphism and verifies t(g1∘g2) = t(g1)∘t(g2)
    /// and t(id) = id over all pairs (groups are finite).
    pub fn explicit(
        map: Vec<usize>,
        src: &crate::space::FiniteGroup,
        dst: &crate::space::FiniteGroup,
    ) -> Result<GroupHom, GeoError> {
        if map.len() != src.order() {
            return Err(GeoError::HomLaw(format!(
                "map has {} entries for source group of order {}",
                map.len(),
                src.order()
            )));
        }
        for &v in &map {
            if v >= dst.order() {
                return Err(GeoError::HomLaw(format!("image {v} out of range for target group")));
            }
        }
        if map[src.identity()] != dst.identity() {
            return Err(GeoError::HomLaw("t(id) != id".into()));
        }
        for g1 in src.elements() {
            for g2 in src.elements() {
                if map[src.compose(g1, g2)] != dst.compose(map[g1], map[g2]) {
                    return Err(GeoError::HomLaw(format!("t({g1}∘{g2}) != t({g1})∘t({g2})")));
                }
            }
        }
        Ok(GroupHom { map, dst_order: dst.order(), kind: HomKind::Explicit })
    }

    pub fn apply(&self, g: usize) -> usize {
        self.map[g]
    }

    pub fn src_order(&self) -> usize {
        self.map.len()
    }

    pub fn dst_order(&self) -> usize {
        self.dst_order
    }

    pub fn kind(&self) -> HomKind {
        self.kind
    }

    fn compose(after: &GroupHom, before: &GroupHom) -> GroupHom {
        let map = before.map.iter().map(|&g| after.map[g]).collect();
        GroupHom { map, dst_order: after.dst_order, kind: HomKind::Explicit }
    }

    fn product(a: &GroupHom, b: &GroupHom) -> GroupHom {
        let n = a.src_order() * b.src_order();
        let mut map = Vec::with_capacity(n);
        for g in 0..a.src_order() {
            for k in 0..b.src_order() {
                map.push(a.map[g] * b.dst_order + b.map[k]);
            }
        }
        GroupHom { map, dst_order: a.dst_order * b.dst_order, kind: HomKind::Explicit }
    }
}

type BuiltinFn = dyn Fn(&Element) -> Result<Element, GeoError> + Send + Sync;

/// Evaluation handle of a GEO's data map.
#[derive(Clone)]
pub enum DataMap {
    Identity,
    /// Finite-carrier lookup: dom element index to cod element index.
    Lookup(Arc<Vec<usize>>),
    /// Run `.0` then `.1`.
    Composite(Arc<Geo>, Arc<Geo>),
    /// Componentwise on pair elements.
    Parallel(Arc<Geo>, Arc<Geo>),
    Copy,
    Discard,
    /// Exchanges the two tensor halves; the payload is the number of leading
    /// components that belong to the left half.
    Swap(usize),
    /// Opaque primitive (e.g. a frozen model forward pass).
    Builtin { name: String, f: Arc<BuiltinFn> },
}

impl std::fmt::Debug for DataMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataMap::Identity => write!(f, "Identity"),
            DataMap::Lookup(t) => write!(f, "Lookup({} entries)", t.len()),
            DataMap::Composite(a, b) => write!(f, "Composite({:?} ; {:?})", a.map, b.map),
            DataMap::Parallel(a, b) => write!(f, "Parallel({:?} x {:?})", a.map, b.map),
            DataMap::Copy => write!(f, "Copy"),
            DataMap::Discard => write!(f, "Discard"),
            DataMap::Swap(k) => write!(f, "Swap({k})"),
            DataMap::Builtin { name, .. } => write!(f, "Builtin({name})"),
        }
    }
}

/// A data map together with a group homomorphism between two perception
/// spaces. Immutable and shareable; evaluation is pure.
#[derive(Debug, Clone)]
pub struct Geo {
    pub dom: Arc<PerceptionSpace>,
    pub cod: Arc<PerceptionSpace>,
    pub map: DataMap,
    pub hom: GroupHom,
}

impl Geo {
    pub fn identity(space: &Arc<PerceptionSpace>) -> Geo {
        Geo {
            dom: space.clone(),
            cod: space.clone(),
            map: DataMap::Identity,
            hom: GroupHom::identity(space.group.order()),
        }
    }

    /// Lookup-table GEO over finite carriers.
    pub fn lookup(
        dom: &Arc<PerceptionSpace>,
        cod: &Arc<PerceptionSpace>,
        table: Vec<usize>,
        hom: GroupHom,
    ) -> Result<Geo, GeoError> {
        let n = dom.carrier.size().ok_or_else(|| {
            GeoError::SpaceMismatch(format!("lookup table over intensional space '{}'", dom.id))
        })?;
        let m = cod.carrier.size().ok_or_else(|| {
            GeoError::SpaceMismatch(format!("lookup table into intensional space '{}'", cod.id))
        })?;
        if table.len() != n {
            return Err(GeoError::SpaceMismatch(format!(
                "table has {} entries for carrier of size {n}",
                table.len()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&v| v >= m) {
            return Err(GeoError::RangeViolation(format!("table entry {bad} >= codomain size {m}")));
        }
        check_hom_shape(&hom, dom, cod)?;
        Ok(Geo { dom: dom.clone(), cod: cod.clone(), map: DataMap::Lookup(Arc::new(table)), hom })
    }

    /// Opaque primitive GEO; the closure must map dom elements to cod
    /// elements (checked on every evaluation).
    pub fn builtin(
        name: impl Into<String>,
        dom: &Arc<PerceptionSpace>,
        cod: &Arc<PerceptionSpace>,
        hom: GroupHom,
        f: impl Fn(&Element) -> Result<Element, GeoError> + Send + Sync + 'static,
    ) -> Result<Geo, GeoError> {
        check_hom_shape(&hom, dom, cod)?;
        Ok(Geo {
            dom: dom.clone(),
            cod: cod.clone(),
            map: DataMap::Builtin { name: name.into(), f: Arc::new(f) },
            hom,
        })
    }

    /// Evaluates the data map, checking membership of input and output.
    pub fn apply(&self, x: &Element) -> Result<Element, GeoError> {
        if !self.dom.carrier.contains(x) {
            return Err(GeoError::RangeViolation(format!(
                "input {x:?} is not an element of '{}'",
                self.dom.id
            )));
        }
        let y = self.apply_unchecked(x)?;
        if !self.cod.carrier.contains(&y) {
            return Err(GeoError::RangeViolation(format!(
                "output {y:?} is not an element of '{}'",
                self.cod.id
            )));
        }
        Ok(y)
    }

    fn apply_unchecked(&self, x: &Element) -> Result<Element, GeoError> {
        match &self.map {
            DataMap::Identity => Ok(x.clone()),
            DataMap::Lookup(table) => {
                let i = self.dom.carrier.index_of(x)?;
                self.cod.carrier.element(table[i]).map_err(GeoError::from)
            }
            DataMap::Composite(first, second) => second.apply(&first.apply(x)?),
            DataMap::Parallel(f1, f2) => {
                let parts = self.dom.unpack(x)?;
                let split = f1.dom.factor_count();
                if parts.len() != split + f2.dom.factor_count() {
                    return Err(GeoError::RangeViolation("tensor shape mismatch".into()));
                }
                let (left, right) = parts.split_at(split);
                let y1 = f1.apply(&f1.dom.pack(left.to_vec())?)?;
                let y2 = f2.apply(&f2.dom.pack(right.to_vec())?)?;
                let mut out = f1.cod.unpack(&y1)?;
                out.extend(f2.cod.unpack(&y2)?);
                self.cod.pack(out).map_err(GeoError::from)
            }
            DataMap::Copy => {
                let parts = self.dom.unpack(x)?;
                let mut out = parts.clone();
                out.extend(parts);
                self.cod.pack(out).map_err(GeoError::from)
            }
            DataMap::Discard => Ok(Element::Unit),
            DataMap::Swap(split) => {
                let parts = self.dom.unpack(x)?;
                if parts.len() < *split {
                    return Err(GeoError::RangeViolation("swap shape mismatch".into()));
                }
                let (left, right) = parts.split_at(*split);
                let mut out = right.to_vec();
                out.extend_from_slice(left);
                self.cod.pack(out).map_err(GeoError::from)
            }
            DataMap::Builtin { name, f } => f(x).map_err(|e| GeoError::Evaluation {
                geo: name.clone(),
                source: Box::new(e),
            }),
        }
    }
}

fn check_hom_shape(hom: &GroupHom, dom: &PerceptionSpace, cod: &PerceptionSpace) -> Result<(), GeoError> {
    if hom.src_order() != dom.group.order() || hom.dst_order() != cod.group.order() {
        return Err(GeoError::HomLaw(format!(
            "hom maps group of order {} to order {}, spaces have {} and {}",
            hom.src_order(),
            hom.dst_order(),
            dom.group.order(),
            cod.group.order()
        )));
    }
    Ok(())
}

/// Run `first`, then `second`.
pub fn compose(second: &Geo, first: &Geo) -> Result<Geo, GeoError> {
    if first.cod.id != second.dom.id {
        return Err(GeoError::SpaceMismatch(format!(
            "cannot compose: '{}' -> '{}' then '{}' -> '{}'",
            first.dom.id, first.cod.id, second.dom.id, second.cod.id
        )));
    }
    Ok(Geo {
        dom: first.dom.clone(),
        cod: second.cod.clone(),
        map: DataMap::Composite(Arc::new(first.clone()), Arc::new(second.clone())),
        hom: GroupHom::compose(&second.hom, &first.hom),
    })
}

/// Parallel composition; both endpoint spaces must be finite.
pub fn tensor(g1: &Geo, g2: &Geo) -> Result<Geo, GeoError> {
    let dom = product_space(&g1.dom, &g2.dom)?;
    let cod = product_space(&g1.cod, &g2.cod)?;
    Ok(Geo {
        dom,
        cod,
        map: DataMap::Parallel(Arc::new(g1.clone()), Arc::new(g2.clone())),
        hom: GroupHom::product(&g1.hom, &g2.hom),
    })
}

/// GENEO certificate: either a recorded check or a declared justification.
#[derive(Debug, Clone)]
pub enum Certificate {
    Validated(ProbeReport),
    Declared(String),
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub pairs_checked: usize,
    pub exhaustive: bool,
}

/// A GEO with a non-expansiveness certificate.
#[derive(Debug, Clone)]
pub struct Geneo {
    pub geo: Geo,
    pub certificate: Certificate,
}

impl Geneo {
    /// Admits a GEO with a recorded justification instead of a checked
    /// certificate (used for intensional-space arrows).
    pub fn declared(geo: Geo, reason: impl Into<String>) -> Geneo {
        Geneo { geo, certificate: Certificate::Declared(reason.into()) }
    }

    /// Structural maps are non-expansive by construction.
    fn structural(geo: Geo) -> Geneo {
        Geneo { geo, certificate: Certificate::Validated(ProbeReport { pairs_checked: 0, exhaustive: true }) }
    }
}

/// Identity GENEO on a space.
pub fn identity(space: &Arc<PerceptionSpace>) -> Geneo {
    Geneo::structural(Geo::identity(space))
}

/// Copy GENEO `x ↦ (x, x)`; finite spaces only (the codomain is a product).
pub fn copy(space: &Arc<PerceptionSpace>) -> Result<Geneo, GeoError> {
    let cod = product_space(space, space)?;
    let order = space.group.order();
    let mut map = Vec::with_capacity(order);
    for g in 0..order {
        map.push(g * order + g);
    }
    Ok(Geneo::structural(Geo {
        dom: space.clone(),
        cod,
        map: DataMap::Copy,
        hom: GroupHom { map, dst_order: order * order, kind: HomKind::Explicit },
    }))
}

/// Discard GENEO into the unit space; defined for every space.
pub fn discard(space: &Arc<PerceptionSpace>) -> Geneo {
    let unit = PerceptionSpace::unit();
    Geneo::structural(Geo {
        dom: space.clone(),
        cod: unit,
        map: DataMap::Discard,
        hom: GroupHom::annihilator(space.group.order(), 0, 1),
    })
}

/// Swap GENEO `(x, y) ↦ (y, x)`; finite spaces only.
pub fn swap(a: &Arc<PerceptionSpace>, b: &Arc<PerceptionSpace>) -> Result<Geneo, GeoError> {
    let dom = product_space(a, b)?;
    let cod = product_space(b, a)?;
    let (na, nb) = (a.group.order(), b.group.order());
    let mut map = Vec::with_capacity(na * nb);
    for g in 0..na {
        for k in 0..nb {
            map.push(k * na + g);
        }
    }
    Ok(Geneo::structural(Geo {
        dom,
        cod,
        map: DataMap::Swap(a.factor_count()),
        hom: GroupHom { map, dst_order: na * nb, kind: HomKind::Explicit },
    }))
}

/// Probe for equivariance checks.
pub enum EquivarianceProbe<'a> {
    /// Every (g, x); finite carriers only.
    Exhaustive,
    Sample(&'a [(usize, Element)]),
}

#[derive(Debug, Clone)]
pub struct EquivarianceReport {
    /// Pairs (g, x) with f(g*x) ≠ t(g)*f(x) up to the codomain metric
    /// tolerance.
    pub violations: Vec<(usize, Element)>,
    pub probe_size: usize,
    pub exhaustive: bool,
}

impl EquivarianceReport {
    pub fn is_equivariant(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Computes the violation set NE = {(g, x) : f(g*x) ≠ t(g)*f(x)} restricted
/// to the probe, comparing codomain elements up to metric tolerance.
pub fn check_equivariance(geo: &Geo, probe: EquivarianceProbe) -> Result<EquivarianceReport, GeoError> {
    let (pairs, exhaustive): (Vec<(usize, Element)>, bool) = match probe {
        EquivarianceProbe::Exhaustive => {
            let elements = geo
                .dom
                .carrier
                .elements()
                .map_err(|_| GeoError::ExhaustiveOnIntensional(geo.dom.id.clone()))?;
            let mut pairs = Vec::with_capacity(elements.len() * geo.dom.group.order());
            for g in geo.dom.group.elements() {
                for x in &elements {
                    pairs.push((g, x.clone()));
                }
            }
            (pairs, true)
        }
        EquivarianceProbe::Sample(sample) => (sample.to_vec(), false),
    };
    let probe_size = pairs.len();
    let mut violations = Vec::new();
    for (g, x) in pairs {
        let lhs = geo.apply(&geo.dom.act(g, &x)?)?;
        let rhs = geo.cod.act(geo.hom.apply(g), &geo.apply(&x)?)?;
        if geo.cod.distance(&lhs, &rhs)?.value() > METRIC_TOL {
            violations.push((g, x));
        }
    }
    Ok(EquivarianceReport { violations, probe_size, exhaustive })
}

/// Probe for non-expansiveness checks.
pub enum PairProbe<'a> {
    /// Every pair of carrier elements; finite carriers only.
    Exhaustive,
    Sample(&'a [(Element, Element)]),
}

/// A pair that is mapped further apart than it started.
#[derive(Debug, Clone)]
pub struct ExpansionViolation {
    pub detail: String,
    /// d(f(x1), f(x2)) / d(x1, x2); may be infinite.
    pub ratio: f64,
}

/// Outcome of [`check_nonexpansive`].
#[derive(Debug)]
pub enum NonexpansiveOutcome {
    Valid(Geneo),
    Violations(Vec<ExpansionViolation>),
}

/// Checks both GENEO conditions: the data map must not expand the carrier
/// metric, and the homomorphism must not expand the induced group metric.
pub fn check_nonexpansive(geo: &Geo, probe: PairProbe) -> Result<NonexpansiveOutcome, GeoError> {
    let (pairs, exhaustive): (Vec<(Element, Element)>, bool) = match probe {
        PairProbe::Exhaustive => {
            let elements = geo
                .dom
                .carrier
                .elements()
                .map_err(|_| GeoError::ExhaustiveOnIntensional(geo.dom.id.clone()))?;
            let mut pairs = Vec::new();
            for (i, a) in elements.iter().enumerate() {
                for b in elements.iter().skip(i) {
                    pairs.push((a.clone(), b.clone()));
                }
            }
            (pairs, true)
        }
        PairProbe::Sample(sample) => (sample.to_vec(), false),
    };

    let mut violations = Vec::new();
    for (x1, x2) in &pairs {
        let before = geo.dom.distance(x1, x2)?;
        let after = geo.cod.distance(&geo.apply(x1)?, &geo.apply(x2)?)?;
        if after.value() > before.value() + METRIC_TOL {
            let ratio = if before.value() == 0.0 { f64::INFINITY } else { after.value() / before.value() };
            violations.push(ExpansionViolation {
                detail: format!("d({x1:?},{x2:?}) = {before} maps to {after}"),
                ratio,
            });
        }
    }

    // Group-side condition, via the induced metrics. For intensional domains
    // the suprema are probed with the sampled pair elements.
    let probe_elems: Vec<Element> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let dom_probe: Option<&[Element]> = if geo.dom.carrier.is_finite() { None } else { Some(&probe_elems) };
    let cod_probe_elems: Vec<Element> = if geo.cod.carrier.is_finite() {
        Vec::new()
    } else {
        pairs
            .iter()
            .flat_map(|(a, b)| [geo.apply(a), geo.apply(b)])
            .collect::<Result<Vec<_>, _>>()?
    };
    let cod_probe: Option<&[Element]> =
        if geo.cod.carrier.is_finite() { None } else { Some(&cod_probe_elems) };
    if !probe_elems.is_empty() || geo.dom.carrier.is_finite() {
        for g1 in geo.dom.group.elements() {
            for g2 in geo.dom.group.elements().skip(g1) {
                let (dg, _) = induced_group_metric(&geo.dom, g1, g2, dom_probe)?;
                let (dk, cod_exact) =
                    induced_group_metric(&geo.cod, geo.hom.apply(g1), geo.hom.apply(g2), cod_probe)?;
                // A probed codomain supremum is only a lower bound, so a
                // violation it reports is genuine.
                let _ = cod_exact;
                if dk.value() > dg.value() + METRIC_TOL {
                    let ratio = if dg.value() == 0.0 { f64::INFINITY } else { dk.value() / dg.value() };
                    violations.push(ExpansionViolation {
                        detail: format!("group metric: d_K(t({g1}),t({g2})) = {dk} > d_G({g1},{g2}) = {dg}"),
                        ratio,
                    });
                }
            }
        }
    }

    if violations.is_empty() {
        Ok(NonexpansiveOutcome::Valid(Geneo {
            geo: geo.clone(),
            certificate: Certificate::Validated(ProbeReport { pairs_checked: pairs.len(), exhaustive }),
        }))
    } else {
        Ok(NonexpansiveOutcome::Violations(violations))
    }
}

/// Extensional equality of two GEOs on every element of their (finite,
/// shared) domain carrier, up to the codomain metric tolerance.
pub fn extensionally_equal(a: &Geo, b: &Geo) -> Result<bool, GeoError> {
    if a.dom.id != b.dom.id || a.cod.id != b.cod.id {
        return Ok(false);
    }
    for x in a.dom.carrier.elements()? {
        let ya = a.apply(&x)?;
        let yb = b.apply(&x)?;
        if a.cod.distance(&ya, &yb)?.value() > METRIC_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Induced group metric re-exported at the GEO level (spec operation):
/// `d_G(g1,g2)` with exactness flag.
pub fn group_distance(
    space: &PerceptionSpace,
    g1: usize,
    g2: usize,
    probe: Option<&[Element]>,
) -> Result<(MetricValue, Exactness), GeoError> {
    induced_group_metric(space, g1, g2, probe).map_err(GeoError::from)
}
