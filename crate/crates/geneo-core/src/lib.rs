//! Group-equivariant operators over perception spaces, a typed string-diagram
//! language for building them, and observer-relative distance and complexity
//! measures between them.
//!
//! The crate is organized around five layers:
//!
//! - [`space`]: perception spaces (metric carrier + isometric finite-group
//!   action), products, and the induced group pseudo-metric;
//! - [`geo`]: GEOs/GENEOs with equivariance and non-expansiveness checks and
//!   the structural combinators;
//! - [`dsl`]: the textual diagram language, its typechecker, and the
//!   semantics and complexity functors;
//! - [`observer`]: translation categories, crossed pairs, the surrogate
//!   distance and its relatives;
//! - [`suites`]: randomized property suites driven by the CLI and the
//!   acceptance tests.

pub mod dsl;
pub mod error;
pub mod geo;
pub mod json;
pub mod metric;
pub mod observer;
pub mod space;
pub mod suites;
pub mod validate;

pub use error::{DslError, GeoError, JsonError, ObserverError, SpaceError};
pub use metric::{MetricValue, PseudoMetric, METRIC_TOL};
pub use space::{
    induced_group_metric, product_space, Carrier, Element, Exactness, FiniteGroup, GroupAction,
    ImageData, Payload, PerceptionSpace, SpaceId,
};
pub use validate::{validate_space, ValidationReport, Violation};
