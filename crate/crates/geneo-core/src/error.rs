//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("invalid metric value {0} (must be nonnegative, not NaN)")]
    InvalidMetricValue(f64),
    #[error("metric axiom ({axiom}) violated: {witness}")]
    MetricAxiom { axiom: &'static str, witness: String },
    #[error("malformed table: {0}")]
    MalformedTable(String),
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("element kind error: {0}")]
    ElementKind(String),
    #[error("empty carrier")]
    EmptyCarrier,
    #[error("group law ({law}) violated: {witness}")]
    GroupLaw { law: &'static str, witness: String },
    #[error("operation unsupported on intensional carriers: {0}")]
    IntensionalUnsupported(String),
    #[error("empty probe set for intensional carrier")]
    EmptyProbeSet,
    #[error("pixel value {0} outside [0,1]")]
    PixelOutOfRange(f64),
    #[error("image shape mismatch: expected {expected_h}x{expected_w}, got {got_h}x{got_w}")]
    ImageShape {
        expected_h: usize,
        expected_w: usize,
        got_h: usize,
        got_w: usize,
    },
}

#[derive(Debug, Error)]
pub enum GeoError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("group homomorphism law violated: {0}")]
    HomLaw(String),
    #[error("exhaustive check requested on intensional carrier '{0}'")]
    ExhaustiveOnIntensional(String),
    #[error("evaluation error in '{geo}': {source}")]
    Evaluation {
        geo: String,
        #[source]
        source: Box<GeoError>,
    },
    #[error("data map produced an element outside the codomain: {0}")]
    RangeViolation(String),
}

#[derive(Debug, Error)]
pub enum DslError {
    #[error("{line}:{col}: lexical error: {msg}")]
    Lex { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: syntax error: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: duplicate declaration of '{name}'")]
    Duplicate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: unknown identifier '{name}'")]
    Unknown { line: usize, col: usize, name: String },
    #[error("type error at sequential composition: output word [{left}] does not match input word [{right}]")]
    WordMismatch { left: String, right: String },
    #[error("unknown sort '{0}'")]
    UnknownSort(String),
    #[error("unknown generator '{0}'")]
    UnknownGenerator(String),
    #[error("missing interpretation binding for {0}")]
    MissingBinding(String),
    #[error("missing complexity assignment for generator '{0}'")]
    MissingComplexity(String),
    #[error("complexity must be nonnegative and not NaN, got {0} for '{1}'")]
    InvalidComplexity(f64, String),
    #[error("interpretation of generator '{name}' has wrong endpoints: {detail}")]
    BindingShape { name: String, detail: String },
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Error)]
pub enum ObserverError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("translation category: {0}")]
    Category(String),
    #[error("empty evaluation set")]
    EmptyEvaluationSet,
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("json: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
}
