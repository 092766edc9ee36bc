use thiserror::Error;

pub type Result<T> = std::result::Result<T, ShellError>;

#[derive(Debug, Error)]
pub enum ShellError {
    #[error("parameter {value} outside knot range [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("degenerate surface parameterization at ({0}, {1})")]
    SingularGeometry(f64, f64),

    #[error("element {element}: {source}")]
    Element {
        element: usize,
        #[source]
        source: Box<ShellError>,
    },

    #[error("resultant is already expressed in the local Cartesian basis")]
    AlreadyCartesian,

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("every degree of freedom is constrained")]
    EmptySystem,

    #[error("system is not positive definite (factorization broke down at pivot {0})")]
    Indefinite(usize),

    #[error("system is singular: row {0} has no stiffness")]
    Singular(usize),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("reference field has zero L2 norm")]
    UndefinedNorm,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("refinement level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<ShellError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ShellError {
    pub(crate) fn in_element(self, element: usize) -> Self {
        ShellError::Element {
            element,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        ShellError::Level {
            level,
            source: Box::new(self),
        }
    }
}
