use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("position {0:?} lies outside the grid")]
    OutOfBounds([f64; 3]),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("invalid grid specification: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(&'static str),
    #[error("no parameters or vocabulary entry for word `{0}`")]
    UnknownWord(String),
    #[error("instruction has no verb")]
    NoVerb,
    #[error("malformed phrase: {0}")]
    MalformedPhrase(String),
    #[error("invalid program graph: {0}")]
    InvalidGraph(String),
    #[error("sample generation failed after {0} attempts")]
    GenerationFailure(u32),
    #[error("unknown anchor `{0}`")]
    UnknownAnchor(String),
    #[error("anchors `{0}` and `{1}` occupy the same cell")]
    CellCollision(String, String),
    #[error("{0} anchors exceed the configuration cap of {1}")]
    TooManyAnchors(usize, usize),
    #[error("no free position in that direction")]
    NoFreePosition,
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
