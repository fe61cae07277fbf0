use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("stencil error: vertex {vertex} is missing neighbor {missing}")]
    Stencil { vertex: usize, missing: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource error: window needs {required} vertices, budget is {budget}")]
    Resource { required: usize, budget: usize },
    #[error("solver error: {0}")]
    Solver(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
}
