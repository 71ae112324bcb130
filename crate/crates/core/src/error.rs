use thiserror::Error;

/// Errors raised by the library. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("contract violated: {0}")]
    Contract(String),

    /// A quantity that must stay away from zero vanished. `nodes` lists
    /// grid locations (ix, iy) or a single site when the failure is not
    /// grid-based.
    #[error("singular configuration: {what} at {} node(s){}", nodes.len(), preview(nodes))]
    Singular { what: String, nodes: Vec<(usize, usize)> },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn preview(nodes: &[(usize, usize)]) -> String {
    if nodes.is_empty() {
        return String::new();
    }
    let shown: Vec<String> = nodes.iter().take(8).map(|(a, b)| format!("({a},{b})")).collect();
    let more = if nodes.len() > 8 { ", ..." } else { "" };
    format!(" [{}{}]", shown.join(", "), more)
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    pub fn singular(what: impl Into<String>, nodes: Vec<(usize, usize)>) -> Self {
        Error::Singular { what: what.into(), nodes }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
