use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("endpoint {endpoint} out of range for {vertex_count} vertices")]
    EndpointOutOfRange {
        endpoint: usize,
        vertex_count: usize,
    },
    #[error("edge position {position} out of range for {edge_count} edges")]
    EdgeOutOfRange { position: usize, edge_count: usize },
    #[error("too many {what}: {count} > {max}")]
    TooLarge {
        what: &'static str,
        count: usize,
        max: usize,
    },
    #[error("malformed graph text: {0:?}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ForestError {
    #[error("forest lists edge {0} twice")]
    Duplicate(usize),
    #[error("forest edges contain a cycle through edge {0}")]
    Cycle(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
