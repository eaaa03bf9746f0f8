use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("occupation {occupation} at node {node} exceeds capacity {capacity}")]
    OccupationOutOfBounds {
        node: usize,
        occupation: usize,
        capacity: usize,
    },
    #[error("node index {node} out of range for {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate state: {0}")]
    DegenerateState(String),
    #[error("degenerate probe: {0}")]
    DegenerateProbe(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("protocol precondition violated: {0}")]
    ProtocolPrecondition(String),
    #[error("scheduling error: {0}")]
    Scheduling(String),
    #[error("register of {requested} qubits exceeds the capacity of {max}")]
    Capacity { requested: usize, max: usize },
    #[error("unsupported probe: {0}")]
    UnsupportedProbe(String),
    #[error("invalid phase family: {0}")]
    Family(String),
    #[error("parameter is not identifiable: {0}")]
    Unidentifiable(String),
    #[error("state is not supported on the two readout branches: {0}")]
    UnsupportedState(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
