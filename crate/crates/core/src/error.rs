use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for a {n}-qubit register")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("register of {n} qubits exceeds the supported maximum of {max}")]
    RegisterTooLarge { n: usize, max: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix has nonzero trace {trace:e}")]
    NonzeroTrace { trace: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector set is not orthonormal (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("source and target lists differ in length ({sources} vs {targets})")]
    LengthMismatch { sources: usize, targets: usize },

    #[error("Rank3: constraint Bloch vectors span all three axes; no single-qubit involution anticommutes with every D operator")]
    Rank3,

    #[error("EvenQubitCountRequired: the {{X^n, Z^n}} code needs an even register, got n = {n}")]
    EvenQubitCountRequired { n: usize },

    #[error("invalid stabilizer generators: {0}")]
    InvalidGenerators(String),

    #[error("stabilizer projector has rank zero")]
    EmptyCodespace,

    #[error("operation not applicable to this code: {0}")]
    NotApplicable(&'static str),

    #[error("channel {channel} violates the correctability condition (residual {residual:e})")]
    CorrectabilityViolated { channel: usize, residual: f64 },

    #[error("negative no-jump probability {probability:e}; reduce dt")]
    NegativeProbability { probability: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("master-equation integration unstable (trace drift {drift:e}); use a smaller dt")]
    OracleUnstable { drift: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
