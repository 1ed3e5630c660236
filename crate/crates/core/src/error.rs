use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration diverged at step {step}{}", path_suffix(*.path))]
    Divergence { step: usize, path: Option<usize> },

    #[error("phase-speed singularity (r + z <= 0) at step {step}")]
    Singularity { step: usize },

    #[error("no limit cycle found: {0}")]
    NoCycle(String),

    #[error("trajectory converged to a fixed point near {state:?}")]
    FixedPoint { state: Vec<f64> },

    #[error("frame lost orthogonality ({defect:.3e}) at grid sample {sample}; use a finer grid")]
    StepSize { sample: usize, defect: f64 },

    #[error("reduced model is not stable: monodromy spectral radius {spectral_radius}")]
    UnstableCycle { spectral_radius: f64 },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("transform diverges: {0}")]
    Divergent(String),

    #[error("initial guess failed: {0}")]
    GuessFailure(String),

    #[error("fit did not converge after {restarts} restarts (best residual {})", .best.residual)]
    Convergence {
        restarts: usize,
        best: Box<crate::fit::FitResult>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn path_suffix(path: Option<usize>) -> String {
    match path {
        Some(p) => format!(" of path {p}"),
        None => String::new(),
    }
}

impl Error {
    /// Errors caused by bad input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain(_) | Error::Parse { .. } | Error::Io(_)
        )
    }
}
