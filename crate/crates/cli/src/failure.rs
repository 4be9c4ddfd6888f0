use std::fmt;

use dcs_core::Error;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Code {
    Validation = 1,
    Singular = 2,
    Config = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub message: String,
}

impl Failure {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Code::Config, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::UnsupportedGeometry(_)
            | Error::Config(_)
            | Error::Dimension { .. }
            | Error::GaugeRequired => Code::Config,
            Error::NonTriangleFace { .. }
            | Error::InvalidFace { .. }
            | Error::BoundaryEdge { .. }
            | Error::IsolatedVertex { .. }
            | Error::Disconnected { .. }
            | Error::Weights(_)
            | Error::InvalidMetric { .. }
            | Error::Inadmissible { .. } => Code::Validation,
            Error::DomainExit { .. }
            | Error::Escape { .. }
            | Error::StepCollapse { .. }
            | Error::Numerical(_)
            | Error::Quadrature { .. }
            | Error::MaxIterations { .. }
            | Error::SingularHessian => Code::Singular,
        };
        Failure::new(code, e.to_string())
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
