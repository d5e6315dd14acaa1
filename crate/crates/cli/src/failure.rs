use std::fmt;

/// A command failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const INTERNAL: u8 = 1;
pub const USER: u8 = 2;
pub const FORMAT: u8 = 3;

impl Failure {
    pub fn user(message: impl Into<String>) -> Self {
        Self {
            code: USER,
            message: message.into(),
        }
    }

    pub fn format(message: impl Into<String>) -> Self {
        Self {
            code: FORMAT,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: INTERNAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<gakit::Error> for Failure {
    fn from(e: gakit::Error) -> Self {
        use gakit::Error::*;
        let code = match &e {
            Manifest { .. } | BadMagic | VersionMismatch(_) | ChecksumMismatch | Corrupt(_)
            | MalformedExample(_) | NonFinite => FORMAT,
            DivergenceDetected { .. } | KindMismatch { .. } | PathShapeMismatch { .. } => INTERNAL,
            _ => USER,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;
