use std::fmt;
use std::path::Path;

use radpp_core::clustering::ClusteringError;
use radpp_core::metrics::MetricsError;
use radpp_core::policy::PolicyError;
use radpp_core::radiomics::RadiomicsError;
use radpp_core::ranking::RankingError;
use radpp_core::synth::SynthError;
use radpp_core::volume::VolumeError;

/// Failure class; each maps to a distinct process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Config,
    Io,
    Validation,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Config => 2,
            Kind::Io => 3,
            Kind::Validation => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            kind: Kind::Io,
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Validation,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn with_kind(kind: Kind, e: impl fmt::Display) -> CliError {
    CliError {
        kind,
        message: e.to_string(),
    }
}

impl From<VolumeError> for CliError {
    fn from(e: VolumeError) -> Self {
        // A missing file is reported as MissingInput by the corpus loader.
        let kind = match e {
            VolumeError::Io { .. } | VolumeError::MissingInput { .. } => Kind::Io,
            _ => Kind::Validation,
        };
        with_kind(kind, e)
    }
}

impl From<RadiomicsError> for CliError {
    fn from(e: RadiomicsError) -> Self {
        match e {
            RadiomicsError::Volume(v) => v.into(),
            other => with_kind(Kind::Validation, other),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        let kind = match e {
            MetricsError::Io { .. } => Kind::Io,
            MetricsError::UnknownRegion(_) => Kind::Config,
            _ => Kind::Validation,
        };
        with_kind(kind, e)
    }
}

impl From<RankingError> for CliError {
    fn from(e: RankingError) -> Self {
        let kind = match e {
            RankingError::Io { .. } => Kind::Io,
            _ => Kind::Validation,
        };
        with_kind(kind, e)
    }
}

impl From<ClusteringError> for CliError {
    fn from(e: ClusteringError) -> Self {
        with_kind(Kind::Validation, e)
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Config(_) => with_kind(Kind::Config, e),
            SynthError::Io { .. } => with_kind(Kind::Io, e),
            SynthError::Volume(v) => v.into(),
            _ => with_kind(Kind::Validation, e),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Radiomics(r) => r.into(),
            PolicyError::Metrics(m) => m.into(),
            PolicyError::Ranking(r) => r.into(),
            PolicyError::Clustering(c) => c.into(),
            PolicyError::Io { .. } => with_kind(Kind::Io, e),
            PolicyError::Config(_) => with_kind(Kind::Config, e),
            _ => with_kind(Kind::Validation, e),
        }
    }
}
