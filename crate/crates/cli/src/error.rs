use serde::Serialize;

/// Error class; decides the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Config,
    Numerical,
    Io,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Config => 2,
            Kind::Numerical => 3,
            Kind::Io => 4,
        }
    }
}

/// One problem with one configuration key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub key: String,
    pub message: String,
}

impl Issue {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<Issue>,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: Kind::Config, message: message.into(), issues: Vec::new() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: Kind::Io, message: message.into(), issues: Vec::new() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { kind: Kind::Numerical, message: message.into(), issues: Vec::new() }
    }

    pub fn invalid(issues: Vec<Issue>) -> Self {
        let n = issues.len();
        Self { kind: Kind::Config, message: format!("configuration has {n} error(s)"), issues }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// `{"error": {...}}` as written to stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: &'a CliError,
            exit_code: i32,
        }
        serde_json::to_string_pretty(&Wrapper { error: self, exit_code: self.exit_code() })
            .expect("error record serializes")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)?;
        for i in &self.issues {
            write!(f, "\n  {}: {}", i.key, i.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for CliError {}

impl From<fatigue_core::Error> for CliError {
    fn from(e: fatigue_core::Error) -> Self {
        use fatigue_core::Error as E;
        let kind = match &e {
            E::Io { .. } => Kind::Io,
            E::MeshParse { .. } | E::Mesh(_) | E::InvalidParameter { .. } => Kind::Config,
            _ if e.is_numerical() => Kind::Numerical,
            _ => Kind::Config,
        };
        Self { kind, message: e.to_string(), issues: Vec::new() }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
