use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Usage,
    Input,
    Runtime,
}

#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Usage, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Input, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Runtime, message: message.into() }
    }

    pub fn missing(stage: &str, what: &std::path::Path) -> Self {
        CliError::input(format!("run {stage} first ({} not found)", what.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Usage => 2,
            Kind::Input => 3,
            Kind::Runtime => 4,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("error serialization is infallible")
    }
}

impl From<emograph::Error> for CliError {
    fn from(e: emograph::Error) -> Self {
        match e {
            emograph::Error::NonFinite { .. } => CliError::runtime(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}
