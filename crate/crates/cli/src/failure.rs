use std::fmt;

/// A command failure and the exit code it maps to: 1 for bad input, 2 for
/// I/O trouble.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    /// Classifies a library error, prefixing `context` (usually a path).
    pub fn from_lib(context: impl fmt::Display, err: retrobleu::Error) -> Self {
        let message = format!("{context}: {err}");
        if err.is_io() {
            Failure::io(message)
        } else {
            Failure::input(message)
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::io(e.to_string())
    }
}

pub fn warn(message: impl fmt::Display) {
    eprintln!("warning: {message}");
}
