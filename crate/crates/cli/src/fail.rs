use contest_entry::Error;

/// Process exit codes.
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn verification(message: impl Into<String>) -> Self {
        Self { code: EXIT_VERIFICATION, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numeric() { EXIT_NUMERIC } else { EXIT_VALIDATION };
        Self { code, message: e.to_string() }
    }
}

impl From<contest_entry::MechanismViolation> for Failure {
    fn from(e: contest_entry::MechanismViolation) -> Self {
        Error::from(e).into()
    }
}
