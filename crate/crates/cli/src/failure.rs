//! Mapping of errors to process exit codes.

use illiquid::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_REGIME: u8 = 4;

/// `4` for a violated regime precondition, `3` for I/O failures, `2` for
/// everything else (bad configuration or arguments).
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            match e {
                Error::Regime(_) => return EXIT_REGIME,
                Error::Io(_) => return EXIT_IO,
                _ => {}
            }
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_CONFIG
}
