//! Command-line driver for `hebran-core`: presets, experiment matrix, oracle
//! studies and report emission.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod report;
pub mod study;
pub mod svg;

/// Process exit code for an error: 2 for invalid input, 3 for infeasible demand, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use hebran_core::Error;
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Validation(_) | Error::ScenarioParse(_)) => 2,
        Some(Error::Infeasible { .. }) => 3,
        _ => 1,
    }
}
