pub mod analyze;
pub mod generate;
pub mod plan;
pub mod readability;
pub mod serve;
pub mod validate;
