pub mod run;
pub mod spectrum;
pub mod suite;
pub mod validate;
