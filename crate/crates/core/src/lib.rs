pub mod curation;
pub mod embedding;
pub mod io;
pub mod math;
pub mod metadata;
pub mod mixer;
pub mod synth;
pub mod uncertainty;
