//! Config parsing, result files and SVG plots.

pub mod config;
pub mod results;
pub mod run;
pub mod svg;

pub use config::{
    parse_config, parse_config_with, DesignSection, ExperimentSection, Format, Mode, OutputSection,
    RunConfig, SceneSection,
};
pub use results::{format_number, write_results, ResultsBundle};
pub use run::{calibrate, execute, run_tradeoff};

pub(crate) fn toml_error_line(text: &str, e: &toml::de::Error) -> usize {
    match e.span() {
        Some(span) => text[..span.start.min(text.len())].matches('\n').count() + 1,
        None => 0,
    }
}
