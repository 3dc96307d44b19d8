//! Dataset, model, report and configuration files.

mod config;
mod export;
mod model_file;
mod tqed;

pub use config::{
    execute_run, resolve_datasets, DatasetSource, FileSource, GenerateSpec, RunConfig, RunOutputs,
};
pub use export::{
    decode_report, encode_report, load_report, render_report, save_report, write_confusion,
    write_file, write_history, write_noise_table, write_ranking, ReportFormat,
};
pub use model_file::{decode_model, encode_model, load_model, save_model, MODEL_FORMAT_VERSION};
pub use tqed::{
    decode_dataset, encode_dataset, load_dataset, save_dataset, HEADER_LEN, MAGIC, RECORD_LEN,
    VERSION,
};
