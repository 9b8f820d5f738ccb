//! File formats: grayscale images, CSV traces, trial summaries, matrices.

mod image;
mod trace;

pub use image::{
    decode_pgm, decode_png, dequantize, encode_pgm, encode_png, quantize, read_image, write_image,
    ImageFormat,
};
pub use trace::{
    format_matrix, format_summary, format_trace, parse_matrix, parse_summary, parse_trace,
    read_matrix, read_summary, read_trace, write_matrix, write_summary, write_trace, Header,
    TraceFile, TrialAverage, TrialRow, TrialSummary, AVG_FLAG, SUMMARY_COLUMNS, TRACE_COLUMNS,
};

#[cfg(test)]
mod tests;
