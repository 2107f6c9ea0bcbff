//! Frame ingestion, HSV preprocessing, synthetic scenes and contact sheets.

mod color;
mod frame;
mod io;
mod resize;
mod sheet;
mod synth;

pub use color::bgr_to_hsv;
pub use frame::{preprocess_frame, preprocess_frame_to, FrameTensor, RawFrame, FRAME_SIZE};
pub use io::{
    encode_png, frame_file_name, list_frame_files, load_frame_sequence, read_frame, write_atomic,
    write_png,
};
pub use resize::{resize_bilinear, PlaneImage};
pub use sheet::{render_contact_sheet, sheet_size};
pub use synth::{
    generate_synthetic_sequence, render_synthetic_frame, synthetic_truth, SceneSpec, SYNTH_HEIGHT,
    SYNTH_WIDTH,
};
