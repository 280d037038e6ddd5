//! Everything that touches the outside world: the NDJSON protocol, chart
//! rendering, the serve loop, and the command line.

pub mod cli;
pub mod render;
pub mod serve;
pub mod wire;

pub use self::render::{render_chart, ChartFormat, RenderError};
pub use self::serve::{serve_session, serve_tcp, SessionStats};
pub use self::wire::{
    decode_action, decode_event, decode_record, encode_action, encode_error, encode_event,
    encode_record, ErrorRecord, WireError, WireRecord, PROTOCOL_VERSION,
};
