//! Optional observation hook for the arithmetic engines.
//!
//! A sink receives one line per engine action (ingest / produce / collapse)
//! together with the matrix state after the action. The CLI wires this to
//! stderr for --trace; everything else passes `None` and pays nothing.

use std::sync::Arc;

pub type TraceSink = Arc<dyn Fn(&str) + Send + Sync>;

#[derive(Clone, Default)]
pub struct EngineOpts {
    pub trace: Option<TraceSink>,
}

impl EngineOpts {
    pub fn traced(sink: TraceSink) -> Self {
        EngineOpts { trace: Some(sink) }
    }

    pub(crate) fn emit(&self, line: impl FnOnce() -> String) {
        if let Some(sink) = &self.trace {
            sink(&line());
        }
    }
}
