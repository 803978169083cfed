//! Monte-Carlo validation of the delay model.
//!
//! [`recursion`] samples the retransmission process the analytic model
//! takes the expectation of. [`event`] runs a packet-level discrete-event
//! simulation of local recovery with NACKs and subgroup retransmission.

pub mod event;
pub mod recursion;
mod stats;

pub use event::{simulate_event, EventSimConfig};
pub use recursion::{sample_segment_delay, simulate_recursion};
pub use stats::{SimError, SimStats};
