//! Personality-conditional security awareness training engine.
//!
//! * [`bfi10`]: ten-item Big Five scoring and the dominant trait.
//! * [`routing`]: dominant trait to training module, and module content.
//! * [`assessment`]: scenario forms, scoring and the feedback survey.
//! * [`session`]: the participant workflow as an event-driven state machine.
//! * [`store`]: content bank loading, the append-only session log and CSV export.
//! * [`analysis`]: Welch's t, Cohen's d, Fisher's exact test and the report.

pub mod analysis;
pub mod assessment;
pub mod bfi10;
pub mod routing;
pub mod session;
pub mod store;
