//! Network-coding protection of `n` disjoint paths against a single link
//! failure.
//!
//! Three strategies are provided: parity over an extra path
//! ([`StrategyKind::Nps1Extra`]), parity on one dedicated working path
//! ([`StrategyKind::Nps1Dedicated`]), and parity duty rotating across all
//! paths ([`StrategyKind::Nps2Rotating`]). A session runs `n` rounds; in
//! each round every path carries one packet, either a source's own unit or
//! the XOR of units sent on the other paths in that round.
//!
//! The pipeline is [`schedule`] → [`coding`] (encode) → [`transport`]
//! (simulate, drop the failed path) → [`coding`] (recover) → [`metrics`].

pub mod cli;
pub mod coding;
pub mod error;
pub mod metrics;
pub mod model;
pub mod schedule;
pub mod transport;

pub use coding::{
    compute_parity, decode_session, recover_failed_units, CollectorState, DeliveryRecord,
    RecoveredUnit, SessionSourceData, UnitOutcome,
};
pub use error::{Error, Result};
pub use metrics::{fairness_summary, normalized_capacity, score_session, SessionReport};
pub use model::{
    xor, xor_all, DataUnit, FailureScenario, Packet, PathId, PayloadKind, RationalCapacity,
    SlotAssignment, StrategyKind, EXTRA_PATH,
};
pub use schedule::{build_schedule, ParityCombination, TransmissionSchedule};
pub use transport::{
    generate_source_data, run_session, run_simulation, FailureModel, Scenario, SimulationConfig,
    TransmissionTrace,
};
