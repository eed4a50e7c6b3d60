//! Deterministic round-by-round transport over the provisioned paths.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`. Each session draws from its own stream of that
//! generator: stream `2 * session` for source payloads (seeded by
//! `rng_seed`) and stream `2 * session + 1` for random failure draws
//! (seeded by the failure seed). Failure draws pick
//! `random_range(0..=paths)` over the schedule's row order, with the last
//! value meaning "no failure".

use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coding::{compute_parity, decode_session, CollectorState, SessionSourceData};
use crate::error::{Error, Result};
use crate::metrics::{score_session, SessionReport};
use crate::model::{
    DataUnit, FailureScenario, Packet, PathId, PayloadKind, SlotAssignment, StrategyKind,
    DEFAULT_PAYLOAD_WIDTH,
};
use crate::schedule::{build_schedule, TransmissionSchedule};

/// Version tag written in the trace header.
pub const TRACE_FORMAT_VERSION: u32 = 1;

/// How failures are placed across sessions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum FailureModel {
    Fixed(FailureScenario),
    /// At most one failed path per session, uniform over paths and "none".
    RandomPerSession {
        seed: u64,
    },
    /// Every session is run once per failure position plus once without failure.
    ExhaustiveSweep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub strategy: StrategyKind,
    pub dedicated_path: Option<PathId>,
    pub sessions: u64,
    pub failure: FailureModel,
    pub payload_width: usize,
    pub rng_seed: u64,
}

impl SimulationConfig {
    /// One failure-free session with default width and seed. The dedicated
    /// strategy defaults to path `n` for parity.
    pub fn new(strategy: StrategyKind, n: usize) -> Self {
        SimulationConfig {
            n,
            strategy,
            dedicated_path: (strategy == StrategyKind::Nps1Dedicated).then_some(n),
            sessions: 1,
            failure: FailureModel::Fixed(FailureScenario::none()),
            payload_width: DEFAULT_PAYLOAD_WIDTH,
            rng_seed: 0,
        }
    }

    pub fn with_failure(mut self, failure: FailureModel) -> Self {
        self.failure = failure;
        self
    }

    pub fn with_sessions(mut self, sessions: u64) -> Self {
        self.sessions = sessions;
        self
    }

    pub fn with_payload_width(mut self, width: usize) -> Self {
        self.payload_width = width;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Checks the configuration and builds its schedule.
    pub fn schedule(&self) -> Result<TransmissionSchedule> {
        if self.sessions == 0 {
            return Err(Error::Config("at least one session is required".into()));
        }
        if self.payload_width == 0 {
            return Err(Error::Config(
                "payload width must be at least 1 byte".into(),
            ));
        }
        let schedule = build_schedule(self.strategy, self.n, self.dedicated_path)?;
        if let FailureModel::Fixed(scenario) = &self.failure {
            if let Some(p) = scenario.failed_path {
                if !schedule.has_path(p) {
                    return Err(Error::Config(format!(
                        "failed path {p} is not provisioned under {}",
                        self.strategy
                    )));
                }
            }
            if scenario.sessions_affected.contains(&0) {
                return Err(Error::Config("sessions are numbered from 1".into()));
            }
        }
        Ok(schedule)
    }
}

fn session_rng(seed: u64, session: u64, stream_offset: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(session.wrapping_mul(2).wrapping_add(stream_offset));
    rng
}

/// Pseudorandom source units for `session`, reproducible from `(rng_seed, session)`.
pub fn generate_source_data(config: &SimulationConfig, session: u64) -> Result<SessionSourceData> {
    let mut rng = session_rng(config.rng_seed, session, 0);
    let per_source = config.strategy.units_per_source(config.n);
    let units = (0..config.n)
        .map(|_| {
            (0..per_source)
                .map(|_| {
                    let mut bytes = vec![0u8; config.payload_width];
                    rng.fill_bytes(&mut bytes);
                    DataUnit::new(bytes)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SessionSourceData::new(config.strategy, config.n, units)
}

/// One failure placement within a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub index: usize,
    pub failed_path: Option<PathId>,
}

/// Failure placements to run for `session`, in scenario order.
pub fn scenarios_for(
    config: &SimulationConfig,
    schedule: &TransmissionSchedule,
    session: u64,
) -> Vec<Scenario> {
    let placements: Vec<Option<PathId>> = match &config.failure {
        FailureModel::Fixed(scenario) => vec![scenario.failed_in(session)],
        FailureModel::RandomPerSession { seed } => {
            let paths = schedule.paths();
            let mut rng = session_rng(*seed, session, 1);
            let pick = rng.random_range(0..=paths.len() as u64) as usize;
            vec![paths.get(pick).copied()]
        }
        FailureModel::ExhaustiveSweep => std::iter::once(None)
            .chain(schedule.paths().iter().copied().map(Some))
            .collect(),
    };
    placements
        .into_iter()
        .enumerate()
        .map(|(index, failed_path)| Scenario { index, failed_path })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotOutcome {
    Delivered(Packet),
    /// Scheduled on the failed path and never arrived.
    Dropped(SlotAssignment),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub session: u64,
    pub scenario: usize,
    pub round: usize,
    pub path: PathId,
    pub outcome: SlotOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Data,
    Parity,
    Dropped,
}

/// One exported trace line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub session: u64,
    pub scenario: usize,
    pub round: usize,
    pub path: PathId,
    pub kind: TraceKind,
    pub sender: PathId,
    pub data_index: Option<usize>,
    pub parity: bool,
    /// Lowercase hex, absent for dropped slots.
    pub payload: Option<String>,
}

/// First line of an exported trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub manifest_hash: String,
}

impl TraceEntry {
    pub fn is_dropped(&self) -> bool {
        matches!(self.outcome, SlotOutcome::Dropped(_))
    }

    pub fn to_record(&self) -> TraceRecord {
        let (kind, data_index, payload) = match &self.outcome {
            SlotOutcome::Delivered(p) => {
                let kind = match p.kind {
                    PayloadKind::Data => TraceKind::Data,
                    PayloadKind::Parity => TraceKind::Parity,
                };
                (kind, p.data_index, Some(p.unit.to_hex()))
            }
            SlotOutcome::Dropped(slot) => {
                let index = match slot {
                    SlotAssignment::OwnData(d) => Some(*d),
                    _ => None,
                };
                (TraceKind::Dropped, index, None)
            }
        };
        let parity = match &self.outcome {
            SlotOutcome::Delivered(p) => p.kind == PayloadKind::Parity,
            SlotOutcome::Dropped(slot) => slot.is_parity(),
        };
        TraceRecord {
            session: self.session,
            scenario: self.scenario,
            round: self.round,
            path: self.path,
            kind,
            sender: self.path,
            data_index,
            parity,
            payload,
        }
    }
}

/// Ordered record of every scheduled slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransmissionTrace {
    pub entries: Vec<TraceEntry>,
}

impl TransmissionTrace {
    /// Writes the header line and one JSON object per slot.
    pub fn write_jsonl<W: Write>(&self, mut out: W, manifest_hash: &str) -> std::io::Result<()> {
        let header = TraceHeader {
            format: "nps-trace".into(),
            version: TRACE_FORMAT_VERSION,
            manifest_hash: manifest_hash.into(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for entry in &self.entries {
            serde_json::to_writer(&mut out, &entry.to_record())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Pushes one session through the paths, dropping everything on the
/// failed path, and hands the survivors to a fresh collector.
pub fn run_session<'a>(
    session: u64,
    scenario: Scenario,
    schedule: &'a TransmissionSchedule,
    data: &SessionSourceData,
) -> Result<(Vec<TraceEntry>, CollectorState<'a>)> {
    let mut collector = CollectorState::new(schedule, scenario.failed_path)?;
    let mut entries = Vec::with_capacity(schedule.slot_count());
    for round in 1..=schedule.rounds() {
        let parity = compute_parity(data, schedule, round)?;
        for &path in schedule.paths() {
            let slot = schedule.slot(path, round).expect("path and round in range");
            let outcome = if Some(path) == scenario.failed_path {
                SlotOutcome::Dropped(slot)
            } else {
                let (kind, data_index, unit) = match slot {
                    SlotAssignment::OwnData(d) => {
                        let unit = data.get(path, d).ok_or_else(|| {
                            Error::InvalidInput(format!("source data lacks unit ({path}, {d})"))
                        })?;
                        (PayloadKind::Data, Some(d), unit.clone())
                    }
                    SlotAssignment::Parity => (PayloadKind::Parity, None, parity.clone()),
                    SlotAssignment::Idle => {
                        return Err(Error::InvalidInput(format!(
                            "idle slot at path {path} round {round}"
                        )))
                    }
                };
                let packet = Packet {
                    sender: path,
                    kind,
                    data_index,
                    unit,
                    round,
                    session,
                };
                collector.receive(packet.clone())?;
                SlotOutcome::Delivered(packet)
            };
            entries.push(TraceEntry {
                session,
                scenario: scenario.index,
                round,
                path,
                outcome,
            });
        }
    }
    Ok((entries, collector))
}

/// Runs every session and scenario of `config`, decoding and scoring each.
pub fn run_simulation(
    config: &SimulationConfig,
) -> Result<(TransmissionTrace, Vec<SessionReport>)> {
    let schedule = config.schedule()?;
    let mut trace = TransmissionTrace::default();
    let mut reports = Vec::new();
    for session in 1..=config.sessions {
        let data = generate_source_data(config, session)?;
        for scenario in scenarios_for(config, &schedule, session) {
            let (entries, collector) = run_session(session, scenario, &schedule, &data)?;
            let record = decode_session(&collector, &data)?;
            reports.push(score_session(&record, &schedule, session, scenario.index));
            trace.entries.extend(entries);
        }
    }
    Ok((trace, reports))
}
