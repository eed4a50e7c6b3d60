//! Distributor-side parity encoding and collector-side recovery.
//!
//! Over the binary field subtraction is XOR, so a lost unit `x` covered by
//! parity `y = x + t_1 + ... + t_k` is `y ^ t_1 ^ ... ^ t_k`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{xor_all, DataUnit, Packet, PathId, PayloadKind, SlotAssignment, StrategyKind};
use crate::schedule::TransmissionSchedule;

/// Every source's own units for one session, indexed `(source, data_index)`, both 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionSourceData {
    strategy: StrategyKind,
    n: usize,
    units: Vec<Vec<DataUnit>>,
}

impl SessionSourceData {
    /// `units[i][k]` is unit `k + 1` of source `i + 1`.
    pub fn new(strategy: StrategyKind, n: usize, units: Vec<Vec<DataUnit>>) -> Result<Self> {
        let per_source = strategy.units_per_source(n);
        if units.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected data for {n} sources, got {}",
                units.len()
            )));
        }
        if let Some(row) = units.iter().find(|row| row.len() != per_source) {
            return Err(Error::InvalidInput(format!(
                "{strategy} needs {per_source} units per source, got {}",
                row.len()
            )));
        }
        let width = units[0][0].width();
        if units.iter().flatten().any(|u| u.width() != width) {
            return Err(Error::InvalidInput("source units differ in width".into()));
        }
        Ok(SessionSourceData { strategy, n, units })
    }

    pub fn strategy(&self) -> StrategyKind {
        self.strategy
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.units[0][0].width()
    }

    pub fn units_per_source(&self) -> usize {
        self.units[0].len()
    }

    pub fn get(&self, source: PathId, data_index: usize) -> Option<&DataUnit> {
        self.units
            .get(source.checked_sub(1)?)?
            .get(data_index.checked_sub(1)?)
    }

    pub fn rows(&self) -> &[Vec<DataUnit>] {
        &self.units
    }

    fn check_matches(&self, schedule: &TransmissionSchedule) -> Result<()> {
        if self.n != schedule.n() || self.strategy != schedule.strategy() {
            return Err(Error::InvalidInput(format!(
                "source data is for {} with n={}, schedule is {} with n={}",
                self.strategy,
                self.n,
                schedule.strategy(),
                schedule.n()
            )));
        }
        Ok(())
    }
}

/// The parity unit the distributor hands to `round`'s parity sender.
pub fn compute_parity(
    data: &SessionSourceData,
    schedule: &TransmissionSchedule,
    round: usize,
) -> Result<DataUnit> {
    data.check_matches(schedule)?;
    let combination = schedule.parity_combination(round)?;
    let units = combination
        .terms
        .iter()
        .map(|&(source, index)| {
            data.get(source, index).ok_or_else(|| {
                Error::InvalidInput(format!("source data lacks unit ({source}, {index})"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    xor_all(units)
}

/// Receiver-side collector: every packet that arrived in one session.
#[derive(Debug, Clone)]
pub struct CollectorState<'a> {
    schedule: &'a TransmissionSchedule,
    failed_path: Option<PathId>,
    received: BTreeMap<(PathId, usize), Packet>,
}

impl<'a> CollectorState<'a> {
    /// `failed_path` is the announced failure for this session.
    pub fn new(schedule: &'a TransmissionSchedule, failed_path: Option<PathId>) -> Result<Self> {
        if let Some(p) = failed_path {
            if !schedule.has_path(p) {
                return Err(Error::InvalidInput(format!(
                    "failed path {p} is not provisioned"
                )));
            }
        }
        Ok(CollectorState {
            schedule,
            failed_path,
            received: BTreeMap::new(),
        })
    }

    pub fn schedule(&self) -> &TransmissionSchedule {
        self.schedule
    }

    pub fn failed_path(&self) -> Option<PathId> {
        self.failed_path
    }

    pub fn received(&self) -> &BTreeMap<(PathId, usize), Packet> {
        &self.received
    }

    pub fn get(&self, path: PathId, round: usize) -> Option<&Packet> {
        self.received.get(&(path, round))
    }

    /// Accepts one packet, checking it against the schedule.
    pub fn receive(&mut self, packet: Packet) -> Result<()> {
        let key = (packet.sender, packet.round);
        if Some(packet.sender) == self.failed_path {
            return Err(Error::CorruptedTrace(format!(
                "packet from failed path {} in round {}",
                packet.sender, packet.round
            )));
        }
        let expected = self
            .schedule
            .slot(packet.sender, packet.round)
            .ok_or_else(|| {
                Error::CorruptedTrace(format!(
                    "no slot for path {} round {}",
                    packet.sender, packet.round
                ))
            })?;
        let consistent = match (expected, packet.kind, packet.data_index) {
            (SlotAssignment::OwnData(d), PayloadKind::Data, Some(i)) => d == i,
            (SlotAssignment::Parity, PayloadKind::Parity, None) => true,
            _ => false,
        };
        if !consistent {
            return Err(Error::CorruptedTrace(format!(
                "packet on path {} round {} does not match scheduled {expected:?}",
                packet.sender, packet.round
            )));
        }
        if self.received.contains_key(&key) {
            return Err(Error::CorruptedTrace(format!(
                "duplicate packet on path {} round {}",
                packet.sender, packet.round
            )));
        }
        self.received.insert(key, packet);
        Ok(())
    }

    /// Confirms the single-failure model: every path is either complete or
    /// entirely silent, and at most the announced path is silent.
    fn check_single_failure(&self) -> Result<()> {
        let rounds = self.schedule.rounds();
        let mut silent = Vec::new();
        for &path in self.schedule.paths() {
            let got = (1..=rounds)
                .filter(|&r| self.received.contains_key(&(path, r)))
                .count();
            if got == 0 {
                silent.push(path);
            } else if got != rounds {
                return Err(Error::CorruptedTrace(format!(
                    "path {path} delivered {got} of {rounds} packets"
                )));
            }
        }
        match silent.as_slice() {
            [] => Ok(()),
            [p] if Some(*p) == self.failed_path => Ok(()),
            [p] => Err(Error::CorruptedTrace(format!(
                "path {p} is silent but was not announced as failed"
            ))),
            _ => Err(Error::UnsupportedFailure(silent)),
        }
    }
}

/// A reconstructed unit and when the collector could first produce it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredUnit {
    pub unit: DataUnit,
    pub transmission_round: usize,
    /// Latest round among the packets used in the reconstruction.
    pub recovered_round: usize,
}

impl RecoveredUnit {
    pub fn delay(&self) -> usize {
        self.recovered_round - self.transmission_round
    }
}

/// Reconstructs the own-data units the failed path would have carried.
///
/// Parity the failed path was scheduled to carry is not rebuilt: it holds no
/// source data.
pub fn recover_failed_units(
    state: &CollectorState<'_>,
) -> Result<BTreeMap<(PathId, usize), RecoveredUnit>> {
    state.check_single_failure()?;
    let mut recovered = BTreeMap::new();
    let Some(failed) = state.failed_path else {
        return Ok(recovered);
    };
    let schedule = state.schedule;
    let row = schedule
        .row(failed)
        .expect("failed path validated at construction");

    for (slot_index, slot) in row.iter().enumerate() {
        let SlotAssignment::OwnData(data_index) = *slot else {
            continue;
        };
        let transmission_round = slot_index + 1;
        let covering = schedule.covering_parity_round(failed, data_index)?;
        let parity_path = schedule.parity_sender(covering).ok_or_else(|| {
            Error::CorruptedTrace(format!("no parity sender in round {covering}"))
        })?;
        let parity = state
            .get(parity_path, covering)
            .ok_or_else(|| Error::CorruptedTrace(format!("parity of round {covering} missing")))?;

        let mut unit = parity.unit.clone();
        let mut recovered_round = covering;
        for &(source, index) in &schedule.parity_combination(covering)?.terms {
            if (source, index) == (failed, data_index) {
                continue;
            }
            let round = schedule
                .transmission_round(source, index)
                .ok_or(Error::NotCovered {
                    source_id: source,
                    data_index: index,
                })?;
            let packet = state.get(source, round).ok_or_else(|| {
                Error::CorruptedTrace(format!("unit ({source}, {index}) missing in round {round}"))
            })?;
            unit.xor_assign(&packet.unit)?;
            recovered_round = recovered_round.max(round);
        }
        recovered.insert(
            (failed, data_index),
            RecoveredUnit {
                unit,
                transmission_round,
                recovered_round,
            },
        );
    }
    Ok(recovered)
}

/// How one scheduled unit reached its receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "via", rename_all = "lowercase")]
pub enum UnitOutcome {
    Direct,
    Recovered {
        delay: usize,
    },
    /// Obtained, but not equal to what the source sent.
    Mismatch,
    Lost,
}

impl UnitOutcome {
    pub fn is_delivered(self) -> bool {
        matches!(self, UnitOutcome::Direct | UnitOutcome::Recovered { .. })
    }
}

/// Outcome per scheduled unit for one receiver.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReceiverDelivery {
    pub outcomes: BTreeMap<usize, UnitOutcome>,
    pub units: BTreeMap<usize, DataUnit>,
}

impl ReceiverDelivery {
    pub fn scheduled(&self) -> usize {
        self.outcomes.len()
    }

    pub fn count(&self, pred: impl Fn(UnitOutcome) -> bool) -> usize {
        self.outcomes.values().filter(|&&o| pred(o)).count()
    }
}

/// Delivery outcome of a whole session, keyed by receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryRecord {
    pub failed_path: Option<PathId>,
    pub receivers: BTreeMap<PathId, ReceiverDelivery>,
}

/// Resolves every receiver's scheduled units, directly or through the
/// collector, and checks each against `expected`.
pub fn decode_session(
    state: &CollectorState<'_>,
    expected: &SessionSourceData,
) -> Result<DeliveryRecord> {
    let schedule = state.schedule;
    expected.check_matches(schedule)?;
    let recovered = recover_failed_units(state)?;

    let mut receivers = BTreeMap::new();
    for source in schedule.sources() {
        let mut delivery = ReceiverDelivery::default();
        let row = schedule.row(source).expect("sources are provisioned");
        for (slot_index, slot) in row.iter().enumerate() {
            let SlotAssignment::OwnData(data_index) = *slot else {
                continue;
            };
            let round = slot_index + 1;
            let obtained = match (
                state.get(source, round),
                recovered.get(&(source, data_index)),
            ) {
                (Some(packet), _) => Some((packet.unit.clone(), UnitOutcome::Direct)),
                (None, Some(r)) => {
                    Some((r.unit.clone(), UnitOutcome::Recovered { delay: r.delay() }))
                }
                (None, None) => None,
            };
            let outcome = match obtained {
                Some((unit, outcome)) => {
                    let ok = expected.get(source, data_index) == Some(&unit);
                    delivery.units.insert(data_index, unit);
                    if ok {
                        outcome
                    } else {
                        UnitOutcome::Mismatch
                    }
                }
                None => UnitOutcome::Lost,
            };
            delivery.outcomes.insert(data_index, outcome);
        }
        receivers.insert(source, delivery);
    }
    Ok(DeliveryRecord {
        failed_path: state.failed_path,
        receivers,
    })
}
