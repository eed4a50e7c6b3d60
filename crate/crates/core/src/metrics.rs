//! Exact capacity accounting and per-session scoring.
//!
//! Normalized capacity counts scheduled own-data slots over all slots in a
//! session. It depends on the strategy only: recovery restores whatever a
//! failure removed, so the failure outcome never changes it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coding::{DeliveryRecord, UnitOutcome};
use crate::error::{Error, Result};
use crate::model::{PathId, RationalCapacity, StrategyKind};
use crate::schedule::TransmissionSchedule;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverStats {
    /// Own units the receiver's sender was scheduled to transmit.
    pub scheduled_units: usize,
    pub direct_units: usize,
    pub recovered_units: usize,
    pub lost_units: usize,
    /// `None` when nothing had to be recovered.
    pub max_recovery_delay_rounds: Option<usize>,
}

impl ReceiverStats {
    pub fn delivered_units(&self) -> usize {
        self.direct_units + self.recovered_units
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session: u64,
    pub scenario: usize,
    pub strategy: StrategyKind,
    pub n: usize,
    pub failed_path: Option<PathId>,
    pub per_receiver: BTreeMap<PathId, ReceiverStats>,
    pub normalized_capacity: RationalCapacity,
    pub recovery_success: bool,
}

/// Own-data slots over all slots of one session.
pub fn normalized_capacity(schedule: &TransmissionSchedule) -> RationalCapacity {
    let useful = schedule
        .paths()
        .iter()
        .filter_map(|&p| schedule.row(p))
        .flatten()
        .filter(|s| s.is_own_data())
        .count();
    RationalCapacity::new(useful as u64, schedule.slot_count() as u64)
        .expect("a schedule always has slots")
}

pub fn score_session(
    record: &DeliveryRecord,
    schedule: &TransmissionSchedule,
    session: u64,
    scenario: usize,
) -> SessionReport {
    let per_receiver: BTreeMap<PathId, ReceiverStats> = record
        .receivers
        .iter()
        .map(|(&receiver, delivery)| {
            let delays = delivery.outcomes.values().filter_map(|o| match o {
                UnitOutcome::Recovered { delay } => Some(*delay),
                _ => None,
            });
            let stats = ReceiverStats {
                scheduled_units: delivery.scheduled(),
                direct_units: delivery.count(|o| o == UnitOutcome::Direct),
                recovered_units: delivery.count(|o| matches!(o, UnitOutcome::Recovered { .. })),
                lost_units: delivery.count(|o| !o.is_delivered()),
                max_recovery_delay_rounds: delays.max(),
            };
            (receiver, stats)
        })
        .collect();
    let recovery_success = per_receiver.values().all(|r| r.lost_units == 0);
    SessionReport {
        session,
        scenario,
        strategy: schedule.strategy(),
        n: schedule.n(),
        failed_path: record.failed_path,
        per_receiver,
        normalized_capacity: normalized_capacity(schedule),
        recovery_success,
    }
}

/// Mean own units each source got through per session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessSummary {
    pub strategy: StrategyKind,
    pub n: usize,
    pub sessions: usize,
    pub per_source: BTreeMap<PathId, RationalCapacity>,
}

impl FairnessSummary {
    /// True when every source delivered the same amount.
    pub fn is_uniform(&self) -> bool {
        let mut values = self.per_source.values();
        match values.next() {
            Some(first) => values.all(|v| v == first),
            None => true,
        }
    }
}

pub fn fairness_summary(reports: &[SessionReport]) -> Result<FairnessSummary> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidInput("fairness summary of no reports".into()))?;
    if let Some(other) = reports
        .iter()
        .find(|r| r.strategy != first.strategy || r.n != first.n)
    {
        return Err(Error::InvalidInput(format!(
            "reports mix {} n={} with {} n={}",
            first.strategy, first.n, other.strategy, other.n
        )));
    }
    let mut totals: BTreeMap<PathId, u64> = BTreeMap::new();
    for report in reports {
        for (&source, stats) in &report.per_receiver {
            *totals.entry(source).or_default() += stats.delivered_units() as u64;
        }
    }
    let sessions = reports.len() as u64;
    let per_source = totals
        .into_iter()
        .map(|(source, total)| Ok((source, RationalCapacity::new(total, sessions)?)))
        .collect::<Result<_>>()?;
    Ok(FairnessSummary {
        strategy: first.strategy,
        n: first.n,
        sessions: reports.len(),
        per_source,
    })
}

/// Mean capacity over the reports and whether every one recovered fully.
pub fn aggregate(reports: &[SessionReport]) -> (RationalCapacity, bool) {
    if reports.is_empty() {
        return (RationalCapacity::zero(), true);
    }
    let sum = reports
        .iter()
        .map(|r| r.normalized_capacity)
        .fold(RationalCapacity::zero(), |a, b| a + b);
    let mean = RationalCapacity::new(sum.numerator(), sum.denominator() * reports.len() as u64)
        .expect("nonzero denominator");
    (mean, reports.iter().all(|r| r.recovery_success))
}
