//! Per-session slot layouts for the three strategies and the parity
//! combinations carried in each round.
//!
//! Layouts repeat unchanged from session to session. For the rotating
//! strategy the parity slot walks the anti-diagonal: round `l` puts parity
//! on path `n - l + 1`, and a source shifts its own units one round later
//! once it has taken its parity turn.
//!
//! ```text
//!            round 1   round 2   round 3
//! s1 -> r1   x1^1      x1^2      y3
//! s2 -> r2   x2^1      y2        x2^2
//! s3 -> r3   y1        x3^1      x3^2
//! ```

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PathId, SlotAssignment, StrategyKind, EXTRA_PATH};

/// The set of `(source, data_index)` units a parity unit sums.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityCombination {
    pub terms: BTreeSet<(PathId, usize)>,
}

impl ParityCombination {
    pub fn contains(&self, source: PathId, data_index: usize) -> bool {
        self.terms.contains(&(source, data_index))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionSchedule {
    n: usize,
    strategy: StrategyKind,
    dedicated_path: Option<PathId>,
    /// Working paths `1..=n`, then the extra path when present.
    paths: Vec<PathId>,
    grid: Vec<Vec<SlotAssignment>>,
}

/// Builds the session layout for `strategy` over `n` working paths.
///
/// `dedicated_path` must be given for [`StrategyKind::Nps1Dedicated`] and
/// only for it.
pub fn build_schedule(
    strategy: StrategyKind,
    n: usize,
    dedicated_path: Option<PathId>,
) -> Result<TransmissionSchedule> {
    if n < 2 {
        return Err(Error::Config(format!(
            "at least two disjoint paths are required, got {n}: a single path cannot protect itself"
        )));
    }
    match (strategy, dedicated_path) {
        (StrategyKind::Nps1Dedicated, None) => {
            return Err(Error::Config(
                "nps1-dedicated requires a dedicated path".into(),
            ))
        }
        (StrategyKind::Nps1Dedicated, Some(j)) if !(1..=n).contains(&j) => {
            return Err(Error::Config(format!(
                "dedicated path {j} is outside 1..={n}"
            )))
        }
        (StrategyKind::Nps1Extra | StrategyKind::Nps2Rotating, Some(_)) => {
            return Err(Error::Config(format!(
                "{strategy} does not take a dedicated path"
            )))
        }
        _ => {}
    }

    let own_rounds = |_: PathId| (1..=n).map(SlotAssignment::OwnData).collect::<Vec<_>>();
    let mut paths: Vec<PathId> = (1..=n).collect();
    let grid = match strategy {
        StrategyKind::Nps1Extra => {
            paths.push(EXTRA_PATH);
            let mut grid: Vec<_> = (1..=n).map(own_rounds).collect();
            grid.push(vec![SlotAssignment::Parity; n]);
            grid
        }
        StrategyKind::Nps1Dedicated => {
            let j = dedicated_path.expect("checked above");
            (1..=n)
                .map(|p| {
                    if p == j {
                        vec![SlotAssignment::Parity; n]
                    } else {
                        own_rounds(p)
                    }
                })
                .collect()
        }
        StrategyKind::Nps2Rotating => (1..=n)
            .map(|source| {
                let turn = n - source + 1;
                (1..=n)
                    .map(|round| match round.cmp(&turn) {
                        std::cmp::Ordering::Less => SlotAssignment::OwnData(round),
                        std::cmp::Ordering::Equal => SlotAssignment::Parity,
                        std::cmp::Ordering::Greater => SlotAssignment::OwnData(round - 1),
                    })
                    .collect()
            })
            .collect(),
    };

    Ok(TransmissionSchedule {
        n,
        strategy,
        dedicated_path,
        paths,
        grid,
    })
}

impl TransmissionSchedule {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Rounds per session; always equal to the working path count.
    pub fn rounds(&self) -> usize {
        self.n
    }

    pub fn strategy(&self) -> StrategyKind {
        self.strategy
    }

    pub fn dedicated_path(&self) -> Option<PathId> {
        self.dedicated_path
    }

    pub fn extra_path_present(&self) -> bool {
        self.strategy == StrategyKind::Nps1Extra
    }

    /// All provisioned paths in row order.
    pub fn paths(&self) -> &[PathId] {
        &self.paths
    }

    /// Sources (and their receivers), `1..=n`.
    pub fn sources(&self) -> impl Iterator<Item = PathId> {
        1..=self.n
    }

    /// Total slots in one session.
    pub fn slot_count(&self) -> usize {
        self.paths.len() * self.n
    }

    pub fn units_per_source(&self) -> usize {
        self.strategy.units_per_source(self.n)
    }

    pub fn has_path(&self, path: PathId) -> bool {
        self.position(path).is_some()
    }

    fn position(&self, path: PathId) -> Option<usize> {
        match path {
            EXTRA_PATH if self.extra_path_present() => Some(self.n),
            p if (1..=self.n).contains(&p) => Some(p - 1),
            _ => None,
        }
    }

    pub fn row(&self, path: PathId) -> Option<&[SlotAssignment]> {
        self.position(path).map(|i| self.grid[i].as_slice())
    }

    /// Assignment at `(path, round)`, `round` being 1-based.
    pub fn slot(&self, path: PathId, round: usize) -> Option<SlotAssignment> {
        if !(1..=self.n).contains(&round) {
            return None;
        }
        self.row(path).map(|row| row[round - 1])
    }

    /// The path carrying parity in `round`. Every strategy has exactly one.
    pub fn parity_sender(&self, round: usize) -> Option<PathId> {
        self.paths
            .iter()
            .copied()
            .find(|&p| self.slot(p, round) == Some(SlotAssignment::Parity))
    }

    /// Round in which `source` transmits its own unit `data_index`, if it ever does.
    pub fn transmission_round(&self, source: PathId, data_index: usize) -> Option<usize> {
        let row = self.row(source)?;
        row.iter()
            .position(|&slot| slot == SlotAssignment::OwnData(data_index))
            .map(|i| i + 1)
    }

    /// Own units `source` transmits per session.
    pub fn scheduled_units(&self, source: PathId) -> usize {
        self.row(source)
            .map(|row| row.iter().filter(|s| s.is_own_data()).count())
            .unwrap_or(0)
    }

    fn check_round(&self, round: usize) -> Result<()> {
        if (1..=self.n).contains(&round) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "round {round} is outside 1..={}",
                self.n
            )))
        }
    }

    /// Units summed by the parity sent in `round`.
    pub fn parity_combination(&self, round: usize) -> Result<ParityCombination> {
        self.check_round(round)?;
        let n = self.n;
        let terms = match self.strategy {
            StrategyKind::Nps1Extra => (1..=n).map(|i| (i, round)).collect(),
            StrategyKind::Nps1Dedicated => {
                let j = self
                    .dedicated_path
                    .expect("dedicated schedule has a dedicated path");
                (1..=n).filter(|&i| i != j).map(|i| (i, round)).collect()
            }
            // Sources ahead of their parity turn send unit `round`, those past it send `round - 1`.
            StrategyKind::Nps2Rotating => (1..=n - round)
                .map(|i| (i, round))
                .chain((n - round + 2..=n).map(|i| (i, round - 1)))
                .collect(),
        };
        Ok(ParityCombination { terms })
    }

    /// The round whose parity covers `(source, data_index)`.
    pub fn covering_parity_round(&self, source: PathId, data_index: usize) -> Result<usize> {
        for round in 1..=self.n {
            if self.parity_combination(round)?.contains(source, data_index) {
                return Ok(round);
            }
        }
        Err(Error::NotCovered {
            source_id: source,
            data_index,
        })
    }
}
