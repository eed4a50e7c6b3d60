//! Test-only oracles that do not go through the library's schedule or decoder.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nps_core::transport::{TraceKind, TraceRecord};
use nps_core::StrategyKind;

pub type Unknown = (usize, usize);

/// Own-unit index a source sends in `round`, straight from the slot tables.
pub fn expected_data_index(strategy: StrategyKind, n: usize, source: usize, round: usize) -> usize {
    match strategy {
        StrategyKind::Nps1Extra | StrategyKind::Nps1Dedicated => round,
        StrategyKind::Nps2Rotating => {
            if round < n - source + 1 {
                round
            } else {
                round - 1
            }
        }
    }
}

/// Parity terms of `round` from the closed-form sums.
pub fn expected_parity_terms(
    strategy: StrategyKind,
    n: usize,
    dedicated: Option<usize>,
    round: usize,
) -> Vec<Unknown> {
    match strategy {
        StrategyKind::Nps1Extra => (1..=n).map(|i| (i, round)).collect(),
        StrategyKind::Nps1Dedicated => {
            let j = dedicated.unwrap();
            (1..=n).filter(|&i| i != j).map(|i| (i, round)).collect()
        }
        StrategyKind::Nps2Rotating => {
            let mut terms: Vec<Unknown> = (1..=n - round).map(|i| (i, round)).collect();
            terms.extend((n - round + 2..=n).map(|i| (i, round - 1)));
            terms
        }
    }
}

/// Linear system over GF(2) with byte-vector right-hand sides. Each bit
/// position of the payload is an independent instance, so rows can carry the
/// whole payload through elimination.
pub struct Gf2System {
    unknowns: Vec<Unknown>,
    rows: Vec<(Vec<u64>, Vec<u8>)>,
}

impl Gf2System {
    pub fn new(unknowns: Vec<Unknown>) -> Self {
        Gf2System {
            unknowns,
            rows: Vec::new(),
        }
    }

    fn words(&self) -> usize {
        self.unknowns.len().div_ceil(64)
    }

    pub fn add_equation(&mut self, terms: &[Unknown], rhs: Vec<u8>) {
        let mut mask = vec![0u64; self.words()];
        for t in terms {
            let col = self
                .unknowns
                .iter()
                .position(|u| u == t)
                .expect("known unknown");
            mask[col / 64] ^= 1 << (col % 64);
        }
        self.rows.push((mask, rhs));
    }

    /// Gauss-Jordan elimination; returns every unknown the equations pin down.
    pub fn solve(mut self) -> BTreeMap<Unknown, Vec<u8>> {
        let bit = |mask: &[u64], col: usize| mask[col / 64] >> (col % 64) & 1 == 1;
        let mut rank = 0;
        for col in 0..self.unknowns.len() {
            let Some(pivot) = (rank..self.rows.len()).find(|&r| bit(&self.rows[r].0, col)) else {
                continue;
            };
            self.rows.swap(rank, pivot);
            let (pmask, prhs) = self.rows[rank].clone();
            for r in 0..self.rows.len() {
                if r != rank && bit(&self.rows[r].0, col) {
                    let row = &mut self.rows[r];
                    row.0.iter_mut().zip(&pmask).for_each(|(a, b)| *a ^= b);
                    row.1.iter_mut().zip(&prhs).for_each(|(a, b)| *a ^= b);
                }
            }
            rank += 1;
        }
        let mut solved = BTreeMap::new();
        for (mask, rhs) in &self.rows[..rank] {
            let set: Vec<usize> = (0..self.unknowns.len()).filter(|&c| bit(mask, c)).collect();
            if let [col] = set.as_slice() {
                solved.insert(self.unknowns[*col], rhs.clone());
            }
        }
        solved
    }
}

/// Brute-force decoding of one session's exported trace: every delivered
/// record becomes an equation. Returns the solved units that did not arrive
/// directly.
pub fn gaussian_recover(
    strategy: StrategyKind,
    n: usize,
    dedicated: Option<usize>,
    records: &[TraceRecord],
) -> BTreeMap<Unknown, Vec<u8>> {
    let per_source = match strategy {
        StrategyKind::Nps2Rotating => n - 1,
        _ => n,
    };
    let unknowns: Vec<Unknown> = (1..=n)
        .flat_map(|i| (1..=per_source).map(move |k| (i, k)))
        .collect();
    let mut system = Gf2System::new(unknowns);
    let mut direct = Vec::new();
    for rec in records {
        let payload = match &rec.payload {
            Some(hex) => hex_decode(hex),
            None => continue,
        };
        match rec.kind {
            TraceKind::Data => {
                let k = expected_data_index(strategy, n, rec.path, rec.round);
                assert_eq!(
                    rec.data_index,
                    Some(k),
                    "trace labels disagree with slot table"
                );
                direct.push((rec.path, k));
                system.add_equation(&[(rec.path, k)], payload);
            }
            TraceKind::Parity => {
                let terms = expected_parity_terms(strategy, n, dedicated, rec.round);
                system.add_equation(&terms, payload);
            }
            TraceKind::Dropped => unreachable!("dropped slots carry no payload"),
        }
    }
    let mut solved = system.solve();
    for d in direct {
        solved.remove(&d);
    }
    solved
}

pub fn hex_decode(s: &str) -> Vec<u8> {
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap())
        .collect()
}

#[test]
fn gf2_solver_small_system() {
    // x1 = 0x0f, x1 + x2 = 0xff, x2 + x3 + x4 = 0x00 (x3, x4 stay free)
    let mut sys = Gf2System::new(vec![(1, 1), (2, 1), (3, 1), (4, 1)]);
    sys.add_equation(&[(1, 1)], vec![0x0f]);
    sys.add_equation(&[(1, 1), (2, 1)], vec![0xff]);
    sys.add_equation(&[(2, 1), (3, 1), (4, 1)], vec![0x00]);
    let solved = sys.solve();
    assert_eq!(solved.len(), 2);
    assert_eq!(solved[&(1, 1)], vec![0x0f]);
    assert_eq!(solved[&(2, 1)], vec![0xf0]);
}
