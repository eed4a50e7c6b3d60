//! Domain types shared by every stage of the pipeline: data units, packets,
//! slot assignments, failure scenarios and exact rational capacities.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Paths and their sender/receiver pairs are addressed by dense indices `1..=n`.
pub type PathId = usize;

/// Reserved index of the extra protection path of [`StrategyKind::Nps1Extra`].
pub const EXTRA_PATH: PathId = 0;

/// Default payload width in bytes.
pub const DEFAULT_PAYLOAD_WIDTH: usize = 8;

/// The three protection strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    /// Parity of all `n` working paths travels over an additional path.
    Nps1Extra,
    /// One working path is given up and carries parity in every round.
    Nps1Dedicated,
    /// Parity duty rotates so every path carries it exactly once per session.
    Nps2Rotating,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Nps1Extra,
        StrategyKind::Nps1Dedicated,
        StrategyKind::Nps2Rotating,
    ];

    /// Command-line spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Nps1Extra => "nps1-extra",
            StrategyKind::Nps1Dedicated => "nps1-dedicated",
            StrategyKind::Nps2Rotating => "nps2",
        }
    }

    /// Own data units each source contributes to one session.
    pub fn units_per_source(self, n: usize) -> usize {
        match self {
            StrategyKind::Nps1Extra | StrategyKind::Nps1Dedicated => n,
            StrategyKind::Nps2Rotating => n - 1,
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown strategy '{s}', expected one of nps1-extra, nps1-dedicated, nps2"
                ))
            })
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fixed-width payload, read as `8 * width` parallel elements of the
/// binary field. Addition in that field is XOR.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DataUnit(Vec<u8>);

impl DataUnit {
    /// Fails on an empty payload.
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::InvalidInput(
                "data unit width must be at least 1 byte".into(),
            ));
        }
        Ok(DataUnit(bytes))
    }

    pub fn zeroed(width: usize) -> Self {
        assert!(width >= 1, "data unit width must be at least 1 byte");
        DataUnit(vec![0; width])
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes =
            hex::decode(s).map_err(|e| Error::InvalidInput(format!("bad hex payload: {e}")))?;
        DataUnit::new(bytes)
    }

    /// In-place `self ^= other`.
    pub fn xor_assign(&mut self, other: &DataUnit) -> Result<()> {
        if self.width() != other.width() {
            return Err(width_mismatch(self.width(), other.width()));
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
        Ok(())
    }
}

impl fmt::Debug for DataUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DataUnit({})", self.to_hex())
    }
}

fn width_mismatch(a: usize, b: usize) -> Error {
    Error::InvalidInput(format!("data unit width mismatch: {a} vs {b} bytes"))
}

/// Bytewise exclusive-or of two equal-width units.
pub fn xor(a: &DataUnit, b: &DataUnit) -> Result<DataUnit> {
    let mut out = a.clone();
    out.xor_assign(b)?;
    Ok(out)
}

/// XOR of a non-empty sequence of equal-width units.
///
/// An empty sequence is rejected rather than producing an all-zero unit,
/// since no strategy ever defines an empty parity.
pub fn xor_all<'a, I>(units: I) -> Result<DataUnit>
where
    I: IntoIterator<Item = &'a DataUnit>,
{
    let mut iter = units.into_iter();
    let mut acc = iter
        .next()
        .ok_or_else(|| Error::InvalidInput("xor_all of an empty sequence".into()))?
        .clone();
    for unit in iter {
        acc.xor_assign(unit)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadKind {
    Data,
    Parity,
}

/// One transmission on one path in one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub sender: PathId,
    pub kind: PayloadKind,
    /// Which of the sender's own units this is; `None` for parity.
    pub data_index: Option<usize>,
    pub unit: DataUnit,
    /// Round within the session, `1..=n`.
    pub round: usize,
    /// Session index, starting at 1.
    pub session: u64,
}

/// What a path transmits in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotAssignment {
    /// The sender's own unit with this 1-based index.
    OwnData(usize),
    Parity,
    Idle,
}

impl SlotAssignment {
    pub fn is_own_data(self) -> bool {
        matches!(self, SlotAssignment::OwnData(_))
    }

    pub fn is_parity(self) -> bool {
        matches!(self, SlotAssignment::Parity)
    }
}

/// A path failure that persists for whole sessions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FailureScenario {
    pub failed_path: Option<PathId>,
    /// Sessions in which `failed_path` is down. Empty means every session.
    pub sessions_affected: BTreeSet<u64>,
}

impl FailureScenario {
    pub fn none() -> Self {
        FailureScenario::default()
    }

    /// `path` is down in every session.
    pub fn always(path: PathId) -> Self {
        FailureScenario {
            failed_path: Some(path),
            sessions_affected: BTreeSet::new(),
        }
    }

    pub fn failed_in(&self, session: u64) -> Option<PathId> {
        let path = self.failed_path?;
        if self.sessions_affected.is_empty() || self.sessions_affected.contains(&session) {
            Some(path)
        } else {
            None
        }
    }
}

/// An exact nonnegative rational kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRational", into = "RawRational")]
pub struct RationalCapacity {
    num: u64,
    den: u64,
}

#[derive(Serialize, Deserialize)]
struct RawRational {
    num: u64,
    den: u64,
}

impl TryFrom<RawRational> for RationalCapacity {
    type Error = Error;

    fn try_from(raw: RawRational) -> Result<Self> {
        RationalCapacity::new(raw.num, raw.den)
    }
}

impl From<RationalCapacity> for RawRational {
    fn from(r: RationalCapacity) -> Self {
        RawRational {
            num: r.num,
            den: r.den,
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl RationalCapacity {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidInput("rational with zero denominator".into()));
        }
        let g = gcd(num, den);
        Ok(RationalCapacity {
            num: num / g,
            den: den / g,
        })
    }

    pub fn zero() -> Self {
        RationalCapacity { num: 0, den: 1 }
    }

    pub fn one() -> Self {
        RationalCapacity { num: 1, den: 1 }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Add for RationalCapacity {
    type Output = RationalCapacity;

    fn add(self, rhs: RationalCapacity) -> RationalCapacity {
        let den = self.den / gcd(self.den, rhs.den) * rhs.den;
        let num = self.num * (den / self.den) + rhs.num * (den / rhs.den);
        RationalCapacity::new(num, den).expect("nonzero denominator")
    }
}

impl Ord for RationalCapacity {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for RationalCapacity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalCapacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}
