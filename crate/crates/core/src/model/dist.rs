use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A single support point of a replenishment distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    pub bid: u32,
    pub ask: u32,
    pub p: T,
}

/// Finitely supported joint law of `(bid, ask)` queue sizes drawn right after
/// a price increase. Atoms are kept sorted by `(bid, ask)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom<T>>", into = "Vec<Atom<T>>")]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct QueueDist<T> {
    atoms: Vec<Atom<T>>,
    cumulative: Vec<T>,
}

fn norm_tolerance<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

impl<T: Scalar> QueueDist<T> {
    /// Validates and sorts the atoms. Probabilities must be positive and sum
    /// to one within `1e-12`; queue sizes must be at least one.
    pub fn new(mut atoms: Vec<Atom<T>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        for a in &atoms {
            if a.bid == 0 || a.ask == 0 {
                return Err(Error::InvalidDistribution(format!(
                    "queue sizes must be >= 1, got ({}, {})",
                    a.bid, a.ask
                )));
            }
            if !(a.p > T::zero()) || !a.p.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "probability at ({}, {}) must be positive, got {}",
                    a.bid, a.ask, a.p
                )));
            }
        }
        atoms.sort_by_key(|a| (a.bid, a.ask));
        if atoms.windows(2).any(|w| (w[0].bid, w[0].ask) == (w[1].bid, w[1].ask)) {
            return Err(Error::InvalidDistribution("duplicate support point".into()));
        }
        let total = atoms.iter().fold(T::zero(), |acc, a| acc + a.p);
        if (total - T::one()).abs() > norm_tolerance() {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let mut running = T::zero();
        let cumulative = atoms
            .iter()
            .map(|a| {
                running += a.p;
                running
            })
            .collect();
        Ok(Self { atoms, cumulative })
    }

    /// Normalizes nonnegative weights (e.g. histogram counts); zero-weight
    /// cells are dropped.
    pub fn from_weights<I>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32, T)>,
    {
        let cells: Vec<_> = weights.into_iter().filter(|c| c.2 > T::zero()).collect();
        let total = cells.iter().fold(T::zero(), |acc, c| acc + c.2);
        if !(total > T::zero()) {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        Self::new(
            cells
                .into_iter()
                .map(|(bid, ask, w)| Atom { bid, ask, p: w / total })
                .collect(),
        )
    }

    pub fn point_mass(bid: u32, ask: u32) -> Result<Self> {
        Self::new(vec![Atom { bid, ask, p: T::one() }])
    }

    pub fn uniform(points: &[(u32, u32)]) -> Result<Self> {
        Self::from_weights(points.iter().map(|&(b, a)| (b, a, T::one())))
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn prob(&self, bid: u32, ask: u32) -> T {
        self.atoms
            .binary_search_by_key(&(bid, ask), |a| (a.bid, a.ask))
            .map(|i| self.atoms[i].p)
            .unwrap_or_else(|_| T::zero())
    }

    /// Largest queue size in the support.
    pub fn max_queue(&self) -> u32 {
        self.atoms.iter().map(|a| a.bid.max(a.ask)).max().unwrap_or(0)
    }

    /// The mirrored law `(bid, ask) -> (ask, bid)`, used after price decreases.
    pub fn swapped(&self) -> Self {
        Self::new(
            self.atoms
                .iter()
                .map(|a| Atom {
                    bid: a.ask,
                    ask: a.bid,
                    p: a.p,
                })
                .collect(),
        )
        .expect("swap preserves validity")
    }

    pub fn is_symmetric(&self) -> bool {
        let tol = norm_tolerance::<T>();
        self.atoms
            .iter()
            .all(|a| (a.p - self.prob(a.ask, a.bid)).abs() <= tol)
    }

    /// `sum_{i} sum_{j >= i} f(i, j)`: mass where the bid queue is no larger
    /// than the ask queue after an up-move.
    pub fn mass_bid_le_ask(&self) -> T {
        self.atoms
            .iter()
            .filter(|a| a.ask >= a.bid)
            .fold(T::zero(), |acc, a| acc + a.p)
    }

    /// Total variation distance, `1/2 sum |f - g|`.
    pub fn total_variation(&self, other: &Self) -> T {
        let mut keys: Vec<(u32, u32)> = self
            .atoms
            .iter()
            .chain(other.atoms.iter())
            .map(|a| (a.bid, a.ask))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let sum = keys.iter().fold(T::zero(), |acc, &(b, a)| {
            acc + (self.prob(b, a) - other.prob(b, a)).abs()
        });
        sum / T::lit(2.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        let u = T::lit(rng.random::<f64>()) * *self.cumulative.last().unwrap();
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        (self.atoms[i].bid, self.atoms[i].ask)
    }

    /// Writes sparse `i,j,p` triples with a header row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "p"])?;
        for a in &self.atoms {
            out.write_record([a.bid.to_string(), a.ask.to_string(), format!("{:e}", a.p)])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads `i,j,p` triples; `#` lines are comments. Weights are
    /// renormalized so hand-written files with rounded probabilities load
    /// cleanly.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(r);
        let mut cells = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let parse_err =
                |what: &str| Error::InvalidDistribution(format!("row {}: bad {what}", line + 2));
            let i: u32 = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("i"))?;
            let j: u32 = row.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("j"))?;
            let p: f64 = row.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("p"))?;
            if p < 0.0 {
                return Err(parse_err("p (negative)"));
            }
            cells.push((i, j, T::lit(p)));
        }
        Self::from_weights(cells)
    }
}

impl<T: Scalar> TryFrom<Vec<Atom<T>>> for QueueDist<T> {
    type Error = Error;

    fn try_from(atoms: Vec<Atom<T>>) -> Result<Self> {
        Self::new(atoms)
    }
}

impl<T: Scalar> From<QueueDist<T>> for Vec<Atom<T>> {
    fn from(d: QueueDist<T>) -> Self {
        d.atoms
    }
}
