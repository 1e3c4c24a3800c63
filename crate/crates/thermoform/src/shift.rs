//! Subshifts of finite type, locally constant potentials, and one-step
//! Markov measures.
//!
//! Symbols are `0..n`.  A depth-`k` potential assigns a finite value to every
//! allowed `k`-word; depth-1 data is the native format of the transfer
//! machinery and deeper data is brought there by [`higher_block`] recoding.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::config::Tolerances;
use crate::numerics;
use crate::scalar::Scalar;

/// Structural errors of the symbolic layer.
#[derive(Debug, Clone, Error)]
pub enum ShiftError {
    #[error("transition matrix is not square: row {row} has {got} entries, expected {expected}")]
    NotSquare {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error("row {0} of the transition matrix has no allowed successor")]
    EmptyRow(usize),
    #[error("column {0} of the transition matrix has no allowed predecessor")]
    EmptyColumn(usize),
    #[error("word `{0}` uses a symbol outside the alphabet")]
    SymbolOutOfRange(Word),
    #[error("word `{0}` is not allowed by the transition matrix")]
    WordNotAllowed(Word),
    #[error("potential value for `{0}` is not finite")]
    ValueNotFinite(Word),
    #[error("potential has depth {depth} but word `{word}` has length {got}")]
    WrongWordLength {
        depth: usize,
        word: Word,
        got: usize,
    },
    #[error("potential misses a value for the allowed word `{0}`")]
    MissingWord(Word),
    #[error("potential depth must be at least 1")]
    ZeroDepth,
    #[error("operation requires a depth-1 potential, got depth {0}; recode first")]
    DepthNotOne(usize),
    #[error("stochastic matrix row {row} sums to {sum}, not 1")]
    RowSumOffOne { row: usize, sum: f64 },
    #[error("stochastic matrix has a negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("stochastic matrix puts mass {mass} on the forbidden transition ({row}, {col})")]
    MassOnForbidden { row: usize, col: usize, mass: f64 },
    #[error("stationary vector residual {residual} exceeds tolerance")]
    NotStationary { residual: f64 },
    #[error("no stationary vector found for the given stochastic matrix")]
    NoStationaryVector,
    #[error("measure is over {got} symbols but the space has {expected}")]
    MeasureSizeMismatch { got: usize, expected: usize },
    #[error("cycle word `{0}` is not a cycle of the space")]
    NotACycle(Word),
    #[error("Bernoulli weights require a full shift")]
    NotFullShift,
    #[error("weights must be nonnegative and sum to 1 (sum = {0})")]
    BadWeights(f64),
}

/// A finite word over the alphabet, written `a-b-c` in serialized form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.0 {
            if !first {
                write!(f, "-")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

impl std::str::FromStr for Word {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err("empty word".into());
        }
        let mut out = Vec::new();
        for part in s.split('-') {
            out.push(
                part.parse::<usize>()
                    .map_err(|_| format!("bad symbol `{part}` in word `{s}`"))?,
            );
        }
        Ok(Word(out))
    }
}

impl Serialize for Word {
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// A mixing-capable subshift of finite type on symbols `0..n`.
///
/// Construction rejects matrices with an empty row or column (those do not
/// define a shift on the full alphabet).  Primitivity is established once at
/// construction and cached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShiftSpaceRepr", into = "ShiftSpaceRepr")]
pub struct ShiftSpace {
    symbols: usize,
    /// Row-major adjacency; `true` means the transition is allowed.
    transitions: Vec<bool>,
    /// Least power with all entries positive, when one exists.
    primitive_power: Option<usize>,
}

/// Wire form of a shift space: symbol count plus a 0/1 matrix.  Going
/// through [`ShiftSpace::new`] on deserialization keeps the validation.
#[derive(Serialize, Deserialize)]
struct ShiftSpaceRepr {
    symbols: usize,
    transitions: Vec<Vec<u8>>,
}

impl TryFrom<ShiftSpaceRepr> for ShiftSpace {
    type Error = ShiftError;

    fn try_from(repr: ShiftSpaceRepr) -> Result<Self, ShiftError> {
        if repr.transitions.len() != repr.symbols {
            return Err(ShiftError::NotSquare {
                row: 0,
                got: repr.transitions.len(),
                expected: repr.symbols,
            });
        }
        ShiftSpace::new(repr.transitions)
    }
}

impl From<ShiftSpace> for ShiftSpaceRepr {
    fn from(space: ShiftSpace) -> Self {
        let n = space.symbols;
        ShiftSpaceRepr {
            symbols: n,
            transitions: (0..n)
                .map(|a| (0..n).map(|b| u8::from(space.allowed(a, b))).collect())
                .collect(),
        }
    }
}

impl ShiftSpace {
    /// Build from a 0/1 matrix; any nonzero entry counts as allowed.
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self, ShiftError> {
        let n = rows.len();
        if n == 0 {
            return Err(ShiftError::EmptyAlphabet);
        }
        let mut transitions = vec![false; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ShiftError::NotSquare {
                    row: i,
                    got: row.len(),
                    expected: n,
                });
            }
            for (j, &x) in row.iter().enumerate() {
                transitions[i * n + j] = x != 0;
            }
        }
        for i in 0..n {
            if !(0..n).any(|j| transitions[i * n + j]) {
                return Err(ShiftError::EmptyRow(i));
            }
        }
        for j in 0..n {
            if !(0..n).any(|i| transitions[i * n + j]) {
                return Err(ShiftError::EmptyColumn(j));
            }
        }
        let primitive_power = primitive_power(n, &transitions);
        Ok(ShiftSpace {
            symbols: n,
            transitions,
            primitive_power,
        })
    }

    /// Full shift on `n` symbols.
    pub fn full(n: usize) -> Result<Self, ShiftError> {
        ShiftSpace::new(vec![vec![1; n]; n])
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols
    }

    #[inline]
    pub fn allowed(&self, from: usize, to: usize) -> bool {
        self.transitions[from * self.symbols + to]
    }

    pub fn is_full_shift(&self) -> bool {
        self.transitions.iter().all(|&b| b)
    }

    /// Whether `word` is admissible.
    pub fn word_allowed(&self, word: &Word) -> bool {
        if word.0.iter().any(|&s| s >= self.symbols) {
            return false;
        }
        word.0.windows(2).all(|w| self.allowed(w[0], w[1]))
    }

    /// All allowed words of length `depth` in lexicographic order.
    pub fn allowed_words(&self, depth: usize) -> Vec<Word> {
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(depth);
        self.collect_words(depth, &mut current, &mut out);
        out
    }

    fn collect_words(&self, depth: usize, current: &mut Vec<usize>, out: &mut Vec<Word>) {
        if current.len() == depth {
            out.push(Word(current.clone()));
            return;
        }
        for s in 0..self.symbols {
            if current
                .last()
                .map(|&prev| self.allowed(prev, s))
                .unwrap_or(true)
            {
                current.push(s);
                self.collect_words(depth, current, out);
                current.pop();
            }
        }
    }

    /// Number of allowed words per length `1..=max_len`, saturating.
    pub fn word_counts(&self, max_len: usize) -> Vec<u64> {
        let n = self.symbols;
        let mut counts = Vec::with_capacity(max_len);
        // v[j] = number of allowed words of the current length ending at j.
        let mut v = vec![1u64; n];
        counts.push(n as u64);
        for _ in 1..max_len {
            let mut next = vec![0u64; n];
            for (i, &c) in v.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for j in 0..n {
                    if self.allowed(i, j) {
                        next[j] = next[j].saturating_add(c);
                    }
                }
            }
            v = next;
            counts.push(v.iter().fold(0u64, |a, &b| a.saturating_add(b)));
        }
        counts
    }

    /// Primitivity report: whether some power of the transition matrix is
    /// entrywise positive, and the least such power.
    pub fn validate_mixing(&self) -> MixingReport {
        MixingReport {
            mixing: self.primitive_power.is_some(),
            witness_power: self.primitive_power,
        }
    }

    pub(crate) fn is_mixing(&self) -> bool {
        self.primitive_power.is_some()
    }
}

/// Wielandt bound search for the least entrywise-positive power.
fn primitive_power(n: usize, transitions: &[bool]) -> Option<usize> {
    let bound = (n - 1) * (n - 1) + 1;
    let mut power = transitions.to_vec();
    for k in 1..=bound {
        if power.iter().all(|&b| b) {
            return Some(k);
        }
        if k == bound {
            break;
        }
        let mut next = vec![false; n * n];
        for i in 0..n {
            for m in 0..n {
                if power[i * n + m] {
                    for j in 0..n {
                        if transitions[m * n + j] {
                            next[i * n + j] = true;
                        }
                    }
                }
            }
        }
        power = next;
    }
    None
}

/// Result of [`ShiftSpace::validate_mixing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingReport {
    pub mixing: bool,
    /// Least `m` with all entries of the `m`-th matrix power positive.
    pub witness_power: Option<usize>,
}

/// A locally constant potential: finite values on exactly the allowed
/// `depth`-words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential<S> {
    pub depth: usize,
    pub values: BTreeMap<Word, S>,
}

impl<S: Scalar> Potential<S> {
    /// Validated construction against `space`.
    pub fn new(
        space: &ShiftSpace,
        depth: usize,
        values: BTreeMap<Word, S>,
    ) -> Result<Self, ShiftError> {
        if depth == 0 {
            return Err(ShiftError::ZeroDepth);
        }
        for (word, &value) in &values {
            if word.len() != depth {
                return Err(ShiftError::WrongWordLength {
                    depth,
                    word: word.clone(),
                    got: word.len(),
                });
            }
            if word.0.iter().any(|&s| s >= space.symbol_count()) {
                return Err(ShiftError::SymbolOutOfRange(word.clone()));
            }
            if !space.word_allowed(word) {
                return Err(ShiftError::WordNotAllowed(word.clone()));
            }
            if !value.is_finite() {
                return Err(ShiftError::ValueNotFinite(word.clone()));
            }
        }
        for word in space.allowed_words(depth) {
            if !values.contains_key(&word) {
                return Err(ShiftError::MissingWord(word));
            }
        }
        Ok(Potential { depth, values })
    }

    /// Depth-1 potential from per-symbol values.
    pub fn depth1(space: &ShiftSpace, values: &[S]) -> Result<Self, ShiftError> {
        let map = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (Word(vec![i]), v))
            .collect();
        Potential::new(space, 1, map)
    }

    /// Per-symbol values of a depth-1 potential.
    pub fn as_depth1(&self, space: &ShiftSpace) -> Result<Vec<S>, ShiftError> {
        if self.depth != 1 {
            return Err(ShiftError::DepthNotOne(self.depth));
        }
        let mut out = vec![S::zero(); space.symbol_count()];
        for (word, &v) in &self.values {
            out[word.0[0]] = v;
        }
        Ok(out)
    }

    pub fn value(&self, word: &Word) -> Option<S> {
        self.values.get(word).copied()
    }
}

/// Higher-block recoding of a space and a depth-`k` potential.
#[derive(Debug, Clone)]
pub struct HigherBlock<S> {
    /// Recoded shift on the allowed `k`-words.
    pub space: ShiftSpace,
    /// New symbol `i` stands for this original word.
    pub words: Vec<Word>,
    /// The potential, now depth 1 on the recoded space.
    pub potential: Potential<S>,
}

/// Recoding onto the alphabet of allowed `k`-words.  Depth-1 input is
/// returned unchanged up to re-construction.  New symbols are numbered in
/// lexicographic word order; `w -> w'` is allowed when the overlap matches
/// and the joined `(k+1)`-word is admissible.
pub fn higher_block<S: Scalar>(
    space: &ShiftSpace,
    potential: &Potential<S>,
) -> Result<HigherBlock<S>, ShiftError> {
    let k = potential.depth;
    let words = space.allowed_words(k);
    let index: BTreeMap<&Word, usize> = words.iter().zip(0usize..).collect();
    let m = words.len();
    let mut rows = vec![vec![0u8; m]; m];
    for (i, w) in words.iter().enumerate() {
        for (j, w2) in words.iter().enumerate() {
            let overlap = w.0[1..] == w2.0[..k - 1];
            if overlap && space.allowed(w.0[k - 1], w2.0[k - 1]) {
                rows[i][j] = 1;
            }
        }
    }
    // For k = 1 the overlap condition is vacuous and rows equal the original.
    let recoded = ShiftSpace::new(rows)?;
    let values = words
        .iter()
        .map(|w| {
            let v = potential.values[w];
            (Word(vec![index[w]]), v)
        })
        .collect();
    let potential = Potential::new(&recoded, 1, values)?;
    Ok(HigherBlock {
        space: recoded,
        words,
        potential,
    })
}

/// A shift-invariant one-step Markov measure: row-stochastic transition
/// matrix plus its stationary row vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovMeasure<S> {
    /// Row-major stochastic matrix, `symbols`-by-`symbols`.
    pub stochastic: Vec<Vec<S>>,
    /// Stationary distribution, `stationary * stochastic = stationary`.
    pub stationary: Vec<S>,
}

impl<S: Scalar> MarkovMeasure<S> {
    /// Validate `stochastic` against `space` and compute the stationary
    /// vector.
    pub fn new(
        space: &ShiftSpace,
        stochastic: Vec<Vec<S>>,
        tol: &Tolerances<S>,
    ) -> Result<Self, ShiftError> {
        check_stochastic(space, &stochastic, tol)?;
        let n = space.symbol_count();
        let flat: Vec<S> = stochastic.iter().flatten().copied().collect();
        let stationary =
            numerics::stationary_vector(n, &flat).ok_or(ShiftError::NoStationaryVector)?;
        Ok(MarkovMeasure {
            stochastic,
            stationary,
        })
    }

    /// Validated construction with a caller-supplied stationary vector.
    pub fn with_stationary(
        space: &ShiftSpace,
        stochastic: Vec<Vec<S>>,
        stationary: Vec<S>,
        tol: &Tolerances<S>,
    ) -> Result<Self, ShiftError> {
        check_stochastic(space, &stochastic, tol)?;
        let n = space.symbol_count();
        if stationary.len() != n {
            return Err(ShiftError::MeasureSizeMismatch {
                got: stationary.len(),
                expected: n,
            });
        }
        let mut residual = S::zero();
        for j in 0..n {
            let mut s = S::zero();
            for i in 0..n {
                s = s + stationary[i] * stochastic[i][j];
            }
            residual = residual.max((s - stationary[j]).abs());
        }
        if residual > tol.stationary {
            return Err(ShiftError::NotStationary {
                residual: residual.lossy_f64(),
            });
        }
        Ok(MarkovMeasure {
            stochastic,
            stationary,
        })
    }

    /// Bernoulli measure: identical rows.  Requires a full shift.
    pub fn bernoulli(
        space: &ShiftSpace,
        weights: &[S],
        tol: &Tolerances<S>,
    ) -> Result<Self, ShiftError> {
        if !space.is_full_shift() {
            return Err(ShiftError::NotFullShift);
        }
        let n = space.symbol_count();
        if weights.len() != n {
            return Err(ShiftError::MeasureSizeMismatch {
                got: weights.len(),
                expected: n,
            });
        }
        let sum: S = weights.iter().copied().sum();
        if weights.iter().any(|&w| w < S::zero()) || (sum - S::one()).abs() > tol.structural {
            return Err(ShiftError::BadWeights(sum.lossy_f64()));
        }
        MarkovMeasure::with_stationary(space, vec![weights.to_vec(); n], weights.to_vec(), tol)
    }

    /// Periodic-orbit measure along a simple cycle.  States off the cycle
    /// get an arbitrary valid row and zero stationary mass.
    pub fn from_cycle(
        space: &ShiftSpace,
        cycle: &Word,
        tol: &Tolerances<S>,
    ) -> Result<Self, ShiftError> {
        let n = space.symbol_count();
        let len = cycle.len();
        if len == 0
            || !space.word_allowed(cycle)
            || !space.allowed(cycle.0[len - 1], cycle.0[0])
            || cycle
                .0
                .iter()
                .collect::<std::collections::BTreeSet<_>>()
                .len()
                != len
        {
            return Err(ShiftError::NotACycle(cycle.clone()));
        }
        let mut stochastic = vec![vec![S::zero(); n]; n];
        let mut stationary = vec![S::zero(); n];
        for (i, &v) in cycle.0.iter().enumerate() {
            let next = cycle.0[(i + 1) % len];
            stochastic[v][next] = S::one();
            stationary[v] = S::one() / S::of(len as f64);
        }
        for u in 0..n {
            if cycle.0.contains(&u) {
                continue;
            }
            let deg = (0..n).filter(|&v| space.allowed(u, v)).count();
            for v in 0..n {
                if space.allowed(u, v) {
                    stochastic[u][v] = S::one() / S::of(deg as f64);
                }
            }
        }
        MarkovMeasure::with_stationary(space, stochastic, stationary, tol)
    }

    pub fn symbol_count(&self) -> usize {
        self.stationary.len()
    }

    /// Check dimensions and the zero pattern against `space`.
    pub fn check_compatible(&self, space: &ShiftSpace) -> Result<(), ShiftError> {
        let n = space.symbol_count();
        if self.symbol_count() != n || self.stochastic.len() != n {
            return Err(ShiftError::MeasureSizeMismatch {
                got: self.symbol_count(),
                expected: n,
            });
        }
        for (i, row) in self.stochastic.iter().enumerate() {
            for (j, &q) in row.iter().enumerate() {
                if q > S::zero() && !space.allowed(i, j) {
                    return Err(ShiftError::MassOnForbidden {
                        row: i,
                        col: j,
                        mass: q.lossy_f64(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Measure of the cylinder set of `word`.
    pub fn cylinder_mass(&self, word: &Word) -> S {
        let mut m = self.stationary[word.0[0]];
        for w in word.0.windows(2) {
            m = m * self.stochastic[w[0]][w[1]];
        }
        m
    }

    /// Sample a symbol path of length `len`; fully determined by `seed`.
    pub fn sample_path(&self, len: usize, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(len);
        let draw = |dist: &[S], rng: &mut ChaCha8Rng| -> usize {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, &p) in dist.iter().enumerate() {
                acc += p.lossy_f64();
                if u < acc {
                    return i;
                }
            }
            dist.len() - 1
        };
        if len == 0 {
            return out;
        }
        let mut state = draw(&self.stationary, &mut rng);
        out.push(state);
        for _ in 1..len {
            state = draw(&self.stochastic[state], &mut rng);
            out.push(state);
        }
        out
    }
}

fn check_stochastic<S: Scalar>(
    space: &ShiftSpace,
    stochastic: &[Vec<S>],
    tol: &Tolerances<S>,
) -> Result<(), ShiftError> {
    let n = space.symbol_count();
    if stochastic.len() != n {
        return Err(ShiftError::MeasureSizeMismatch {
            got: stochastic.len(),
            expected: n,
        });
    }
    for (i, row) in stochastic.iter().enumerate() {
        if row.len() != n {
            return Err(ShiftError::MeasureSizeMismatch {
                got: row.len(),
                expected: n,
            });
        }
        let mut sum = S::zero();
        for (j, &q) in row.iter().enumerate() {
            if q < S::zero() {
                return Err(ShiftError::NegativeEntry { row: i, col: j });
            }
            if q > S::zero() && !space.allowed(i, j) {
                return Err(ShiftError::MassOnForbidden {
                    row: i,
                    col: j,
                    mass: q.lossy_f64(),
                });
            }
            sum = sum + q;
        }
        if (sum - S::one()).abs() > tol.structural {
            return Err(ShiftError::RowSumOffOne {
                row: i,
                sum: sum.lossy_f64(),
            });
        }
    }
    Ok(())
}

/// Metric entropy of a Markov measure, `-sum_a p(a) sum_b q(a,b) log q(a,b)`.
pub fn measure_entropy<S: Scalar>(
    space: &ShiftSpace,
    measure: &MarkovMeasure<S>,
) -> Result<S, ShiftError> {
    measure.check_compatible(space)?;
    let mut h = S::zero();
    for (i, row) in measure.stochastic.iter().enumerate() {
        let p = measure.stationary[i];
        if p > S::zero() {
            h = h + p * numerics::entropy_of(row);
        }
    }
    Ok(h)
}

/// Integral of a depth-1 potential against the stationary marginal.
pub fn integrate<S: Scalar>(
    space: &ShiftSpace,
    potential: &Potential<S>,
    measure: &MarkovMeasure<S>,
) -> Result<S, ShiftError> {
    measure.check_compatible(space)?;
    let values = potential.as_depth1(space)?;
    Ok(values
        .iter()
        .zip(&measure.stationary)
        .map(|(&v, &p)| v * p)
        .sum())
}
