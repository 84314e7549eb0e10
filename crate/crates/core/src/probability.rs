//! Probability space of a two-party, two-setting, click/no-click Bell test.
//!
//! Sixteen probabilities are stored as `4 * setting + outcome` with settings
//! ordered ab, ab', a'b, a'b' and outcomes ++, +0, 0+, 00.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Absolute tolerance for normalization, bounds and no-signaling checks.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Joint measurement setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    AB,
    ABPrime,
    APrimeB,
    APrimeBPrime,
}

impl Setting {
    pub const ALL: [Setting; 4] = [
        Setting::AB,
        Setting::ABPrime,
        Setting::APrimeB,
        Setting::APrimeBPrime,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 0 for a, 1 for a'.
    pub fn alice(self) -> usize {
        self.index() / 2
    }

    /// 0 for b, 1 for b'.
    pub fn bob(self) -> usize {
        self.index() % 2
    }

    pub fn from_parts(alice: usize, bob: usize) -> Setting {
        Setting::ALL[2 * alice + bob]
    }

    pub fn label(self) -> &'static str {
        match self {
            Setting::AB => "ab",
            Setting::ABPrime => "ab'",
            Setting::APrimeB => "a'b",
            Setting::APrimeBPrime => "a'b'",
        }
    }

    pub fn parse(s: &str) -> Option<Setting> {
        Setting::ALL.into_iter().find(|x| x.label() == s.trim())
    }
}

/// Detector outcome pair for one trigger signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    PlusPlus,
    PlusZero,
    ZeroPlus,
    ZeroZero,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::PlusPlus,
        Outcome::PlusZero,
        Outcome::ZeroPlus,
        Outcome::ZeroZero,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::PlusPlus => "++",
            Outcome::PlusZero => "+0",
            Outcome::ZeroPlus => "0+",
            Outcome::ZeroZero => "00",
        }
    }
}

/// Flat index of a (setting, outcome) cell.
pub fn cell(s: Setting, o: Outcome) -> usize {
    4 * s.index() + o.index()
}

/// Sixteen per-setting distributions without the no-signaling requirement.
///
/// Relative frequencies of real data live here; they generally signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTable {
    values: [f64; 16],
}

impl OutcomeTable {
    pub fn new(values: [f64; 16]) -> Result<Self> {
        let mut values = values;
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -SIMPLEX_TOL || *v > 1.0 + SIMPLEX_TOL {
                return Err(Error::OutOfSimplex { index, value: *v });
            }
            *v = v.clamp(0.0, 1.0);
        }
        for setting in 0..4 {
            let sum: f64 = values[4 * setting..4 * setting + 4].iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::Normalization { setting, sum });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64; 16] {
        &self.values
    }

    pub fn get(&self, s: Setting, o: Outcome) -> f64 {
        self.values[cell(s, o)]
    }

    /// Largest violation of the four no-signaling equalities.
    pub fn signaling_deviation(&self) -> f64 {
        let v = &self.values;
        let marg_a = |s: usize| v[4 * s] + v[4 * s + 1];
        let marg_b = |s: usize| v[4 * s] + v[4 * s + 2];
        [
            (marg_a(0) - marg_a(1)).abs(),
            (marg_a(2) - marg_a(3)).abs(),
            (marg_b(0) - marg_b(2)).abs(),
            (marg_b(1) - marg_b(3)).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Sixteen probabilities that satisfy normalization and no-signaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 16]", into = "[f64; 16]")]
pub struct ProbabilityVector {
    table: OutcomeTable,
}

impl TryFrom<[f64; 16]> for ProbabilityVector {
    type Error = Error;
    fn try_from(v: [f64; 16]) -> Result<Self> {
        ProbabilityVector::new(v)
    }
}

impl From<ProbabilityVector> for [f64; 16] {
    fn from(p: ProbabilityVector) -> Self {
        *p.values()
    }
}

impl ProbabilityVector {
    pub fn new(values: [f64; 16]) -> Result<Self> {
        Self::from_table(OutcomeTable::new(values)?)
    }

    pub fn from_table(table: OutcomeTable) -> Result<Self> {
        let deviation = table.signaling_deviation();
        if deviation > SIMPLEX_TOL {
            return Err(Error::NoSignalingViolation { deviation });
        }
        Ok(Self { table })
    }

    /// Builds the vector from singles and coincidence probabilities.
    ///
    /// Every entry is formed from small quantities directly, so no precision
    /// is lost to cancellation against 1 when detection rates are tiny.
    pub fn from_clicks(alice: [f64; 2], bob: [f64; 2], coincidences: [f64; 4]) -> Result<Self> {
        let mut v = [0.0; 16];
        for s in Setting::ALL {
            let (pa, pb, pp) = (alice[s.alice()], bob[s.bob()], coincidences[s.index()]);
            let k = 4 * s.index();
            v[k] = pp;
            v[k + 1] = pa - pp;
            v[k + 2] = pb - pp;
            v[k + 3] = 1.0 - pa - pb + pp;
        }
        Self::new(v)
    }

    pub fn uniform() -> Self {
        Self::new([0.25; 16]).expect("uniform point is valid")
    }

    pub fn values(&self) -> &[f64; 16] {
        self.table.values()
    }

    pub fn table(&self) -> &OutcomeTable {
        &self.table
    }

    pub fn get(&self, s: Setting, o: Outcome) -> f64 {
        self.table.get(s, o)
    }

    /// Probability that Alice's detector clicks for setting index 0 (a) or 1 (a').
    pub fn alice_single(&self, alice: usize) -> f64 {
        let v = self.values();
        let (s1, s2) = (4 * (2 * alice), 4 * (2 * alice + 1));
        0.5 * (v[s1] + v[s1 + 1] + v[s2] + v[s2 + 1])
    }

    /// Probability that Bob's detector clicks for setting index 0 (b) or 1 (b').
    pub fn bob_single(&self, bob: usize) -> f64 {
        let v = self.values();
        let (s1, s2) = (4 * bob, 4 * (2 + bob));
        0.5 * (v[s1] + v[s1 + 2] + v[s2] + v[s2 + 2])
    }

    /// Probability that at least one detector clicks under setting `s`.
    pub fn click(&self, s: Setting) -> f64 {
        let v = self.values();
        let k = 4 * s.index();
        v[k] + v[k + 1] + v[k + 2]
    }

    /// The reduced eight-parameter view.
    pub fn reduced(&self) -> ReducedProbabilities {
        ReducedProbabilities {
            alice: [self.alice_single(0), self.alice_single(1)],
            bob: [self.bob_single(0), self.bob_single(1)],
            null: Setting::ALL.map(|s| self.get(s, Outcome::ZeroZero)),
        }
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &ProbabilityVector, lambda: f64) -> Result<Self> {
        let mut v = [0.0; 16];
        for (k, x) in v.iter_mut().enumerate() {
            *x = lambda * self.values()[k] + (1.0 - lambda) * other.values()[k];
        }
        Self::new(v)
    }
}

/// Singles probabilities plus the four null-event probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedProbabilities {
    /// p_+ for a and a'.
    pub alice: [f64; 2],
    /// p_+ for b and b'.
    pub bob: [f64; 2],
    /// p_00 for ab, ab', a'b, a'b'.
    pub null: [f64; 4],
}

impl ReducedProbabilities {
    /// Order: p_a, p_a', p_b, p_b', then the four null probabilities.
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.alice[0],
            self.alice[1],
            self.bob[0],
            self.bob[1],
            self.null[0],
            self.null[1],
            self.null[2],
            self.null[3],
        ]
    }

    pub fn from_array(x: [f64; 8]) -> Self {
        Self {
            alice: [x[0], x[1]],
            bob: [x[2], x[3]],
            null: [x[4], x[5], x[6], x[7]],
        }
    }
}

/// Completes the reduced parameters to all sixteen probabilities.
pub fn reconstruct_full(r: &ReducedProbabilities) -> Result<ProbabilityVector> {
    for (index, v) in r.to_array().into_iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfSimplex { index, value: v });
        }
    }
    let mut v = [0.0; 16];
    for s in Setting::ALL {
        let (pa, pb, p00) = (r.alice[s.alice()], r.bob[s.bob()], r.null[s.index()]);
        let k = 4 * s.index();
        v[k] = pa + pb + p00 - 1.0;
        v[k + 1] = 1.0 - p00 - pb;
        v[k + 2] = 1.0 - p00 - pa;
        v[k + 3] = p00;
    }
    ProbabilityVector::new(v)
}

/// Extracts the reduced parameters, rejecting signaling tables.
pub fn reduce(p: &OutcomeTable) -> Result<ReducedProbabilities> {
    Ok(ProbabilityVector::from_table(*p)?.reduced())
}

/// Observed counts for the sixteen (setting, outcome) cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    counts: [u64; 16],
}

impl EventCounts {
    pub fn new(counts: [u64; 16]) -> Self {
        Self { counts }
    }

    pub fn from_rows(rows: [[u64; 4]; 4]) -> Self {
        let mut counts = [0; 16];
        for (s, row) in rows.iter().enumerate() {
            counts[4 * s..4 * s + 4].copy_from_slice(row);
        }
        Self { counts }
    }

    pub fn counts(&self) -> &[u64; 16] {
        &self.counts
    }

    pub fn get(&self, s: Setting, o: Outcome) -> u64 {
        self.counts[cell(s, o)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn setting_total(&self, s: Setting) -> u64 {
        self.counts[4 * s.index()..4 * s.index() + 4].iter().sum()
    }

    pub fn add(&self, other: &EventCounts) -> EventCounts {
        let mut counts = self.counts;
        for (c, o) in counts.iter_mut().zip(other.counts) {
            *c += o;
        }
        EventCounts { counts }
    }

    /// Per-setting relative frequencies; fails if a setting has no trials.
    pub fn relative_frequencies(&self) -> Result<OutcomeTable> {
        let mut v = [0.0; 16];
        for s in Setting::ALL {
            let n = self.setting_total(s);
            if n == 0 {
                return Err(Error::InvalidArgument(format!(
                    "setting {} has no trials",
                    s.label()
                )));
            }
            for o in Outcome::ALL {
                v[cell(s, o)] = self.get(s, o) as f64 / n as f64;
            }
        }
        OutcomeTable::new(v)
    }

    /// Whether the frequencies signal beyond `k / sqrt(N)`.
    pub fn is_signaling(&self, k: f64) -> Result<bool> {
        let dev = self.relative_frequencies()?.signaling_deviation();
        Ok(dev > k / (self.total() as f64).sqrt())
    }

    /// The data-independent part of the log-likelihood,
    /// `ln N! - N ln 4 - sum ln n!`.
    ///
    /// Evaluated as `sum n ln(N / 4n) + r(N) - sum r(n)` with the Stirling
    /// remainder `r(m) = ln m! - m ln m + m`, which avoids cancelling numbers
    /// of size `N ln N`.
    pub fn log_constant(&self) -> f64 {
        let n_tot = self.total();
        if n_tot == 0 {
            return 0.0;
        }
        let nf = n_tot as f64;
        let mut s = stirling_remainder(n_tot);
        for &n in &self.counts {
            if n > 0 {
                let x = n as f64;
                s += x * (nf / (4.0 * x)).ln() - stirling_remainder(n);
            }
        }
        s
    }
}

/// `ln m! - (m ln m - m)`.
fn stirling_remainder(m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let x = m as f64;
    if m < 100 {
        ln_gamma(x + 1.0) - x * x.ln() + x
    } else {
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        0.5 * (2.0 * std::f64::consts::PI * x).ln()
            + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
    }
}

/// `sum n ln p`, or negative infinity when a positive count meets p = 0.
pub fn log_kernel(counts: &[u64; 16], p: &[f64; 16]) -> f64 {
    let mut s = 0.0;
    for k in 0..16 {
        if counts[k] > 0 {
            if p[k] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            s += counts[k] as f64 * p[k].ln();
        }
    }
    s
}

/// Natural log of the multinomial likelihood with random setting choice.
pub fn log_likelihood(d: &EventCounts, p: &ProbabilityVector) -> Result<f64> {
    let kernel = log_kernel(d.counts(), p.values());
    if kernel == f64::NEG_INFINITY {
        let index = (0..16)
            .find(|&k| d.counts[k] > 0 && p.values()[k] <= 0.0)
            .unwrap_or(0);
        return Err(Error::ZeroProbabilityWithCount { index });
    }
    Ok(d.log_constant() + kernel)
}
