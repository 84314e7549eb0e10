//! Prior-bias check: simulate datasets from region-labeled prior points and
//! tally which region each simulated dataset favors.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{report_from_kernels, EvidenceOptions, Verdict};
use crate::params::ExperimentParams;
use crate::prior::{draw_region_points, PriorSample, Region};
use crate::probability::{EventCounts, ProbabilityVector};
use crate::rng::{substream, TAG_BIAS_PICK, TAG_BIAS_SIMULATE};

/// Draws `n` trials with a uniformly chosen setting and outcomes from `p`.
///
/// Cell `k` has probability `p_k / 4`. Sampled by chained binomials.
pub fn simulate_data<R: Rng + ?Sized>(p: &ProbabilityVector, n: u64, rng: &mut R) -> EventCounts {
    let cells = p.values().map(|v| (v / 4.0).max(0.0));
    let mut counts = [0u64; 16];
    let mut left = n;
    for k in 0..16 {
        if left == 0 {
            break;
        }
        let rest: f64 = cells[k..].iter().sum();
        if k == 15 || rest <= 0.0 {
            counts[k] = left;
            break;
        }
        let q = (cells[k] / rest).clamp(0.0, 1.0);
        let draw = Binomial::new(left, q).expect("probability in [0, 1]").sample(rng);
        counts[k] = draw;
        left -= draw;
    }
    EventCounts::new(counts)
}

/// How the mock-true points of one region were drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Draw {
    WithoutReplacement,
    WithReplacement,
}

/// Verdict tally of a bias check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasTally {
    pub params: ExperimentParams,
    pub trials: u64,
    pub mocks_per_region: usize,
    /// `favor[r][c]`: mocks drawn from region `r` whose data favor region `c`.
    pub favor: [[u64; 3]; 3],
    /// Mocks of each row favoring more than one region.
    pub multi_favor: [u64; 3],
    /// Mocks of each row with no in-favor verdict.
    pub no_favor: [u64; 3],
    /// Mocks of each row with no against verdict.
    pub no_against: [u64; 3],
    pub source: MockSource,
    /// Candidate mock-true points found in each region.
    pub available: [usize; 3],
    pub draws: [Draw; 3],
}

impl BiasTally {
    /// Fraction of row `r` mocks favoring column `c`.
    pub fn rate(&self, r: Region, c: Region) -> f64 {
        self.favor[r.index()][c.index()] as f64 / self.mocks_per_region as f64
    }

    /// Row sums, which exceed the mock count by the multi-favor overcount.
    pub fn row_sums(&self) -> [u64; 3] {
        self.favor.map(|row| row.iter().sum())
    }

    /// Text table with one row per mock-true region.
    pub fn table(&self) -> String {
        let mut out = format!("{:<10} {:>9} {:>9} {:>9} {:>12}  draw\n", "mock-true", "QM only", "both", "LHV only", "multi-favor");
        for r in Region::ALL {
            let i = r.index();
            let row = self.favor[i];
            let draw = match self.draws[i] {
                Draw::WithoutReplacement => "without replacement",
                Draw::WithReplacement => "with replacement",
            };
            out += &format!("{:<10} {:>9} {:>9} {:>9} {:>12}  {}\n", r.label(), row[0], row[1], row[2], self.multi_favor[i], draw);
        }
        let source = match self.source {
            MockSource::FreshDraws => "fresh prior draws",
            MockSource::EvaluationSample => "the evaluation sample",
        };
        out += &format!("{} mocks per region from {}, N = {}\n", self.mocks_per_region, source, self.trials);
        out
    }
}

/// Where mock-true probabilities come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockSource {
    /// Fresh prior draws, independent of the evaluation sample.
    FreshDraws,
    /// Points of the evaluation sample itself.
    EvaluationSample,
}

/// Settings of a bias check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasOptions {
    pub evidence: EvidenceOptions,
    pub source: MockSource,
    /// Resample a region smaller than the mock count instead of failing.
    pub allow_replacement: bool,
    /// Cap on fresh draws per sampler when filling the rarest region.
    pub max_fresh_per_component: usize,
}

impl Default for BiasOptions {
    fn default() -> Self {
        Self {
            evidence: EvidenceOptions::default(),
            source: MockSource::FreshDraws,
            allow_replacement: true,
            max_fresh_per_component: 20_000_000,
        }
    }
}

/// Picks `wanted` items out of `pool`, with replacement only if the pool is short.
fn pick<T: Copy>(pool: &[T], wanted: usize, region: Region, seed: u64, allow_replacement: bool) -> Result<(Vec<T>, Draw)> {
    let short = pool.len() < wanted;
    if pool.is_empty() || (short && !allow_replacement) {
        return Err(Error::InsufficientRegionPoints {
            region: region.label().to_string(),
            available: pool.len(),
            needed: wanted,
        });
    }
    let mut rng = substream(seed, TAG_BIAS_PICK, region.index() as u64);
    Ok(if short {
        ((0..wanted).map(|_| pool[rng.random_range(0..pool.len())]).collect(), Draw::WithReplacement)
    } else {
        (index::sample(&mut rng, pool.len(), wanted).into_iter().map(|j| pool[j]).collect(), Draw::WithoutReplacement)
    })
}

/// Runs `mocks_per_region` simulated experiments of `n` trials per region.
pub fn run_bias_check(
    params: &ExperimentParams,
    sample: &PriorSample,
    mocks_per_region: usize,
    n: u64,
    seed: u64,
    opts: &BiasOptions,
) -> Result<BiasTally> {
    if mocks_per_region == 0 {
        return Err(Error::InvalidArgument("mocks per region must be positive".into()));
    }
    if sample.params != *params {
        return Err(Error::InvalidArgument("prior sample was built for different parameters".into()));
    }
    let fresh = match opts.source {
        MockSource::FreshDraws => {
            Some(draw_region_points(params, sample.epsilon, seed, mocks_per_region, opts.max_fresh_per_component)?)
        }
        MockSource::EvaluationSample => None,
    };
    let mut picks: Vec<Vec<ProbabilityVector>> = Vec::with_capacity(3);
    let mut available = [0usize; 3];
    let mut draws = [Draw::WithoutReplacement; 3];
    for r in Region::ALL {
        let i = r.index();
        let pool: Vec<ProbabilityVector> = match &fresh {
            Some(f) => f[i].iter().map(|x| x.p).collect(),
            None => sample.region_indices(r).into_iter().map(|j| sample.points[j].p).collect(),
        };
        available[i] = pool.len();
        let (chosen, draw) = pick(&pool, mocks_per_region, r, seed, opts.allow_replacement)?;
        picks.push(chosen);
        draws[i] = draw;
    }

    let logs: Vec<[f64; 16]> = sample.points.par_iter().map(|x| x.p.values().map(f64::ln)).collect();
    let jobs: Vec<(usize, usize)> = (0..3).flat_map(|r| (0..mocks_per_region).map(move |j| (r, j))).collect();
    let outcomes: Vec<[Verdict; 3]> = jobs
        .par_iter()
        .map(|&(r, j)| {
            let mut rng = substream(seed, TAG_BIAS_SIMULATE, (r * mocks_per_region + j) as u64);
            let d = simulate_data(&picks[r][j], n, &mut rng);
            let ell: Vec<f64> = logs.iter().map(|lp| kernel(d.counts(), lp)).collect();
            let report = report_from_kernels(sample, &ell, "mock", &opts.evidence)?;
            Ok(report.regions.map(|e| e.verdict))
        })
        .collect::<Result<_>>()?;

    let mut tally = BiasTally {
        params: *params,
        trials: n,
        mocks_per_region,
        favor: [[0; 3]; 3],
        multi_favor: [0; 3],
        no_favor: [0; 3],
        no_against: [0; 3],
        source: opts.source,
        available,
        draws,
    };
    for (&(r, _), v) in jobs.iter().zip(&outcomes) {
        let favored = v.iter().filter(|&&x| x == Verdict::InFavor).count();
        for (cell, verdict) in tally.favor[r].iter_mut().zip(v) {
            if *verdict == Verdict::InFavor {
                *cell += 1;
            }
        }
        if favored > 1 {
            tally.multi_favor[r] += 1;
        }
        if favored == 0 {
            tally.no_favor[r] += 1;
        }
        if !v.contains(&Verdict::Against) {
            tally.no_against[r] += 1;
        }
    }
    Ok(tally)
}

/// `sum n ln p` from precomputed logs, summed in the same order as `log_kernel`.
fn kernel(counts: &[u64; 16], logs: &[f64; 16]) -> f64 {
    let mut s = 0.0;
    for k in 0..16 {
        if counts[k] > 0 {
            if logs[k] == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            s += counts[k] as f64 * logs[k];
        }
    }
    s
}
