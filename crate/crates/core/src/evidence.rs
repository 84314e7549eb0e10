//! Posterior contents of the three regions by likelihood weighting of the
//! prior sample, and the resulting evidence verdicts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ExperimentParams;
use crate::prior::{LabeledSample, PriorSample, Region};
use crate::probability::{log_kernel, EventCounts};

/// Default minimum number of points with non-negligible weight.
pub const DEFAULT_WEIGHT_FLOOR: usize = 10;

/// Relative log-weight below which a point counts as negligible.
pub const NEGLIGIBLE_LOG_WEIGHT: f64 = -30.0;

/// Smallest content reported as a number rather than a log10 value.
pub const LOG_REPORT_THRESHOLD: f64 = 1e-15;

/// Contents below this are "below representable".
pub const REPRESENTABLE: f64 = 1e-320;

/// Outcome of comparing posterior and prior content.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InFavor,
    Against,
    Neutral,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::InFavor => "in favor",
            Verdict::Against => "against",
            Verdict::Neutral => "neutral",
        })
    }
}

/// Prior and posterior content of one region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionEvidence {
    pub region: Region,
    pub prior: f64,
    /// Zero when below the smallest double.
    pub posterior: f64,
    pub log10_posterior: f64,
    pub below_representable: bool,
    pub verdict: Verdict,
}

impl RegionEvidence {
    /// The posterior as printed in tables: a decimal number, `10^x`, or `0 (10^x)`.
    pub fn posterior_label(&self) -> String {
        if self.below_representable {
            format!("0 (10^{:.1})", self.log10_posterior)
        } else if self.posterior < LOG_REPORT_THRESHOLD {
            format!("10^{:.2}", self.log10_posterior)
        } else if self.posterior < 1e-4 {
            format!("{:.2e}", self.posterior)
        } else {
            format!("{:.6}", self.posterior)
        }
    }
}

/// Posterior contents and verdicts for one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub dataset: String,
    pub params: ExperimentParams,
    pub regions: [RegionEvidence; 3],
    /// `(sum w)^2 / sum w^2` over the sample.
    pub effective_sample_size: f64,
    /// Points with weight above `e^-30` relative to the largest.
    pub weighted_points: usize,
    /// Fewer weighted points than the floor.
    pub degenerate: bool,
    pub sample_size: usize,
}

impl EvidenceReport {
    pub fn region(&self, r: Region) -> &RegionEvidence {
        &self.regions[r.index()]
    }

    pub fn posteriors(&self) -> [f64; 3] {
        self.regions.map(|r| r.posterior)
    }

    /// Aligned text table of prior, posterior and verdict per region.
    pub fn table(&self) -> String {
        let mut out = format!("{:<10} {:>10} {:>18}  verdict\n", "region", "prior", "posterior");
        for r in &self.regions {
            out += &format!("{:<10} {:>10.4} {:>18}  {}\n", r.region.label(), r.prior, r.posterior_label(), r.verdict);
        }
        out += &format!(
            "effective sample size {:.1}, {} of {} points carry weight\n",
            self.effective_sample_size, self.weighted_points, self.sample_size
        );
        out
    }
}

/// Settings of the posterior computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvidenceOptions {
    /// Half-width of the band around the prior mapped to a neutral verdict.
    pub neutrality_band: f64,
    pub weight_floor: usize,
    /// Fail with `DegenerateWeights` below the floor instead of flagging it.
    pub strict: bool,
}

impl Default for EvidenceOptions {
    fn default() -> Self {
        Self { neutrality_band: 0.0, weight_floor: DEFAULT_WEIGHT_FLOOR, strict: false }
    }
}

/// Evidence verdict per region: in favor iff the posterior exceeds the prior.
pub fn verdicts(prior: [f64; 3], posterior: [f64; 3], band: f64) -> [Verdict; 3] {
    std::array::from_fn(|i| {
        let diff = posterior[i] - prior[i];
        if diff.abs() <= band {
            Verdict::Neutral
        } else if diff > 0.0 {
            Verdict::InFavor
        } else {
            Verdict::Against
        }
    })
}

/// Likelihood kernel `sum n ln p` of every point, in sample order.
pub fn log_kernels(points: &[LabeledSample], d: &EventCounts) -> Vec<f64> {
    points.par_iter().map(|x| log_kernel(d.counts(), x.p.values())).collect()
}

/// `ln sum exp(l)` over the given values, or negative infinity if empty.
fn log_sum_exp<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> f64 {
    let m = values.clone().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// Posterior contents of the regions given data `d`.
///
/// The combinatorial constant of the likelihood cancels and is not evaluated.
pub fn posterior_contents(sample: &PriorSample, d: &EventCounts, dataset: &str, opts: &EvidenceOptions) -> Result<EvidenceReport> {
    let points = &sample.points;
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty prior sample".into()));
    }
    let ell = log_kernels(points, d);
    report_from_kernels(sample, &ell, dataset, opts)
}

/// Posterior report from precomputed kernels `ell`, one per sample point.
pub fn report_from_kernels(sample: &PriorSample, ell: &[f64], dataset: &str, opts: &EvidenceOptions) -> Result<EvidenceReport> {
    let points = &sample.points;
    if ell.len() != points.len() {
        return Err(Error::InvalidArgument(format!("{} kernels for {} points", ell.len(), points.len())));
    }
    let top = ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights { effective: 0.0, floor: opts.weight_floor });
    }
    let (mut s1, mut s2, mut weighted) = (0.0, 0.0, 0usize);
    for &l in ell {
        let w = (l - top).exp();
        s1 += w;
        s2 += w * w;
        if l - top > NEGLIGIBLE_LOG_WEIGHT {
            weighted += 1;
        }
    }
    let effective_sample_size = s1 * s1 / s2;
    let degenerate = weighted < opts.weight_floor;
    if degenerate && opts.strict {
        return Err(Error::DegenerateWeights { effective: effective_sample_size, floor: opts.weight_floor });
    }
    let total = log_sum_exp(ell.iter());
    let prior = sample.contents.as_array();
    let mut log_c = [f64::NEG_INFINITY; 3];
    for r in Region::ALL {
        let of_r = ell.iter().zip(points).filter(|(_, x)| x.region == r).map(|(l, _)| l);
        log_c[r.index()] = log_sum_exp(of_r) - total;
    }
    let posterior = log_c.map(f64::exp);
    let v = verdicts(prior, posterior, opts.neutrality_band);
    let regions = std::array::from_fn(|i| {
        let log10 = log_c[i] / std::f64::consts::LN_10;
        RegionEvidence {
            region: Region::ALL[i],
            prior: prior[i],
            posterior: posterior[i],
            log10_posterior: log10,
            below_representable: log_c[i] < REPRESENTABLE.ln(),
            verdict: v[i],
        }
    });
    Ok(EvidenceReport {
        dataset: dataset.to_string(),
        params: sample.params,
        regions,
        effective_sample_size,
        weighted_points: weighted,
        degenerate,
        sample_size: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::build_prior;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_verdicts() {
        use Verdict::*;
        assert_eq!(verdicts([0.0006, 0.5025, 0.4969], [1.0, 0.0, 0.0], 0.0), [InFavor, Against, Against]);
        assert_eq!(verdicts([0.0006, 0.5026, 0.4969], [0.0, 1.0, 0.0], 0.0), [Against, InFavor, Against]);
        let s = [0.2, 0.3, 0.5];
        assert_eq!(verdicts(s, s, 0.0), [Neutral; 3]);
        assert_eq!(verdicts(s, [0.21, 0.29, 0.5], 0.02), [Neutral; 3]);
    }

    #[test]
    fn no_data_returns_the_prior() {
        let s = build_prior(&ExperimentParams::delft(), 1000, 0.001, 11).unwrap();
        let r = posterior_contents(&s, &EventCounts::new([0; 16]), "none", &EvidenceOptions::default()).unwrap();
        for e in &r.regions {
            assert_abs_diff_eq!(e.posterior, e.prior, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(r.effective_sample_size, 2000.0, epsilon = 1e-9);
    }

    #[test]
    fn contents_sum_to_one() {
        let s = build_prior(&ExperimentParams::delft(), 1000, 0.001, 12).unwrap();
        let d = EventCounts::from_rows([[23, 3, 4, 23], [33, 11, 5, 30], [22, 10, 6, 24], [4, 20, 21, 6]]);
        let r = posterior_contents(&s, &d, "delft-1", &EvidenceOptions::default()).unwrap();
        assert_abs_diff_eq!(r.posteriors().iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        let v = r.regions.map(|x| x.verdict);
        assert!(v.contains(&Verdict::InFavor) && v.contains(&Verdict::Against));
    }

    #[test]
    fn strict_mode_rejects_degenerate_weights() {
        let s = build_prior(&ExperimentParams::delft(), 1000, 0.001, 13).unwrap();
        let d = EventCounts::from_rows([[2300, 300, 400, 2300], [3300, 1100, 500, 3000], [2200, 1000, 600, 2400], [400, 2000, 2100, 600]]);
        let opts = EvidenceOptions { weight_floor: 2001, strict: true, ..Default::default() };
        assert!(matches!(posterior_contents(&s, &d, "x", &opts), Err(Error::DegenerateWeights { .. })));
    }
}
