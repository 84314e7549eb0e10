//! The two-component prior sample, region labels, prior contents and their
//! sampling-error intervals, plus an on-disk cache of built samples.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::lhv::{lhv_membership, lhv_prior_draw, RejectionCounters};
use crate::params::ExperimentParams;
use crate::probability::ProbabilityVector;
use crate::quantum::{is_qm_member, qm_prior_draw};
use crate::rng::{chunks, substream, CHUNK, TAG_LHV_PRIOR, TAG_MOCK_LHV, TAG_MOCK_QM, TAG_QM_PRIOR};

/// Which sampler produced a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    QmSampler,
    LhvSampler,
}

/// The three regions of permissible probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    QmOnly,
    Both,
    LhvOnly,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::QmOnly, Region::Both, Region::LhvOnly];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::QmOnly => "QM only",
            Region::Both => "both",
            Region::LhvOnly => "LHV only",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A classified prior point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub p: ProbabilityVector,
    pub origin: Origin,
    pub region: Region,
}

impl LabeledSample {
    /// Eight click parameters: singles of a, a', b, b' and the four `++` entries.
    fn record(&self) -> [f64; 8] {
        let v = self.p.values();
        [
            v[0] + v[1],
            v[8] + v[9],
            v[0] + v[2],
            v[4] + v[6],
            v[0],
            v[4],
            v[8],
            v[12],
        ]
    }

    fn from_record(r: [f64; 8], origin: Origin, region: Region) -> Result<Self> {
        let p = ProbabilityVector::from_clicks([r[0], r[1]], [r[2], r[3]], [r[4], r[5], r[6], r[7]])?;
        Ok(Self { p, origin, region })
    }

    /// Passes the point through its storage form so fresh and cached samples agree bit for bit.
    fn canonical(self) -> Result<Self> {
        Self::from_record(self.record(), self.origin, self.region)
    }
}

/// Prior contents of the three regions and the classification counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorContents {
    pub qm_only: f64,
    pub both: f64,
    pub lhv_only: f64,
    /// QM-sampler points in "QM only".
    pub n1: u64,
    /// QM-sampler points in "both".
    pub n2: u64,
    /// LHV-sampler points in "LHV only".
    pub n3: u64,
    /// LHV-sampler points in "both".
    pub n4: u64,
}

impl PriorContents {
    pub fn from_counts(n1: u64, n2: u64, n3: u64, n4: u64) -> Result<Self> {
        if n1 + n2 == 0 || n3 + n4 == 0 {
            return Err(Error::InvalidArgument("empty sampler component".into()));
        }
        let qm_only = n1 as f64 / (2.0 * (n1 + n2) as f64);
        let lhv_only = n3 as f64 / (2.0 * (n3 + n4) as f64);
        Ok(Self {
            qm_only,
            both: 1.0 - qm_only - lhv_only,
            lhv_only,
            n1,
            n2,
            n3,
            n4,
        })
    }

    pub fn get(&self, r: Region) -> f64 {
        match r {
            Region::QmOnly => self.qm_only,
            Region::Both => self.both,
            Region::LhvOnly => self.lhv_only,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.qm_only, self.both, self.lhv_only]
    }

    /// Binomial standard deviations of the three contents.
    pub fn standard_errors(&self) -> [f64; 3] {
        let sd = |k: u64, n: u64| {
            let a = k as f64 / n as f64;
            0.5 * (a * (1.0 - a) / n as f64).sqrt()
        };
        let (nq, nl) = (self.n1 + self.n2, self.n3 + self.n4);
        let q = sd(self.n1, nq);
        let l = sd(self.n3, nl);
        [q, (q * q + l * l).sqrt(), l]
    }
}

/// A built prior sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PriorSample {
    pub params: ExperimentParams,
    pub epsilon: f64,
    pub seed: u64,
    pub points: Vec<LabeledSample>,
    pub contents: PriorContents,
    pub rejections: RejectionCounters,
}

impl PriorSample {
    pub fn n_per_component(&self) -> usize {
        self.points.len() / 2
    }

    pub fn region_indices(&self, r: Region) -> Vec<usize> {
        (0..self.points.len()).filter(|&i| self.points[i].region == r).collect()
    }

    fn from_points(
        params: ExperimentParams,
        epsilon: f64,
        seed: u64,
        points: Vec<LabeledSample>,
        rejections: RejectionCounters,
    ) -> Result<Self> {
        let count = |o: Origin, r: Region| points.iter().filter(|x| x.origin == o && x.region == r).count() as u64;
        let contents = PriorContents::from_counts(
            count(Origin::QmSampler, Region::QmOnly),
            count(Origin::QmSampler, Region::Both),
            count(Origin::LhvSampler, Region::LhvOnly),
            count(Origin::LhvSampler, Region::Both),
        )?;
        Ok(Self { params, epsilon, seed, points, contents, rejections })
    }

    /// The first `n` points of each component, as if built with size `n`.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        let half = self.n_per_component();
        if n > half {
            return Err(Error::InvalidArgument(format!("prefix {n} exceeds {half}")));
        }
        let mut points = self.points[..n].to_vec();
        points.extend_from_slice(&self.points[half..half + n]);
        Self::from_points(self.params, self.epsilon, self.seed, points, self.rejections)
    }
}

fn with_point<T>(p: &ProbabilityVector, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::SolverFailure(m) => Error::SolverFailure(format!(
            "{m}; failing point {}",
            serde_json::to_string(p.values()).unwrap_or_default()
        )),
        other => other,
    })
}

/// Draws and classifies `len` points of the QM sampler.
fn qm_chunk(params: &ExperimentParams, epsilon: f64, mut rng: ChaCha20Rng, len: usize) -> Result<Vec<LabeledSample>> {
    (0..len)
        .map(|_| {
            let p = qm_prior_draw(&mut rng, params, epsilon)?;
            let local = with_point(&p, lhv_membership(&p, params))?;
            let region = if local { Region::Both } else { Region::QmOnly };
            LabeledSample { p, origin: Origin::QmSampler, region }.canonical()
        })
        .collect()
}

/// Draws and classifies `len` points of the LHV sampler.
fn lhv_chunk(
    params: &ExperimentParams,
    epsilon: f64,
    mut rng: ChaCha20Rng,
    len: usize,
) -> Result<(Vec<LabeledSample>, RejectionCounters)> {
    let mut counters = RejectionCounters::default();
    let pts = (0..len)
        .map(|_| {
            let p = lhv_prior_draw(&mut rng, params, epsilon, &mut counters)?;
            let quantum = is_qm_member(&p, params)?;
            let region = if quantum { Region::Both } else { Region::LhvOnly };
            LabeledSample { p, origin: Origin::LhvSampler, region }.canonical()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pts, counters))
}

/// Chunks drawn per sampler between checks of [`draw_region_points`].
const REGION_BATCH: u64 = 64;

/// Fresh prior points per region, drawn on the mock streams of `seed`.
///
/// Each sampler is run until it has supplied its share of every region: all
/// of "QM only" from the QM sampler, all of "LHV only" from the LHV sampler,
/// and half of "both" from each. Drawing stops early once `max_per_component`
/// points were drawn per sampler, so a region may hold fewer than `wanted`.
/// The result is independent of thread count.
pub fn draw_region_points(
    params: &ExperimentParams,
    epsilon: f64,
    seed: u64,
    wanted: usize,
    max_per_component: usize,
) -> Result<[Vec<LabeledSample>; 3]> {
    params.validate()?;
    let quota = |o: Origin, r: Region| match (o, r) {
        (Origin::QmSampler, Region::QmOnly) | (Origin::LhvSampler, Region::LhvOnly) => wanted,
        (Origin::QmSampler, Region::Both) => wanted.div_ceil(2),
        (Origin::LhvSampler, Region::Both) => wanted / 2,
        _ => 0,
    };
    // buckets[origin][region]
    let mut buckets: [[Vec<LabeledSample>; 3]; 2] = Default::default();
    let open = |b: &[[Vec<LabeledSample>; 3]; 2], o: Origin| {
        Region::ALL.iter().any(|&r| b[o as usize][r.index()].len() < quota(o, r))
    };
    let mut next = 0u64;
    while (next as usize) * CHUNK < max_per_component && (open(&buckets, Origin::QmSampler) || open(&buckets, Origin::LhvSampler)) {
        let need_qm = open(&buckets, Origin::QmSampler);
        let need_lhv = open(&buckets, Origin::LhvSampler);
        let batch: Vec<u64> = (next..next + REGION_BATCH).collect();
        let drawn: Vec<(Vec<LabeledSample>, Vec<LabeledSample>)> = batch
            .par_iter()
            .map(|&c| {
                let qm = if need_qm { qm_chunk(params, epsilon, substream(seed, TAG_MOCK_QM, c), CHUNK)? } else { Vec::new() };
                let lhv = if need_lhv { lhv_chunk(params, epsilon, substream(seed, TAG_MOCK_LHV, c), CHUNK)?.0 } else { Vec::new() };
                Ok((qm, lhv))
            })
            .collect::<Result<_>>()?;
        for (qm, lhv) in drawn {
            for x in qm.into_iter().chain(lhv) {
                let bucket = &mut buckets[x.origin as usize][x.region.index()];
                if bucket.len() < quota(x.origin, x.region) {
                    bucket.push(x);
                }
            }
        }
        next += REGION_BATCH;
    }
    let [qm, lhv] = buckets;
    Ok(std::array::from_fn(|i| qm[i].iter().chain(&lhv[i]).copied().collect()))
}

/// Smallest sample size accepted per component.
pub const MIN_PER_COMPONENT: usize = 1000;

/// Draws `n` points from each sampler and classifies every point.
pub fn build_prior(params: &ExperimentParams, n: usize, epsilon: f64, seed: u64) -> Result<PriorSample> {
    params.validate()?;
    if n < MIN_PER_COMPONENT {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_PER_COMPONENT} points per component required, got {n}"
        )));
    }
    let parts = chunks(n);
    let qm: Vec<Vec<LabeledSample>> = parts
        .par_iter()
        .map(|&(c, _, len)| qm_chunk(params, epsilon, substream(seed, TAG_QM_PRIOR, c), len))
        .collect::<Result<_>>()?;
    let lhv: Vec<(Vec<LabeledSample>, RejectionCounters)> = parts
        .par_iter()
        .map(|&(c, _, len)| lhv_chunk(params, epsilon, substream(seed, TAG_LHV_PRIOR, c), len))
        .collect::<Result<_>>()?;
    let mut rejections = RejectionCounters::default();
    let mut points: Vec<LabeledSample> = qm.into_iter().flatten().collect();
    for (pts, c) in lhv {
        points.extend(pts);
        rejections.merge(&c);
    }
    PriorSample::from_points(*params, epsilon, seed, points, rejections)
}

/// Point estimate and uncertainty of a binomial sampling fraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentInterval {
    pub mle: f64,
    pub variance: f64,
    pub one_sigma: [f64; 2],
    /// Values whose sampling likelihood reaches its flat-prior average.
    pub plausible: [f64; 2],
    /// The plausible interval under the Gaussian approximation of the likelihood.
    pub gaussian_plausible: [f64; 2],
}

impl ContentInterval {
    /// The same interval for a content equal to half the fraction.
    pub fn halved(&self) -> ContentInterval {
        let h = |x: [f64; 2]| [x[0] / 2.0, x[1] / 2.0];
        ContentInterval {
            mle: self.mle / 2.0,
            variance: self.variance / 4.0,
            one_sigma: h(self.one_sigma),
            plausible: h(self.plausible),
            gaussian_plausible: h(self.gaussian_plausible),
        }
    }
}

/// Interval estimates for the fraction `n1 / (n1 + n2)`.
pub fn content_intervals(n1: u64, n2: u64) -> Result<ContentInterval> {
    let n = n1 + n2;
    if n == 0 {
        return Err(Error::InvalidArgument("n1 + n2 must be positive".into()));
    }
    let (k, m, nf) = (n1 as f64, n2 as f64, n as f64);
    let mle = k / nf;
    let variance = k * m / (nf * nf * nf);
    let sd = variance.sqrt();
    let log_binom = ln_gamma(nf + 1.0) - ln_gamma(k + 1.0) - ln_gamma(m + 1.0);
    let log_l = |a: f64| {
        let mut s = log_binom;
        if n1 > 0 {
            s += k * a.ln();
        }
        if n2 > 0 {
            s += m * (-a).ln_1p();
        }
        s
    };
    let level = -(nf + 1.0).ln();
    let excess = |a: f64| log_l(a) - level;
    let bisect = |mut inside: f64, mut outside: f64| {
        while (inside - outside).abs() > 1e-12 {
            let mid = 0.5 * (inside + outside);
            if excess(mid) >= 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    let lo = if excess(0.0) >= 0.0 { 0.0 } else { bisect(mle, 0.0) };
    let hi = if excess(1.0) >= 0.0 { 1.0 } else { bisect(mle, 1.0) };
    let half_width = (2.0 * variance * excess(mle).max(0.0)).sqrt();
    Ok(ContentInterval {
        mle,
        variance,
        one_sigma: [mle - sd, mle + sd],
        plausible: [lo, hi],
        gaussian_plausible: [(mle - half_width).max(0.0), (mle + half_width).min(1.0)],
    })
}

const CACHE_MAGIC: &[u8; 8] = b"BELLPRI\x01";
const CACHE_VERSION: u32 = 1;

/// Content hash identifying a prior sample.
pub fn cache_key(params: &ExperimentParams, n: usize, epsilon: f64, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(params).unwrap_or_default());
    h.update(n.to_le_bytes());
    h.update(epsilon.to_bits().to_le_bytes());
    h.update(seed.to_le_bytes());
    h.update(CACHE_VERSION.to_le_bytes());
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("prior-{}.bin", &key[..24]))
}

fn encode_origin(o: Origin) -> u8 {
    match o {
        Origin::QmSampler => 0,
        Origin::LhvSampler => 1,
    }
}

/// Writes the sample in the versioned binary cache format.
pub fn write_cache(path: &Path, key: &str, s: &PriorSample) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(key.as_bytes())?;
    w.write_all(&(s.points.len() as u64).to_le_bytes())?;
    let meta = serde_json::to_vec(&(s.params, s.epsilon, s.seed, s.rejections))?;
    w.write_all(&(meta.len() as u32).to_le_bytes())?;
    w.write_all(&meta)?;
    for x in &s.points {
        for v in x.record() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&[encode_origin(x.origin), x.region as u8])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cache file, verifying the format version and the key.
pub fn read_cache(path: &Path, key: &str) -> Result<PriorSample> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Cache("not a prior cache file".into()));
    }
    let mut u32b = [0u8; 4];
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u32b)?;
    if u32::from_le_bytes(u32b) != CACHE_VERSION {
        return Err(Error::Cache("cache format version mismatch".into()));
    }
    let mut stored_key = vec![0u8; key.len()];
    r.read_exact(&mut stored_key)?;
    if stored_key != key.as_bytes() {
        return Err(Error::Cache("cache key mismatch".into()));
    }
    r.read_exact(&mut u64b)?;
    let count = u64::from_le_bytes(u64b) as usize;
    r.read_exact(&mut u32b)?;
    let mut meta = vec![0u8; u32::from_le_bytes(u32b) as usize];
    r.read_exact(&mut meta)?;
    let (params, epsilon, seed, rejections): (ExperimentParams, f64, u64, RejectionCounters) =
        serde_json::from_slice(&meta)?;
    let mut points = Vec::with_capacity(count);
    let mut rec = [0u8; 66];
    for _ in 0..count {
        r.read_exact(&mut rec)?;
        let vals: [f64; 8] = std::array::from_fn(|i| f64::from_le_bytes(rec[8 * i..8 * i + 8].try_into().unwrap()));
        let origin = match rec[64] {
            0 => Origin::QmSampler,
            1 => Origin::LhvSampler,
            _ => return Err(Error::Cache("bad origin byte".into())),
        };
        let region = *Region::ALL
            .get(rec[65] as usize)
            .ok_or_else(|| Error::Cache("bad region byte".into()))?;
        points.push(LabeledSample::from_record(vals, origin, region)?);
    }
    PriorSample::from_points(params, epsilon, seed, points, rejections)
}

/// Loads the sample from `dir` if cached, otherwise builds and stores it.
///
/// The directory is held under an exclusive advisory lock meanwhile.
pub fn cached_prior(dir: &Path, params: &ExperimentParams, n: usize, epsilon: f64, seed: u64) -> Result<PriorSample> {
    fs::create_dir_all(dir)?;
    let lock = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(dir.join(".lock"))?;
    lock.lock()?;
    let key = cache_key(params, n, epsilon, seed);
    let path = cache_path(dir, &key);
    let result = match read_cache(&path, &key) {
        Ok(s) => Ok(s),
        Err(_) => {
            let s = build_prior(params, n, epsilon, seed)?;
            let tmp = path.with_extension("tmp");
            write_cache(&tmp, &key, &s)?;
            fs::rename(&tmp, &path)?;
            Ok(s)
        }
    };
    lock.unlock()?;
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn round6(x: f64) -> f64 {
        (x * 1e6).round() / 1e6
    }

    #[test]
    fn plausible_intervals_of_the_reference_sample() {
        let a = content_intervals(1210, 998_790).unwrap();
        assert_eq!([round6(a.plausible[0]), round6(a.plausible[1])], [0.001066, 0.001367]);
        let b = content_intervals(993_805, 6195).unwrap();
        assert_eq!([round6(b.plausible[0]), round6(b.plausible[1])], [0.993475, 0.994124]);
        let (ha, hb) = (a.halved(), b.halved());
        assert_eq!(round6(ha.plausible[0]), 0.000533);
        assert_eq!(round6(ha.one_sigma[0]), 0.000588);
        assert_eq!(round6(ha.one_sigma[1]), 0.000622);
        assert_eq!(round6(ha.plausible[1]), 0.000683);
        assert_eq!(round6(hb.plausible[0]), 0.496738);
        assert_eq!(round6(hb.one_sigma[0]), 0.496863);
        assert_eq!(round6(hb.one_sigma[1]), 0.496942);
        assert_eq!(round6(hb.plausible[1]), 0.497062);
    }

    #[test]
    fn boundary_mode() {
        let c = content_intervals(0, 10).unwrap();
        assert_eq!(c.mle, 0.0);
        assert_eq!(c.plausible[0], 0.0);
        assert!(c.plausible[1] > 0.0 && c.plausible[1] < 1.0);
    }

    #[test]
    fn one_sigma_inside_plausible() {
        for (k, m) in [(3u64, 97u64), (50, 50), (1210, 998_790), (990, 10)] {
            let c = content_intervals(k, m).unwrap();
            assert!(c.plausible[0] <= c.one_sigma[0] && c.one_sigma[1] <= c.plausible[1]);
        }
    }

    #[test]
    fn gaussian_interval_is_close_for_large_samples() {
        let c = content_intervals(993_805, 6195).unwrap();
        assert_abs_diff_eq!(c.gaussian_plausible[0], c.plausible[0], epsilon = 1e-5);
        assert_abs_diff_eq!(c.gaussian_plausible[1], c.plausible[1], epsilon = 1e-5);
    }

    #[test]
    fn smoke_prior_is_consistent() {
        let params = ExperimentParams::delft();
        let s = build_prior(&params, 1000, 0.001, 5).unwrap();
        assert_eq!(s.points.len(), 2000);
        let c = s.contents;
        assert_eq!(c.qm_only + c.both + c.lhv_only, 1.0);
        for x in &s.points {
            match x.origin {
                Origin::QmSampler => assert_ne!(x.region, Region::LhvOnly),
                Origin::LhvSampler => assert_ne!(x.region, Region::QmOnly),
            }
        }
        let again = build_prior(&params, 1000, 0.001, 5).unwrap();
        assert_eq!(s.points, again.points);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let params = ExperimentParams::boulder();
        let a = cached_prior(dir.path(), &params, 1000, 0.001, 3).unwrap();
        let b = cached_prior(dir.path(), &params, 1000, 0.001, 3).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.contents, b.contents);
        let key = cache_key(&params, 1000, 0.001, 3);
        let path = cache_path(dir.path(), &key);
        assert!(path.exists());
        assert!(read_cache(&path, &cache_key(&params, 1000, 0.001, 4)).is_err());
    }

    #[test]
    fn small_samples_are_refused() {
        assert!(build_prior(&ExperimentParams::delft(), 10, 0.001, 1).is_err());
    }
}
