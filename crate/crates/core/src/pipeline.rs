//! End-to-end analysis of one dataset and the report writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bias::{run_bias_check, BiasOptions, BiasTally};
use crate::datasets::DatasetBundle;
use crate::error::{Error, Result};
use crate::evidence::{posterior_contents, EvidenceOptions, EvidenceReport};
use crate::mle::{
    bhattacharyya_angle, estimate_gamma, lhv_mle, nosignaling_mle, qm_mle, GammaEstimate, GammaScanPoint, ScanOptions,
};
use crate::params::ExperimentParams;
use crate::prior::{build_prior, cached_prior, content_intervals, ContentInterval, PriorSample};
use crate::quantum::{probabilities_from_state, target_state, DEFAULT_EPSILON};

/// Sample sizes of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `10^6` prior points per component and `10^4` mocks per region.
    Paper,
    /// `10^5` prior points per component and 200 mocks per region.
    Ci,
}

impl Profile {
    pub fn prior_size(self) -> usize {
        match self {
            Profile::Paper => 1_000_000,
            Profile::Ci => 100_000,
        }
    }

    pub fn mocks_per_region(self) -> usize {
        match self {
            Profile::Paper => 10_000,
            Profile::Ci => 200,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Ci => "ci",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "ci" => Ok(Profile::Ci),
            other => Err(Error::InvalidArgument(format!("unknown profile {other:?}, expected paper or ci"))),
        }
    }
}

/// Settings shared by all stages of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub profile: Profile,
    pub seed: u64,
    pub epsilon: f64,
    /// Overrides the profile's prior size.
    pub sample_size: Option<usize>,
    /// Overrides the profile's mock count.
    pub mocks_per_region: Option<usize>,
    /// Reuse prior samples stored here.
    pub cache_dir: Option<PathBuf>,
    /// Analyze at this γ instead of estimating it.
    pub gamma: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: Profile::Ci,
            seed: 1,
            epsilon: DEFAULT_EPSILON,
            sample_size: None,
            mocks_per_region: None,
            cache_dir: None,
            gamma: None,
        }
    }
}

impl RunConfig {
    pub fn prior_size(&self) -> usize {
        self.sample_size.unwrap_or(self.profile.prior_size())
    }

    pub fn mocks_per_region(&self) -> usize {
        self.mocks_per_region.unwrap_or(self.profile.mocks_per_region())
    }

    /// Builds or loads the prior sample for `params`.
    pub fn prior(&self, params: &ExperimentParams) -> Result<PriorSample> {
        match &self.cache_dir {
            Some(dir) => cached_prior(dir, params, self.prior_size(), self.epsilon, self.seed),
            None => build_prior(params, self.prior_size(), self.epsilon, self.seed),
        }
    }
}

/// Maximum likelihoods at one γ, as log10 values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleRow {
    pub gamma: f64,
    pub log10_l_qm: f64,
    pub log10_l_lhv: f64,
    pub log10_l_ns: f64,
    /// Some barrier solve stopped at the precision floor.
    pub stalled: bool,
}

impl MleRow {
    /// `log10(L_QM / L_LHV)`.
    pub fn log10_ratio(&self) -> f64 {
        self.log10_l_qm - self.log10_l_lhv
    }
}

/// Bhattacharyya angles of the observed frequencies at one γ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleRow {
    pub gamma: f64,
    pub target: f64,
    pub qm_mle: f64,
    pub lhv_mle: f64,
    /// Angle between target probabilities and the QM-MLE.
    pub target_qm: f64,
}

/// Prior contents with their sampling-error intervals at one γ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub report: EvidenceReport,
    /// Fraction of QM-sampler points in "QM only".
    pub qm_sampler_interval: ContentInterval,
    /// Fraction of LHV-sampler points in "LHV only".
    pub lhv_sampler_interval: ContentInterval,
}

/// A stage that failed, with the failure's exit code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
    pub exit_code: i32,
}

/// Everything `reproduce` computes for one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub dataset: String,
    pub experiment: String,
    pub profile: Profile,
    pub seed: u64,
    pub epsilon: f64,
    pub prior_size: usize,
    pub mocks_per_region: usize,
    pub trials: u64,
    pub nominal_params: ExperimentParams,
    pub gamma_estimate: Option<GammaEstimate>,
    /// γ values analyzed, the main one last.
    pub gammas: Vec<f64>,
    pub mle: Vec<MleRow>,
    pub angles: Vec<AngleRow>,
    pub evidence: Vec<EvidenceRow>,
    pub bias: Option<BiasTally>,
    pub errors: Vec<StageError>,
}

impl ReproduceReport {
    /// Exit code of the first failed stage, or 0.
    pub fn exit_code(&self) -> i32 {
        self.errors.first().map_or(0, |e| e.exit_code)
    }
}

/// Maximum likelihoods of the three models at `params.gamma`.
pub fn mle_row(d: &crate::probability::EventCounts, params: &ExperimentParams) -> Result<MleRow> {
    let qm = qm_mle(d, params)?;
    let lhv = lhv_mle(d, params)?;
    let ns = nosignaling_mle(d, params)?;
    Ok(MleRow {
        gamma: params.gamma,
        log10_l_qm: qm.log10_likelihood(),
        log10_l_lhv: lhv.log10_likelihood(),
        log10_l_ns: ns.log10_likelihood(),
        stalled: qm.diagnostics.stalled || lhv.diagnostics.stalled || ns.diagnostics.stalled,
    })
}

/// Angles between the frequencies of `bundle` and target, QM-MLE and LHV-MLE.
pub fn angle_row(bundle: &DatasetBundle, params: &ExperimentParams) -> Result<AngleRow> {
    let d = &bundle.counts;
    let g = params.gamma;
    let freq = d.relative_frequencies()?;
    let t = probabilities_from_state(&target_state(params, &bundle.target_criterion())?, params);
    let qm = qm_mle(d, params)?.p;
    let lhv = lhv_mle(d, params)?.p;
    Ok(AngleRow {
        gamma: g,
        target: bhattacharyya_angle(&freq, t.table(), g)?,
        qm_mle: bhattacharyya_angle(&freq, qm.table(), g)?,
        lhv_mle: bhattacharyya_angle(&freq, lhv.table(), g)?,
        target_qm: bhattacharyya_angle(t.table(), qm.table(), g)?,
    })
}

/// Prior, posterior and sampling-error intervals at `params`.
pub fn evidence_row(bundle: &DatasetBundle, params: &ExperimentParams, cfg: &RunConfig) -> Result<(EvidenceRow, PriorSample)> {
    let prior = cfg.prior(params)?;
    let report = posterior_contents(&prior, &bundle.counts, &bundle.id, &EvidenceOptions::default())?;
    let c = &prior.contents;
    let row = EvidenceRow {
        report,
        qm_sampler_interval: content_intervals(c.n1, c.n2)?,
        lhv_sampler_interval: content_intervals(c.n3, c.n4)?,
    };
    Ok((row, prior))
}

fn record<T>(errors: &mut Vec<StageError>, stage: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(StageError { stage: stage.into(), message: e.to_string(), exit_code: e.exit_code() });
            None
        }
    }
}

/// Runs every stage on `bundle`; failed stages are listed in `errors`.
///
/// With a γ range and no explicit γ, γ is estimated first and the analysis
/// covers both the nominal γ and the estimate. The bias check runs at the
/// main γ only.
pub fn reproduce(bundle: &DatasetBundle, cfg: &RunConfig) -> Result<ReproduceReport> {
    let mut errors = Vec::new();
    let nominal = bundle.params;
    let mut gamma_estimate = None;
    let main = match (cfg.gamma, bundle.gamma_range()) {
        (Some(g), _) => nominal.with_gamma(g)?,
        (None, Some(range)) => {
            let opts = ScanOptions { target: Some(bundle.target_criterion()), ..Default::default() };
            gamma_estimate = record(&mut errors, "gamma", estimate_gamma(&bundle.counts, &nominal, range, &opts));
            match &gamma_estimate {
                Some(e) => nominal.with_gamma(e.gamma_hat)?,
                None => bundle.default_params(),
            }
        }
        (None, None) => bundle.default_params(),
    };
    let mut gammas = vec![main.gamma];
    if gamma_estimate.is_some() && (nominal.gamma - main.gamma).abs() > 1e-12 {
        gammas.insert(0, nominal.gamma);
    }

    let mut mle = Vec::new();
    let mut angles = Vec::new();
    let mut evidence = Vec::new();
    let mut main_prior = None;
    for &g in &gammas {
        let p = nominal.with_gamma(g)?;
        mle.extend(record(&mut errors, "mle", mle_row(&bundle.counts, &p)));
        angles.extend(record(&mut errors, "bhattacharyya", angle_row(bundle, &p)));
        if let Some((row, prior)) = record(&mut errors, "evidence", evidence_row(bundle, &p, cfg)) {
            evidence.push(row);
            if g == main.gamma {
                main_prior = Some(prior);
            }
        }
    }
    let bias = main_prior.and_then(|prior| {
        let r = run_bias_check(&main, &prior, cfg.mocks_per_region(), bundle.counts.total(), cfg.seed, &BiasOptions::default());
        record(&mut errors, "bias-check", r)
    });

    Ok(ReproduceReport {
        dataset: bundle.id.clone(),
        experiment: bundle.experiment.clone(),
        profile: cfg.profile,
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        prior_size: cfg.prior_size(),
        mocks_per_region: cfg.mocks_per_region(),
        trials: bundle.counts.total(),
        nominal_params: nominal,
        gamma_estimate,
        gammas,
        mle,
        angles,
        evidence,
        bias,
        errors,
    })
}

/// CSV of a γ scan with one row per grid point.
pub fn gamma_scan_csv(points: &[GammaScanPoint]) -> Result<String> {
    let io = |e: csv::Error| Error::Io(e.into());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["gamma", "log10_l_qm", "log10_l_lhv", "eberhard_violated", "phi_b"]).map_err(io)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.10}"));
    for p in points {
        w.write_record([
            format!("{:.8}", p.gamma),
            format!("{:.6}", p.log10_l_qm),
            opt(p.log10_l_lhv),
            p.eberhard_violated.to_string(),
            opt(p.phi_b),
        ])
        .map_err(io)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).map_err(|e| Error::Parse(e.to_string()))
}

/// Human-readable rendering of a report.
pub fn render_text(r: &ReproduceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dataset {} ({}), N = {}", r.dataset, r.experiment, r.trials);
    let _ = writeln!(
        out,
        "profile {}, seed {}, {} prior points per component, {} mocks per region\n",
        r.profile.label(),
        r.seed,
        r.prior_size,
        r.mocks_per_region
    );
    if let Some(e) = &r.gamma_estimate {
        let _ = writeln!(out, "estimated γ = {:.6}, log10 L_QM = {:.3}\n", e.gamma_hat, e.log10_l_qm);
    }
    if !r.mle.is_empty() {
        let _ = writeln!(out, "maximum likelihoods (log10)");
        let _ = writeln!(out, "{:>10} {:>12} {:>12} {:>12} {:>12}", "γ", "QM", "LHV", "no-signal", "QM/LHV");
        for m in &r.mle {
            let _ = writeln!(
                out,
                "{:>10.6} {:>12.3} {:>12.3} {:>12.3} {:>12.3}{}",
                m.gamma,
                m.log10_l_qm,
                m.log10_l_lhv,
                m.log10_l_ns,
                m.log10_ratio(),
                if m.stalled { "  (stalled)" } else { "" }
            );
        }
        out.push('\n');
    }
    if !r.angles.is_empty() {
        let _ = writeln!(out, "Bhattacharyya angles to the observed frequencies");
        let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>10} {:>12}", "γ", "target", "QM-MLE", "LHV-MLE", "target-QM");
        for a in &r.angles {
            let _ = writeln!(out, "{:>10.6} {:>10.4} {:>10.4} {:>10.4} {:>12.4}", a.gamma, a.target, a.qm_mle, a.lhv_mle, a.target_qm);
        }
        out.push('\n');
    }
    for e in &r.evidence {
        let _ = writeln!(out, "prior and posterior contents at γ = {}", e.report.params.gamma);
        out += &e.report.table();
        let q = &e.qm_sampler_interval;
        let l = &e.lhv_sampler_interval;
        let _ = writeln!(
            out,
            "QM-sampler fraction in QM only {:.6}, plausible ({:.6}, {:.6})",
            q.mle, q.plausible[0], q.plausible[1]
        );
        let _ = writeln!(
            out,
            "LHV-sampler fraction in LHV only {:.6}, plausible ({:.6}, {:.6})\n",
            l.mle, l.plausible[0], l.plausible[1]
        );
    }
    if let Some(b) = &r.bias {
        let _ = writeln!(out, "bias check at γ = {}", b.params.gamma);
        out += &b.table();
        out.push('\n');
    }
    for e in &r.errors {
        let _ = writeln!(out, "stage {} failed: {}", e.stage, e.message);
    }
    out
}

/// Writes `<dataset>-<profile>.json`, `.txt` and, with a γ scan, `-gamma-scan.csv`.
pub fn write_report(dir: &Path, r: &ReproduceReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = format!("{}-{}", r.dataset, r.profile.label());
    let mut written = Vec::new();
    let json = dir.join(format!("{stem}.json"));
    std::fs::write(&json, serde_json::to_string_pretty(r)? + "\n")?;
    written.push(json);
    let txt = dir.join(format!("{stem}.txt"));
    std::fs::write(&txt, render_text(r))?;
    written.push(txt);
    if let Some(e) = &r.gamma_estimate {
        let csv = dir.join(format!("{stem}-gamma-scan.csv"));
        std::fs::write(&csv, gamma_scan_csv(&e.scan)?)?;
        written.push(csv);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::bundled;

    fn small() -> RunConfig {
        RunConfig { sample_size: Some(2000), mocks_per_region: Some(5), ..Default::default() }
    }

    #[test]
    fn profile_parsing() {
        assert_eq!("paper".parse::<Profile>().unwrap(), Profile::Paper);
        assert_eq!("ci".parse::<Profile>().unwrap().prior_size(), 100_000);
        assert!("fast".parse::<Profile>().is_err());
    }

    #[test]
    fn delft_report_is_complete_and_deterministic() {
        let b = bundled("delft-1").unwrap();
        let a = reproduce(&b, &small()).unwrap();
        assert!(a.errors.is_empty(), "{:?}", a.errors);
        assert_eq!(a.gammas, vec![1.0]);
        assert_eq!((a.mle.len(), a.angles.len(), a.evidence.len()), (1, 1, 1));
        assert!(a.bias.is_some());
        let b2 = reproduce(&b, &small()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b2).unwrap());
        let text = render_text(&a);
        assert!(text.contains("maximum likelihoods") && text.contains("bias check"));
    }

    #[test]
    fn explicit_gamma_skips_estimation() {
        let b = bundled("boulder-5").unwrap();
        let cfg = RunConfig { gamma: Some(0.000722), sample_size: Some(1000), mocks_per_region: Some(2), ..Default::default() };
        let r = reproduce(&b, &cfg).unwrap();
        assert!(r.gamma_estimate.is_none());
        assert_eq!(r.gammas, vec![0.000722]);
    }

    #[test]
    fn scan_csv_has_header_and_rows() {
        let p = GammaScanPoint { gamma: 0.5, log10_l_qm: -1.0, log10_l_lhv: None, eberhard_violated: true, phi_b: Some(0.1) };
        let s = gamma_scan_csv(&[p, p]).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("gamma,log10_l_qm"));
    }
}
