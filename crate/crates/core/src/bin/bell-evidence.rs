//! Command-line front end to the evidence library.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bell_evidence::bias::{run_bias_check, BiasOptions};
use bell_evidence::datasets::{load_dataset, DatasetBundle};
use bell_evidence::error::{Error, Result};
use bell_evidence::mle::{estimate_gamma, gamma_scan, triangle_report, ScanOptions};
use bell_evidence::params::ExperimentParams;
use bell_evidence::pipeline::{
    angle_row, evidence_row, gamma_scan_csv, mle_row, render_text, reproduce, write_report, Profile, RunConfig,
};
use bell_evidence::quantum::DEFAULT_EPSILON;

#[derive(Parser)]
#[command(name = "bell-evidence", version, about = "Bayesian evidence for QM and LHV descriptions of Bell-test counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a prior sample and report the region contents.
    Prior(Common),
    /// Posterior contents and evidence verdicts.
    Evidence(Common),
    /// Maximum likelihoods over the QM, LHV and no-signaling sets.
    Mle(Common),
    /// QM and LHV maximum likelihoods over a range of γ.
    GammaScan {
        #[command(flatten)]
        common: Common,
        /// Range `lo:hi`; defaults to the experiment's own.
        #[arg(long)]
        range: Option<String>,
        /// Grid points of the scan.
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Bhattacharyya angles of the observed frequencies.
    Bhattacharyya(Common),
    /// Verdict tallies on data simulated from each region.
    BiasCheck {
        #[command(flatten)]
        common: Common,
        /// Overrides the profile's mocks per region.
        #[arg(long)]
        mocks: Option<usize>,
    },
    /// Full analysis of one dataset.
    Reproduce {
        #[command(flatten)]
        common: Common,
        /// Overrides the profile's mocks per region.
        #[arg(long)]
        mocks: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Bundled dataset id or counts file.
    dataset: Option<String>,
    /// Parameter preset or JSON file.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "ci")]
    profile: Profile,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prior points per component; overrides the profile.
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Directory for cached prior samples.
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl Common {
    fn config(&self, mocks: Option<usize>) -> RunConfig {
        RunConfig {
            profile: self.profile,
            seed: self.seed,
            epsilon: self.epsilon,
            sample_size: self.sample_size,
            mocks_per_region: mocks,
            cache_dir: self.cache.clone(),
            gamma: self.gamma,
        }
    }

    fn explicit_params(&self) -> Result<Option<ExperimentParams>> {
        self.params.as_deref().map(ExperimentParams::load).transpose()
    }

    fn dataset(&self) -> Result<DatasetBundle> {
        let name = self.dataset.as_deref().ok_or_else(|| Error::InvalidArgument("a dataset is required".into()))?;
        load_dataset(name, self.explicit_params()?.as_ref())
    }

    /// Parameters at `--gamma`, or the dataset's best guess.
    fn params(&self, bundle: &DatasetBundle) -> Result<ExperimentParams> {
        match self.gamma {
            Some(g) => bundle.params.with_gamma(g),
            None => Ok(bundle.default_params()),
        }
    }

    fn stem(&self, tag: &str) -> String {
        let name = self.dataset.as_deref().map(|d| Path::new(d).file_stem().and_then(|s| s.to_str()).unwrap_or(d).to_string());
        format!("{}-{tag}-{}", name.unwrap_or_else(|| "params".into()), self.profile.label())
    }

    fn write_json<T: Serialize>(&self, tag: &str, value: &T) -> Result<()> {
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}.json", self.stem(tag)));
            std::fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn parse_range(s: &str) -> Result<[f64; 2]> {
    let bad = || Error::InvalidArgument(format!("range {s:?} must be lo:hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok([lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?])
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Prior(c) => {
            let params = match (&c.dataset, c.explicit_params()?) {
                (Some(_), _) => c.params(&c.dataset()?)?,
                (None, Some(p)) => match c.gamma {
                    Some(g) => p.with_gamma(g)?,
                    None => p,
                },
                (None, None) => return Err(Error::InvalidArgument("prior needs a dataset or --params".into())),
            };
            let prior = c.config(None).prior(&params)?;
            let s = &prior.contents;
            println!("prior at γ = {} with {} points per component", params.gamma, prior.n_per_component());
            println!("QM only {:.6}\nboth     {:.6}\nLHV only {:.6}", s.qm_only, s.both, s.lhv_only);
            println!("counts n1..n4 = {} {} {} {}", s.n1, s.n2, s.n3, s.n4);
            c.write_json("prior", &(params, s, &prior.rejections))?;
        }
        Command::Evidence(c) => {
            let b = c.dataset()?;
            let (row, _) = evidence_row(&b, &c.params(&b)?, &c.config(None))?;
            println!("{} at γ = {}\n{}", b.id, row.report.params.gamma, row.report.table());
            c.write_json("evidence", &row)?;
        }
        Command::Mle(c) => {
            let b = c.dataset()?;
            let m = mle_row(&b.counts, &c.params(&b)?)?;
            println!("{} at γ = {}", b.id, m.gamma);
            println!("log10 L_QM  {:.4}\nlog10 L_LHV {:.4}\nlog10 L_NS  {:.4}", m.log10_l_qm, m.log10_l_lhv, m.log10_l_ns);
            println!("QM/LHV ratio {:.4e}", 10f64.powf(m.log10_ratio()));
            c.write_json("mle", &m)?;
        }
        Command::GammaScan { common: c, range, points } => {
            let b = c.dataset()?;
            let range = match range {
                Some(r) => parse_range(&r)?,
                None => b.gamma_range().ok_or_else(|| Error::InvalidArgument(format!("{} has no default γ range", b.id)))?,
            };
            let opts = ScanOptions { grid_points: points, target: Some(b.target_criterion()), ..Default::default() };
            let (scan, estimate) = match estimate_gamma(&b.counts, &b.params, range, &opts) {
                Ok(e) => (e.scan.clone(), Some(e)),
                Err(Error::RangeMaximumAtBoundary { gamma }) => {
                    eprintln!("maximum at the range boundary γ = {gamma}; no refinement");
                    (gamma_scan(&b.counts, &b.params, range, &opts)?, None)
                }
                Err(e) => return Err(e),
            };
            let csv = gamma_scan_csv(&scan)?;
            print!("{csv}");
            if let Some(e) = &estimate {
                eprintln!("estimated γ = {:.6}, log10 L_QM = {:.4}", e.gamma_hat, e.log10_l_qm);
            }
            if let Some(dir) = &c.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(format!("{}.csv", c.stem("gamma-scan"))), &csv)?;
            }
            c.write_json("gamma-scan", &estimate)?;
            if estimate.is_none() {
                return Ok(3);
            }
        }
        Command::Bhattacharyya(c) => {
            let b = c.dataset()?;
            let p = c.params(&b)?;
            let a = angle_row(&b, &p)?;
            let t = triangle_report(&b.counts, &p, &b.target_criterion())?;
            println!("{} at γ = {}", b.id, a.gamma);
            println!("frequencies to target  {:.4}\nfrequencies to QM-MLE  {:.4}\nfrequencies to LHV-MLE {:.4}", a.target, a.qm_mle, a.lhv_mle);
            println!("target to QM-MLE       {:.4}", a.target_qm);
            println!("triangle inequality holds: {}", t.satisfies_triangle_inequality(1e-12));
            c.write_json("bhattacharyya", &(a, t))?;
        }
        Command::BiasCheck { common: c, mocks } => {
            let b = c.dataset()?;
            let p = c.params(&b)?;
            let cfg = c.config(mocks);
            let prior = cfg.prior(&p)?;
            let tally = run_bias_check(&p, &prior, cfg.mocks_per_region(), b.counts.total(), c.seed, &BiasOptions::default())?;
            println!("{} at γ = {}\n{}", b.id, p.gamma, tally.table());
            c.write_json("bias-check", &tally)?;
        }
        Command::Reproduce { common: c, mocks } => {
            let b = c.dataset()?;
            let report = reproduce(&b, &c.config(mocks))?;
            print!("{}", render_text(&report));
            if let Some(dir) = &c.out {
                for path in write_report(dir, &report)? {
                    eprintln!("wrote {}", path.display());
                }
            }
            return Ok(report.exit_code());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
