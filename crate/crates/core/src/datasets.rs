//! Bundled event counts of the analyzed experiments and the counts-file format.
//!
//! A counts file is CSV with a header row and one row per setting:
//!
//! ```text
//! setting,++,+0,0+,00
//! ab,23,3,4,23
//! ab',33,11,5,30
//! a'b,22,10,6,24
//! a'b',4,20,21,6
//! N,245
//! ```
//!
//! Rows may come in any order; the optional `N` row declares the total.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bell::BellFunctional;
use crate::error::{Error, Result};
use crate::params::ExperimentParams;
use crate::probability::{EventCounts, Setting};
use crate::quantum::{DesignState, TargetCriterion};

/// Event counts of one run with the apparatus it was taken with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    /// Bundle id, e.g. `boulder-5`.
    pub id: String,
    /// Experiment preset name.
    pub experiment: String,
    pub run: String,
    pub counts: EventCounts,
    /// Nominal apparatus parameters.
    pub params: ExperimentParams,
    /// Self-calibrated γ, where the data determine it.
    pub best_gamma: Option<f64>,
}

impl DatasetBundle {
    /// Parameters at the best-guess γ if known, the nominal ones otherwise.
    pub fn default_params(&self) -> ExperimentParams {
        match self.best_gamma {
            Some(g) => self.params.with_gamma(g).expect("bundled γ is valid"),
            None => self.params,
        }
    }

    /// Range searched for γ, for experiments with γ < 1.
    pub fn gamma_range(&self) -> Option<[f64; 2]> {
        gamma_range(&self.experiment)
    }

    /// Target state criterion used for Bhattacharyya comparisons.
    pub fn target_criterion(&self) -> TargetCriterion {
        target_criterion(&self.experiment, &self.counts)
    }
}

/// Default γ search range of an experiment.
pub fn gamma_range(experiment: &str) -> Option<[f64; 2]> {
    match experiment {
        "boulder" => Some([0.0005, 0.0009]),
        "vienna" => Some([0.0025, 0.0034]),
        _ => None,
    }
}

/// Design state of the Boulder source.
pub fn boulder_design_state() -> DesignState {
    DesignState {
        c00: 0.961,
        c11: -0.276,
        alice_rotation_deg: 100.85,
        bob_rotation_deg: 100.85,
    }
}

/// Target criterion of an experiment; for ideal-γ experiments the Bell
/// functional is the relabeling the counts violate most.
pub fn target_criterion(experiment: &str, counts: &EventCounts) -> TargetCriterion {
    match experiment {
        "boulder" => TargetCriterion::Design(boulder_design_state()),
        "delft" | "munich" => match counts.relative_frequencies() {
            Ok(f) => TargetCriterion::MaxViolation(BellFunctional::strongest(&f).1),
            Err(_) => TargetCriterion::ThresholdEfficiency,
        },
        _ => TargetCriterion::ThresholdEfficiency,
    }
}

type Rows = [[u64; 4]; 4];

const BOULDER_1: Rows = [
    [1257, 629, 600, 43917556],
    [1417, 554, 4549, 43908718],
    [1281, 4341, 554, 43899021],
    [11, 5640, 6030, 43894942],
];
const BOULDER_3: Rows = [
    [3800, 1936, 1812, 131804979],
    [4091, 1682, 13781, 131777583],
    [3853, 12840, 1669, 131749135],
    [60, 16614, 17934, 131752503],
];
const BOULDER_5: Rows = [
    [6378, 3289, 3147, 221732456],
    [6794, 2825, 23230, 221686486],
    [6486, 21358, 2818, 221635498],
    [106, 27562, 30000, 221603322],
];
const BOULDER_7: Rows = [
    [8820, 4640, 4433, 311074665],
    [9512, 3963, 32709, 310997997],
    [9237, 30040, 4037, 310933331],
    [159, 38632, 42034, 311010823],
];
const VIENNA_6: Rows = [
    [159976, 83743, 86270, 960597110],
    [166265, 78407, 370252, 960099455],
    [179813, 482787, 66435, 960381485],
    [9354, 655290, 525368, 959756526],
];
const VIENNA_7: Rows = [
    [141439, 73391, 76224, 875392736],
    [146831, 67941, 326768, 874976534],
    [158338, 425067, 58742, 875239860],
    [8392, 576445, 463985, 874651457],
];
const VIENNA_8: Rows = [
    [377000, 192092, 202207, 2497825793],
    [387481, 182789, 858681, 2496663605],
    [422674, 1119219, 156022, 2497626620],
    [22502, 1519578, 1223007, 2495916922],
];
const DELFT_1: Rows = [[23, 3, 4, 23], [33, 11, 5, 30], [22, 10, 6, 24], [4, 20, 21, 6]];
const DELFT_2: Rows = [[21, 7, 3, 21], [25, 2, 4, 23], [19, 11, 6, 23], [5, 24, 23, 11]];
const MUNICH_1: Rows = [
    [778, 2621, 2770, 804],
    [809, 2629, 2708, 816],
    [873, 2686, 2644, 730],
    [2696, 966, 902, 2453],
];
const MUNICH_2: Rows = [
    [817, 2596, 2873, 742],
    [696, 2570, 2788, 772],
    [2783, 787, 840, 2503],
    [865, 2620, 2640, 791],
];

/// Ids of all bundled datasets.
pub const BUNDLED: [&str; 12] = [
    "boulder-1",
    "boulder-3",
    "boulder-5",
    "boulder-7",
    "vienna-6",
    "vienna-7",
    "vienna-8",
    "delft-1",
    "delft-2",
    "delft-1+2",
    "munich-1",
    "munich-2",
];

/// A bundled dataset by id.
pub fn bundled(id: &str) -> Result<DatasetBundle> {
    let (experiment, run) = id
        .split_once('-')
        .ok_or_else(|| Error::InvalidArgument(format!("unknown dataset {id:?}")))?;
    let (rows, best_gamma): (EventCounts, Option<f64>) = match id {
        "boulder-1" => (EventCounts::from_rows(BOULDER_1), Some(0.000722)),
        "boulder-3" => (EventCounts::from_rows(BOULDER_3), Some(0.000722)),
        "boulder-5" => (EventCounts::from_rows(BOULDER_5), Some(0.000722)),
        "boulder-7" => (EventCounts::from_rows(BOULDER_7), Some(0.000722)),
        "vienna-6" => (EventCounts::from_rows(VIENNA_6), Some(0.00296)),
        "vienna-7" => (EventCounts::from_rows(VIENNA_7), Some(0.00287)),
        "vienna-8" => (EventCounts::from_rows(VIENNA_8), Some(0.00264)),
        "delft-1" => (EventCounts::from_rows(DELFT_1), None),
        "delft-2" => (EventCounts::from_rows(DELFT_2), None),
        "delft-1+2" => (EventCounts::from_rows(DELFT_1).add(&EventCounts::from_rows(DELFT_2)), None),
        "munich-1" => (EventCounts::from_rows(MUNICH_1), None),
        "munich-2" => (EventCounts::from_rows(MUNICH_2), None),
        _ => return Err(Error::InvalidArgument(format!("unknown dataset {id:?}"))),
    };
    Ok(DatasetBundle {
        id: id.to_string(),
        experiment: experiment.to_string(),
        run: run.to_string(),
        counts: rows,
        params: ExperimentParams::preset(experiment).expect("bundled experiments have presets"),
        best_gamma,
    })
}

/// Parses a counts file, checking the declared total if present.
pub fn parse_counts(text: &str) -> Result<EventCounts> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.len() != 5 || &header[0] != "setting" {
        return Err(Error::Parse("header must be setting,++,+0,0+,00".into()));
    }
    let mut rows: [Option<[u64; 4]>; 4] = [None; 4];
    let mut declared = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let key = &record[0];
        let number = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::Parse(format!("row {}: {s:?} is not a count", line + 2)))
        };
        if key == "N" {
            if record.len() != 2 || declared.is_some() {
                return Err(Error::Parse("malformed or repeated N row".into()));
            }
            declared = Some(number(&record[1])?);
            continue;
        }
        let setting = Setting::parse(key).ok_or_else(|| Error::Parse(format!("unknown setting {key:?}")))?;
        if record.len() != 5 {
            return Err(Error::Parse(format!("setting {key} needs four counts")));
        }
        let slot = &mut rows[setting.index()];
        if slot.is_some() {
            return Err(Error::Parse(format!("duplicated setting {key}")));
        }
        *slot = Some([number(&record[1])?, number(&record[2])?, number(&record[3])?, number(&record[4])?]);
    }
    let mut full = [[0; 4]; 4];
    for s in Setting::ALL {
        full[s.index()] = rows[s.index()].ok_or_else(|| Error::Parse(format!("missing setting {}", s.label())))?;
    }
    let counts = EventCounts::from_rows(full);
    if let Some(n) = declared {
        if n != counts.total() {
            return Err(Error::TotalMismatch { declared: n, actual: counts.total() });
        }
    }
    Ok(counts)
}

/// Renders counts in the counts-file format, total included.
pub fn format_counts(counts: &EventCounts) -> String {
    let mut out = String::from("setting,++,+0,0+,00\n");
    for s in Setting::ALL {
        let k = 4 * s.index();
        let c = counts.counts();
        out += &format!("{},{},{},{},{}\n", s.label(), c[k], c[k + 1], c[k + 2], c[k + 3]);
    }
    out += &format!("N,{}\n", counts.total());
    out
}

/// A bundled dataset, or a counts file combined with the named parameters.
pub fn load_dataset(name_or_path: &str, params: Option<&ExperimentParams>) -> Result<DatasetBundle> {
    if BUNDLED.contains(&name_or_path) {
        let mut b = bundled(name_or_path)?;
        if let Some(p) = params {
            b.params = *p;
            b.best_gamma = None;
        }
        return Ok(b);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::InvalidArgument(format!("{name_or_path:?} is neither a bundled dataset nor a file")));
    }
    let counts = parse_counts(&std::fs::read_to_string(path)?)?;
    let params = params
        .copied()
        .ok_or_else(|| Error::InvalidArgument("a counts file needs --params".into()))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("counts").to_string();
    Ok(DatasetBundle {
        id: stem.clone(),
        experiment: "custom".into(),
        run: stem,
        counts,
        params,
        best_gamma: None,
    })
}
