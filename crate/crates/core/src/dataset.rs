//! Judgment records: CSV ingestion, Likert normalization and a seeded synthetic
//! survey generator.
//!
//! CSV schema (UTF-8, header required):
//!
//! ```text
//! event,adverbial,elapsed_value,elapsed_unit,rating,respondent
//! ```
//!
//! Synthetic data is drawn from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`; Gaussian noise uses `rand_distr::Normal`. Both are
//! platform independent, so a seed pins the output bytes.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{composite_at_minutes, FactorizedModel};
use crate::units::{Duration, TimeUnit};

pub const CSV_HEADER: [&str; 6] = ["event", "adverbial", "elapsed_value", "elapsed_unit", "rating", "respondent"];

/// Maps a Likert response onto `[0, 1]`; the scale endpoints map to exactly 0 and 1.
pub fn normalize_likert(raw: i64, scale_min: i64, scale_max: i64) -> Result<f64> {
    if scale_min >= scale_max {
        return Err(Error::Input(format!("likert scale needs min < max, got [{scale_min}, {scale_max}]")));
    }
    if raw < scale_min || raw > scale_max {
        return Err(Error::Range { value: raw, min: scale_min, max: scale_max });
    }
    Ok((raw - scale_min) as f64 / (scale_max - scale_min) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgmentRecord {
    pub event: String,
    pub adverbial: String,
    pub elapsed: Duration,
    pub rating: f64,
    pub respondent: Option<String>,
}

impl JudgmentRecord {
    pub fn new(
        event: impl Into<String>,
        adverbial: impl Into<String>,
        elapsed: Duration,
        rating: f64,
        respondent: Option<String>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&rating) {
            return Err(Error::Input(format!("rating must lie in [0, 1], got {rating}")));
        }
        Ok(JudgmentRecord { event: event.into(), adverbial: adverbial.into(), elapsed, rating, respondent })
    }

    pub fn minutes(&self) -> f64 {
        self.elapsed.to_minutes()
    }

    /// Total order on (event, adverbial, minutes, respondent, rating). Records that
    /// compare equal contribute identically to any sum.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.event
            .cmp(&other.event)
            .then_with(|| self.adverbial.cmp(&other.adverbial))
            .then_with(|| self.minutes().total_cmp(&other.minutes()))
            .then_with(|| self.respondent.cmp(&other.respondent))
            .then_with(|| self.rating.total_cmp(&other.rating))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetMeta {
    pub source: String,
    /// `(min, max)` of the Likert scale the ratings were normalized from.
    pub likert_scale: Option<(i64, i64)>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<JudgmentRecord>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(records: Vec<JudgmentRecord>, meta: DatasetMeta) -> Self {
        Dataset { records, meta }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn event_ids(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.event.as_str()).collect()
    }

    pub fn adverbial_ids(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.adverbial.as_str()).collect()
    }

    pub fn pair_ids(&self) -> BTreeSet<(&str, &str)> {
        self.records.iter().map(|r| (r.event.as_str(), r.adverbial.as_str())).collect()
    }

    /// Record indices sorted canonically, the fixed order for every reduction.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.records.len()).collect();
        idx.sort_by(|&a, &b| self.records[a].canonical_cmp(&self.records[b]));
        idx
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let got: Vec<&str> = headers.iter().map(str::trim).collect();
        if got != CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{}`, got `{}`", CSV_HEADER.join(","), got.join(",")),
            });
        }

        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            if row.len() != CSV_HEADER.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
                });
            }
            let field = |i: usize| row[i].trim();
            let value: f64 = field(2).parse().map_err(|_| Error::Parse {
                line,
                message: format!("elapsed_value `{}` is not a number", field(2)),
            })?;
            let unit: TimeUnit = field(3)
                .parse()
                .map_err(|e: Error| Error::Validation { line, message: e.to_string() })?;
            let elapsed =
                Duration::new(value, unit).map_err(|e| Error::Validation { line, message: e.to_string() })?;
            let rating: f64 = field(4).parse().map_err(|_| Error::Parse {
                line,
                message: format!("rating `{}` is not a number", field(4)),
            })?;
            if !(0.0..=1.0).contains(&rating) {
                return Err(Error::Validation { line, message: format!("rating {rating} outside [0, 1]") });
            }
            if field(0).is_empty() || field(1).is_empty() {
                return Err(Error::Validation { line, message: "event and adverbial must be non-empty".into() });
            }
            let respondent = Some(field(5)).filter(|s| !s.is_empty()).map(str::to_string);
            records.push(JudgmentRecord {
                event: field(0).to_string(),
                adverbial: field(1).to_string(),
                elapsed,
                rating,
                respondent,
            });
        }
        Ok(Dataset { records, meta: DatasetMeta { source: "csv".into(), ..Default::default() } })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut ds = Self::from_csv_reader(file)?;
        ds.meta.source = path.display().to_string();
        Ok(ds)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.event.as_str(),
                r.adverbial.as_str(),
                &r.elapsed.value().to_string(),
                r.elapsed.unit().as_str(),
                &r.rating.to_string(),
                r.respondent.as_deref().unwrap_or(""),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

/// `n` points log-spaced over `[lo, hi]`; a single point sits at the geometric mean.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo * hi).sqrt()];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Elapsed times the generator uses for an event: log-spaced over `[sigma_e/100, 100 sigma_e]`.
pub fn synthetic_times(sigma_e: f64, n: usize) -> Vec<f64> {
    log_grid(sigma_e / 100.0, sigma_e * 100.0, n)
}

/// Simulated survey drawn from `truth`.
///
/// Records are ordered by event, adverbial, time, vote; every rating is the
/// composite probability plus `N(0, noise_sd)` noise, clamped to `[0, 1]`.
pub fn generate_synthetic(
    truth: &FactorizedModel,
    times_per_event: usize,
    votes_per_cell: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if times_per_event == 0 || votes_per_cell == 0 {
        return Err(Error::Input("times_per_event and votes_per_cell must be positive".into()));
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(Error::Input(format!("noise_sd must be finite and non-negative, got {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::Input(e.to_string()))?;

    let width = votes_per_cell.to_string().len();
    let mut records =
        Vec::with_capacity(truth.n_events() * truth.n_adverbials() * times_per_event * votes_per_cell);
    for ev in truth.events() {
        let times = synthetic_times(ev.sigma_e, times_per_event);
        for adv in truth.adverbials() {
            for &t in &times {
                let p = composite_at_minutes(t, ev, adv);
                for vote in 0..votes_per_cell {
                    let rating = if noise_sd == 0.0 { p } else { (p + noise.sample(&mut rng)).clamp(0.0, 1.0) };
                    records.push(JudgmentRecord {
                        event: ev.id.clone(),
                        adverbial: adv.id.clone(),
                        elapsed: Duration::minutes(t)?,
                        rating,
                        respondent: Some(format!("v{vote:0width$}")),
                    });
                }
            }
        }
    }
    Ok(Dataset {
        records,
        meta: DatasetMeta { source: "synthetic".into(), likert_scale: None, seed: Some(seed) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "event,adverbial,elapsed_value,elapsed_unit,rating,respondent\n";

    #[test]
    fn likert_examples() {
        assert_eq!(normalize_likert(1, 1, 5).unwrap(), 0.0);
        assert_eq!(normalize_likert(5, 1, 5).unwrap(), 1.0);
        assert_eq!(normalize_likert(3, 1, 5).unwrap(), 0.5);
        assert_eq!(normalize_likert(0, 0, 6).unwrap(), 0.0);
        assert_eq!(normalize_likert(6, 0, 6).unwrap(), 1.0);
    }

    #[test]
    fn likert_errors() {
        assert!(matches!(normalize_likert(6, 1, 5), Err(Error::Range { value: 6, min: 1, max: 5 })));
        assert!(matches!(normalize_likert(0, 1, 5), Err(Error::Range { .. })));
        assert!(matches!(normalize_likert(3, 5, 5), Err(Error::Input(_))));
    }

    #[test]
    fn parses_well_formed_rows() {
        let text = format!(
            "{HEADER}Birthday,Just,1,day,0.75,p1\nBirthday,Recently,2,weeks,0.5,\nVacation,Just,1,month,0.2,p3\n"
        );
        let ds = Dataset::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.records[0].minutes(), 1440.0);
        assert_eq!(ds.records[1].respondent, None);
        assert_eq!(ds.records[1].minutes(), 20_160.0);
        assert_eq!(ds.records[2].event, "Vacation");
    }

    #[test]
    fn rating_out_of_range_names_line() {
        let text = format!("{HEADER}Birthday,Just,1,day,0.5,\nBirthday,Just,1,day,1.2,\n");
        match Dataset::from_csv_reader(text.as_bytes()) {
            Err(Error::Validation { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("1.2"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_unit_is_validation_error() {
        let text = format!("{HEADER}Birthday,Just,1,fortnight,0.5,\n");
        assert!(matches!(Dataset::from_csv_reader(text.as_bytes()), Err(Error::Validation { line: 2, .. })));
    }

    #[test]
    fn malformed_rows_are_parse_errors() {
        let text = format!("{HEADER}Birthday,Just,abc,day,0.5,\n");
        assert!(matches!(Dataset::from_csv_reader(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let text = format!("{HEADER}Birthday,Just,1,day\n");
        assert!(matches!(Dataset::from_csv_reader(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let text = "event,adverbial,t,unit,rating,respondent\n";
        assert!(matches!(Dataset::from_csv_reader(text.as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn header_only_is_empty() {
        let ds = Dataset::from_csv_reader(HEADER.as_bytes()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn zero_noise_synthetic_is_exact() {
        let truth = FactorizedModel::reference();
        let ds = generate_synthetic(&truth, 7, 5, 0.0, 3).unwrap();
        for r in &ds.records {
            let p = composite_at_minutes(r.minutes(), truth.event(&r.event).unwrap(), truth.adverbial(&r.adverbial).unwrap());
            assert_eq!(r.rating, p);
        }
    }

    #[test]
    fn survey_grid_has_16800_records() {
        let ds = generate_synthetic(&FactorizedModel::reference(), 7, 100, 0.1, 1).unwrap();
        assert_eq!(ds.len(), 6 * 4 * 7 * 100);
        assert_eq!(ds.len(), 16_800);
        assert!(ds.records.iter().all(|r| (0.0..=1.0).contains(&r.rating)));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let truth = FactorizedModel::reference();
        let render = |seed| {
            let mut buf = Vec::new();
            generate_synthetic(&truth, 7, 100, 0.1, seed).unwrap().write_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(render(42), render(42));
        assert_ne!(render(42), render(43));
    }

    #[test]
    fn synthetic_times_span() {
        let t = synthetic_times(935.0, 7);
        assert_eq!(t.len(), 7);
        assert_eq!(t[0], 9.35);
        assert_eq!(t[6], 93_500.0);
        assert!((t[3] - 935.0).abs() < 1e-9);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn csv_round_trip() {
        let ds = generate_synthetic(&FactorizedModel::reference(), 3, 2, 0.2, 9).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = Dataset::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back.records, ds.records);
    }
}
