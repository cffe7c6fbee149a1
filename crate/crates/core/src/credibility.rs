//! Short-term credibility indices built from rolling probability forecasts,
//! and their evaluation against realized outcomes with ROC curves.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, ParseErrorKind, Result};
use crate::forecast::{Method, ProbabilityForecast};
use crate::timeseries::{format_value, BoundsSeries, TimeSeries, YearMonth};

/// Index values by target month. `None` marks an origin whose fit or
/// forecast failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibilityIndex {
    pub name: String,
    pub method: Option<Method>,
    pub horizon: Option<usize>,
    values: BTreeMap<YearMonth, Option<f64>>,
}

impl CredibilityIndex {
    pub fn new(name: impl Into<String>, values: BTreeMap<YearMonth, Option<f64>>) -> Result<Self> {
        if let Some((d, v)) = values.iter().find_map(|(d, v)| v.filter(|v| !(0.0..=1.0).contains(v)).map(|v| (d, v))) {
            return Err(Error::Domain(format!("index value {v} at {d} is outside [0, 1]")));
        }
        Ok(Self {
            name: name.into(),
            method: None,
            horizon: None,
            values,
        })
    }

    pub fn from_pairs(name: impl Into<String>, pairs: impl IntoIterator<Item = (YearMonth, f64)>) -> Result<Self> {
        Self::new(name, pairs.into_iter().map(|(d, v)| (d, Some(v))).collect())
    }

    pub fn get(&self, date: YearMonth) -> Option<f64> {
        self.values.get(&date).copied().flatten()
    }

    pub fn entries(&self) -> impl Iterator<Item = (YearMonth, Option<f64>)> + '_ {
        self.values.iter().map(|(d, v)| (*d, *v))
    }

    /// Dates with a value.
    pub fn observed(&self) -> impl Iterator<Item = (YearMonth, f64)> + '_ {
        self.values.iter().filter_map(|(d, v)| v.map(|v| (*d, v)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_failed(&self) -> usize {
        self.values.values().filter(|v| v.is_none()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    In,
    Out,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::In => "in",
            Self::Out => "out",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "in" | "in_bounds" => Ok(Self::In),
            "out" | "out_of_bounds" => Ok(Self::Out),
            _ => Err(Error::InvalidArgument(format!("outcome `{s}` is neither `in` nor `out`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeSeries {
    values: BTreeMap<YearMonth, Outcome>,
}

impl OutcomeSeries {
    pub fn new(values: BTreeMap<YearMonth, Outcome>) -> Self {
        Self { values }
    }

    /// `In` wherever `lower <= y <= upper`, over the months both cover.
    pub fn from_realized(series: &TimeSeries, bounds: &BoundsSeries) -> Self {
        let values = series
            .dates()
            .zip(series.values())
            .filter_map(|(d, y)| {
                let (lb, ub) = bounds.at(d)?;
                Some((d, if (lb..=ub).contains(y) { Outcome::In } else { Outcome::Out }))
            })
            .collect();
        Self { values }
    }

    pub fn get(&self, date: YearMonth) -> Option<Outcome> {
        self.values.get(&date).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (YearMonth, Outcome)> + '_ {
        self.values.iter().map(|(d, o)| (*d, *o))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Origins whose fit or forecast failed, with the error message.
pub type Failures = Vec<(YearMonth, String)>;

/// Expanding-window index: for each origin, `fit` sees the data up to the
/// origin and `forecast` turns that fit into a probability `h` months ahead.
/// The value lands on the target month. Failures are recorded, not raised.
pub fn rolling_index<M, F, G>(
    name: &str,
    series: &TimeSeries,
    origins: &[YearMonth],
    h: usize,
    fit: F,
    forecast: G,
) -> Result<(CredibilityIndex, Vec<Option<ProbabilityForecast>>, Failures)>
where
    F: Fn(&TimeSeries) -> Result<M> + Sync,
    G: Fn(&M, &TimeSeries, usize) -> Result<ProbabilityForecast> + Sync,
{
    let results: Vec<Result<ProbabilityForecast>> = origins
        .par_iter()
        .map(|&origin| {
            let sample = series.up_to(origin)?;
            let model = fit(&sample)?;
            forecast(&model, &sample, h)
        })
        .collect();
    let mut values = BTreeMap::new();
    let mut forecasts = Vec::with_capacity(origins.len());
    let mut failures = Vec::new();
    let mut method = None;
    for (origin, r) in origins.iter().zip(results) {
        let target = origin.add_months(h as i64);
        match r {
            Ok(f) => {
                method = Some(f.method);
                values.insert(target, Some(f.p_in_bounds));
                forecasts.push(Some(f));
            }
            Err(e) => {
                values.insert(target, None);
                forecasts.push(None);
                failures.push((*origin, e.to_string()));
            }
        }
    }
    let mut index = CredibilityIndex::new(name, values)?;
    index.method = method;
    index.horizon = Some(h);
    Ok((index, forecasts, failures))
}

/// Predicted credible iff the index is strictly above `x`.
pub fn classify(index: &CredibilityIndex, x: f64) -> Vec<(YearMonth, bool)> {
    index.observed().map(|(d, v)| (d, v > x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Sorted by increasing threshold.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub n_obs: usize,
    pub n_failed: usize,
}

/// Just below zero and just above one, so the curve always ends at (1, 1)
/// and (0, 0).
pub const THRESHOLD_FLOOR: f64 = -1e-9;
pub const THRESHOLD_CEILING: f64 = 1.0 + 1e-9;

/// ROC curve of `index` against `outcomes`. Without `thresholds`, uses every
/// distinct index value plus 0 and 1.
pub fn roc_curve(index: &CredibilityIndex, outcomes: &OutcomeSeries, thresholds: Option<&[f64]>) -> Result<RocCurve> {
    let mut pairs = Vec::new();
    for (d, v) in index.observed() {
        let o = outcomes
            .get(d)
            .ok_or_else(|| Error::Alignment(format!("no outcome for index month {d}")))?;
        pairs.push((v, o == Outcome::In));
    }
    let positives = pairs.iter().filter(|p| p.1).count();
    let negatives = pairs.len() - positives;
    if positives == 0 {
        return Err(Error::UndefinedRate {
            missing_class: Outcome::In.to_string(),
        });
    }
    if negatives == 0 {
        return Err(Error::UndefinedRate {
            missing_class: Outcome::Out.to_string(),
        });
    }
    let mut grid: Vec<f64> = match thresholds {
        Some(t) => t.to_vec(),
        None => pairs.iter().map(|p| p.0).chain([0.0, 1.0]).collect(),
    };
    if grid.iter().any(|t| t.is_nan()) {
        return Err(Error::InvalidArgument("thresholds must not be NaN".into()));
    }
    grid.extend([THRESHOLD_FLOOR, THRESHOLD_CEILING]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let points: Vec<RocPoint> = grid
        .iter()
        .map(|&x| {
            let (mut tp, mut fp) = (0usize, 0usize);
            for &(v, is_in) in &pairs {
                if v > x {
                    if is_in {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            RocPoint {
                threshold: x,
                fpr: fp as f64 / negatives as f64,
                tpr: tp as f64 / positives as f64,
            }
        })
        .collect();
    let auc = points
        .windows(2)
        .map(|w| (w[0].fpr - w[1].fpr) * (w[0].tpr + w[1].tpr) * 0.5)
        .sum();
    Ok(RocCurve {
        points,
        auc,
        n_obs: pairs.len(),
        n_failed: index.n_failed(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// One curve per index, in input order.
    pub curves: Vec<(String, RocCurve)>,
    /// Positions into `curves`, best AUC first; ties keep input order.
    pub ranking: Vec<usize>,
}

pub fn compare_indices(indices: &[CredibilityIndex], outcomes: &OutcomeSeries) -> Result<Comparison> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("need at least one index".into()));
    }
    let curves = indices
        .iter()
        .map(|ix| Ok((ix.name.clone(), roc_curve(ix, outcomes, None)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut ranking: Vec<usize> = (0..curves.len()).collect();
    ranking.sort_by(|&a, &b| curves[b].1.auc.total_cmp(&curves[a].1.auc));
    Ok(Comparison { curves, ranking })
}

// ---------------------------------------------------------------------------
// CSV

fn records<R: Read>(reader: R, second: &str) -> Result<Vec<(usize, YearMonth, String)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            kind: ParseErrorKind::Other(e.to_string()),
        })?
        .clone();
    if header.get(0) != Some("date") {
        return Err(Error::Parse {
            row: 0,
            kind: ParseErrorKind::MissingHeader,
        });
    }
    if header.get(1) != Some(second) {
        return Err(Error::Parse {
            row: 0,
            kind: ParseErrorKind::MissingColumn(second.into()),
        });
    }
    let mut out: Vec<(usize, YearMonth, String)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            kind: ParseErrorKind::Other(e.to_string()),
        })?;
        let raw = rec.get(0).unwrap_or("");
        let date: YearMonth = raw.parse().map_err(|_| Error::Parse {
            row,
            kind: ParseErrorKind::MalformedDate(raw.into()),
        })?;
        if out.iter().any(|r| r.1 == date) {
            return Err(Error::Parse {
                row,
                kind: ParseErrorKind::DuplicateDate(date.to_string()),
            });
        }
        out.push((row, date, rec.get(1).unwrap_or("").to_string()));
    }
    Ok(out)
}

/// Reads `date,value`; `NA` or an empty value marks a failed origin.
pub fn read_index<R: Read>(reader: R, name: &str) -> Result<CredibilityIndex> {
    let mut values = BTreeMap::new();
    for (row, date, raw) in records(reader, "value")? {
        let v = if raw.is_empty() || raw.eq_ignore_ascii_case("na") {
            None
        } else {
            Some(raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                row,
                kind: ParseErrorKind::NonNumeric(raw.clone()),
            })?)
        };
        values.insert(date, v);
    }
    CredibilityIndex::new(name, values)
}

pub fn load_index(path: impl AsRef<Path>) -> Result<CredibilityIndex> {
    let path = path.as_ref();
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("index").to_string();
    read_index(std::fs::File::open(path)?, &name)
}

pub fn write_index<W: Write>(mut w: W, index: &CredibilityIndex) -> Result<()> {
    writeln!(w, "date,value")?;
    for (d, v) in index.entries() {
        match v {
            Some(v) => writeln!(w, "{d},{}", format_value(v))?,
            None => writeln!(w, "{d},NA")?,
        }
    }
    Ok(())
}

pub fn read_outcomes<R: Read>(reader: R) -> Result<OutcomeSeries> {
    let mut values = BTreeMap::new();
    for (row, date, raw) in records(reader, "outcome")? {
        let o = raw.parse().map_err(|_| Error::Parse {
            row,
            kind: ParseErrorKind::Other(format!("outcome `{raw}` is neither `in` nor `out`")),
        })?;
        values.insert(date, o);
    }
    Ok(OutcomeSeries::new(values))
}

pub fn load_outcomes(path: impl AsRef<Path>) -> Result<OutcomeSeries> {
    read_outcomes(std::fs::File::open(path)?)
}

pub fn write_outcomes<W: Write>(mut w: W, outcomes: &OutcomeSeries) -> Result<()> {
    writeln!(w, "date,outcome")?;
    for (d, o) in outcomes.entries() {
        writeln!(w, "{d},{o}")?;
    }
    Ok(())
}

/// `index_name,threshold,fpr,tpr` for every curve.
pub fn write_roc<W: Write>(mut w: W, comparison: &Comparison) -> Result<()> {
    writeln!(w, "index_name,threshold,fpr,tpr")?;
    for (name, curve) in &comparison.curves {
        for p in &curve.points {
            writeln!(w, "{name},{},{},{}", format_value(p.threshold), format_value(p.fpr), format_value(p.tpr))?;
        }
    }
    Ok(())
}

/// `index_name,auc,n_obs,n_failed`, best AUC first.
pub fn write_auc_report<W: Write>(mut w: W, comparison: &Comparison) -> Result<()> {
    writeln!(w, "index_name,auc,n_obs,n_failed")?;
    for &i in &comparison.ranking {
        let (name, c) = &comparison.curves[i];
        writeln!(w, "{name},{},{},{}", format_value(c.auc), c.n_obs, c.n_failed)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ym(i: i64) -> YearMonth {
        YearMonth::new(2010, 1).unwrap().add_months(i)
    }

    fn setup(values: &[f64], outcomes: &[bool]) -> (CredibilityIndex, OutcomeSeries) {
        let ix = CredibilityIndex::from_pairs("ix", values.iter().enumerate().map(|(i, v)| (ym(i as i64), *v))).unwrap();
        let out = OutcomeSeries::new(
            outcomes
                .iter()
                .enumerate()
                .map(|(i, o)| (ym(i as i64), if *o { Outcome::In } else { Outcome::Out }))
                .collect(),
        );
        (ix, out)
    }

    fn mann_whitney(values: &[f64], outcomes: &[bool]) -> f64 {
        let (mut acc, mut n) = (0.0, 0.0);
        for (a, oa) in values.iter().zip(outcomes) {
            for (b, ob) in values.iter().zip(outcomes) {
                if *oa && !*ob {
                    n += 1.0;
                    acc += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
                }
            }
        }
        acc / n
    }

    #[test]
    fn classification() {
        let (ix, _) = setup(&[0.2, 0.6], &[true, false]);
        assert_eq!(classify(&ix, 0.5).iter().map(|c| c.1).collect::<Vec<_>>(), vec![false, true]);
        assert!(classify(&ix, 0.0).iter().all(|c| c.1));
        assert!(classify(&ix, 1.0).iter().all(|c| !c.1));
    }

    #[test]
    fn hand_confusion_matrix() {
        let (ix, out) = setup(&[0.9, 0.6, 0.7, 0.2], &[true, true, false, false]);
        let roc = roc_curve(&ix, &out, Some(&[0.5])).unwrap();
        let p = roc.points.iter().find(|p| p.threshold == 0.5).unwrap();
        assert_eq!((p.fpr, p.tpr), (0.5, 1.0));
        assert_eq!((roc.points[0].fpr, roc.points[0].tpr), (1.0, 1.0));
        let last = roc.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (0.0, 0.0));
    }

    #[test]
    fn perfect_index() {
        let (ix, out) = setup(&[1.0, 0.0, 1.0, 0.0, 1.0], &[true, false, true, false, true]);
        assert_eq!(roc_curve(&ix, &out, None).unwrap().auc, 1.0);
    }

    #[test]
    fn single_class_is_undefined() {
        let (ix, out) = setup(&[0.3, 0.4], &[true, true]);
        match roc_curve(&ix, &out, None) {
            Err(Error::UndefinedRate { missing_class }) => assert_eq!(missing_class, "out"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn failed_origins_are_excluded_and_counted() {
        let mut values = BTreeMap::new();
        values.insert(ym(0), Some(0.9));
        values.insert(ym(1), None);
        values.insert(ym(2), Some(0.1));
        let ix = CredibilityIndex::new("ix", values).unwrap();
        let (_, out) = setup(&[0.0, 0.0, 0.0], &[true, true, false]);
        let roc = roc_curve(&ix, &out, None).unwrap();
        assert_eq!((roc.n_obs, roc.n_failed, roc.auc), (2, 1, 1.0));
    }

    #[test]
    fn comparison_ranks_by_auc() {
        let (perfect, out) = setup(&[0.9, 0.1, 0.8, 0.2], &[true, false, true, false]);
        let (mut flipped, _) = setup(&[0.1, 0.9, 0.2, 0.8], &[true, false, true, false]);
        flipped.name = "flipped".into();
        let c = compare_indices(&[flipped, perfect.clone(), perfect], &out).unwrap();
        assert_eq!(c.ranking, vec![1, 2, 0]);
        assert_eq!(c.curves[1].1, c.curves[2].1);
    }

    #[test]
    fn csv_round_trip() {
        let mut values = BTreeMap::new();
        values.insert(ym(0), Some(0.25));
        values.insert(ym(1), None);
        let ix = CredibilityIndex::new("ix", values).unwrap();
        let mut buf = Vec::new();
        write_index(&mut buf, &ix).unwrap();
        assert_eq!(read_index(&buf[..], "ix").unwrap(), ix);
        let (_, out) = setup(&[0.0, 0.0], &[true, false]);
        let mut buf = Vec::new();
        write_outcomes(&mut buf, &out).unwrap();
        assert_eq!(read_outcomes(&buf[..]).unwrap(), out);
        assert!(matches!(read_outcomes(&b"date,outcome\n2010-01,maybe\n"[..]), Err(Error::Parse { row: 1, .. })));
        assert!(matches!(read_index(&b"date,value\n2010-01,1.5\n"[..], "x"), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn auc_matches_mann_whitney(raw in prop::collection::vec((0u8..6, any::<bool>()), 2..30)) {
            let values: Vec<f64> = raw.iter().map(|r| r.0 as f64 / 5.0).collect();
            let outcomes: Vec<bool> = raw.iter().map(|r| r.1).collect();
            prop_assume!(outcomes.iter().any(|o| *o) && outcomes.iter().any(|o| !*o));
            let (ix, out) = setup(&values, &outcomes);
            let roc = roc_curve(&ix, &out, None).unwrap();
            prop_assert!((roc.auc - mann_whitney(&values, &outcomes)).abs() < 1e-9);
            for w in roc.points.windows(2) {
                prop_assert!(w[0].threshold < w[1].threshold);
                prop_assert!(w[1].fpr <= w[0].fpr && w[1].tpr <= w[0].tpr);
            }
        }

        #[test]
        fn auc_invariant_under_monotone_transform(raw in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..30)) {
            let values: Vec<f64> = raw.iter().map(|r| r.0).collect();
            let outcomes: Vec<bool> = raw.iter().map(|r| r.1).collect();
            prop_assume!(outcomes.iter().any(|o| *o) && outcomes.iter().any(|o| !*o));
            let squashed: Vec<f64> = values.iter().map(|v| v * v * v).collect();
            let (a, out) = setup(&values, &outcomes);
            let (b, _) = setup(&squashed, &outcomes);
            let (ra, rb) = (roc_curve(&a, &out, None).unwrap(), roc_curve(&b, &out, None).unwrap());
            prop_assert!((ra.auc - rb.auc).abs() < 1e-12);
        }
    }
}
