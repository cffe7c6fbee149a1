//! Monthly date-indexed series, their CSV format, and the year-on-year transforms.
//!
//! Every container is gap-free at monthly frequency, so dates are implicit:
//! a start month plus a contiguous vector of values.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, ParseErrorKind, Result};

/// Displacement of the year-on-year transforms, in months.
pub const YEAR_ON_YEAR: usize = 12;

/// A calendar month. Day-of-month is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!("month {month} out of range")));
        }
        if !(0..=9999).contains(&year) {
            return Err(Error::InvalidArgument(format!("year {year} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_ordinal(ord: i64) -> Self {
        Self {
            year: ord.div_euclid(12) as i32,
            month: ord.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn add_months(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: YearMonth) -> i64 {
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Accepts `YYYY-MM`, and `YYYY-MM-DD` with the day ignored.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed date `{s}`"));
        let mut parts = s.trim().split('-');
        let y = parts.next().ok_or_else(bad)?;
        let m = parts.next().ok_or_else(bad)?;
        if let Some(d) = parts.next() {
            if d.len() != 2 || !d.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
        }
        if parts.next().is_some() || y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        if !y.bytes().all(|b| b.is_ascii_digit()) || !m.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).map_err(|_| bad())
    }
}

/// Date span shared by every dated container.
pub trait Dated: Sized {
    fn start(&self) -> YearMonth;
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn end(&self) -> YearMonth {
        self.start().add_months(self.len() as i64 - 1)
    }

    /// Sub-span `[from, to]`, inclusive on both ends.
    fn restrict(&self, from: YearMonth, to: YearMonth) -> Result<Self>;

    fn index_of(&self, date: YearMonth) -> Option<usize> {
        let k = self.start().months_until(date);
        (k >= 0 && (k as usize) < self.len()).then_some(k as usize)
    }
}

fn span_indices<D: Dated>(d: &D, from: YearMonth, to: YearMonth) -> Result<(usize, usize)> {
    match (d.index_of(from), d.index_of(to)) {
        (Some(a), Some(b)) if a <= b => Ok((a, b + 1)),
        _ => Err(Error::Alignment(format!(
            "span {from}..{to} is not inside {}..{}",
            d.start(),
            d.end()
        ))),
    }
}

/// A named, gap-free monthly series of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    start: YearMonth,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, start: YearMonth, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("a series needs at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at position {i}")));
        }
        let end = start.add_months(values.len() as i64 - 1);
        if end.year() > 9999 {
            return Err(Error::InvalidArgument(format!(
                "{} months from {start} run past year 9999",
                values.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            start,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn date(&self, i: usize) -> YearMonth {
        self.start.add_months(i as i64)
    }

    pub fn dates(&self) -> impl Iterator<Item = YearMonth> + '_ {
        (0..self.values.len()).map(|i| self.date(i))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// First `len` observations.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.values.len() {
            return Err(Error::InvalidArgument(format!(
                "prefix length {len} outside 1..={}",
                self.values.len()
            )));
        }
        Ok(Self {
            name: self.name.clone(),
            start: self.start,
            values: self.values[..len].to_vec(),
        })
    }

    /// Observations up to and including `date`.
    pub fn up_to(&self, date: YearMonth) -> Result<Self> {
        let end = self.index_of(date).ok_or_else(|| {
            Error::Alignment(format!("{date} outside {}..{}", self.start, self.end()))
        })?;
        self.prefix(end + 1)
    }

    pub fn demeaned(&self) -> Self {
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        Self {
            name: self.name.clone(),
            start: self.start,
            values: self.values.iter().map(|v| v - mean).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            name: self.name.clone(),
            start: self.start,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// The same values in reverse time order, keeping the start date.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            name: self.name.clone(),
            start: self.start,
            values,
        }
    }
}

impl Dated for TimeSeries {
    fn start(&self) -> YearMonth {
        self.start
    }

    fn len(&self) -> usize {
        self.values.len()
    }

    fn restrict(&self, from: YearMonth, to: YearMonth) -> Result<Self> {
        let (a, b) = span_indices(self, from, to)?;
        Ok(Self {
            name: self.name.clone(),
            start: from,
            values: self.values[a..b].to_vec(),
        })
    }
}

/// Per-month lower/upper target bounds, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSeries {
    start: YearMonth,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundsSeries {
    pub fn new(start: YearMonth, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument(
                "bounds need matching nonempty lower/upper columns".into(),
            ));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() || lo.is_infinite() && *lo < 0.0)
                || !(hi.is_finite() || hi.is_infinite() && *hi > 0.0)
                || lo >= hi
            {
                return Err(Error::Domain(format!(
                    "bounds at {} need lower < upper, got ({lo}, {hi})",
                    start.add_months(i as i64)
                )));
            }
        }
        Ok(Self {
            start,
            lower,
            upper,
        })
    }

    /// The same `(lower, upper)` pair over `len` months.
    pub fn constant(start: YearMonth, len: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(start, vec![lower; len], vec![upper; len])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn at(&self, date: YearMonth) -> Option<(f64, f64)> {
        self.index_of(date).map(|i| (self.lower[i], self.upper[i]))
    }
}

impl Dated for BoundsSeries {
    fn start(&self) -> YearMonth {
        self.start
    }

    fn len(&self) -> usize {
        self.lower.len()
    }

    fn restrict(&self, from: YearMonth, to: YearMonth) -> Result<Self> {
        let (a, b) = span_indices(self, from, to)?;
        Ok(Self {
            start: from,
            lower: self.lower[a..b].to_vec(),
            upper: self.upper[a..b].to_vec(),
        })
    }
}

/// `q >= 1` named regressors on one monthly index.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousPanel {
    start: YearMonth,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl ExogenousPanel {
    pub fn new(start: YearMonth, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() || names.len() != columns.len() {
            return Err(Error::InvalidArgument(
                "panel needs q >= 1 columns with one name each".into(),
            ));
        }
        let len = columns[0].len();
        if len == 0 || columns.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidArgument(
                "panel columns must be nonempty and share one index".into(),
            ));
        }
        for (name, col) in names.iter().zip(&columns) {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "column `{name}` has a missing or non-finite value at {}",
                    start.add_months(i as i64)
                )));
            }
        }
        Ok(Self {
            start,
            names,
            columns,
        })
    }

    pub fn zeros(start: YearMonth, names: Vec<String>, len: usize) -> Result<Self> {
        let columns = vec![vec![0.0; len]; names.len()];
        Self::new(start, names, columns)
    }

    pub fn q(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Overwrite the rows of `self` whose dates appear in `update`, column by
    /// column name. Used to swap in late data vintages.
    pub fn with_replacements(&self, update: &ExogenousPanel) -> Result<Self> {
        let mut out = self.clone();
        for (name, col) in update.names.iter().zip(&update.columns) {
            let k = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown regressor `{name}`")))?;
            for (i, v) in col.iter().enumerate() {
                let date = update.start.add_months(i as i64);
                let j = self.index_of(date).ok_or_else(|| {
                    Error::Alignment(format!("replacement date {date} outside the panel"))
                })?;
                out.columns[k][j] = *v;
            }
        }
        Ok(out)
    }

    /// Appends `later` (which must start right after `self` ends, same names).
    pub fn concat(&self, later: &ExogenousPanel) -> Result<Self> {
        if later.start != self.end().add_months(1) {
            return Err(Error::Alignment(format!(
                "panel starting {} does not continue one ending {}",
                later.start,
                self.end()
            )));
        }
        if later.names != self.names {
            return Err(Error::InvalidArgument("panels have different columns".into()));
        }
        let columns = self
            .columns
            .iter()
            .zip(&later.columns)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Self::new(self.start, self.names.clone(), columns)
    }
}

impl Dated for ExogenousPanel {
    fn start(&self) -> YearMonth {
        self.start
    }

    fn len(&self) -> usize {
        self.columns[0].len()
    }

    fn restrict(&self, from: YearMonth, to: YearMonth) -> Result<Self> {
        let (a, b) = span_indices(self, from, to)?;
        Ok(Self {
            start: from,
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[a..b].to_vec()).collect(),
        })
    }
}

/// Any dated container, for [`align`].
#[derive(Debug, Clone, PartialEq)]
pub enum DatedData {
    Series(TimeSeries),
    Bounds(BoundsSeries),
    Panel(ExogenousPanel),
}

impl Dated for DatedData {
    fn start(&self) -> YearMonth {
        match self {
            Self::Series(s) => s.start(),
            Self::Bounds(b) => b.start(),
            Self::Panel(p) => p.start(),
        }
    }

    fn len(&self) -> usize {
        match self {
            Self::Series(s) => s.len(),
            Self::Bounds(b) => b.len(),
            Self::Panel(p) => p.len(),
        }
    }

    fn restrict(&self, from: YearMonth, to: YearMonth) -> Result<Self> {
        Ok(match self {
            Self::Series(s) => Self::Series(s.restrict(from, to)?),
            Self::Bounds(b) => Self::Bounds(b.restrict(from, to)?),
            Self::Panel(p) => Self::Panel(p.restrict(from, to)?),
        })
    }
}

/// Restricts every input to the intersection of their date spans.
pub fn align(items: &[DatedData]) -> Result<Vec<DatedData>> {
    let first = items
        .first()
        .ok_or_else(|| Error::Alignment("nothing to align".into()))?;
    let mut from = first.start();
    let mut to = first.end();
    for item in &items[1..] {
        from = from.max(item.start());
        to = to.min(item.end());
    }
    if from > to {
        return Err(Error::Alignment(format!(
            "date spans do not overlap (latest start {from}, earliest end {to})"
        )));
    }
    items.iter().map(|i| i.restrict(from, to)).collect()
}

/// `100 * (ln P_t - ln P_{t-12})`, dated at `t`.
pub fn yoy_log_inflation(prices: &TimeSeries) -> Result<TimeSeries> {
    if prices.len() <= YEAR_ON_YEAR {
        return Err(Error::InsufficientData(format!(
            "year-on-year transform needs more than {YEAR_ON_YEAR} observations, got {}",
            prices.len()
        )));
    }
    if let Some(i) = prices.values.iter().position(|p| *p <= 0.0) {
        return Err(Error::Domain(format!(
            "price at {} is not positive",
            prices.date(i)
        )));
    }
    let logs: Vec<f64> = prices.values.iter().map(|p| p.ln()).collect();
    let values = logs
        .windows(YEAR_ON_YEAR + 1)
        .map(|w| 100.0 * (w[YEAR_ON_YEAR] - w[0]))
        .collect();
    TimeSeries::new(
        prices.name.clone(),
        prices.start.add_months(YEAR_ON_YEAR as i64),
        values,
    )
}

/// `100 * (x_t - x_{t-12}) / x_{t-12}`, dated at `t`.
pub fn pct_change_yoy(series: &TimeSeries) -> Result<TimeSeries> {
    if series.len() <= YEAR_ON_YEAR {
        return Err(Error::InsufficientData(format!(
            "year-on-year transform needs more than {YEAR_ON_YEAR} observations, got {}",
            series.len()
        )));
    }
    let mut values = Vec::with_capacity(series.len() - YEAR_ON_YEAR);
    for (i, w) in series.values.windows(YEAR_ON_YEAR + 1).enumerate() {
        if w[0] == 0.0 {
            return Err(Error::Domain(format!(
                "zero denominator at {}",
                series.date(i)
            )));
        }
        values.push(100.0 * (w[YEAR_ON_YEAR] - w[0]) / w[0]);
    }
    TimeSeries::new(
        series.name.clone(),
        series.start.add_months(YEAR_ON_YEAR as i64),
        values,
    )
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest decimal representation that parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

struct Table {
    start: YearMonth,
    header: Vec<String>,
    /// One vector per requested column.
    columns: Vec<Vec<f64>>,
}

/// Reads `date` plus the requested columns (all non-date columns when
/// `wanted` is `None`), sorts by date, and enforces the gap-free contract.
fn read_table<R: Read>(reader: R, wanted: Option<&[&str]>) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(0, ParseErrorKind::Other(e.to_string())))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header[0] != "date" {
        return Err(Error::parse(0, ParseErrorKind::MissingHeader));
    }
    let picks: Vec<usize> = match wanted {
        Some(names) => names
            .iter()
            .map(|n| {
                header
                    .iter()
                    .position(|h| h == n)
                    .filter(|&i| i > 0)
                    .ok_or_else(|| Error::parse(0, ParseErrorKind::MissingColumn(n.to_string())))
            })
            .collect::<Result<_>>()?,
        None => (1..header.len()).collect(),
    };
    if picks.is_empty() {
        return Err(Error::parse(0, ParseErrorKind::MissingColumn("<value>".into())));
    }

    let mut rows: Vec<(usize, YearMonth, Vec<f64>)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| Error::parse(row, ParseErrorKind::Other(e.to_string())))?;
        let raw_date = rec.get(0).unwrap_or("");
        let date: YearMonth = raw_date
            .parse()
            .map_err(|_| Error::parse(row, ParseErrorKind::MalformedDate(raw_date.into())))?;
        let mut vals = Vec::with_capacity(picks.len());
        for &c in &picks {
            let raw = rec.get(c).unwrap_or("");
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| !v.is_nan())
                .ok_or_else(|| Error::parse(row, ParseErrorKind::NonNumeric(raw.into())))?;
            vals.push(v);
        }
        rows.push((row, date, vals));
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("file has no data rows".into()));
    }
    rows.sort_by_key(|r| r.1);
    for pair in rows.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.1 == prev.1 {
            let row = cur.0.max(prev.0);
            return Err(Error::parse(row, ParseErrorKind::DuplicateDate(cur.1.to_string())));
        }
        let expected = prev.1.add_months(1);
        if cur.1 != expected {
            return Err(Error::parse(
                cur.0,
                ParseErrorKind::MonthlyGap {
                    expected: expected.to_string(),
                    found: cur.1.to_string(),
                },
            ));
        }
    }
    let start = rows[0].1;
    let mut columns = vec![Vec::with_capacity(rows.len()); picks.len()];
    for (_, _, vals) in rows {
        for (c, v) in vals.into_iter().enumerate() {
            columns[c].push(v);
        }
    }
    let header = picks.iter().map(|&i| header[i].clone()).collect();
    Ok(Table {
        start,
        header,
        columns,
    })
}

fn check_finite_column(name: &str, start: YearMonth, col: &[f64]) -> Result<()> {
    match col.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::parse(
            i + 1,
            ParseErrorKind::NonNumeric(format!("{} in column `{name}` at {}", col[i], start.add_months(i as i64))),
        )),
        None => Ok(()),
    }
}

pub fn read_series<R: Read>(reader: R, column: &str) -> Result<TimeSeries> {
    let t = read_table(reader, Some(&[column]))?;
    check_finite_column(column, t.start, &t.columns[0])?;
    let values = t.columns.into_iter().next().unwrap_or_default();
    TimeSeries::new(column, t.start, values)
}

pub fn load_series(path: impl AsRef<Path>, column: &str) -> Result<TimeSeries> {
    read_series(std::fs::File::open(path)?, column)
}

pub fn write_series<W: Write>(mut w: W, series: &TimeSeries) -> Result<()> {
    writeln!(w, "date,{}", series.name)?;
    for (d, v) in series.dates().zip(&series.values) {
        writeln!(w, "{d},{}", format_value(*v))?;
    }
    Ok(())
}

pub fn save_series(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    let mut buf = Vec::new();
    write_series(&mut buf, series)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_bounds<R: Read>(reader: R) -> Result<BoundsSeries> {
    let t = read_table(reader, Some(&["lower", "upper"]))?;
    let mut cols = t.columns.into_iter();
    let lower = cols.next().unwrap_or_default();
    let upper = cols.next().unwrap_or_default();
    BoundsSeries::new(t.start, lower, upper)
}

pub fn load_bounds(path: impl AsRef<Path>) -> Result<BoundsSeries> {
    read_bounds(std::fs::File::open(path)?)
}

pub fn write_bounds<W: Write>(mut w: W, bounds: &BoundsSeries) -> Result<()> {
    writeln!(w, "date,lower,upper")?;
    for i in 0..bounds.len() {
        writeln!(
            w,
            "{},{},{}",
            bounds.start.add_months(i as i64),
            format_value(bounds.lower[i]),
            format_value(bounds.upper[i])
        )?;
    }
    Ok(())
}

pub fn save_bounds(path: impl AsRef<Path>, bounds: &BoundsSeries) -> Result<()> {
    let mut buf = Vec::new();
    write_bounds(&mut buf, bounds)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_panel<R: Read>(reader: R) -> Result<ExogenousPanel> {
    let t = read_table(reader, None)?;
    for (name, col) in t.header.iter().zip(&t.columns) {
        check_finite_column(name, t.start, col)?;
    }
    ExogenousPanel::new(t.start, t.header, t.columns)
}

pub fn load_panel(path: impl AsRef<Path>) -> Result<ExogenousPanel> {
    read_panel(std::fs::File::open(path)?)
}

pub fn write_panel<W: Write>(mut w: W, panel: &ExogenousPanel) -> Result<()> {
    writeln!(w, "date,{}", panel.names.join(","))?;
    for i in 0..panel.len() {
        let row: Vec<String> = panel.columns.iter().map(|c| format_value(c[i])).collect();
        writeln!(w, "{},{}", panel.start.add_months(i as i64), row.join(","))?;
    }
    Ok(())
}

pub fn save_panel(path: impl AsRef<Path>, panel: &ExogenousPanel) -> Result<()> {
    let mut buf = Vec::new();
    write_panel(&mut buf, panel)?;
    std::fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ym(s: &str) -> YearMonth {
        s.parse().unwrap()
    }

    fn series(start: &str, values: Vec<f64>) -> TimeSeries {
        TimeSeries::new("x", ym(start), values).unwrap()
    }

    #[test]
    fn year_month_arithmetic() {
        let d = ym("1997-11");
        assert_eq!(d.add_months(2).to_string(), "1998-01");
        assert_eq!(d.add_months(-11).to_string(), "1996-12");
        assert_eq!(d.months_until(ym("2000-11")), 36);
        assert_eq!(ym("2020-01-31"), ym("2020-01"));
        assert!("2020-13".parse::<YearMonth>().is_err());
        assert!("2020/01".parse::<YearMonth>().is_err());
        assert!("20-01".parse::<YearMonth>().is_err());
    }

    #[test]
    fn loads_three_rows() {
        let csv = "date,ipca\n1997-01,1.5\n1997-02,2\n1997-03,2.5\n";
        let s = read_series(csv.as_bytes(), "ipca").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.values(), &[1.5, 2.0, 2.5]);
        assert_eq!(s.start(), ym("1997-01"));
    }

    #[test]
    fn sorts_rows_by_date() {
        let csv = "date,v\n1997-02,2\n1997-01,1\n";
        let s = read_series(csv.as_bytes(), "v").unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
    }

    #[test]
    fn gap_reported_at_row_two() {
        let csv = "date,v\n1997-01,1\n1997-03,2\n";
        match read_series(csv.as_bytes(), "v") {
            Err(Error::Parse {
                row: 2,
                kind: ParseErrorKind::MonthlyGap { .. },
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distinct_parse_errors() {
        let bad_date = "date,v\n1997-01,1\n97-02,2\n";
        assert!(matches!(
            read_series(bad_date.as_bytes(), "v"),
            Err(Error::Parse { row: 2, kind: ParseErrorKind::MalformedDate(_) })
        ));
        let bad_num = "date,v\n1997-01,abc\n";
        assert!(matches!(
            read_series(bad_num.as_bytes(), "v"),
            Err(Error::Parse { row: 1, kind: ParseErrorKind::NonNumeric(_) })
        ));
        let dup = "date,v\n1997-01,1\n1997-01,2\n";
        assert!(matches!(
            read_series(dup.as_bytes(), "v"),
            Err(Error::Parse { row: 2, kind: ParseErrorKind::DuplicateDate(_) })
        ));
        let missing = "date,v\n1997-01,1\n";
        assert!(matches!(
            read_series(missing.as_bytes(), "w"),
            Err(Error::Parse { row: 0, kind: ParseErrorKind::MissingColumn(_) })
        ));
        let empty_cell = "date,v\n1997-01,\n";
        assert!(matches!(
            read_series(empty_cell.as_bytes(), "v"),
            Err(Error::Parse { row: 1, kind: ParseErrorKind::NonNumeric(_) })
        ));
    }

    #[test]
    fn yoy_constant_prices_is_zero() {
        let s = series("2000-01", vec![50.0; 30]);
        let out = yoy_log_inflation(&s).unwrap();
        assert_eq!(out.len(), 18);
        assert!(out.values().iter().all(|v| *v == 0.0));
        assert_eq!(out.start(), ym("2001-01"));
    }

    #[test]
    fn yoy_geometric_growth() {
        let s = series("2000-01", (0..40).map(|t| 100.0 * 1.01f64.powi(t)).collect());
        let out = yoy_log_inflation(&s).unwrap();
        // direct evaluation of 100 * 12 * ln(1.01)
        let expected = 100.0 * 12.0 * 1.01f64.ln();
        assert!((expected - 11.94).abs() < 5e-3);
        for v in out.values() {
            assert!((v - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn yoy_lengths_and_errors() {
        let s13 = series("2000-01", (1..=13).map(|v| v as f64).collect());
        assert_eq!(yoy_log_inflation(&s13).unwrap().len(), 1);
        let s12 = series("2000-01", vec![1.0; 12]);
        assert!(matches!(yoy_log_inflation(&s12), Err(Error::InsufficientData(_))));
        let mut v = vec![1.0; 20];
        v[3] = 0.0;
        assert!(matches!(yoy_log_inflation(&series("2000-01", v)), Err(Error::Domain(_))));
    }

    #[test]
    fn pct_change_examples() {
        let c = pct_change_yoy(&series("2000-01", vec![7.0; 15])).unwrap();
        assert!(c.values().iter().all(|v| *v == 0.0));

        let mut v = vec![100.0; 13];
        v[12] = 105.0;
        let out = pct_change_yoy(&series("2000-01", v)).unwrap();
        assert!((out.values()[0] - 5.0).abs() < 1e-12);

        let doubling: Vec<f64> = (0..36).map(|t| 2f64.powi(t / 12)).collect();
        let out = pct_change_yoy(&series("2000-01", doubling)).unwrap();
        assert!(out.values().iter().all(|v| (*v - 100.0).abs() < 1e-12));

        let mut z = vec![1.0; 14];
        z[1] = 0.0;
        assert!(matches!(pct_change_yoy(&series("2000-01", z)), Err(Error::Domain(_))));
    }

    #[test]
    fn align_examples() {
        let a = series("1997-01", vec![0.0; 24 * 12]);
        let b = series("2000-01", vec![0.0; 22 * 12]);
        let out = align(&[DatedData::Series(a.clone()), DatedData::Series(b)]).unwrap();
        for item in &out {
            assert_eq!(item.start(), ym("2000-01"));
            assert_eq!(item.end(), ym("2020-12"));
        }
        let same = align(&[DatedData::Series(a.clone()), DatedData::Series(a.clone())]).unwrap();
        assert_eq!(same[0], DatedData::Series(a.clone()));

        let late = series("2030-01", vec![1.0; 3]);
        assert!(matches!(
            align(&[DatedData::Series(a), DatedData::Series(late)]),
            Err(Error::Alignment(_))
        ));
        assert!(align(&[]).is_err());
    }

    #[test]
    fn align_mixed_containers() {
        let s = series("2001-01", vec![1.0; 10]);
        let b = BoundsSeries::constant(ym("2000-06"), 12, 2.5, 6.5).unwrap();
        let p = ExogenousPanel::zeros(ym("2001-03"), vec!["ip".into()], 20).unwrap();
        let out = align(&[
            DatedData::Series(s),
            DatedData::Bounds(b),
            DatedData::Panel(p),
        ])
        .unwrap();
        for item in &out {
            assert_eq!(item.start(), ym("2001-03"));
            assert_eq!(item.end(), ym("2001-05"));
        }
        let again = align(&out).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn bounds_and_panel_validation() {
        assert!(BoundsSeries::new(ym("2000-01"), vec![3.0], vec![3.0]).is_err());
        assert!(BoundsSeries::new(ym("2000-01"), vec![f64::NEG_INFINITY], vec![f64::INFINITY]).is_ok());
        assert!(ExogenousPanel::new(ym("2000-01"), vec![], vec![]).is_err());
        assert!(ExogenousPanel::new(
            ym("2000-01"),
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![1.0]]
        )
        .is_err());
        let csv = "date,lower,upper\n2017-01,2.5,6.5\n2017-02,2.5,6.5\n";
        let b = read_bounds(csv.as_bytes()).unwrap();
        assert_eq!(b.at(ym("2017-02")), Some((2.5, 6.5)));
        assert_eq!(b.at(ym("2017-03")), None);
        let inverted = "date,lower,upper\n2017-01,6.5,2.5\n";
        assert!(read_bounds(inverted.as_bytes()).is_err());
    }

    #[test]
    fn panel_csv_and_replacements() {
        let csv = "date,ip,ex\n2019-01,1,2\n2019-02,3,4\n2019-03,5,6\n";
        let p = read_panel(csv.as_bytes()).unwrap();
        assert_eq!(p.q(), 2);
        assert_eq!(p.column(1), &[2.0, 4.0, 6.0]);
        let mut buf = Vec::new();
        write_panel(&mut buf, &p).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), csv);

        let upd = read_panel("date,ex\n2019-03,60\n".as_bytes()).unwrap();
        let r = p.with_replacements(&upd).unwrap();
        assert_eq!(r.column(1), &[2.0, 4.0, 60.0]);
        assert_eq!(r.column(0), p.column(0));
    }
}
