//! Cross-system correlation of MuLER with other measures, and output
//! serialization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureStats;
use crate::scoring::{MulerEntry, MulerFlag, MulerReport};
use crate::validation::ValidationBundle;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown format {0:?} (expected json, csv or tsv)")]
    UnknownFormat(String),
    #[error("{what} output is only available as json")]
    JsonOnly { what: &'static str },
    #[error("unknown measure {0:?}")]
    UnknownMeasure(String),
    #[error("unknown grouping {0:?} (expected langs or year,langs)")]
    UnknownGrouping(String),
    #[error("no reports found in {0}")]
    NoReports(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Why a correlation could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Absent {
    LengthMismatch,
    TooFew,
    ZeroVariance,
}

impl fmt::Display for Absent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Absent::LengthMismatch => "length mismatch",
            Absent::TooFew => "fewer than 3 points",
            Absent::ZeroVariance => "zero variance",
        })
    }
}

/// Sample Pearson correlation, computed in two passes and clamped to
/// [-1, 1].
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, Absent> {
    if xs.len() != ys.len() {
        return Err(Absent::LengthMismatch);
    }
    if xs.len() < 3 {
        return Err(Absent::TooFew);
    }
    if xs.iter().all(|&x| x == xs[0]) || ys.iter().all(|&y| y == ys[0]) {
        return Err(Absent::ZeroVariance);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Absent::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// One system's report, as a point in cross-system comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSeries {
    pub system_id: String,
    pub language_pair: String,
    pub year: String,
    pub overall_bleu: f64,
    pub entries: BTreeMap<String, MulerEntry>,
}

impl SystemSeries {
    /// Reads system, language pair and year from the report metadata;
    /// `fallback_id` names the system when the metadata does not.
    pub fn from_report(report: &MulerReport, fallback_id: &str) -> Self {
        let meta = |k: &str| {
            report
                .meta
                .get(k)
                .and_then(|v| v.as_str())
                .map(str::to_string)
        };
        Self {
            system_id: meta("system").unwrap_or_else(|| fallback_id.to_string()),
            language_pair: meta("langs").unwrap_or_default(),
            year: meta("year").unwrap_or_default(),
            overall_bleu: report.overall,
            entries: report
                .entries
                .iter()
                .map(|e| (e.feature_id.clone(), e.clone()))
                .collect(),
        }
    }
}

/// Reads every `*.json` report in `dir`, in file-name order.
pub fn load_reports(dir: &Path) -> Result<Vec<SystemSeries>, AnalysisError> {
    let io = |source| AnalysisError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    if paths.is_empty() {
        return Err(AnalysisError::NoReports(dir.display().to_string()));
    }
    paths
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).map_err(|source| AnalysisError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let report: MulerReport =
                serde_json::from_str(&text).map_err(|source| AnalysisError::Json {
                    path: path.display().to_string(),
                    source,
                })?;
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default();
            Ok(SystemSeries::from_report(&report, stem))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum XMeasure {
    /// The system's overall score.
    Bleu,
    /// The unmasked score over the feature's index set.
    IndicesBleu,
    /// Width of the oracle interval.
    MaxMinusMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum YMeasure {
    NegMuler,
    Muler,
}

fn measure_key(s: &str) -> String {
    s.to_lowercase().replace(['-', '_'], "")
}

impl FromStr for XMeasure {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match measure_key(s).as_str() {
            "bleu" => Ok(XMeasure::Bleu),
            "indicesbleu" | "indices" => Ok(XMeasure::IndicesBleu),
            "maxminusmin" | "maxmin" | "range" => Ok(XMeasure::MaxMinusMin),
            _ => Err(AnalysisError::UnknownMeasure(s.to_string())),
        }
    }
}

impl FromStr for YMeasure {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match measure_key(s).as_str() {
            "negmuler" => Ok(YMeasure::NegMuler),
            "muler" => Ok(YMeasure::Muler),
            _ => Err(AnalysisError::UnknownMeasure(s.to_string())),
        }
    }
}

/// How systems are grouped into matrix rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    /// All years of a language pair pooled.
    #[default]
    Langs,
    YearLangs,
}

impl FromStr for GroupBy {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace(' ', "").to_lowercase().as_str() {
            "langs" => Ok(GroupBy::Langs),
            "year,langs" | "langs,year" => Ok(GroupBy::YearLangs),
            _ => Err(AnalysisError::UnknownGrouping(s.to_string())),
        }
    }
}

impl GroupBy {
    fn key(self, s: &SystemSeries) -> String {
        match self {
            GroupBy::Langs => s.language_pair.clone(),
            GroupBy::YearLangs => format!("{} {}", s.year, s.language_pair),
        }
    }
}

fn x_value(series: &SystemSeries, entry: &MulerEntry, x: XMeasure) -> Option<f64> {
    match x {
        XMeasure::Bleu => Some(series.overall_bleu),
        XMeasure::IndicesBleu => entry.base,
        XMeasure::MaxMinusMin => Some(entry.max? - entry.min?),
    }
}

fn y_value(entry: &MulerEntry, y: YMeasure) -> Option<f64> {
    match y {
        YMeasure::NegMuler => entry.muler.map(|m| -m),
        YMeasure::Muler => entry.muler,
    }
}

fn is_flagged(entry: &MulerEntry) -> bool {
    entry.flags.contains(&MulerFlag::NegativeNumerator)
        || entry.flags.contains(&MulerFlag::DegenerateInterval)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub r: Option<f64>,
    pub n: usize,
    /// Systems left out because their entry was flagged.
    pub excluded: usize,
    pub absent_reason: Option<Absent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub x: XMeasure,
    pub y: YMeasure,
    pub group_by: GroupBy,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// `cells[row][col]`.
    pub cells: Vec<Vec<Cell>>,
}

impl CorrelationMatrix {
    pub fn value(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.cols.iter().position(|c| c == col)?;
        self.cells[i][j].r
    }
}

/// A plot-ready point: one system's measures for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub group: String,
    pub feature: String,
    pub system: String,
    pub x: f64,
    pub y: f64,
}

/// Points per (group, feature), sorted by system so input order does not
/// matter, plus the flagged-entry count per cell.
fn cell_points(
    series: &[SystemSeries],
    x: XMeasure,
    y: YMeasure,
    group_by: GroupBy,
) -> BTreeMap<(String, String), (Vec<Point>, usize)> {
    let mut cells: BTreeMap<(String, String), (Vec<Point>, usize)> = BTreeMap::new();
    for s in series {
        let group = group_by.key(s);
        for (feature, entry) in &s.entries {
            let cell = cells.entry((group.clone(), feature.clone())).or_default();
            if is_flagged(entry) {
                cell.1 += 1;
                continue;
            }
            if let (Some(xv), Some(yv)) = (x_value(s, entry, x), y_value(entry, y)) {
                cell.0.push(Point {
                    group: group.clone(),
                    feature: feature.clone(),
                    system: format!("{}\u{1f}{}", s.system_id, s.year),
                    x: xv,
                    y: yv,
                });
            }
        }
    }
    for (points, _) in cells.values_mut() {
        points.sort_by(|a, b| {
            a.system
                .cmp(&b.system)
                .then(a.x.total_cmp(&b.x))
                .then(a.y.total_cmp(&b.y))
        });
    }
    cells
}

/// Pearson correlation per (group, feature) across systems.
pub fn correlate(
    series: &[SystemSeries],
    x: XMeasure,
    y: YMeasure,
    group_by: GroupBy,
) -> CorrelationMatrix {
    let cells = cell_points(series, x, y, group_by);
    let rows: Vec<String> = cells
        .keys()
        .map(|k| k.0.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cols: Vec<String> = cells
        .keys()
        .map(|k| k.1.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let grid = rows
        .iter()
        .map(|row| {
            cols.iter()
                .map(|col| {
                    let empty = (Vec::new(), 0);
                    let (points, excluded) =
                        cells.get(&(row.clone(), col.clone())).unwrap_or(&empty);
                    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
                    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
                    let r = pearson(&xs, &ys);
                    Cell {
                        r: r.ok(),
                        n: points.len(),
                        excluded: *excluded,
                        absent_reason: r.err(),
                    }
                })
                .collect()
        })
        .collect();
    CorrelationMatrix {
        x,
        y,
        group_by,
        rows,
        cols,
        cells: grid,
    }
}

/// Long-format points behind a correlation matrix, for external plotting.
pub fn long_points(
    series: &[SystemSeries],
    x: XMeasure,
    y: YMeasure,
    group_by: GroupBy,
) -> Vec<Point> {
    cell_points(series, x, y, group_by)
        .into_values()
        .flat_map(|(points, _)| points)
        .map(|mut p| {
            p.system = p.system.replace('\u{1f}', " ").trim().to_string();
            p
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Tsv,
}

impl FromStr for OutputFormat {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "tsv" => Ok(OutputFormat::Tsv),
            _ => Err(AnalysisError::UnknownFormat(s.to_string())),
        }
    }
}

impl OutputFormat {
    /// Guesses the format from a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        path.extension()
            .and_then(|e| e.to_str())
            .and_then(|e| e.parse().ok())
            .unwrap_or(OutputFormat::Json)
    }
}

/// Anything the CLI writes.
#[derive(Debug, Clone, Copy)]
pub enum Output<'a> {
    Report(&'a MulerReport),
    Matrix(&'a CorrelationMatrix),
    Points(&'a [Point]),
    Validation(&'a ValidationBundle),
    Stats(&'a [FeatureStats]),
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag_names(flags: &BTreeSet<MulerFlag>) -> String {
    flags
        .iter()
        .map(|f| {
            serde_json::to_value(f)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default()
        })
        .collect::<Vec<_>>()
        .join("|")
}

fn table(rows: Vec<Vec<String>>, delimiter: u8) -> Result<Vec<u8>, AnalysisError> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner()
        .map_err(|e| AnalysisError::Csv(csv::Error::from(e.into_error())))
}

fn report_rows(report: &MulerReport) -> Vec<Vec<String>> {
    let header = [
        "feature",
        "base",
        "max",
        "min",
        "muler",
        "abl",
        "n_indices",
        "eta_add",
        "eta_hit",
        "eta_miss",
        "freq",
        "uniq",
        "occurrences",
        "unique_forms",
        "flags",
    ];
    let mut rows = vec![header.iter().map(|s| s.to_string()).collect()];
    for e in &report.entries {
        rows.push(vec![
            e.feature_id.clone(),
            num(e.base),
            num(e.max),
            num(e.min),
            num(e.muler),
            num(e.abl_muler),
            e.index_count.to_string(),
            e.eta.add.to_string(),
            e.eta.hit.to_string(),
            e.eta.miss.to_string(),
            e.freq.to_string(),
            e.uniq.to_string(),
            e.occurrences.to_string(),
            e.unique_forms.to_string(),
            flag_names(&e.flags),
        ]);
    }
    rows
}

fn matrix_rows(m: &CorrelationMatrix) -> Vec<Vec<String>> {
    let mut header = vec!["language".to_string()];
    header.extend(m.cols.iter().cloned());
    let mut rows = vec![header];
    for (name, cells) in m.rows.iter().zip(&m.cells) {
        let mut row = vec![name.clone()];
        row.extend(cells.iter().map(|c| num(c.r)));
        rows.push(row);
    }
    rows
}

fn point_rows(points: &[Point]) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["language", "feature", "x", "y", "system"]
        .into_iter()
        .map(str::to_string)
        .collect()];
    for p in points {
        rows.push(vec![
            p.group.clone(),
            p.feature.clone(),
            p.x.to_string(),
            p.y.to_string(),
            p.system.clone(),
        ]);
    }
    rows
}

fn stats_rows(stats: &[FeatureStats]) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "feature",
        "frequency",
        "uniqueness",
        "total_occurrences",
        "unique_surface_forms",
    ]
    .into_iter()
    .map(str::to_string)
    .collect()];
    for s in stats {
        rows.push(vec![
            s.feature_id.clone(),
            s.frequency.to_string(),
            s.uniqueness.to_string(),
            s.total_occurrences.to_string(),
            s.unique_surface_forms.to_string(),
        ]);
    }
    rows
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("results serialize to JSON");
    out.push(b'\n');
    out
}

/// Renders an output in the requested format. JSON output round-trips
/// through serde; CSV and TSV are flat tables with empty fields for missing
/// values.
pub fn serialize(output: Output, format: OutputFormat) -> Result<Vec<u8>, AnalysisError> {
    let delimiter = match format {
        OutputFormat::Json => {
            return Ok(match output {
                Output::Report(r) => to_json(r),
                Output::Matrix(m) => to_json(m),
                Output::Points(p) => to_json(p),
                Output::Validation(v) => to_json(v),
                Output::Stats(s) => to_json(s),
            })
        }
        OutputFormat::Csv => b',',
        OutputFormat::Tsv => b'\t',
    };
    let rows = match output {
        Output::Report(r) => report_rows(r),
        Output::Matrix(m) => matrix_rows(m),
        Output::Points(p) => point_rows(p),
        Output::Stats(s) => stats_rows(s),
        Output::Validation(_) => return Err(AnalysisError::JsonOnly { what: "validation" }),
    };
    table(rows, delimiter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::Eta;

    fn entry(feature: &str, muler: Option<f64>, flags: &[MulerFlag]) -> MulerEntry {
        MulerEntry {
            feature_id: feature.into(),
            base: Some(0.3),
            max: Some(0.5),
            min: Some(0.1),
            muler,
            abl_muler: Some(0.2),
            index_count: 4,
            eta: Eta::default(),
            freq: 0.2,
            uniq: 0.5,
            occurrences: 4,
            unique_forms: 2,
            flags: flags.iter().copied().collect(),
        }
    }

    fn system(id: &str, langs: &str, bleu: f64, muler: f64) -> SystemSeries {
        SystemSeries {
            system_id: id.into(),
            language_pair: langs.into(),
            year: "2019".into(),
            overall_bleu: bleu,
            entries: [("POS:NOUN".to_string(), entry("POS:NOUN", Some(muler), &[]))].into(),
        }
    }

    #[test]
    fn pearson_basics() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Ok(1.0));
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]), Ok(-1.0));
        assert_eq!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(Absent::TooFew));
        assert_eq!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(Absent::LengthMismatch)
        );
        assert_eq!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Absent::ZeroVariance)
        );
    }

    #[test]
    fn pearson_outlier_against_textbook_formula() {
        let (xs, ys) = ([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 100.0]);
        // Single-pass textbook form, independent of the implementation.
        let n = 4.0;
        let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let sxx: f64 = xs.iter().map(|a| a * a).sum();
        let syy: f64 = ys.iter().map(|b| b * b).sum();
        let expected =
            (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        let got = pearson(&xs, &ys).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn identical_systems_give_absent_cells() {
        let s = vec![
            system("a", "de-en", 0.3, 0.2),
            system("b", "de-en", 0.3, 0.2),
        ];
        let m = correlate(&s, XMeasure::Bleu, YMeasure::NegMuler, GroupBy::Langs);
        assert_eq!(m.value("de-en", "POS:NOUN"), None);
    }

    #[test]
    fn constructed_perfect_correlation() {
        let s: Vec<_> = [0.1, 0.3, 0.2, 0.5]
            .iter()
            .enumerate()
            .map(|(i, &m)| system(&format!("s{i}"), "de-en", -m, m))
            .collect();
        let m = correlate(&s, XMeasure::Bleu, YMeasure::NegMuler, GroupBy::Langs);
        assert!((m.value("de-en", "POS:NOUN").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flagged_entries_are_excluded_and_counted() {
        let mut s: Vec<_> = (0..4)
            .map(|i| system(&format!("s{i}"), "fr-en", i as f64, i as f64))
            .collect();
        s[0].entries.insert(
            "POS:NOUN".into(),
            entry("POS:NOUN", Some(-0.5), &[MulerFlag::NegativeNumerator]),
        );
        let m = correlate(&s, XMeasure::Bleu, YMeasure::Muler, GroupBy::Langs);
        let cell = &m.cells[0][0];
        assert_eq!((cell.n, cell.excluded), (3, 1));
    }

    #[test]
    fn matrix_csv_has_empty_cells() {
        let s = vec![system("a", "de-en", 0.3, 0.2)];
        let m = correlate(&s, XMeasure::Bleu, YMeasure::NegMuler, GroupBy::Langs);
        let csv =
            String::from_utf8(serialize(Output::Matrix(&m), OutputFormat::Csv).unwrap()).unwrap();
        assert_eq!(csv, "language,POS:NOUN\nde-en,\n");
    }

    #[test]
    fn unknown_format() {
        assert!("xml".parse::<OutputFormat>().is_err());
    }

    #[test]
    fn degenerate_entry_serializes_null_with_flag() {
        let e = entry("POS:X", None, &[MulerFlag::DegenerateInterval]);
        let v = serde_json::to_value(&e).unwrap();
        assert!(v["muler"].is_null());
        assert_eq!(v["flags"][0], "DEGENERATE_INTERVAL");
    }
}
