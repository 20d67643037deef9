use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of weights read from a file. Published weight tables
/// are rounded to three decimals, so a printed total of 1.001 has to pass.
pub const FILE_WEIGHT_TOLERANCE: f64 = 0.005;

/// Direction of an indicator: whether larger raw values mean more resilience.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attribute {
    Positive,
    Negative,
}

impl Attribute {
    pub fn symbol(self) -> &'static str {
        match self {
            Attribute::Positive => "+",
            Attribute::Negative => "-",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s.trim() {
            "+" | "positive" => Some(Attribute::Positive),
            // ASCII hyphen plus the minus / dash glyphs used in printed tables.
            "-" | "\u{2212}" | "\u{2014}" | "\u{2013}" | "negative" => Some(Attribute::Negative),
            _ => None,
        }
    }
}

impl Serialize for Attribute {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for Attribute {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Attribute::from_symbol(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("attribute must be \"+\" or \"-\", got {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub id: String,
    pub name: String,
    pub attribute: Attribute,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// Checks that indicator ids are unique and that weights, if any are given,
/// are given for every indicator and sum to one within [`FILE_WEIGHT_TOLERANCE`].
pub fn validate_specs(specs: &[IndicatorSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::InvalidData("indicator spec is empty".into()));
    }
    let mut seen = BTreeSet::new();
    for s in specs {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::InvalidData(format!("indicator id `{}` listed twice", s.id)));
        }
        if let Some(w) = s.weight {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidData(format!(
                    "weight of `{}` is {w}, outside [0, 1]",
                    s.id
                )));
            }
        }
    }
    let with_weight = specs.iter().filter(|s| s.weight.is_some()).count();
    if with_weight != 0 && with_weight != specs.len() {
        return Err(Error::InvalidData(format!(
            "{with_weight} of {} indicators carry a weight; weights must be all present or all absent",
            specs.len()
        )));
    }
    if with_weight == specs.len() {
        let sum: f64 = specs.iter().filter_map(|s| s.weight).sum();
        check_weight_sum(sum, FILE_WEIGHT_TOLERANCE)?;
    }
    Ok(())
}

pub(crate) fn check_weight_sum(sum: f64, tolerance: f64) -> Result<()> {
    if (sum - 1.0).abs() > tolerance {
        return Err(Error::WeightSum { sum, tolerance });
    }
    Ok(())
}

pub fn load_specs(path: &Path) -> Result<Vec<IndicatorSpec>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let specs: Vec<IndicatorSpec> =
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::parse(path, e))?;
    validate_specs(&specs)?;
    Ok(specs)
}

/// Regions × indicators × years cube of raw values.
///
/// Cells are stored region-major, then indicator, then year. Missing cells hold
/// `NaN` and are flagged in a parallel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorPanel {
    regions: Vec<String>,
    years: Vec<i32>,
    indicators: Vec<IndicatorSpec>,
    values: Vec<f64>,
    missing: Vec<bool>,
}

/// One missing cell, named by its coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellRef {
    pub region: String,
    pub year: i32,
    pub indicator: String,
}

impl IndicatorPanel {
    /// Builds a panel from cells laid out as `[region][indicator][year]`.
    /// `None` marks a missing cell.
    pub fn new(
        regions: Vec<String>,
        years: Vec<i32>,
        indicators: Vec<IndicatorSpec>,
        cells: Vec<Option<f64>>,
    ) -> Result<Self> {
        validate_specs(&indicators)?;
        if regions.is_empty() || years.is_empty() {
            return Err(Error::InvalidData("panel needs at least one region and one year".into()));
        }
        let mut unique = BTreeSet::new();
        for r in &regions {
            if !unique.insert(r.as_str()) {
                return Err(Error::InvalidData(format!("region `{r}` listed twice")));
            }
        }
        check_consecutive(&years)?;
        let expected = regions.len() * indicators.len() * years.len();
        if cells.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} cells supplied for a {}x{}x{} panel",
                cells.len(),
                regions.len(),
                indicators.len(),
                years.len()
            )));
        }
        let mut values = Vec::with_capacity(expected);
        let mut missing = Vec::with_capacity(expected);
        for c in cells {
            match c {
                Some(v) if v.is_finite() => {
                    values.push(v);
                    missing.push(false);
                }
                Some(v) => return Err(Error::InvalidData(format!("non-finite value {v}"))),
                None => {
                    values.push(f64::NAN);
                    missing.push(true);
                }
            }
        }
        Ok(Self {
            regions,
            years,
            indicators,
            values,
            missing,
        })
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn indicators(&self) -> &[IndicatorSpec] {
        &self.indicators
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }

    pub fn n_indicators(&self) -> usize {
        self.indicators.len()
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn index(&self, region: usize, indicator: usize, year: usize) -> usize {
        (region * self.indicators.len() + indicator) * self.years.len() + year
    }

    /// Value of a cell, `None` when missing.
    pub fn get(&self, region: usize, indicator: usize, year: usize) -> Option<f64> {
        let i = self.index(region, indicator, year);
        (!self.missing[i]).then_some(self.values[i])
    }

    /// Raw value of a cell; `NaN` when missing.
    #[inline]
    pub fn value(&self, region: usize, indicator: usize, year: usize) -> f64 {
        self.values[self.index(region, indicator, year)]
    }

    pub fn year_index(&self, year: i32) -> Option<usize> {
        let first = *self.years.first()?;
        let k = usize::try_from(year - first).ok()?;
        (k < self.years.len()).then_some(k)
    }

    pub fn indicator_index(&self, id: &str) -> Option<usize> {
        self.indicators.iter().position(|s| s.id == id)
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    pub fn missing_cells(&self) -> Vec<CellRef> {
        let mut out = Vec::new();
        for (i, r) in self.regions.iter().enumerate() {
            for (j, s) in self.indicators.iter().enumerate() {
                for (k, y) in self.years.iter().enumerate() {
                    if self.missing[self.index(i, j, k)] {
                        out.push(CellRef {
                            region: r.clone(),
                            year: *y,
                            indicator: s.id.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// The time series of one (region, indicator), `None` for missing years.
    pub fn series(&self, region: usize, indicator: usize) -> Vec<Option<f64>> {
        (0..self.years.len()).map(|k| self.get(region, indicator, k)).collect()
    }

    pub(crate) fn set_series(&mut self, region: usize, indicator: usize, series: &[f64]) {
        let start = self.index(region, indicator, 0);
        for (k, v) in series.iter().enumerate() {
            self.values[start + k] = *v;
            self.missing[start + k] = false;
        }
    }
}

fn check_consecutive(years: &[i32]) -> Result<()> {
    for w in years.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(Error::YearGap(w[0], w[1]));
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ValueRow {
    region: String,
    year: i32,
    indicator: String,
    value: Option<f64>,
}

const VALUES_HEADER: [&str; 4] = ["region", "year", "indicator", "value"];

/// Loads a long-format values CSV (`region,year,indicator,value`) against an
/// indicator spec JSON. Regions keep their order of first appearance; cells
/// with an empty value or no row at all are flagged missing.
pub fn load_panel(values_file: &Path, spec_file: &Path) -> Result<IndicatorPanel> {
    let specs = load_specs(spec_file)?;
    let file = File::open(values_file).map_err(|e| Error::io(values_file, e))?;
    read_panel(file, values_file, specs)
}

pub(crate) fn read_panel<R: std::io::Read>(
    reader: R,
    path: &Path,
    specs: Vec<IndicatorSpec>,
) -> Result<IndicatorPanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::parse(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != VALUES_HEADER {
        return Err(Error::parse(
            path,
            format!("expected header `{}`", VALUES_HEADER.join(",")),
        ));
    }

    let spec_index: HashMap<&str, usize> =
        specs.iter().enumerate().map(|(j, s)| (s.id.as_str(), j)).collect();
    let mut region_index: HashMap<String, usize> = HashMap::new();
    let mut regions = Vec::new();
    let mut rows = Vec::new();
    let mut years = BTreeSet::new();

    for rec in rdr.deserialize::<ValueRow>() {
        let row = rec.map_err(|e| Error::parse(path, e))?;
        let j = *spec_index
            .get(row.indicator.as_str())
            .ok_or_else(|| Error::UnknownIndicator(row.indicator.clone()))?;
        if let Some(v) = row.value {
            if !v.is_finite() {
                return Err(Error::parse(path, format!("non-finite value for {}", row.region)));
            }
        }
        let i = *region_index.entry(row.region.clone()).or_insert_with(|| {
            regions.push(row.region.clone());
            regions.len() - 1
        });
        years.insert(row.year);
        rows.push((i, j, row));
    }

    if rows.is_empty() {
        return Err(Error::parse(path, "no data rows"));
    }
    let years: Vec<i32> = years.into_iter().collect();
    check_consecutive(&years)?;

    let (n_ind, n_years) = (specs.len(), years.len());
    let first = years[0];
    let mut cells: Vec<Option<f64>> = vec![None; regions.len() * n_ind * n_years];
    let mut seen = vec![false; cells.len()];
    for (i, j, row) in rows {
        let k = (row.year - first) as usize;
        let idx = (i * n_ind + j) * n_years + k;
        if seen[idx] {
            return Err(Error::DuplicateCell {
                region: row.region,
                year: row.year,
                indicator: row.indicator,
            });
        }
        seen[idx] = true;
        cells[idx] = row.value;
    }
    IndicatorPanel::new(regions, years, specs, cells)
}

/// Writes the panel in the same long format `load_panel` reads. Rows are
/// ordered region, year, indicator; missing cells get an empty value.
pub fn write_panel<W: Write>(panel: &IndicatorPanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map_err = |e: csv::Error| Error::InvalidData(format!("csv write failed: {e}"));
    w.write_record(VALUES_HEADER).map_err(map_err)?;
    for (i, r) in panel.regions.iter().enumerate() {
        for (k, y) in panel.years.iter().enumerate() {
            for (j, s) in panel.indicators.iter().enumerate() {
                let v = panel
                    .get(i, j, k)
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                w.write_record([r.as_str(), &y.to_string(), s.id.as_str(), &v])
                    .map_err(map_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::InvalidData(format!("csv write failed: {e}")))?;
    Ok(())
}
