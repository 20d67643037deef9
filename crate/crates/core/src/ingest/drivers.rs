use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Explanatory factors for the detector, one value per (factor, year, region).
#[derive(Debug, Clone, Default)]
pub struct DriverTable {
    values: BTreeMap<(String, i32), BTreeMap<String, f64>>,
}

#[derive(Deserialize)]
struct DriverRow {
    region: String,
    year: i32,
    factor: String,
    value: f64,
}

impl DriverTable {
    pub fn insert(&mut self, factor: &str, year: i32, region: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidData(format!(
                "non-finite driver value for ({region}, {year}, {factor})"
            )));
        }
        let slot = self.values.entry((factor.to_owned(), year)).or_default();
        if slot.insert(region.to_owned(), value).is_some() {
            return Err(Error::DuplicateCell {
                region: region.to_owned(),
                year,
                indicator: factor.to_owned(),
            });
        }
        Ok(())
    }

    pub fn factors(&self) -> Vec<String> {
        self.values.keys().map(|(f, _)| f.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn years(&self) -> Vec<i32> {
        self.values.keys().map(|(_, y)| *y).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Values of `factor` in `year`, in the order of `regions`.
    pub fn column(&self, factor: &str, year: i32, regions: &[String]) -> Result<Vec<f64>> {
        let slot = self.values.get(&(factor.to_owned(), year)).ok_or_else(|| {
            Error::InvalidData(format!("no driver values for factor `{factor}` in {year}"))
        })?;
        regions
            .iter()
            .map(|r| {
                slot.get(r).copied().ok_or_else(|| {
                    Error::InvalidData(format!("driver `{factor}` has no value for `{r}` in {year}"))
                })
            })
            .collect()
    }
}

/// Reads a long-format drivers CSV: `region,year,factor,value`.
pub fn load_drivers(path: &Path) -> Result<DriverTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| Error::parse(path, e))?;
    if header.iter().collect::<Vec<_>>() != ["region", "year", "factor", "value"] {
        return Err(Error::parse(path, "expected header `region,year,factor,value`"));
    }
    let mut table = DriverTable::default();
    for rec in rdr.deserialize::<DriverRow>() {
        let row = rec.map_err(|e| Error::parse(path, e))?;
        table.insert(&row.factor, row.year, &row.region, row.value)?;
    }
    Ok(table)
}
