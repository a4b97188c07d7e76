//! Dated price and return series.
//!
//! Estimation runs on percent returns (log returns × 100); pricing converts back
//! to decimal before exponentiating paths.

use std::io::Read;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Decimal,
    Percent,
}

impl Units {
    /// Multiplier that converts a value expressed in `self` into `target`.
    pub fn factor_to(self, target: Units) -> f64 {
        match (self, target) {
            (Units::Decimal, Units::Percent) => 100.0,
            (Units::Percent, Units::Decimal) => 0.01,
            _ => 1.0,
        }
    }
}

impl std::str::FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "decimal" => Ok(Units::Decimal),
            "percent" => Ok(Units::Percent),
            other => Err(Error::Parse(format!("unknown units '{other}'"))),
        }
    }
}

/// Strictly dated, strictly positive price observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::invalid(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if prices.len() < 2 {
            return Err(Error::invalid("a price series needs at least two observations"));
        }
        if let Some(w) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "dates must be strictly increasing ({} then {})",
                dates[w],
                dates[w + 1]
            )));
        }
        if let Some((i, p)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::invalid(format!("non-positive price {p} on {}", dates[i])));
        }
        Ok(Self { dates, prices })
    }

    /// Reads a `date,price` CSV with ISO-8601 dates. Parsing does not depend on locale.
    pub fn from_csv_reader<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty price file".into()))?;
        let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
        if cols.len() < 2 || cols[0] != "date" || cols[1] != "price" {
            return Err(Error::Parse(format!("expected header 'date,price', got '{header}'")));
        }
        let mut dates = Vec::new();
        let mut prices = Vec::new();
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, got {}",
                    n + 2,
                    cols.len(),
                    fields.len()
                )));
            }
            let (d, p) = (fields[0].trim(), fields[1].trim());
            let date = NaiveDate::parse_from_str(d, "%Y-%m-%d")
                .map_err(|e| Error::Parse(format!("line {}: bad date '{d}': {e}", n + 2)))?;
            let price: f64 = p
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad price '{p}': {e}", n + 2)))?;
            dates.push(date);
            prices.push(price);
        }
        Self::new(dates, prices)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Dated returns tagged with their units.
///
/// Rescaling remembers the pre-conversion values, so converting back to the
/// original units reproduces the original bit pattern.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    units: Units,
    origin: Option<Arc<(Units, Vec<f64>)>>,
}

impl PartialEq for ReturnSeries {
    fn eq(&self, other: &Self) -> bool {
        self.dates == other.dates && self.units == other.units && self.values == other.values
    }
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>, units: Units) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} dates but {} returns",
                dates.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("returns must be finite"));
        }
        Ok(Self {
            dates,
            values,
            units,
            origin: None,
        })
    }

    /// Builds a series on consecutive calendar days starting at `start`.
    pub fn daily_from(start: NaiveDate, values: Vec<f64>, units: Units) -> Result<Self> {
        let dates = start.iter_days().take(values.len()).collect();
        Self::new(dates, values, units)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Converts to `target` units; a no-op when already there.
    pub fn rescale(&self, target: Units) -> ReturnSeries {
        if target == self.units {
            return self.clone();
        }
        if let Some(origin) = &self.origin {
            if origin.0 == target {
                return ReturnSeries {
                    dates: self.dates.clone(),
                    values: origin.1.clone(),
                    units: target,
                    origin: None,
                };
            }
        }
        let values = match (self.units, target) {
            (Units::Decimal, Units::Percent) => self.values.iter().map(|v| v * 100.0).collect(),
            _ => self.values.iter().map(|v| v / 100.0).collect(),
        };
        ReturnSeries {
            dates: self.dates.clone(),
            values,
            units: target,
            origin: Some(Arc::new((self.units, self.values.clone()))),
        }
    }
}

/// `values[t] = ln(prices[t+1]) - ln(prices[t])`, dated at the later observation.
pub fn to_log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    let p = prices.prices();
    if let Some(bad) = p.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::invalid(format!("non-positive price {bad}")));
    }
    let values = p.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    ReturnSeries::new(prices.dates()[1..].to_vec(), values, Units::Decimal)
}

/// Rebuilds prices from a starting level and decimal log returns.
pub fn cumulate_prices(start: f64, returns: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len() + 1);
    let mut log_p = start.ln();
    out.push(start);
    for r in returns {
        log_p += r;
        out.push(log_p.exp());
    }
    out
}
