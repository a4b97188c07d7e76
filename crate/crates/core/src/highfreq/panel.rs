use std::io::Read;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::simulate::BrPath;

pub const MINUTES_PER_DAY: usize = 1440;

/// One-minute log returns (decimal) arranged as day x knot x minute.
#[derive(Debug, Clone, PartialEq)]
pub struct IntradayPanel {
    returns: Vec<f64>,
    days: usize,
    knots_per_day: usize,
    minutes_per_knot: usize,
    log_price0: f64,
    dates: Vec<NaiveDate>,
}

impl IntradayPanel {
    /// `returns` is flat in day-major, then knot, then minute order.
    pub fn new(returns: Vec<f64>, knots_per_day: usize, minutes_per_knot: usize, log_price0: f64, dates: Vec<NaiveDate>) -> Result<Self> {
        if knots_per_day == 0 {
            return Err(Error::invalid("need at least one knot per day"));
        }
        if minutes_per_knot < 2 {
            return Err(Error::invalid(format!("minutes_per_knot = {minutes_per_knot}; need at least 2")));
        }
        let per_day = knots_per_day * minutes_per_knot;
        if returns.is_empty() || returns.len() % per_day != 0 {
            return Err(Error::invalid(format!(
                "{} returns do not fill whole days of {knots_per_day} x {minutes_per_knot}",
                returns.len()
            )));
        }
        let days = returns.len() / per_day;
        if dates.len() != days {
            return Err(Error::invalid(format!("{} dates for {days} days", dates.len())));
        }
        if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::invalid(format!("non-finite return at position {i}")));
        }
        Ok(Self {
            returns,
            days,
            knots_per_day,
            minutes_per_knot,
            log_price0,
            dates,
        })
    }

    /// Panel from a nested `[day][knot][minute]` array.
    pub fn from_nested(r: &[Vec<Vec<f64>>], minutes_per_knot: usize) -> Result<Self> {
        let knots = r.first().map_or(0, Vec::len);
        let mut flat = Vec::new();
        for (t, day) in r.iter().enumerate() {
            if day.len() != knots {
                return Err(Error::invalid(format!("day {t} has {} knots, expected {knots}", day.len())));
            }
            for (i, w) in day.iter().enumerate() {
                if w.len() != minutes_per_knot {
                    return Err(Error::invalid(format!("day {t} knot {i} has {} returns", w.len())));
                }
                flat.extend_from_slice(w);
            }
        }
        let dates = (0..r.len() as u64).map(|d| crate::simulate::SIMULATION_START + chrono::Days::new(d)).collect();
        Self::new(flat, knots, minutes_per_knot, 0.0, dates)
    }

    /// Cuts a simulated path (percent returns, one step per minute) into days.
    /// Trailing minutes that do not fill a day are dropped.
    pub fn from_br_path(path: &BrPath, minutes_per_knot: usize) -> Result<Self> {
        if minutes_per_knot == 0 || MINUTES_PER_DAY % minutes_per_knot != 0 {
            return Err(Error::invalid(format!("{minutes_per_knot} does not divide a day")));
        }
        let days = path.returns.len() / MINUTES_PER_DAY;
        let returns: Vec<f64> = path.returns[..days * MINUTES_PER_DAY].iter().map(|r| r / 100.0).collect();
        let dates = (0..days as u64).map(|d| crate::simulate::SIMULATION_START + chrono::Days::new(d)).collect();
        Self::new(returns, MINUTES_PER_DAY / minutes_per_knot, minutes_per_knot, 0.0, dates)
    }

    /// Reads `timestamp,price` rows at a fixed 60-second spacing. Timestamps are
    /// unix seconds or ISO-8601 date-times (UTC). Only whole UTC days enter the
    /// panel; the first day is dropped when no earlier price precedes its first minute.
    pub fn from_minute_csv<R: Read>(mut reader: R, minutes_per_knot: usize) -> Result<Self> {
        if minutes_per_knot == 0 || MINUTES_PER_DAY % minutes_per_knot != 0 {
            return Err(Error::invalid(format!("{minutes_per_knot} does not divide a day")));
        }
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty intraday file".into()))?;
        let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
        if cols != ["timestamp", "price"] {
            return Err(Error::Parse(format!("expected header 'timestamp,price', got '{header}'")));
        }
        let mut stamps = Vec::new();
        let mut prices = Vec::new();
        for (n, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected 2 fields, got {}", n + 1, fields.len())));
            }
            let ts = parse_timestamp(fields[0]).map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
            let p: f64 = fields[1]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad price '{}': {e}", n + 1, fields[1])))?;
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::invalid(format!("line {}: non-positive price {p}", n + 1)));
            }
            if let Some(&prev) = stamps.last() {
                if ts - prev != 60 {
                    return Err(Error::invalid(format!("line {}: spacing {} s, expected 60", n + 1, ts - prev)));
                }
            }
            stamps.push(ts);
            prices.push(p);
        }
        if stamps.is_empty() {
            return Err(Error::invalid("no intraday prices"));
        }
        let minute_of_day = |ts: i64| ts.rem_euclid(86_400) / 60;
        // first index that starts a whole day and has a predecessor
        let start = (1..stamps.len())
            .find(|&i| minute_of_day(stamps[i]) == 0)
            .ok_or_else(|| Error::invalid("no whole day with a preceding price"))?;
        let days = (stamps.len() - start) / MINUTES_PER_DAY;
        if days == 0 {
            return Err(Error::invalid("no whole day with a preceding price"));
        }
        let mut returns = Vec::with_capacity(days * MINUTES_PER_DAY);
        for i in start..start + days * MINUTES_PER_DAY {
            returns.push((prices[i] / prices[i - 1]).ln());
        }
        let dates = (0..days)
            .map(|d| {
                DateTime::from_timestamp(stamps[start + d * MINUTES_PER_DAY], 0)
                    .map(|t| t.date_naive())
                    .ok_or_else(|| Error::invalid("timestamp out of range"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(returns, MINUTES_PER_DAY / minutes_per_knot, minutes_per_knot, prices[start - 1].ln(), dates)
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn knots_per_day(&self) -> usize {
        self.knots_per_day
    }

    pub fn minutes_per_knot(&self) -> usize {
        self.minutes_per_knot
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// The one-minute returns of knot `i` on day `t`.
    pub fn window(&self, t: usize, i: usize) -> &[f64] {
        let start = (t * self.knots_per_day + i) * self.minutes_per_knot;
        &self.returns[start..start + self.minutes_per_knot]
    }

    /// Log price at the close of every knot, `[day][knot]`.
    pub fn log_closes(&self) -> Vec<Vec<f64>> {
        let mut level = self.log_price0;
        (0..self.days)
            .map(|t| {
                (0..self.knots_per_day)
                    .map(|i| {
                        level += self.window(t, i).iter().sum::<f64>();
                        level
                    })
                    .collect()
            })
            .collect()
    }
}

fn parse_timestamp(s: &str) -> std::result::Result<i64, String> {
    if let Ok(secs) = s.parse::<i64>() {
        return Ok(secs);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.timestamp());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            if t.second() != 0 {
                return Err(format!("timestamp '{s}' is not on a whole minute"));
            }
            return Ok(t.and_utc().timestamp());
        }
    }
    Err(format!("unrecognized timestamp '{s}'"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minute_csv(start: i64, prices: &[f64]) -> String {
        let mut s = String::from("timestamp,price\n");
        for (k, p) in prices.iter().enumerate() {
            s.push_str(&format!("{},{p}\n", start + 60 * k as i64));
        }
        s
    }

    #[test]
    fn nested_panels_must_be_rectangular() {
        let ok = vec![vec![vec![0.01; 3]; 2]; 4];
        let p = IntradayPanel::from_nested(&ok, 3).unwrap();
        assert_eq!((p.days(), p.knots_per_day(), p.minutes_per_knot()), (4, 2, 3));
        let mut ragged = ok.clone();
        ragged[2][1].pop();
        assert!(IntradayPanel::from_nested(&ragged, 3).is_err());
        assert!(IntradayPanel::from_nested(&[vec![vec![0.0; 1]]], 1).is_err());
    }

    #[test]
    fn closes_cumulate_returns() {
        let p = IntradayPanel::from_nested(&[vec![vec![0.1, 0.2], vec![0.3, -0.1]], vec![vec![0.0, 0.5], vec![0.0, 0.0]]], 2).unwrap();
        let c = p.log_closes();
        let want = [[0.3, 0.5], [1.0, 1.0]];
        for t in 0..2 {
            for i in 0..2 {
                assert!((c[t][i] - want[t][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn minute_csv_builds_whole_days() {
        // starts one minute before midnight of 2021-01-01, covers two days and a bit
        let midnight = 1_609_459_200;
        let prices: Vec<f64> = (0..2 * 1440 + 30).map(|k| 100.0 * (0.0001 * k as f64).exp()).collect();
        let p = IntradayPanel::from_minute_csv(minute_csv(midnight - 60, &prices).as_bytes(), 60).unwrap();
        assert_eq!(p.days(), 2);
        assert_eq!(p.knots_per_day(), 24);
        assert_eq!(p.dates()[0], NaiveDate::from_ymd_opt(2021, 1, 1).unwrap());
        assert!(p.window(1, 23).iter().all(|r| (r - 0.0001).abs() < 1e-12));
        let closes = p.log_closes();
        assert!((closes[0][0] - (prices[60].ln())).abs() < 1e-9);

        // starting exactly at midnight drops the first day
        let p = IntradayPanel::from_minute_csv(minute_csv(midnight, &prices).as_bytes(), 60).unwrap();
        assert_eq!(p.days(), 1);
        assert_eq!(p.dates()[0], NaiveDate::from_ymd_opt(2021, 1, 2).unwrap());
    }

    #[test]
    fn minute_csv_rejects_gaps_and_bad_rows() {
        let mut text = minute_csv(0, &[1.0; 5]);
        text.push_str("400,1.0\n");
        assert!(IntradayPanel::from_minute_csv(text.as_bytes(), 60).is_err());
        assert!(IntradayPanel::from_minute_csv("timestamp,price\n0,1,2\n".as_bytes(), 60).is_err());
        assert!(IntradayPanel::from_minute_csv("time,price\n0,1\n".as_bytes(), 60).is_err());
        assert!(IntradayPanel::from_minute_csv(minute_csv(0, &[1.0; 5]).as_bytes(), 7).is_err());
    }

    #[test]
    fn iso_timestamps_parse() {
        assert_eq!(parse_timestamp("1970-01-01 00:01:00").unwrap(), 60);
        assert_eq!(parse_timestamp("1970-01-01T00:02:00Z").unwrap(), 120);
        assert!(parse_timestamp("1970-01-01 00:01:30").is_err());
    }
}
