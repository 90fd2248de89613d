//! Year-indexed value series shared by the profiling and geometry modules.

use serde::{Deserialize, Serialize};

/// A contiguous year-indexed series. Missing years are represented as `None`
/// so that gaps (e.g. years with no eligible papers) survive aggregation and
/// serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSeries {
    pub start_year: i32,
    pub values: Vec<Option<f64>>,
}

impl TemporalSeries {
    pub fn new(start_year: i32, values: Vec<Option<f64>>) -> Self {
        debug_assert!(values.iter().flatten().all(|v| v.is_finite()));
        TemporalSeries { start_year, values }
    }

    /// Series covering `start..=end` with every year undefined.
    pub fn empty(start_year: i32, end_year: i32) -> Self {
        let len = (end_year - start_year + 1).max(0) as usize;
        TemporalSeries {
            start_year,
            values: vec![None; len],
        }
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        if year < self.start_year {
            return None;
        }
        self.values.get((year - self.start_year) as usize).copied().flatten()
    }

    pub fn set(&mut self, year: i32, value: f64) {
        debug_assert!(value.is_finite());
        let idx = (year - self.start_year) as usize;
        self.values[idx] = Some(value);
    }

    /// `(year, value)` pairs for the defined entries only.
    pub fn defined(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(move |(i, v)| v.map(|x| (self.start_year + i as i32, x)))
    }

    /// All years with their (possibly missing) values.
    pub fn iter_years(&self) -> impl Iterator<Item = (i32, Option<f64>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.start_year + i as i32, *v))
    }

    /// Trailing rolling mean over `window` years. A window with no defined
    /// entries stays undefined; otherwise the mean runs over the defined
    /// entries inside the window. The first `window - 1` years are undefined.
    pub fn rolling_mean(&self, window: usize) -> TemporalSeries {
        assert!(window >= 1, "window must be at least 1");
        let mut out = vec![None; self.values.len()];
        for i in (window - 1)..self.values.len() {
            let slice = &self.values[i + 1 - window..=i];
            let defined: Vec<f64> = slice.iter().flatten().copied().collect();
            if !defined.is_empty() {
                out[i] = Some(defined.iter().sum::<f64>() / defined.len() as f64);
            }
        }
        TemporalSeries {
            start_year: self.start_year,
            values: out,
        }
    }

    /// Discrete second difference v[y+1] - 2 v[y] + v[y-1]; undefined where
    /// any operand is missing.
    pub fn second_difference(&self) -> TemporalSeries {
        let n = self.values.len();
        let mut out = vec![None; n];
        for i in 1..n.saturating_sub(1) {
            if let (Some(a), Some(b), Some(c)) =
                (self.values[i - 1], self.values[i], self.values[i + 1])
            {
                out[i] = Some(c - 2.0 * b + a);
            }
        }
        TemporalSeries {
            start_year: self.start_year,
            values: out,
        }
    }
}

/// Population standard deviation (the convention used for the reported
/// standard errors: stdev / sqrt(n)).
pub fn population_stdev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

/// Standard error: population stdev over sqrt(count).
pub fn standard_error(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    population_stdev(values) / (values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn get_set_roundtrip() {
        let mut s = TemporalSeries::empty(2000, 2004);
        s.set(2002, 1.5);
        assert_eq!(s.get(2002), Some(1.5));
        assert_eq!(s.get(2001), None);
        assert_eq!(s.get(1999), None);
        assert_eq!(s.end_year(), 2004);
    }

    #[test]
    fn rolling_mean_skips_gaps() {
        let s = TemporalSeries::new(2000, vec![Some(1.0), None, Some(3.0), Some(5.0)]);
        let r = s.rolling_mean(2);
        assert_eq!(r.get(2000), None);
        assert_eq!(r.get(2001), Some(1.0));
        assert_eq!(r.get(2002), Some(3.0));
        assert_eq!(r.get(2003), Some(4.0));
    }

    #[test]
    fn second_difference_of_linear_is_zero() {
        let s = TemporalSeries::new(2000, (0..5).map(|i| Some(2.0 * i as f64)).collect());
        let d = s.second_difference();
        for (_, v) in d.defined() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(standard_error(&[2.0, 2.0, 2.0]), 0.0);
    }
}
