//! CSV run reports.
//!
//! Numbers are written in Rust's shortest round-trip decimal form, which
//! parses back to the identical `f64` (never more than 17 significant
//! digits).

use std::fmt::Write as _;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RunReport {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.header.join(",")).unwrap();
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    /// Values of one column, by header name.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn flag(pass: bool) -> String {
    if pass { "pass" } else { "fail" }.to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip_numbers() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(std::f64::consts::FRAC_PI_2), "1.5707963267948966");
        for v in [0.1 + 0.2, -1e-300, 123456.789e10, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn csv_layout() {
        let mut r = RunReport::new(&["a", "b"]);
        r.push(vec!["1".into(), flag(true)]);
        assert_eq!(r.to_csv(), "a,b\n1,pass\n");
        assert_eq!(r.column("b").unwrap(), vec!["pass"]);
    }
}
