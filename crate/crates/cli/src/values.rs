//! Value lists on the command line: comma-separated items, each a single
//! number `a`, an inclusive range `a-b` with step 1, or `a-b:step`.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ValueList(Vec<f64>);

impl ValueList {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// The single value, if the list has exactly one.
    pub fn single(&self) -> Option<f64> {
        match self.0.as_slice() {
            [v] => Some(*v),
            _ => None,
        }
    }

    /// All values as whole, non-negative counts.
    pub fn counts(&self, flag: &str) -> Result<Vec<usize>, String> {
        self.0
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(format!("--{flag} expects whole numbers, got {v}"))
                }
            })
            .collect()
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not a finite number: {s:?}"))
    }
}

fn expand(item: &str, out: &mut Vec<f64>) -> Result<(), String> {
    let (range, step) = match item.split_once(':') {
        Some((r, s)) => (r, number(s)?),
        None => (item, 1.0),
    };
    // a leading minus would be a sign, but no flag takes negative values
    let Some((lo, hi)) = range.split_once('-') else {
        if item.contains(':') {
            return Err(format!("step given without a range in {item:?}"));
        }
        out.push(number(range)?);
        return Ok(());
    };
    let (lo, hi) = (number(lo)?, number(hi)?);
    if step <= 0.0 {
        return Err(format!("range step must be positive in {item:?}"));
    }
    if hi < lo {
        return Err(format!("range {item:?} runs backwards"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(format!("range {item:?} has too many values"));
    }
    // index times step keeps long float ranges from drifting
    out.extend((0..count).map(|i| {
        let v = lo + i as f64 * step;
        (v * 1e12).round() / 1e12
    }));
    Ok(())
}

impl FromStr for ValueList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for item in s.split(',') {
            let item = item.trim();
            if item.is_empty() {
                return Err(format!("empty item in value list {s:?}"));
            }
            expand(item, &mut out)?;
        }
        Ok(ValueList(out))
    }
}

impl fmt::Display for ValueList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Vec<f64> {
        s.parse::<ValueList>().unwrap().0
    }

    #[test]
    fn items_and_ranges() {
        assert_eq!(parse("90300"), vec![90300.0]);
        assert_eq!(parse("1-4"), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(parse("144-2016:936"), vec![144.0, 1080.0, 2016.0]);
        assert_eq!(parse("5,1-2"), vec![5.0, 1.0, 2.0]);
        assert_eq!(parse("0.1-0.3:0.1"), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse("0.33"), vec![0.33]);
    }

    #[test]
    fn rejects_bad_lists() {
        for bad in ["", "a", "1,,2", "3-1", "1-2:0", "1:2", "inf"] {
            assert!(bad.parse::<ValueList>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn counts_need_whole_numbers() {
        let v: ValueList = "1-3".parse().unwrap();
        assert_eq!(v.counts("n").unwrap(), vec![1, 2, 3]);
        let v: ValueList = "0.5".parse().unwrap();
        assert!(v.counts("n").is_err());
    }
}
