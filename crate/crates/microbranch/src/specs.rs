//! Small textual specs used by the CLI: log-spaced ranges and grid sizes.

use crate::error::{Error, Result};

/// A sweep range `a:b:n` meaning `n` log-spaced samples from `a` to `b`
/// inclusive; a bare number means a single sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn parse(input: &str) -> Result<Self> {
        let fail = |reason: &'static str| Error::RangeSpec { input: input.into(), reason };
        let parts: Vec<&str> = input.split(':').collect();
        match parts.len() {
            1 => {
                let v: f64 = parts[0].trim().parse().map_err(|_| fail("not a number"))?;
                if !v.is_finite() || v <= 0.0 {
                    return Err(fail("values must be finite and > 0"));
                }
                Ok(Self { lo: v, hi: v, count: 1 })
            }
            3 => {
                let lo: f64 = parts[0].trim().parse().map_err(|_| fail("bad lower bound"))?;
                let hi: f64 = parts[1].trim().parse().map_err(|_| fail("bad upper bound"))?;
                let count: usize =
                    parts[2].trim().parse().map_err(|_| fail("bad sample count"))?;
                if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi <= 0.0 {
                    return Err(fail("bounds must be finite and > 0 (log spacing)"));
                }
                if !(1..=100_000).contains(&count) {
                    return Err(fail("sample count must be in 1..=100000"));
                }
                if count == 1 && lo != hi {
                    return Err(fail("single sample needs equal bounds"));
                }
                Ok(Self { lo, hi, count })
            }
            _ => Err(fail("expected `value` or `lo:hi:count`")),
        }
    }

    /// The log-spaced samples, endpoints included.
    pub fn samples(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let (la, lb) = (self.lo.ln(), self.hi.ln());
        (0..self.count)
            .map(|i| {
                let t = i as f64 / (self.count - 1) as f64;
                (la + t * (lb - la)).exp()
            })
            .collect()
    }
}

/// Grid size `MxK` (columns x rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub m: usize,
    pub k: usize,
}

impl GridSpec {
    pub fn parse(input: &str) -> Result<Self> {
        let fail = |reason: &'static str| Error::GridSpec { input: input.into(), reason };
        let lower = input.trim().to_ascii_lowercase();
        let (a, b) = lower.split_once('x').ok_or_else(|| fail("expected `MxK`"))?;
        let m: usize = a.trim().parse().map_err(|_| fail("bad column count"))?;
        let k: usize = b.trim().parse().map_err(|_| fail("bad row count"))?;
        if m < 2 || k < 2 {
            return Err(fail("grid needs at least 2x2 cells"));
        }
        if m.saturating_mul(k) > 1_048_576 {
            return Err(fail("grid too large"));
        }
        Ok(Self { m, k })
    }
}

/// 17-significant-digit float formatting used in all CSV output.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parse_and_samples() {
        let r = RangeSpec::parse("1e-4:1:3").unwrap();
        let s = r.samples();
        assert_eq!(s.len(), 3);
        assert!((s[0] - 1e-4).abs() < 1e-18);
        assert!((s[1] - 1e-2).abs() < 1e-12);
        assert!((s[2] - 1.0).abs() < 1e-12);
        assert_eq!(RangeSpec::parse("0.5").unwrap().samples(), vec![0.5]);
    }

    #[test]
    fn range_rejects_malformed() {
        for bad in ["", "a:b:c", "1:2", "-1:1:5", "0:1:5", "1:inf:5", "1:2:0", "1:2:1"] {
            assert!(RangeSpec::parse(bad).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn grid_parse() {
        assert_eq!(GridSpec::parse("16x32").unwrap(), GridSpec { m: 16, k: 32 });
        assert_eq!(GridSpec::parse("8X16").unwrap(), GridSpec { m: 8, k: 16 });
        for bad in ["", "16", "0x4", "1x1", "axb", "99999999x99999999"] {
            assert!(GridSpec::parse(bad).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn seventeen_digit_floats_roundtrip() {
        for v in [1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 12345.6789] {
            let s = fmt_g17(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back);
        }
    }
}
