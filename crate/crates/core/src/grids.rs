//! Parameter grids for the criteria scans and the counterexample sweep.

use crate::{Error, Result};

/// A `lo:hi:n` grid specification as accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<GridSpec> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid `{s}` is not lo:hi:n")));
        }
        let lo: f64 = parts[0].parse().map_err(|_| Error::Parse(format!("bad grid lo `{}`", parts[0])))?;
        let hi: f64 = parts[1].parse().map_err(|_| Error::Parse(format!("bad grid hi `{}`", parts[1])))?;
        let n: usize = parts[2].parse().map_err(|_| Error::Parse(format!("bad grid n `{}`", parts[2])))?;
        if n == 0 || hi < lo {
            return Err(Error::Parse(format!("degenerate grid `{s}`")));
        }
        Ok(GridSpec { lo, hi, n })
    }

    pub fn log_points(&self) -> Vec<f64> {
        log_grid(self.lo, self.hi, self.n)
    }

    pub fn lin_points(&self) -> Vec<f64> {
        lin_grid(self.lo, self.hi, self.n)
    }
}

pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo);
    if n == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (llo + (lhi - llo) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Default resolvent-shift grid for the criteria scans: 64 logarithmic
/// points over `[1e-3, 1e3]`. The scan itself prepends `t = 0`.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 64)
}

/// Default power-exponent grid: 32 uniform points over `[0.5, 0.999]`.
/// The scan itself appends `s = 1`.
pub fn default_s_grid() -> Vec<f64> {
    lin_grid(0.5, 0.999, 32)
}

/// Default shift grid for the counterexample sweep: 96 logarithmic points
/// over `[1e-3, 1e4]`. The sweep itself adds `t = 0` and the square tag.
pub fn default_curve_t_grid() -> Vec<f64> {
    log_grid(1e-3, 1e4, 96)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let g = GridSpec::parse("1e-3:1e3:64").unwrap();
        assert_eq!(g, GridSpec { lo: 1e-3, hi: 1e3, n: 64 });
        assert!(GridSpec::parse("1:2").is_err());
        assert!(GridSpec::parse("2:1:5").is_err());
        assert!(GridSpec::parse("1:2:0").is_err());
    }

    #[test]
    fn grids_hit_endpoints() {
        let t = default_t_grid();
        assert_eq!(t.len(), 64);
        assert!((t[0] - 1e-3).abs() < 1e-15);
        assert!((t[63] - 1e3).abs() / 1e3 < 1e-12);
        let s = default_s_grid();
        assert_eq!(s.len(), 32);
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!((s[31] - 0.999).abs() < 1e-15);
        assert!(s.iter().all(|&v| v < 1.0));
    }
}
