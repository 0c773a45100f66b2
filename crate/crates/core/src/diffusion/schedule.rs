use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Map `t ↦ α_t` on the grid `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    alphas: Vec<f64>,
    id: String,
}

/// Which schedule entry feeds the features labelled `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaIndex {
    /// Use `α_t`.
    #[default]
    Current,
    /// Use `α_{t−1}`, with `α_0 = 0`.
    Previous,
}

impl FromStr for AlphaIndex {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "t" => Ok(AlphaIndex::Current),
            "t-1" => Ok(AlphaIndex::Previous),
            other => Err(format!("alpha index must be 't' or 't-1', got '{other}'")),
        }
    }
}

impl fmt::Display for AlphaIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaIndex::Current => "t",
            AlphaIndex::Previous => "t-1",
        })
    }
}

/// `α_t = t/T`.
pub fn linear_schedule(total_timesteps: u32) -> Result<NoiseSchedule> {
    if total_timesteps == 0 {
        return Err(Error::ScheduleError("T must be >= 1".into()));
    }
    let t_max = total_timesteps as f64;
    Ok(NoiseSchedule {
        alphas: (1..=total_timesteps).map(|t| t as f64 / t_max).collect(),
        id: "linear".into(),
    })
}

impl NoiseSchedule {
    /// Schedule from explicit values `α_1..α_T`. Values must lie in `[0, 1]`
    /// and be non-decreasing.
    pub fn from_alphas(alphas: Vec<f64>, id: impl Into<String>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::ScheduleError("schedule has no timesteps".into()));
        }
        for (i, &a) in alphas.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::ScheduleError(format!("alpha_{} = {a} outside [0, 1]", i + 1)));
            }
        }
        if let Some(i) = alphas.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::ScheduleError(format!(
                "alpha decreases from t={} to t={}",
                i + 1,
                i + 2
            )));
        }
        Ok(NoiseSchedule {
            alphas,
            id: id.into(),
        })
    }

    /// Read a `t,alpha` CSV with rows for `t = 1..=T` in order.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::ScheduleError(format!("{}: {e}", path.display())))?;
        let headers = rdr
            .headers()
            .map_err(|e| Error::ScheduleError(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "alpha"] {
            return Err(Error::ScheduleError(format!(
                "{}: header must be 't,alpha'",
                path.display()
            )));
        }
        let mut alphas = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::ScheduleError(e.to_string()))?;
            let t: u32 = rec[0]
                .parse()
                .map_err(|_| Error::ScheduleError(format!("row {}: bad t '{}'", i + 1, &rec[0])))?;
            if t as usize != i + 1 {
                return Err(Error::ScheduleError(format!(
                    "row {} has t={t}; rows must run 1..T in order",
                    i + 1
                )));
            }
            let a: f64 = rec[1]
                .parse()
                .map_err(|_| Error::ScheduleError(format!("row {}: bad alpha '{}'", i + 1, &rec[1])))?;
            alphas.push(a);
        }
        Self::from_alphas(alphas, format!("csv:{}", path.display()))
    }

    pub fn total_timesteps(&self) -> u32 {
        self.alphas.len() as u32
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `α_t` for `t ∈ [1, T]`; `α_0` is defined as 0.
    pub fn alpha(&self, t: u32) -> Result<f64> {
        match t {
            0 => Ok(0.0),
            t if t <= self.total_timesteps() => Ok(self.alphas[t as usize - 1]),
            t => Err(Error::ScheduleError(format!(
                "timestep {t} outside [1, {}]",
                self.total_timesteps()
            ))),
        }
    }

    pub fn alpha_for(&self, t: u32, index: AlphaIndex) -> Result<f64> {
        if t == 0 || t > self.total_timesteps() {
            return Err(Error::ScheduleError(format!(
                "timestep {t} outside [1, {}]",
                self.total_timesteps()
            )));
        }
        match index {
            AlphaIndex::Current => self.alpha(t),
            AlphaIndex::Previous => self.alpha(t - 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn linear_values() {
        let s = linear_schedule(1000).unwrap();
        assert_eq!(s.alpha(1).unwrap(), 0.001);
        assert_eq!(s.alpha(1000).unwrap(), 1.0);
        assert_eq!(linear_schedule(1).unwrap().alphas(), &[1.0]);
        assert_eq!(linear_schedule(4).unwrap().alphas(), &[0.25, 0.5, 0.75, 1.0]);
        assert!(linear_schedule(0).is_err());
    }

    #[test]
    fn alpha_index_offsets() {
        let s = linear_schedule(4).unwrap();
        assert_eq!(s.alpha_for(2, AlphaIndex::Current).unwrap(), 0.5);
        assert_eq!(s.alpha_for(2, AlphaIndex::Previous).unwrap(), 0.25);
        assert_eq!(s.alpha_for(1, AlphaIndex::Previous).unwrap(), 0.0);
        assert!(s.alpha_for(5, AlphaIndex::Current).is_err());
        assert!(s.alpha_for(0, AlphaIndex::Current).is_err());
        assert_eq!("t-1".parse::<AlphaIndex>().unwrap(), AlphaIndex::Previous);
        assert!("x".parse::<AlphaIndex>().is_err());
    }

    #[test]
    fn csv_schedule() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::File::create(&p)
            .unwrap()
            .write_all(b"t,alpha\n1,0\n2,0.5\n3,1\n")
            .unwrap();
        let s = NoiseSchedule::from_csv(&p).unwrap();
        assert_eq!(s.alphas(), &[0.0, 0.5, 1.0]);
        assert!(s.id().starts_with("csv:"));

        for bad in [
            "t,a\n1,0\n",
            "t,alpha\n2,0\n",
            "t,alpha\n1,0.5\n2,0.2\n",
            "t,alpha\n1,1.5\n",
            "t,alpha\n1,x\n",
            "t,alpha\n",
        ] {
            std::fs::write(&p, bad).unwrap();
            assert!(matches!(NoiseSchedule::from_csv(&p), Err(Error::ScheduleError(_))), "{bad:?}");
        }
    }
}
