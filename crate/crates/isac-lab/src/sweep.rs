//! Sweep-axis parsing: `param=start:stop:points:scale`.

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScale {
    /// Uniform in the value.
    Lin,
    /// Uniform in log10(value); endpoints in natural units.
    Log,
    /// Uniform in dB; endpoints already given in dB (numerically the same
    /// spacing as `lin`, kept so commands read naturally).
    Db,
}

#[derive(Debug, Clone)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
    pub scale: SweepScale,
}

impl SweepAxis {
    /// Parse `name=start:stop:points:scale`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |msg: &str| CliError::Sweep(format!("{msg} (in '{text}')"));
        let (param, rest) = text.split_once('=').ok_or_else(|| bad("missing '='"))?;
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 4 {
            return Err(bad("expected start:stop:points:scale"));
        }
        let start: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = parts[1].parse().map_err(|_| bad("bad stop"))?;
        let points: usize = parts[2].parse().map_err(|_| bad("bad point count"))?;
        if points < 2 {
            return Err(bad("sweeps need at least 2 points"));
        }
        let scale = match parts[3] {
            "lin" => SweepScale::Lin,
            "log" => SweepScale::Log,
            "db" | "dB" => SweepScale::Db,
            _ => return Err(bad("scale must be lin, log or db")),
        };
        if scale == SweepScale::Log && (start <= 0.0 || stop <= 0.0) {
            return Err(bad("log scale needs positive endpoints"));
        }
        let values = (0..points)
            .map(|i| {
                let t = i as f64 / (points - 1) as f64;
                match scale {
                    SweepScale::Lin | SweepScale::Db => start + t * (stop - start),
                    SweepScale::Log => {
                        10f64.powf(start.log10() + t * (stop.log10() - start.log10()))
                    }
                }
            })
            .collect();
        Ok(Self {
            param: param.to_string(),
            values,
            scale,
        })
    }

    /// Integer-rounded, deduplicated, ascending values (for symbol counts).
    pub fn integer_values(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .values
            .iter()
            .map(|&x| x.round().max(1.0) as u64)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}
