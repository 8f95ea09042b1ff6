//! Correlation-length grid specs such as `lambda_s=30:45:5,lambda_d=42:50:4`.
//!
//! Values are kilometers. Each axis is either a single value or
//! `start:stop:step`, inclusive of `stop` when it lies on the step lattice.

use crate::error::CliError;

/// Axis values in meters, strike and dip.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lambda_s: Vec<f64>,
    pub lambda_d: Vec<f64>,
}

impl GridSpec {
    /// Strike-major cross product.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        slipinv::model_selection::lambda_grid(&self.lambda_s, &self.lambda_d)
    }
}

const MAX_AXIS_POINTS: usize = 10_000;

fn parse_axis(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("grid axis {key}: {why} in {text:?}"));
    let nums: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("not a number")))
        .collect::<Result<_, _>>()?;
    if nums.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(bad("values must be positive"));
    }
    let km = match nums.as_slice() {
        [v] => vec![*v],
        [start, stop, step] => {
            if stop < start {
                return Err(bad("stop below start"));
            }
            let count = ((stop - start) / step + 1e-9).floor();
            if !(count.is_finite() && count < MAX_AXIS_POINTS as f64) {
                return Err(bad("too many points"));
            }
            (0..=count as usize)
                .map(|k| start + step * k as f64)
                .collect()
        }
        _ => return Err(bad("expected value or start:stop:step")),
    };
    Ok(km.into_iter().map(|v| v * 1e3).collect())
}

pub fn parse_grid_spec(text: &str) -> Result<GridSpec, CliError> {
    let (mut s, mut d) = (None, None);
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("grid term {part:?} is not key=value")))?;
        let slot = match key.trim() {
            "lambda_s" => &mut s,
            "lambda_d" => &mut d,
            other => return Err(CliError::Usage(format!("unknown grid axis {other:?}"))),
        };
        if slot.is_some() {
            return Err(CliError::Usage(format!(
                "grid axis {} given twice",
                key.trim()
            )));
        }
        *slot = Some(parse_axis(key.trim(), value)?);
    }
    match (s, d) {
        (Some(lambda_s), Some(lambda_d)) => Ok(GridSpec { lambda_s, lambda_d }),
        (None, None) => Err(CliError::Usage("empty grid spec".into())),
        _ => Err(CliError::Usage(
            "grid spec needs both lambda_s and lambda_d".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_product() {
        let g = parse_grid_spec("lambda_s=30:45:5,lambda_d=42:50:4").unwrap();
        assert_eq!(g.lambda_s, vec![30e3, 35e3, 40e3, 45e3]);
        assert_eq!(g.lambda_d, vec![42e3, 46e3, 50e3]);
        let cells = g.cells();
        assert_eq!(cells.len(), 12);
        assert_eq!(cells[0], (30e3, 42e3));
        assert_eq!(cells[1], (30e3, 46e3));
        assert_eq!(cells[11], (45e3, 50e3));
    }

    #[test]
    fn single_values_and_spacing() {
        let g = parse_grid_spec(" lambda_d = 45 , lambda_s=40 ").unwrap();
        assert_eq!(g.cells(), vec![(40e3, 45e3)]);
        let g = parse_grid_spec("lambda_s=30:44:5,lambda_d=1").unwrap();
        assert_eq!(g.lambda_s, vec![30e3, 35e3, 40e3]);
    }

    #[test]
    fn usage_errors() {
        for bad in [
            "",
            " , ",
            "lambda_s=30",
            "lambda_s=30,lambda_s=31,lambda_d=2",
            "lambda_x=1,lambda_d=2",
            "lambda_s=a,lambda_d=2",
            "lambda_s=3:1:1,lambda_d=2",
            "lambda_s=1:2,lambda_d=2",
            "lambda_s=1:2:0,lambda_d=2",
            "lambda_s=1:1e9:1e-9,lambda_d=2",
            "lambda_s=-1,lambda_d=2",
            "lambda_s",
        ] {
            assert!(
                matches!(parse_grid_spec(bad), Err(CliError::Usage(_))),
                "{bad:?}"
            );
        }
    }
}
