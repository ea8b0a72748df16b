//! Flux grid arguments: a single value or `start:stop:step` in Φ/Φ₀.

use std::str::FromStr;

/// A parsed `--flux` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxGrid {
    /// Grid points, ascending for ranges.
    pub points: Vec<f64>,
}

impl FluxGrid {
    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True when no points parsed (cannot happen via `FromStr`).
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl FromStr for FluxGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [single] => {
                let value: f64 = single
                    .parse()
                    .map_err(|_| format!("invalid flux value '{single}'"))?;
                Ok(FluxGrid {
                    points: vec![value],
                })
            }
            [start, stop, step] => {
                let start: f64 = start
                    .parse()
                    .map_err(|_| format!("invalid start '{start}'"))?;
                let stop: f64 = stop.parse().map_err(|_| format!("invalid stop '{stop}'"))?;
                let step: f64 = step.parse().map_err(|_| format!("invalid step '{step}'"))?;
                if step.is_nan() || step <= 0.0 {
                    return Err("step must be positive".into());
                }
                if stop < start {
                    return Err("stop must be >= start".into());
                }
                let count = ((stop - start) / step).round() as usize;
                // Walk by index so accumulated rounding cannot drop the
                // endpoint.
                let mut points: Vec<f64> = (0..=count).map(|k| start + k as f64 * step).collect();
                if let Some(last) = points.last_mut() {
                    if (*last - stop).abs() < 1e-9 {
                        *last = stop;
                    } else if *last > stop + 1e-12 {
                        points.pop();
                    }
                }
                Ok(FluxGrid { points })
            }
            _ => Err(format!(
                "flux must be 'value' or 'start:stop:step', got '{s}'"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let grid: FluxGrid = "0.25".parse().unwrap();
        assert_eq!(grid.points, vec![0.25]);
    }

    #[test]
    fn range_includes_both_endpoints() {
        let grid: FluxGrid = "0:0.5:0.005".parse().unwrap();
        assert_eq!(grid.len(), 101);
        assert_eq!(grid.points[0], 0.0);
        assert_eq!(*grid.points.last().unwrap(), 0.5);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!("0:0.5".parse::<FluxGrid>().is_err());
        assert!("0:0.5:-0.1".parse::<FluxGrid>().is_err());
        assert!("a".parse::<FluxGrid>().is_err());
    }
}
