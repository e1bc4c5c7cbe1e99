//! Grid specifications of the form `log:<min>:<max>:<count>` or
//! `lin:<min>:<max>:<count>`.

use ddlab_core::engine::{Axis, Scale};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("expected `log|lin:<min>:<max>:<count>`, found `{0}`")]
    Shape(String),
    #[error("unknown scale `{0}` (use log or lin)")]
    Scale(String),
    #[error("`{0}` is not a number")]
    Number(String),
    #[error("`{0}` is not a point count")]
    Count(String),
    #[error("{0}")]
    Range(String),
}

pub fn parse_axis(name: &str, spec: &str) -> Result<Axis, GridError> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let [scale, min, max, count] = parts.as_slice() else {
        return Err(GridError::Shape(spec.to_string()));
    };
    let scale = match *scale {
        "log" => Scale::Log,
        "lin" => Scale::Linear,
        other => return Err(GridError::Scale(other.to_string())),
    };
    let number = |s: &str| s.parse::<f64>().map_err(|_| GridError::Number(s.to_string()));
    let (min, max) = (number(min)?, number(max)?);
    let count: usize = count.parse().map_err(|_| GridError::Count(count.to_string()))?;
    Axis::new(name, scale, min, max, count).map_err(|e| GridError::Range(e.to_string()))
}

/// Inverse of [`parse_axis`].
pub fn format_axis(axis: &Axis) -> String {
    let scale = match axis.scale {
        Scale::Log => "log",
        Scale::Linear => "lin",
    };
    format!("{scale}:{}:{}:{}", axis.min, axis.max, axis.count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_both_scales() {
        let a = parse_axis("t", "log:1:1e7:60").unwrap();
        assert_eq!((a.scale, a.min, a.max, a.count), (Scale::Log, 1.0, 1e7, 60));
        let b = parse_axis("t", "lin:0:10:11").unwrap();
        assert_eq!(b.values()[3], 3.0);
    }

    #[test]
    fn rejects_malformed_specs() {
        assert!(matches!(parse_axis("t", "log:1:1e7"), Err(GridError::Shape(_))));
        assert!(matches!(parse_axis("t", "exp:1:2:3"), Err(GridError::Scale(_))));
        assert!(matches!(parse_axis("t", "log:a:2:3"), Err(GridError::Number(_))));
        assert!(matches!(parse_axis("t", "log:1:2:-3"), Err(GridError::Count(_))));
        assert!(matches!(parse_axis("t", "log:0:2:3"), Err(GridError::Range(_))));
        assert!(matches!(parse_axis("t", "lin:5:2:3"), Err(GridError::Range(_))));
        assert!(matches!(parse_axis("t", "lin:1:2:1"), Err(GridError::Range(_))));
    }

    proptest! {
        #[test]
        fn format_round_trips(min in 1e-6f64..1e3, span in 1.01f64..1e6, count in 2usize..500, log in any::<bool>()) {
            let scale = if log { Scale::Log } else { Scale::Linear };
            let axis = Axis::new("t", scale, min, min * span, count).unwrap();
            prop_assert_eq!(parse_axis("t", &format_axis(&axis)).unwrap(), axis);
        }
    }
}
