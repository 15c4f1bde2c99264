use super::{Status, ZError};

/// Swings between consecutive turning points whose ratio stays inside this
/// band count as non-shrinking.
pub const SWING_BAND: (f64, f64) = (0.8, 1.25);

/// Only the most recent swings matter; early transients are ignored.
const RECENT_SWINGS: usize = 4;

/// Classify a sequence of bracket values.
///
/// * `Converged` when the last `window` values span at most `tol`.
/// * `Oscillatory` when the sequence reverses direction at least twice (moves
///   of at most `tol` are ignored) and the recent swings between turning
///   points neither shrink nor grow beyond the ratio band.
/// * `Drifting` otherwise, including sequences with non-finite values.
pub fn classify_sequence(values: &[f64], window: usize, tol: f64) -> Result<Status, ZError> {
    if window < 2 || values.len() < window {
        return Err(ZError::TooFewSamples {
            have: values.len(),
            need: window.max(2),
        });
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(ZError::InvalidConfig(format!("tol must be non-negative, got {tol}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Ok(Status::Drifting);
    }
    if spread(&values[values.len() - window..]) <= tol {
        return Ok(Status::Converged);
    }
    // two reversals give the first full swing
    let swings = swings(values, tol);
    if swings.is_empty() {
        return Ok(Status::Drifting);
    }
    let recent = &swings[swings.len().saturating_sub(RECENT_SWINGS)..];
    let steady = recent.windows(2).all(|w| {
        let ratio = w[1] / w[0];
        (SWING_BAND.0..=SWING_BAND.1).contains(&ratio)
    });
    Ok(if steady { Status::Oscillatory } else { Status::Drifting })
}

/// Absolute changes between consecutive turning points of `values`.
pub fn swings(values: &[f64], tol: f64) -> Vec<f64> {
    turning_points(values, tol)
        .windows(2)
        .map(|w| (values[w[1]] - values[w[0]]).abs())
        .collect()
}

pub(crate) fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    hi - lo
}

/// Indices where the sequence changes direction, found with a zigzag scan
/// that only commits to a direction after a move larger than `tol`.
fn turning_points(values: &[f64], tol: f64) -> Vec<usize> {
    let mut turns = Vec::new();
    let mut extreme = 0usize;
    let mut dir = 0i8;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let d = v - values[extreme];
        match dir {
            0 => {
                if d.abs() > tol {
                    dir = if d > 0.0 { 1 } else { -1 };
                    extreme = i;
                }
            }
            1 => {
                if v >= values[extreme] {
                    extreme = i;
                } else if -d > tol {
                    turns.push(extreme);
                    dir = -1;
                    extreme = i;
                }
            }
            _ => {
                if v <= values[extreme] {
                    extreme = i;
                } else if d > tol {
                    turns.push(extreme);
                    dir = 1;
                    extreme = i;
                }
            }
        }
    }
    turns
}
