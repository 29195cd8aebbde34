//! Concave fairness functions over per-player utilities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FairnessError {
    #[error("fairness function has {found} weights for {expected} players")]
    WrongArity { expected: usize, found: usize },
    #[error("fairness weight {index} is {value}; weights must be finite and nonnegative")]
    BadWeight { index: usize, value: f64 },
    #[error("min-with-cap needs a positive finite cap, got {0}")]
    BadCap(f64),
    #[error("unrecognized fairness expression `{0}`")]
    Unrecognized(String),
}

/// `φ(u)` in one of three concave families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FairnessFunction {
    /// `Σ w_i log(1 + u_i)`
    WeightedLog { weights: Vec<f64> },
    /// `min(u_1, …, u_N, cap)`
    MinWithCap { cap: f64 },
    /// `Σ w_i u_i`
    Linear { weights: Vec<f64> },
}

impl FairnessFunction {
    pub fn weighted_log(weights: impl Into<Vec<f64>>) -> Self {
        Self::WeightedLog {
            weights: weights.into(),
        }
    }

    pub fn linear(weights: impl Into<Vec<f64>>) -> Self {
        Self::Linear {
            weights: weights.into(),
        }
    }

    pub fn min_with_cap(cap: f64) -> Self {
        Self::MinWithCap { cap }
    }

    pub fn validate(&self, num_players: usize) -> Result<(), FairnessError> {
        match self {
            Self::WeightedLog { weights } | Self::Linear { weights } => {
                if weights.len() != num_players {
                    return Err(FairnessError::WrongArity {
                        expected: num_players,
                        found: weights.len(),
                    });
                }
                for (index, &value) in weights.iter().enumerate() {
                    if !(value.is_finite() && value >= 0.0) {
                        return Err(FairnessError::BadWeight { index, value });
                    }
                }
                Ok(())
            }
            Self::MinWithCap { cap } => {
                if cap.is_finite() && *cap > 0.0 {
                    Ok(())
                } else {
                    Err(FairnessError::BadCap(*cap))
                }
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Linear { .. })
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        match self {
            Self::WeightedLog { weights } => weights
                .iter()
                .zip(u)
                .map(|(w, x)| w * x.ln_1p())
                .sum(),
            Self::Linear { weights } => weights.iter().zip(u).map(|(w, x)| w * x).sum(),
            Self::MinWithCap { cap } => u.iter().copied().fold(*cap, f64::min),
        }
    }

    /// Writes a supergradient at `u` into `out`.
    ///
    /// For min-with-cap the first minimizing coordinate carries the unit
    /// weight; the gradient is zero when the cap is the strict minimum.
    pub fn supergradient(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Self::WeightedLog { weights } => {
                for ((o, w), x) in out.iter_mut().zip(weights).zip(u) {
                    *o = w / (1.0 + x);
                }
            }
            Self::Linear { weights } => out.copy_from_slice(weights),
            Self::MinWithCap { cap } => {
                out.fill(0.0);
                let mut arg = None;
                let mut min = f64::INFINITY;
                for (i, &x) in u.iter().enumerate() {
                    if x < min {
                        min = x;
                        arg = Some(i);
                    }
                }
                if let Some(i) = arg.filter(|_| min <= *cap) {
                    out[i] = 1.0;
                }
            }
        }
    }

    /// Maximum of `φ` over the box `×_i [0, caps_i]`.
    pub fn g_max(&self, caps: &[f64]) -> f64 {
        match self {
            Self::MinWithCap { cap } => caps.iter().copied().fold(*cap, f64::min),
            // Both separable kinds are nondecreasing with nonnegative weights.
            _ => self.value(caps),
        }
    }

    /// Parses the textual forms accepted on the command line.
    ///
    /// Accepted: a sum of terms `w*log(1+uK)` (weighted-log), a sum of terms
    /// `w*uK` (linear), `min(u1,…,uN,c)`, or the structured forms
    /// `log:w1,w2,…`, `linear:w1,w2,…`, `min:c`. Player indices are 1-based;
    /// players absent from a sum get weight 0.
    pub fn parse(text: &str, num_players: usize) -> Result<Self, FairnessError> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let err = || FairnessError::Unrecognized(text.to_string());

        if let Some((kind, params)) = compact.split_once(':') {
            let nums = || -> Result<Vec<f64>, FairnessError> {
                params
                    .split(',')
                    .map(|p| p.parse::<f64>().map_err(|_| err()))
                    .collect()
            };
            let f = match kind {
                "log" | "weighted-log" => Self::weighted_log(nums()?),
                "linear" => Self::linear(nums()?),
                "min" | "min-with-cap" => {
                    let v = nums()?;
                    if v.len() != 1 {
                        return Err(err());
                    }
                    Self::min_with_cap(v[0])
                }
                _ => return Err(err()),
            };
            f.validate(num_players)?;
            return Ok(f);
        }

        if let Some(inner) = compact
            .strip_prefix("min(")
            .and_then(|s| s.strip_suffix(')'))
        {
            let parts: Vec<&str> = inner.split(',').collect();
            let (last, vars) = parts.split_last().ok_or_else(err)?;
            let mut seen = vec![false; num_players];
            for v in vars {
                let k = player_ref(v, num_players).ok_or_else(err)?;
                seen[k] = true;
            }
            if !seen.iter().all(|&s| s) {
                return Err(err());
            }
            let cap: f64 = last.parse().map_err(|_| err())?;
            let f = Self::min_with_cap(cap);
            f.validate(num_players)?;
            return Ok(f);
        }

        let mut weights = vec![0.0; num_players];
        let mut log_terms = None;
        for term in split_top_level(&compact) {
            let (coef, body) = match term.split_once('*') {
                Some((c, b)) => (c.parse::<f64>().map_err(|_| err())?, b),
                None => (1.0, term),
            };
            let (is_log, var) = match body
                .strip_prefix("log(1+")
                .and_then(|s| s.strip_suffix(')'))
            {
                Some(v) => (true, v),
                None => (false, body),
            };
            if *log_terms.get_or_insert(is_log) != is_log {
                return Err(err());
            }
            let k = player_ref(var, num_players).ok_or_else(err)?;
            weights[k] += coef;
        }
        let f = if log_terms.ok_or_else(err)? {
            Self::weighted_log(weights)
        } else {
            Self::linear(weights)
        };
        f.validate(num_players)?;
        Ok(f)
    }
}

/// Splits on `+` signs outside parentheses.
fn split_top_level(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}

fn player_ref(var: &str, num_players: usize) -> Option<usize> {
    let k: usize = var.strip_prefix('u')?.parse().ok()?;
    (1..=num_players).contains(&k).then(|| k - 1)
}
