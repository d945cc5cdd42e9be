//! Run configuration, validation and exit codes.

use std::str::FromStr;

use polychain_core::linalg::Q;
use polychain_core::{Error as CoreError, DEFAULT_CELL_BUDGET};
use serde::Serialize;
use thiserror::Error;

/// Environment variable that overrides the cell budget. Setting it counts
/// as acknowledging a budget above the default.
pub const BUDGET_ENV: &str = "POLYCHAIN_CELL_BUDGET";

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_BUDGET: u8 = 2;
pub const EXIT_CONFIG: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON in {path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(CoreError::BudgetExceeded { .. }) => EXIT_BUDGET,
            CliError::Core(
                CoreError::BadSystemSpec(_)
                | CoreError::UnsupportedSeries(_)
                | CoreError::RankZero
                | CoreError::RankTooLarge(_)
                | CoreError::InvalidParameter(_),
            ) => EXIT_CONFIG,
            CliError::Json { .. } => EXIT_CONFIG,
            _ => EXIT_CHECK_FAILED,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parses `3`, `-2`, `7/2` or `0.5` into an exact rational.
pub fn parse_q(s: &str) -> Result<Q, String> {
    let s = s.trim();
    let bad = || format!("`{s}` is not a rational number");
    if let Some((n, d)) = s.split_once('/') {
        let n = i128::from_str(n.trim()).map_err(|_| bad())?;
        let d = i128::from_str(d.trim()).map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let i = if int.is_empty() || int == "-" { 0 } else { i128::from_str(int).map_err(|_| bad())?.abs() };
        let den = 10i128.pow(frac.len() as u32);
        let f = i128::from_str(frac).map_err(|_| bad())?;
        let v = Q::new(i * den + f, den);
        return Ok(if neg { -v } else { v });
    }
    i128::from_str(s).map(Q::from_integer).map_err(|_| bad())
}

pub fn q_string(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// The complex a command runs on.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Apartment {
        system: String,
        #[serde(serialize_with = "ser_q")]
        radius: Q,
    },
    Tree { branching: usize, depth: usize },
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q_string(x))
}

impl Target {
    pub fn from_flags(
        system: Option<&str>,
        radius: Option<&str>,
        tree: Option<usize>,
        depth: Option<usize>,
    ) -> CliResult<Target> {
        match (system, tree) {
            (Some(_), Some(_)) => Err(CliError::Config("give either --system or --tree, not both".into())),
            (Some(s), None) => {
                let r = radius.ok_or_else(|| CliError::Config("--radius is required with --system".into()))?;
                let radius = parse_q(r).map_err(CliError::Config)?;
                if radius < Q::from_integer(1) {
                    return Err(CliError::Config(format!("radius {r} is below 1")));
                }
                Ok(Target::Apartment { system: s.to_string(), radius })
            }
            (None, Some(b)) => {
                if b == 0 {
                    return Err(CliError::Config("tree branching must be at least 1".into()));
                }
                let d = depth.ok_or_else(|| CliError::Config("--depth is required with --tree".into()))?;
                if d == 0 {
                    return Err(CliError::Config("tree depth must be at least 1".into()));
                }
                Ok(Target::Tree { branching: b, depth: d })
            }
            (None, None) => Err(CliError::Config("one of --system or --tree is required".into())),
        }
    }

    /// The same kind of complex one step larger.
    pub fn grown(&self) -> Target {
        match self {
            Target::Apartment { system, radius } => {
                Target::Apartment { system: system.clone(), radius: radius + Q::from_integer(1) }
            }
            Target::Tree { branching, depth } => Target::Tree { branching: *branching, depth: depth + 1 },
        }
    }
}

/// Cell budget: the flag wins over the environment; values above the
/// default need `acknowledged` or must come from the environment.
pub fn resolve_budget(flag: Option<usize>, acknowledged: bool) -> CliResult<usize> {
    let env = match std::env::var(BUDGET_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("{BUDGET_ENV}=`{v}` is not a cell count")))?,
        ),
        Err(_) => None,
    };
    let budget = flag.or(env).unwrap_or(DEFAULT_CELL_BUDGET);
    if budget == 0 {
        return Err(CliError::Config("cell budget must be positive".into()));
    }
    if flag.is_some() && budget > DEFAULT_CELL_BUDGET && !acknowledged {
        return Err(CliError::Config(format!(
            "budget {budget} exceeds the default {DEFAULT_CELL_BUDGET}; pass --allow-large-budget"
        )));
    }
    Ok(budget)
}

pub fn parse_list(s: &str) -> CliResult<Vec<u32>> {
    s.split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|_| CliError::Config(format!("`{p}` is not a norm index"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(parse_q("3").unwrap(), Q::from_integer(3));
        assert_eq!(parse_q("0.5").unwrap(), Q::new(1, 2));
        assert_eq!(parse_q("-1.25").unwrap(), Q::new(-5, 4));
        assert_eq!(parse_q("7/2").unwrap(), Q::new(7, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert_eq!(q_string(&Q::new(-3, 6)), "-1/2");
    }

    #[test]
    fn targets() {
        let t = Target::from_flags(Some("A2"), Some("3"), None, None).unwrap();
        assert_eq!(t.grown(), Target::Apartment { system: "A2".into(), radius: Q::from_integer(4) });
        let e = Target::from_flags(Some("A2"), Some("0.5"), None, None).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        assert!(Target::from_flags(None, None, Some(2), None).is_err());
        assert!(Target::from_flags(None, None, None, None).is_err());
    }

    #[test]
    fn budget_needs_acknowledgment() {
        assert!(resolve_budget(Some(DEFAULT_CELL_BUDGET + 1), false).is_err());
        assert_eq!(resolve_budget(Some(10), false).unwrap(), 10);
        assert_eq!(resolve_budget(Some(DEFAULT_CELL_BUDGET * 2), true).unwrap(), DEFAULT_CELL_BUDGET * 2);
    }
}
