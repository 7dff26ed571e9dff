//! Arguments of the `gen` subcommand and their translation into generator
//! parameters.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use prophet_dag::instances::{b_eps, Distribution, GeneratorParams, RandomFamily, RandomParams};
use prophet_dag::Error;

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Instance family.
    #[arg(value_enum)]
    pub family: Family,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Full generator parameters as JSON, e.g. '{"family":"kplus1","k":3,"eps":0.01}'.
    /// Overrides the family flags.
    #[arg(long, value_name = "JSON")]
    pub params: Option<String>,
    /// Number of candidates, steps or bidders.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Number of strands (kplus1, random strands) or grid rows.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Parameter of the B(eps) law.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Grid columns [default: max(k, 4)].
    #[arg(long)]
    pub cols: Option<usize>,
    /// Capacity of the pick label (mchoice).
    #[arg(long, default_value_t = 2)]
    pub m: u32,
    /// Number of markets.
    #[arg(long, default_value_t = 2)]
    pub markets: usize,
    /// Allowed lease terms (overtime, markets).
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub terms: Vec<usize>,
    /// Per-step law as p:v pairs, e.g. 0.5:2,0.5:0; masses may be fractions.
    /// Defaults to B(eps).
    #[arg(long)]
    pub law: Option<String>,
    /// Seed of the random family.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Node count of the random family.
    #[arg(long, default_value_t = 6)]
    pub nodes: usize,
    /// Shape of the random family.
    #[arg(long, value_enum, default_value_t = Shape::Layered)]
    pub shape: Shape,
    /// Labels of the random family.
    #[arg(long, default_value_t = 0)]
    pub labels: usize,
    /// Maximum labels per edge of the random family.
    #[arg(long, default_value_t = 1)]
    pub max_labels_per_edge: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Family {
    Classic,
    Overtime,
    Markets,
    Upper49,
    Grid,
    Kplus1,
    Mchoice,
    VertexMatching,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Shape {
    Layered,
    FocalPath,
    Strands,
}

/// What `gen` builds.
pub enum Request {
    Family(GeneratorParams),
    Random(RandomParams, u64),
}

fn parse_mass(s: &str) -> Result<f64, Error> {
    let bad = || Error::Params(format!("bad probability {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

/// Parses `p:v,p:v,...`.
pub fn parse_law(s: &str) -> Result<Distribution, Error> {
    s.split(',')
        .map(|pair| {
            let (p, v) = pair
                .split_once(':')
                .ok_or_else(|| Error::Params(format!("expected p:v, got {pair:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Params(format!("bad value {v:?}")))?;
            Ok((parse_mass(p)?, v))
        })
        .collect()
}

impl GenArgs {
    pub fn request(&self) -> Result<Request, Error> {
        if let Some(json) = &self.params {
            if let Family::Random = self.family {
                let params: RandomParams = serde_json::from_str(json)
                    .map_err(|e| Error::Params(format!("random params: {e}")))?;
                return Ok(Request::Random(params, self.seed));
            }
            let params: GeneratorParams = serde_json::from_str(json)
                .map_err(|e| Error::Params(format!("generator params: {e}")))?;
            return Ok(Request::Family(params));
        }
        let law = match &self.law {
            Some(s) => parse_law(s)?,
            None => b_eps(self.eps),
        };
        let n = self.n;
        Ok(Request::Family(match self.family {
            Family::Classic => GeneratorParams::Classic {
                candidates: vec![law; n],
                bypass_last: false,
            },
            Family::Overtime => GeneratorParams::Overtime {
                values: vec![law; n],
                terms: self.terms.clone(),
            },
            Family::Markets => GeneratorParams::Markets {
                values: vec![vec![law; n]; self.markets],
                terms: self.terms.clone(),
            },
            Family::Upper49 => GeneratorParams::Upper49 { eps: self.eps },
            Family::Grid => GeneratorParams::Grid {
                k: self.k,
                eps: self.eps,
                cols: self.cols,
            },
            Family::Kplus1 => GeneratorParams::Kplus1 {
                k: self.k,
                eps: self.eps,
            },
            Family::Mchoice => GeneratorParams::Mchoice {
                values: vec![law; n],
                m: self.m,
            },
            Family::VertexMatching => {
                return Err(Error::Params(
                    "vertex-matching needs bidder tables; pass them with --params".into(),
                ))
            }
            Family::Random => {
                let family = match self.shape {
                    Shape::Layered => RandomFamily::Layered,
                    Shape::FocalPath => RandomFamily::FocalPath,
                    Shape::Strands => RandomFamily::Strands { k: self.k },
                };
                let params = RandomParams {
                    family,
                    nodes: self.nodes,
                    labels: self.labels,
                    max_labels_per_edge: self.max_labels_per_edge,
                    ..RandomParams::default()
                };
                return Ok(Request::Random(params, self.seed));
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laws_accept_fractions() {
        let law = parse_law("1/3:3, 2/3:0").unwrap();
        assert!((law[0].0 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(law[1].1, 0.0);
        assert!(parse_law("0.5").is_err());
    }
}
