//! Flag groups shared by the subcommands. Every knob is optional so a value
//! can come from the command line, the JSON config file, or the default, in
//! that order.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::archmodel::{StagingConfig, StagingMode};
use crate::deploy::{CostParams, SimOptions};
use crate::error::{Error, Result};
use crate::randgraph::{GeneratorConfig, GeneratorKind};
use crate::score::{ScoreWeights, DEFAULT_EPSILON_GRID};

pub const OUT_ENV: &str = "PARWIRE_OUT";

macro_rules! knobs {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, Args, Deserialize)]
        #[serde(default)]
        pub struct $name {
            $($(#[$fmeta])* pub $field: Option<$ty>,)*
        }

        impl $name {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            /// Values set here win over `fallback`.
            pub fn or(self, fallback: Self) -> Self {
                $name { $($field: self.$field.or(fallback.$field),)* }
            }
        }
    };
}

knobs!(GenKnobs {
    /// Generator family: er, ba, ws, dp or fb [default: dp]
    #[arg(long)]
    kind: GeneratorKind,
    /// Vertex count N [default: 40]
    #[arg(long)]
    n: usize,
    /// Edge probability P (ER, WS rewiring, DP base)
    #[arg(long)]
    p: f64,
    /// Edges per new vertex (BA)
    #[arg(long)]
    m: usize,
    /// Even ring degree K (WS, FB)
    #[arg(long)]
    k: usize,
    /// DP scale constant
    #[arg(long)]
    alpha: f64,
    /// DP distance exponent
    #[arg(long)]
    beta: f64,
    /// FB stage count [default: 3]
    #[arg(long)]
    stages: usize,
    /// Seed of the generator, the staging coins and the partitioner [default: 0]
    #[arg(long)]
    seed: u64,
    /// uniform, greedy or probabilistic [default: probabilistic]
    #[arg(long)]
    staging: StagingMode,
    /// Staging probability of the probabilistic mode [default: 0.5]
    #[arg(long)]
    staging_prob: f64,
    /// Channel upper bound for staging [default: 512]
    #[arg(long)]
    channel_limit: u32,
});

knobs!(ScoreKnobs {
    /// Unit counts, comma separated [default: 4,6,8,10]
    #[arg(long, value_delimiter = ',')]
    units: Vec<usize>,
    /// Imbalance grid, comma separated [default: 1.05,1.1,1.2,1.35,1.5]
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Exponent on load imbalance [default: 1]
    #[arg(long)]
    a: f64,
    /// Exponent on normalized communication [default: 1.5]
    #[arg(long)]
    b: f64,
    /// Exponent on overlap ratio [default: 1]
    #[arg(long)]
    c: f64,
});

knobs!(SimKnobs {
    /// FLOPs per time unit of each compute unit [default: 1e9]
    #[arg(long)]
    throughput: f64,
    /// Bytes per time unit of each link [default: 1.6e7]
    #[arg(long)]
    bandwidth: f64,
    /// Fixed time per message [default: 1e-4]
    #[arg(long)]
    latency: f64,
    /// Gather the output on an extra unit
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dedicated_merge: bool,
    /// Leave the final gather out of the makespan
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    no_gather: bool,
});

knobs!(SweepKnobs {
    /// Generators to compare, comma separated [default: er,ba,ws,dp,fb]
    #[arg(long, value_delimiter = ',')]
    generators: Vec<GeneratorKind>,
    /// Samples per generator [default: 1000]
    #[arg(long)]
    samples: usize,
    /// Seed every sample seed is derived from [default: 0]
    #[arg(long)]
    master_seed: u64,
    /// Worker threads, 0 for one per core [default: 0]
    #[arg(long)]
    jobs: usize,
});

#[derive(Debug, Clone, Default, Args)]
pub struct PathKnobs {
    /// Output directory [default: $PARWIRE_OUT, else .]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat JSON file supplying defaults for any flag
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Architecture file given with `--arch`, or a generator configuration.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct SourceKnobs {
    /// Architecture JSON written by `gen` (otherwise one is generated)
    #[arg(long)]
    pub arch: Option<PathBuf>,
}

impl SourceKnobs {
    pub fn or(self, fallback: Self) -> Self {
        SourceKnobs {
            arch: self.arch.or(fallback.arch),
        }
    }
}

/// Parsed config file, one view per flag group.
#[derive(Debug, Default)]
pub struct FileConfig {
    value: serde_json::Map<String, serde_json::Value>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let malformed = |message: String| Error::Malformed {
            what: "config file",
            message,
        };
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
        let serde_json::Value::Object(map) = value else {
            return Err(malformed("expected a flat JSON object".into()));
        };
        let known = [
            GenKnobs::KEYS,
            ScoreKnobs::KEYS,
            SimKnobs::KEYS,
            SweepKnobs::KEYS,
            &["out", "arch"],
        ]
        .concat();
        if let Some(key) = map.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(malformed(format!("unknown key `{key}`")));
        }
        Ok(FileConfig { value: map })
    }

    pub fn view<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(serde_json::Value::Object(self.value.clone())).map_err(|e| Error::Malformed {
            what: "config file",
            message: e.to_string(),
        })
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.value.get("out").and_then(|v| v.as_str()).map(PathBuf::from)
    }
}

pub fn out_dir(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.out())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

impl GenKnobs {
    pub fn generator(&self) -> GeneratorConfig {
        let kind = self.kind.unwrap_or(GeneratorKind::Dp);
        let base = GeneratorConfig::preset(kind, self.n.unwrap_or(40), self.seed.unwrap_or(0));
        self.apply(base)
    }

    /// Overrides the generator parameters that were set explicitly.
    pub fn apply(&self, base: GeneratorConfig) -> GeneratorConfig {
        GeneratorConfig {
            p: self.p.unwrap_or(base.p),
            m: self.m.unwrap_or(base.m),
            k: self.k.unwrap_or(base.k),
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            stages: self.stages.unwrap_or(base.stages),
            ..base
        }
    }

    pub fn staging(&self) -> StagingConfig {
        let d = StagingConfig::default();
        StagingConfig {
            mode: self.staging.unwrap_or(d.mode),
            prob: self.staging_prob.unwrap_or(d.prob),
            channel_limit: self.channel_limit.unwrap_or(d.channel_limit),
            ..d
        }
    }
}

impl ScoreKnobs {
    pub fn units(&self) -> Vec<usize> {
        self.units.clone().unwrap_or_else(|| vec![4, 6, 8, 10])
    }

    pub fn eps(&self) -> Vec<f64> {
        self.eps.clone().unwrap_or_else(|| DEFAULT_EPSILON_GRID.to_vec())
    }

    pub fn weights(&self) -> ScoreWeights {
        let d = ScoreWeights::default();
        ScoreWeights {
            a: self.a.unwrap_or(d.a),
            b: self.b.unwrap_or(d.b),
            c: self.c.unwrap_or(d.c),
        }
    }
}

impl SimKnobs {
    pub fn options(&self) -> SimOptions {
        let d = CostParams::default();
        SimOptions {
            cost: CostParams {
                flops_per_time: self.throughput.unwrap_or(d.flops_per_time),
                bytes_per_time: self.bandwidth.unwrap_or(d.bytes_per_time),
                latency: self.latency.unwrap_or(d.latency),
            },
            include_gather: !self.no_gather.unwrap_or(false),
        }
    }

    pub fn dedicated_merge(&self) -> bool {
        self.dedicated_merge.unwrap_or(false)
    }
}
