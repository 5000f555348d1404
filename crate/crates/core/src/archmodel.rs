//! Block semantics, staging, and the analytic cost model.
//!
//! Every vertex is a separable-convolution block (ReLU, 3x3 depthwise, 1x1
//! pointwise, batch norm) fed by a sigmoid + learnable weighted sum over its
//! inputs. When inputs disagree in shape a scaling front-end pools each input
//! down to the smallest spatial size and projects it up to the largest channel
//! count. A block that *stages* halves its spatial size and doubles its
//! channels.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dagify::{render_dot, ArchDag, DagDocument, VertexKind};
use crate::error::{Error, Result};
use crate::rng;

pub const BYTES_PER_ELEMENT: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StagingMode {
    /// Channels never change.
    Uniform,
    /// Every eligible block stages.
    Greedy,
    /// Every eligible block stages with probability `StagingConfig::prob`.
    Probabilistic,
}

impl FromStr for StagingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(StagingMode::Uniform),
            "greedy" => Ok(StagingMode::Greedy),
            "probabilistic" | "prob" => Ok(StagingMode::Probabilistic),
            _ => Err(Error::config(format!(
                "unknown staging mode `{s}` (expected uniform, greedy or probabilistic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagingConfig {
    pub mode: StagingMode,
    pub prob: f64,
    pub input_spatial: u32,
    pub input_channels: u32,
    pub channel_limit: u32,
}

impl Default for StagingConfig {
    fn default() -> Self {
        StagingConfig {
            mode: StagingMode::Probabilistic,
            prob: 0.5,
            input_spatial: 32,
            input_channels: 16,
            channel_limit: 512,
        }
    }
}

impl StagingConfig {
    pub fn with_mode(mode: StagingMode) -> Self {
        StagingConfig { mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(Error::config(format!("staging probability {} is outside [0, 1]", self.prob)));
        }
        if self.input_spatial == 0 || self.input_channels == 0 {
            return Err(Error::config("input shape must be at least 1x1x1"));
        }
        if self.channel_limit < self.input_channels {
            return Err(Error::config(format!(
                "channel limit {} is below the input channel count {}",
                self.channel_limit, self.input_channels
            )));
        }
        Ok(())
    }
}

/// One input edge as seen by a block's scaling front-end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaledInput {
    pub from: usize,
    pub spatial: u32,
    pub channels: u32,
    /// Number of 2x max-pool steps applied to this input.
    pub pools: u32,
    /// Target channel count of a 1x1 projection, if one is inserted.
    pub proj: Option<u32>,
}

impl ScaledInput {
    pub fn is_scaled(&self) -> bool {
        self.pools > 0 || self.proj.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: VertexKind,
    /// Operating spatial size (inputs after the front-end).
    pub spatial: u32,
    /// Channel count entering the convolution.
    pub in_channels: u32,
    pub out_spatial: u32,
    pub channels: u32,
    pub staged: bool,
    /// Staging was due but the spatial size was already 1.
    pub stage_suppressed: bool,
    pub inputs: Vec<ScaledInput>,
}

impl BlockSpec {
    fn source(spatial: u32, channels: u32) -> Self {
        BlockSpec {
            kind: VertexKind::Input,
            spatial,
            in_channels: channels,
            out_spatial: spatial,
            channels,
            staged: false,
            stage_suppressed: false,
            inputs: Vec::new(),
        }
    }

    pub fn has_scaling(&self) -> bool {
        self.inputs.iter().any(ScaledInput::is_scaled)
    }

    pub fn scaled_inputs(&self) -> usize {
        self.inputs.iter().filter(|i| i.is_scaled()).count()
    }

    /// Bytes of this block's output feature map.
    pub fn output_bytes(&self) -> u64 {
        feature_map_bytes(self.out_spatial, self.channels)
    }
}

pub fn feature_map_bytes(spatial: u32, channels: u32) -> u64 {
    let s = u64::from(spatial);
    s * s * u64::from(channels) * BYTES_PER_ELEMENT
}

/// FLOP breakdown of one block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockCost {
    pub depthwise: u64,
    pub pointwise: u64,
    pub projection: u64,
    /// Sigmoid, weighted sum, ReLU, batch norm and pooling.
    pub elementwise: u64,
}

impl BlockCost {
    pub fn core_conv(&self) -> u64 {
        self.depthwise + self.pointwise
    }

    pub fn total(&self) -> u64 {
        self.depthwise + self.pointwise + self.projection + self.elementwise
    }
}

pub fn block_cost(b: &BlockSpec) -> BlockCost {
    let area = u64::from(b.spatial) * u64::from(b.spatial);
    let c_in = u64::from(b.in_channels);
    let c_out = u64::from(b.channels);
    let mut cost = BlockCost::default();
    match b.kind {
        VertexKind::Input | VertexKind::Output => return cost,
        VertexKind::Block => {
            cost.depthwise = area * c_in * 9;
            cost.pointwise = area * c_in * c_out;
            // ReLU + batch norm
            cost.elementwise += area * c_in + area * c_out;
        }
        VertexKind::Merge => {
            if b.staged {
                cost.pointwise = area * c_in * c_out;
            }
        }
    }
    for input in &b.inputs {
        if let Some(proj) = input.proj {
            cost.projection += area * u64::from(input.channels) * u64::from(proj);
        }
        let mut s = u64::from(input.spatial);
        for _ in 0..input.pools {
            s /= 2;
            cost.elementwise += s * s * u64::from(input.channels);
        }
        // sigmoid + weighted-sum accumulate
        cost.elementwise += 2 * area * c_in;
    }
    cost
}

pub fn block_flops(b: &BlockSpec) -> u64 {
    block_cost(b).total()
}

pub fn block_params(b: &BlockSpec) -> u64 {
    let c_in = u64::from(b.in_channels);
    let c_out = u64::from(b.channels);
    let conv = match b.kind {
        VertexKind::Input | VertexKind::Output => return 0,
        VertexKind::Block => 9 * c_in + c_in * c_out + 2 * c_out,
        VertexKind::Merge if b.staged => c_in * c_out,
        VertexKind::Merge => 0,
    };
    let proj: u64 = b
        .inputs
        .iter()
        .filter_map(|i| i.proj.map(|p| u64::from(i.channels) * u64::from(p)))
        .sum();
    conv + proj + b.inputs.len() as u64
}

/// An elaborated architecture: the DAG plus per-vertex blocks and costs.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchSpec {
    dag: ArchDag,
    blocks: Vec<BlockSpec>,
    config: StagingConfig,
    seed: u64,
    flops: Vec<u64>,
    params: Vec<u64>,
}

/// Walks the DAG in topological order, inserting scaling front-ends where
/// input shapes disagree and staging blocks according to `cfg.mode`. Staging
/// coin of vertex `v` comes from stream `STAGING + v` of `seed`.
///
/// FB merge vertices are staging points: they stage whenever eligible unless
/// the mode is uniform.
pub fn elaborate(dag: &ArchDag, cfg: &StagingConfig, seed: u64) -> Result<ArchSpec> {
    cfg.validate()?;
    let n = dag.n_vertices();
    let mut blocks: Vec<Option<BlockSpec>> = vec![None; n];
    for &v in dag.topo_order() {
        let kind = dag.kind(v);
        if kind == VertexKind::Input {
            blocks[v] = Some(BlockSpec::source(cfg.input_spatial, cfg.input_channels));
            continue;
        }
        let shapes: Vec<(usize, u32, u32)> = dag
            .predecessors(v)
            .iter()
            .map(|&u| {
                let b = blocks[u].as_ref().expect("predecessors precede in topological order");
                (u, b.out_spatial, b.channels)
            })
            .collect();
        let spatial = shapes.iter().map(|s| s.1).min().expect("non-input vertices have predecessors");
        let in_channels = shapes.iter().map(|s| s.2).max().expect("non-input vertices have predecessors");
        let inputs = shapes
            .iter()
            .map(|&(from, s, c)| ScaledInput {
                from,
                spatial: s,
                channels: c,
                pools: (s / spatial).trailing_zeros(),
                proj: (c < in_channels).then_some(in_channels),
            })
            .collect();

        let wants_stage = match (kind, cfg.mode) {
            (VertexKind::Output, _) | (_, StagingMode::Uniform) => false,
            (VertexKind::Merge, _) | (_, StagingMode::Greedy) => in_channels < cfg.channel_limit,
            (_, StagingMode::Probabilistic) => {
                let coin: f64 = rng::stream(seed, rng::STAGING + v as u64).random();
                in_channels < cfg.channel_limit && coin < cfg.prob
            }
        };
        let staged = wants_stage && spatial >= 2;
        let (out_spatial, channels) = if staged {
            (spatial / 2, (in_channels * 2).min(cfg.channel_limit))
        } else {
            (spatial, in_channels)
        };
        blocks[v] = Some(BlockSpec {
            kind,
            spatial,
            in_channels,
            out_spatial,
            channels,
            staged,
            stage_suppressed: wants_stage && !staged,
            inputs,
        });
    }
    let blocks: Vec<BlockSpec> = blocks.into_iter().map(|b| b.expect("every vertex visited")).collect();
    Ok(ArchSpec::assemble(dag.clone(), blocks, *cfg, seed))
}

impl ArchSpec {
    fn assemble(dag: ArchDag, blocks: Vec<BlockSpec>, config: StagingConfig, seed: u64) -> Self {
        let flops = blocks.iter().map(block_flops).collect();
        let params = blocks.iter().map(block_params).collect();
        ArchSpec {
            dag,
            blocks,
            config,
            seed,
            flops,
            params,
        }
    }

    pub fn dag(&self) -> &ArchDag {
        &self.dag
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn block(&self, v: usize) -> &BlockSpec {
        &self.blocks[v]
    }

    pub fn config(&self) -> &StagingConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vertex_flops(&self) -> &[u64] {
        &self.flops
    }

    pub fn vertex_params(&self) -> &[u64] {
        &self.params
    }

    pub fn total_params(&self) -> u64 {
        self.params.iter().sum()
    }

    pub fn total_flops(&self) -> u64 {
        self.flops.iter().sum()
    }

    /// Output bytes of every vertex (the cost of each of its out-edges).
    pub fn vertex_out_bytes(&self) -> Vec<u64> {
        self.blocks.iter().map(BlockSpec::output_bytes).collect()
    }

    /// Bytes carried by each edge, aligned with `dag().edges()`.
    pub fn edge_bytes_all(&self) -> Vec<u64> {
        self.dag.edges().iter().map(|&(u, _)| self.blocks[u].output_bytes()).collect()
    }

    pub fn suppressed_stages(&self) -> Vec<usize> {
        (0..self.blocks.len()).filter(|&v| self.blocks[v].stage_suppressed).collect()
    }

    pub fn to_dot(&self) -> String {
        render_dot(
            &self.dag,
            |v| {
                let b = &self.blocks[v];
                format!("{v}: {}x{}x{}", b.channels, b.out_spatial, b.out_spatial)
            },
            |u, _| Some(self.blocks[u].output_bytes().to_string()),
        )
    }

    /// One row per vertex: costs and shapes, for external plotting.
    pub fn to_csv(&self) -> String {
        let depths = self.dag.depths();
        let mut out = String::from(
            "vertex,kind,depth,spatial,in_channels,out_spatial,channels,staged,scaled_inputs,flops,params,out_bytes\n",
        );
        for (v, b) in self.blocks.iter().enumerate() {
            let _ = writeln!(
                out,
                "{v},{},{},{},{},{},{},{},{},{},{},{}",
                b.kind.name(),
                depths[v],
                b.spatial,
                b.in_channels,
                b.out_spatial,
                b.channels,
                u8::from(b.staged),
                b.scaled_inputs(),
                self.flops[v],
                self.params[v],
                b.output_bytes(),
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = ArchDocument {
            dag: DagDocument::from(&self.dag),
            staging: self.config,
            seed: self.seed,
            total_params: Some(self.total_params()),
            total_flops: Some(self.total_flops()),
            vertices: Some(
                self.blocks
                    .iter()
                    .enumerate()
                    .map(|(v, b)| VertexRecord {
                        spatial: b.spatial,
                        out_spatial: b.out_spatial,
                        in_channels: b.in_channels,
                        channels: b.channels,
                        staged: b.staged,
                        flops: self.flops[v],
                        params: self.params[v],
                        scaled_inputs: b.scaled_inputs(),
                    })
                    .collect(),
            ),
            edge_costs: Some(
                self.dag
                    .edges()
                    .iter()
                    .map(|&(from, to)| EdgeRecord {
                        from,
                        to,
                        bytes: self.blocks[from].output_bytes(),
                    })
                    .collect(),
            ),
        };
        serde_json::to_string_pretty(&doc).expect("architecture serialization cannot fail")
    }

    /// Loads an architecture file. The DAG is re-elaborated from the stored
    /// staging config and seed; stored per-vertex and per-edge costs, when
    /// present, must agree with the re-elaboration.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ArchDocument = serde_json::from_str(text).map_err(|e| Error::Malformed {
            what: "architecture JSON",
            message: e.to_string(),
        })?;
        let dag = doc.dag.into_dag()?;
        let spec = elaborate(&dag, &doc.staging, doc.seed)?;
        if let Some(vertices) = &doc.vertices {
            if vertices.len() != dag.n_vertices() {
                return Err(Error::invariant("vertex records do not match the DAG size"));
            }
            for (v, rec) in vertices.iter().enumerate() {
                let b = spec.block(v);
                let same = rec.spatial == b.spatial
                    && rec.out_spatial == b.out_spatial
                    && rec.in_channels == b.in_channels
                    && rec.channels == b.channels
                    && rec.staged == b.staged
                    && rec.flops == spec.flops[v]
                    && rec.params == spec.params[v];
                if !same {
                    return Err(Error::invariant(format!(
                        "stored costs of vertex {v} disagree with its elaboration"
                    )));
                }
            }
        }
        if let Some(edges) = &doc.edge_costs {
            let expected = spec.edge_bytes_all();
            let ok = edges.len() == expected.len()
                && edges
                    .iter()
                    .zip(dag.edges())
                    .zip(&expected)
                    .all(|((rec, &(u, v)), &bytes)| rec.from == u && rec.to == v && rec.bytes == bytes);
            if !ok {
                return Err(Error::invariant("stored edge costs disagree with the elaboration"));
            }
        }
        Ok(spec)
    }
}

/// Bytes sent along `u -> v`: the producer's output feature map.
pub fn edge_bytes(spec: &ArchSpec, u: usize, v: usize) -> Result<u64> {
    if spec.dag.edges().binary_search(&(u, v)).is_err() {
        return Err(Error::config(format!("{u}->{v} is not an edge of the architecture")));
    }
    Ok(spec.blocks[u].output_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexRecord {
    spatial: u32,
    out_spatial: u32,
    in_channels: u32,
    channels: u32,
    staged: bool,
    flops: u64,
    params: u64,
    scaled_inputs: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    from: usize,
    to: usize,
    bytes: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArchDocument {
    #[serde(flatten)]
    dag: DagDocument,
    staging: StagingConfig,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    total_params: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    total_flops: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<VertexRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_costs: Option<Vec<EdgeRecord>>,
}
