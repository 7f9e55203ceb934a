use alloc::vec;
use alloc::vec::Vec;

use super::attention::{AttentionMap, CellDistribution};
use super::modules::{detect_pre, relu, shift_pre};
use super::params::{Gradients, ParamStore};
use crate::error::{Error, Result};
use crate::graph::{Node, ProgramGraph};
use crate::world::{Cell, GridTensor};

/// Output of one executed node. `pre` holds the pre-relu response of Detect
/// and Shift nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrace {
    pub node: Node,
    pub output: Option<AttentionMap>,
    pub pre: Option<Vec<f64>>,
}

/// Everything needed to replay or differentiate one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    graph: ProgramGraph,
    grid: GridTensor,
    nodes: Vec<NodeTrace>,
    distribution: CellDistribution,
}

impl ExecutionTrace {
    pub fn graph(&self) -> &ProgramGraph {
        &self.graph
    }

    pub fn grid(&self) -> &GridTensor {
        &self.grid
    }

    pub fn nodes(&self) -> &[NodeTrace] {
        &self.nodes
    }

    pub fn distribution(&self) -> &CellDistribution {
        &self.distribution
    }

    /// Cross-entropy of the located distribution against `gold`.
    pub fn loss(&self, gold: Cell) -> f64 {
        -self.distribution.log_prob(gold)
    }

    /// Re-runs the forward pass from the stored inputs.
    pub fn replay(&self, params: &ParamStore) -> Result<ExecutionTrace> {
        Ok(execute(&self.graph, &self.grid, params)?.1)
    }
}

/// Evaluates a Locate-rooted graph in node order.
pub fn execute(
    graph: &ProgramGraph,
    grid: &GridTensor,
    params: &ParamStore,
) -> Result<(CellDistribution, ExecutionTrace)> {
    let mut nodes: Vec<NodeTrace> = Vec::with_capacity(graph.len());
    let mut distribution = None;
    let dims = params.grid_dims();
    for node in graph.nodes() {
        let trace = match *node {
            Node::Detect(word) => {
                let pre = detect_pre(word, grid, params)?;
                NodeTrace {
                    node: *node,
                    output: Some(AttentionMap::from_values(dims, relu(&pre))),
                    pre: Some(pre),
                }
            }
            Node::And(a, b) => NodeTrace {
                node: *node,
                output: Some(super::and_forward(
                    attention(&nodes, a),
                    attention(&nodes, b),
                )?),
                pre: None,
            },
            Node::Shift(prep, a) => {
                let input = attention(&nodes, a);
                let pre = shift_pre(prep, input, params)?;
                NodeTrace {
                    node: *node,
                    output: Some(AttentionMap::from_values(dims, relu(&pre))),
                    pre: Some(pre),
                }
            }
            Node::Locate(a) => {
                distribution = Some(super::locate_forward(attention(&nodes, a)));
                NodeTrace {
                    node: *node,
                    output: None,
                    pre: None,
                }
            }
            Node::Position { .. } => {
                return Err(Error::InvalidGraph(
                    "placement programs are executed through their grounding graph".into(),
                ))
            }
        };
        nodes.push(trace);
    }
    let distribution = distribution.expect("validated graphs end in a locate node");
    Ok((
        distribution.clone(),
        ExecutionTrace {
            graph: graph.clone(),
            grid: grid.clone(),
            nodes,
            distribution,
        },
    ))
}

fn attention(nodes: &[NodeTrace], i: usize) -> &AttentionMap {
    nodes[i].output.as_ref().expect("attention-producing input")
}

fn mask(upstream: &[f64], pre: &[f64]) -> Vec<f64> {
    upstream
        .iter()
        .zip(pre)
        .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
        .collect()
}

/// Exact gradient of `-log p(gold)` with respect to every parameter used by
/// the trace. The relu derivative at exactly zero is taken as zero. Words and
/// prepositions used by several nodes accumulate.
pub fn backprop(trace: &ExecutionTrace, params: &ParamStore, gold: Cell) -> Result<Gradients> {
    let mut grads = params.zero_gradients();
    let n = trace.nodes.len();
    let cells = trace.grid.cell_count();
    let mut upstream: Vec<Option<Vec<f64>>> = vec![None; n];
    let accumulate = |slot: &mut Option<Vec<f64>>, g: Vec<f64>| match slot {
        Some(existing) => existing.iter_mut().zip(g).for_each(|(e, v)| *e += v),
        None => *slot = Some(g),
    };

    let root = n - 1;
    let Node::Locate(top) = trace.nodes[root].node else {
        return Err(Error::InvalidGraph("backprop needs a locate root".into()));
    };
    let dist = &trace.distribution;
    let gold_index = attention(&trace.nodes, top).index(gold);
    let mut g_root = dist.probs().to_vec();
    g_root[gold_index] -= 1.0;
    accumulate(&mut upstream[top], g_root);

    let [w, h, l] = params.grid_dims();
    let [_, kh, kl] = params.kernel_dims();
    for i in (0..n).rev() {
        let Some(g) = upstream[i].take() else {
            continue;
        };
        let node = &trace.nodes[i];
        match node.node {
            Node::Detect(word) => {
                let g_pre = mask(&g, node.pre.as_ref().expect("detect pre"));
                let offset = params.detect_offset(word)?;
                let c = params.channels();
                let block = &mut grads.values[offset..offset + c + 1];
                for (cell, &gp) in g_pre.iter().enumerate() {
                    if gp == 0.0 {
                        continue;
                    }
                    for (slot, x) in block[..c].iter_mut().zip(trace.grid.column(cell)) {
                        *slot += gp * x;
                    }
                    block[c] += gp;
                }
            }
            Node::And(a, b) => {
                let va = attention(&trace.nodes, a).values();
                let vb = attention(&trace.nodes, b).values();
                let ga = g.iter().zip(vb).map(|(g, y)| g * y).collect();
                let gb = g.iter().zip(va).map(|(g, x)| g * x).collect();
                accumulate(&mut upstream[a], ga);
                accumulate(&mut upstream[b], gb);
            }
            Node::Shift(prep, a) => {
                let g_pre = mask(&g, node.pre.as_ref().expect("shift pre"));
                let input = attention(&trace.nodes, a).values();
                let offset = params.shift_offset(prep)?;
                let kernel = params.shift_kernel(prep)?;
                let mut g_in = vec![0.0; cells];
                let dk = &mut grads.values[offset..offset + params.kernel_len()];
                for qx in 0..w {
                    for qy in 0..h {
                        for qz in 0..l {
                            let q = (qx * h + qy) * l + qz;
                            let aq = input[q];
                            let mut acc = 0.0;
                            for px in 0..w {
                                let kx = px + w - qx;
                                for py in 0..h {
                                    let krow = (kx * kh + py + h - qy) * kl + l - qz;
                                    let orow = (px * h + py) * l;
                                    for pz in 0..l {
                                        let gp = g_pre[orow + pz];
                                        if gp == 0.0 {
                                            continue;
                                        }
                                        acc += gp * kernel[krow + pz];
                                        dk[krow + pz] += gp * aq;
                                    }
                                }
                            }
                            g_in[q] = acc;
                        }
                    }
                }
                accumulate(&mut upstream[a], g_in);
            }
            Node::Locate(_) | Node::Position { .. } => {}
        }
    }
    Ok(grads)
}
