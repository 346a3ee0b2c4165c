//! Network structure, exogenous inputs, parameter layout and the
//! dedicated simulator used during identification.

use super::preprocess::smooth_values;
use crate::error::{HsrError, Result};
use crate::ltn::Sign;
use crate::trajectory::parse_numeric_csv;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Rates above this magnitude are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

mod one_based {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*v as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = u64::deserialize(d)?;
        if v == 0 {
            return Err(serde::de::Error::custom("layers are numbered from 1"));
        }
        Ok(v as usize - 1)
    }
}

/// One population. `layer` is 0-based in Rust and 1-based in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    #[serde(with = "one_based")]
    pub layer: usize,
    pub sign: Sign,
    #[serde(default = "yes")]
    pub manifest: bool,
}

fn yes() -> bool {
    true
}

/// Time course of an exogenous input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputKind {
    /// 1 in the given condition (0-based index), 0 otherwise.
    Rule { condition: usize },
    /// `|t0| - t` on `[t0, 0)` and 0 afterwards.
    TimeCell { t0: f64 },
    /// Square pulse of height 1 on `[onset, offset]`, smoothed with a
    /// Gaussian of standard deviation `sigma`.
    Pulse { onset: f64, offset: f64, sigma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: InputKind,
}

/// Weight block: recurrent (`W`, node to node) or input (`V`, exogenous
/// input to node).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    W,
    V,
}

/// A free weight at `(row, col)` of `block` with its sign constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskEntry {
    pub block: Block,
    pub row: usize,
    pub col: usize,
    pub sign: Sign,
}

/// Binary structure of the network: which weights are free and their signs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Structure {
    pub nodes: Vec<NodeSpec>,
    pub inputs: Vec<InputSpec>,
    pub mask: Vec<MaskEntry>,
}

impl Structure {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_layers(&self) -> usize {
        self.nodes.iter().map(|n| n.layer + 1).max().unwrap_or(0)
    }

    pub fn manifest(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&j| self.nodes[j].manifest).collect()
    }

    pub fn manifest_ids(&self) -> Vec<String> {
        self.manifest().into_iter().map(|j| self.nodes[j].id.clone()).collect()
    }

    /// Checks indices, layer numbering, duplicate entries and Dale's law
    /// (all constrained outgoing weights of a node share the node's sign).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HsrError::InvalidInput(m));
        if self.nodes.is_empty() {
            return bad("structure has no nodes".into());
        }
        let layers = self.n_layers();
        for l in 0..layers {
            if !self.nodes.iter().any(|n| n.layer == l) {
                return bad(format!("layer {} has no nodes", l + 1));
            }
        }
        if self.manifest().is_empty() {
            return bad("structure has no manifest nodes".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for (k, e) in self.mask.iter().enumerate() {
            let cols = match e.block {
                Block::W => self.nodes.len(),
                Block::V => self.inputs.len(),
            };
            if e.row >= self.nodes.len() || e.col >= cols {
                return bad(format!("mask entry {k}: ({}, {}) out of range for block {:?}", e.row, e.col, e.block));
            }
            if !seen.insert((e.block == Block::V, e.row, e.col)) {
                return bad(format!("mask entry {k}: duplicate ({}, {}) in block {:?}", e.row, e.col, e.block));
            }
            if e.block == Block::W {
                let src = self.nodes[e.col].sign;
                if src != Sign::Free && e.sign != Sign::Free && e.sign != src {
                    return bad(format!(
                        "mask entry {k}: sign {:?} contradicts source node `{}` ({:?})",
                        e.sign, self.nodes[e.col].id, src
                    ));
                }
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for n in self.nodes.iter().map(|n| &n.id).chain(self.inputs.iter().map(|i| &i.id)) {
            if !ids.insert(n) {
                return bad(format!("duplicate id `{n}`"));
            }
        }
        for i in &self.inputs {
            if let InputKind::Pulse { onset, offset, sigma } = i.kind {
                if !(offset >= onset) || !(sigma > 0.0) {
                    return bad(format!("input `{}`: need offset >= onset and sigma > 0", i.id));
                }
            }
        }
        Ok(())
    }

    /// Eight-population auditory/prefrontal network with rule, time-cell and
    /// stimulus inputs. Layers: prefrontal inhibitory (slow), prefrontal
    /// excitatory with auditory inhibitory, auditory excitatory (fast).
    /// Condition 0 is the LC block and condition 1 the PD block.
    pub fn case_study() -> Self {
        use Sign::{Excitatory as E, Inhibitory as I};
        let node = |id: &str, layer, sign| NodeSpec { id: id.into(), layer, sign, manifest: true };
        let nodes = vec![
            node("PFC-I-LC", 0, I),
            node("PFC-I-PD", 0, I),
            node("PFC-E-LC", 1, E),
            node("PFC-E-PD", 1, E),
            node("A1-I-LC", 1, I),
            node("A1-I-PD", 1, I),
            node("A1-E-LC", 2, E),
            node("A1-E-PD", 2, E),
        ];
        let pulse = InputKind::Pulse { onset: 0.0, offset: 1.0, sigma: 1.0 };
        let inputs = vec![
            InputSpec { id: "rule-LC".into(), kind: InputKind::Rule { condition: 0 } },
            InputSpec { id: "rule-PD".into(), kind: InputKind::Rule { condition: 1 } },
            InputSpec { id: "time".into(), kind: InputKind::TimeCell { t0: -7.0 } },
            InputSpec { id: "noise".into(), kind: pulse.clone() },
            InputSpec { id: "warble".into(), kind: pulse },
        ];
        let w = |row, col, sign| MaskEntry { block: Block::W, row, col, sign };
        let v = |row, col| MaskEntry { block: Block::V, row, col, sign: E };
        let mut mask = vec![
            // Excitatory self-loops.
            w(2, 2, E),
            w(3, 3, E),
            w(6, 6, E),
            w(7, 7, E),
            // Excitatory to inhibitory, same preference, same region.
            w(0, 2, E),
            w(1, 3, E),
            w(4, 6, E),
            w(5, 7, E),
            // Inhibitory to the opposite preference.
            w(3, 0, I),
            w(1, 0, I),
            w(2, 1, I),
            w(0, 1, I),
            w(7, 4, I),
            w(5, 4, I),
            w(6, 5, I),
            w(4, 5, I),
            // Between regions, same preference.
            w(6, 2, E),
            w(7, 3, E),
            w(4, 2, E),
            w(5, 3, E),
            w(2, 6, E),
            w(3, 7, E),
        ];
        mask.extend([v(0, 0), v(2, 0), v(1, 1), v(3, 1), v(0, 2), v(1, 2), v(2, 2), v(3, 2), v(6, 3), v(7, 4)]);
        Structure { nodes, inputs, mask }
    }
}

/// Manifest rates of one condition. `values[j][k]` is manifest node `j` at
/// `t0 + k * dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub condition: String,
    pub t0: f64,
    pub dt: f64,
    pub node_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl RateSeries {
    pub fn new(condition: impl Into<String>, t0: f64, dt: f64, node_ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let s = Self { condition: condition.into(), t0, dt, node_ids, values };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HsrError::InvalidInput(format!("rates `{}`: {m}", self.condition)));
        if !(self.dt > 0.0) || !self.t0.is_finite() {
            return bad(format!("invalid sampling t0 = {}, dt = {}", self.t0, self.dt));
        }
        if self.node_ids.len() != self.values.len() {
            return bad(format!("{} ids for {} series", self.node_ids.len(), self.values.len()));
        }
        let k = self.len();
        if k < 2 {
            return bad("need at least two samples".into());
        }
        for (id, v) in self.node_ids.iter().zip(&self.values) {
            if v.len() != k {
                return bad(format!("node `{id}` has {} samples, expected {k}", v.len()));
            }
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return bad(format!("node `{id}` has an invalid rate {x}"));
            }
        }
        Ok(())
    }

    /// `t,<node-id>...` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for id in &self.node_ids {
            let _ = write!(out, ",{id}");
        }
        out.push('\n');
        for k in 0..self.len() {
            let _ = write!(out, "{:.16e}", self.time(k));
            for v in &self.values {
                let _ = write!(out, ",{:.16e}", v[k]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, condition: impl Into<String>) -> Result<Self> {
        let table = parse_numeric_csv(text)?;
        if table.header.first().map(String::as_str) != Some("t") {
            return Err(HsrError::InvalidInput("line 1: first column must be `t`".into()));
        }
        if table.rows.len() < 2 {
            return Err(HsrError::InvalidInput("rate CSV needs at least two rows".into()));
        }
        let t: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
        let dt = t[1] - t[0];
        for (k, w) in t.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(HsrError::InvalidInput(format!("line {}: non-uniform time step", k + 3)));
            }
        }
        let ids = table.header[1..].to_vec();
        let values = (1..table.header.len()).map(|c| table.rows.iter().map(|r| r[c]).collect()).collect();
        Self::new(condition, t[0], dt, ids, values)
    }
}

/// Bounds on the unknowns. Rate-dependent bounds scale with the largest
/// observed rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bounds {
    /// Largest admissible |W| entry.
    pub w_max: f64,
    /// Largest admissible input weight.
    pub v_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Background inputs lie in `[-c_scale, c_scale] * max rate`.
    pub c_scale: f64,
    /// Initial states lie in `[0, x0_scale * max rate]`.
    pub x0_scale: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self { w_max: 2.0, v_max: 10.0, tau_min: 0.25, tau_max: 10.0, c_scale: 2.0, x0_scale: 2.0 }
    }
}

/// Offsets of each parameter group inside the vector `z`:
/// mask weights, then `tau` per layer, then `c` and `x0` per node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub n_weights: usize,
    pub n_layers: usize,
    pub n_nodes: usize,
}

impl ParamLayout {
    pub fn of(s: &Structure) -> Self {
        Self { n_weights: s.mask.len(), n_layers: s.n_layers(), n_nodes: s.n_nodes() }
    }

    pub fn len(&self) -> usize {
        self.n_weights + self.n_layers + 2 * self.n_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tau(&self) -> std::ops::Range<usize> {
        self.n_weights..self.n_weights + self.n_layers
    }

    pub fn c(&self) -> std::ops::Range<usize> {
        let s = self.tau().end;
        s..s + self.n_nodes
    }

    pub fn x0(&self) -> std::ops::Range<usize> {
        let s = self.c().end;
        s..s + self.n_nodes
    }
}

/// Human-readable name of every entry of `z`.
pub fn parameter_names(s: &Structure) -> Vec<String> {
    let mut names: Vec<String> = s
        .mask
        .iter()
        .map(|e| match e.block {
            Block::W => format!("W[{}<-{}]", s.nodes[e.row].id, s.nodes[e.col].id),
            Block::V => format!("V[{}<-{}]", s.nodes[e.row].id, s.inputs[e.col].id),
        })
        .collect();
    names.extend((1..=s.n_layers()).map(|l| format!("tau[{l}]")));
    names.extend(s.nodes.iter().map(|n| format!("c[{}]", n.id)));
    names.extend(s.nodes.iter().map(|n| format!("x0[{}]", n.id)));
    names
}

/// Lower and upper bound of every entry of `z`.
pub fn parameter_bounds(s: &Structure, b: &Bounds, max_rate: f64) -> (Vec<f64>, Vec<f64>) {
    let rate = if max_rate > 0.0 { max_rate } else { 1.0 };
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for e in &s.mask {
        let m = match e.block {
            Block::W => b.w_max,
            Block::V => b.v_max,
        };
        let (l, h) = match e.sign {
            Sign::Excitatory => (0.0, m),
            Sign::Inhibitory => (-m, 0.0),
            Sign::Free => (-m, m),
        };
        lo.push(l);
        hi.push(h);
    }
    for _ in 0..s.n_layers() {
        lo.push(b.tau_min);
        hi.push(b.tau_max);
    }
    for _ in 0..s.n_nodes() {
        lo.push(-b.c_scale * rate);
        hi.push(b.c_scale * rate);
    }
    for _ in 0..s.n_nodes() {
        lo.push(0.0);
        hi.push(b.x0_scale * rate);
    }
    (lo, hi)
}

/// Precomputed input tables and sparse weights for fast repeated
/// simulation on the data grid.
#[derive(Clone, Debug)]
pub(crate) struct Simulator {
    layout: ParamLayout,
    layer_of: Vec<usize>,
    mask: Vec<MaskEntry>,
    n_inputs: usize,
    /// Samples and RK4 substeps per sample interval.
    samples: usize,
    substeps: usize,
    h: f64,
    /// Per condition, inputs on the half-step grid (row-major, `n_inputs`
    /// per row).
    tables: Vec<Vec<f64>>,
}

fn time_cell(t0: f64, t: f64) -> f64 {
    // Times within rounding of 0 count as the post-onset branch.
    if t < -1e-9 && t >= t0 - 1e-9 {
        t0.abs() - t
    } else {
        0.0
    }
}

impl Simulator {
    /// `conditions` is the number of conditions; the grid starts at `t0`
    /// with `samples` samples spaced `dt`.
    pub fn new(s: &Structure, conditions: usize, t0: f64, dt: f64, samples: usize, tau_min: f64) -> Self {
        let substeps = ((10.0 * dt / tau_min).ceil() as usize).max(1);
        let h = dt / substeps as f64;
        let rows = 2 * (samples - 1) * substeps + 1;
        let half = 0.5 * h;
        let n_in = s.inputs.len();
        let mut tables = vec![vec![0.0; rows * n_in]; conditions];
        for (q, inp) in s.inputs.iter().enumerate() {
            let column: Box<dyn Fn(usize) -> Vec<f64>> = match inp.kind {
                InputKind::Rule { condition } => {
                    Box::new(move |c| vec![if c == condition { 1.0 } else { 0.0 }; rows])
                }
                InputKind::TimeCell { t0: tc } => {
                    Box::new(move |_| (0..rows).map(|i| time_cell(tc, t0 + i as f64 * half)).collect())
                }
                InputKind::Pulse { onset, offset, sigma } => {
                    let square: Vec<f64> = (0..rows)
                        .map(|i| {
                            let t = t0 + i as f64 * half;
                            if t >= onset - 1e-9 && t <= offset + 1e-9 {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let smooth = smooth_values(&square, sigma / half);
                    Box::new(move |_| smooth.clone())
                }
            };
            for (c, table) in tables.iter_mut().enumerate() {
                for (i, v) in column(c).into_iter().enumerate() {
                    table[i * n_in + q] = v;
                }
            }
        }
        Self {
            layout: ParamLayout::of(s),
            layer_of: s.nodes.iter().map(|n| n.layer).collect(),
            mask: s.mask.clone(),
            n_inputs: n_in,
            samples,
            substeps,
            h,
            tables,
        }
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Input values of condition `c` at the sample times.
    pub fn inputs_at_samples(&self, c: usize) -> Vec<Vec<f64>> {
        let stride = 2 * self.substeps;
        (0..self.samples)
            .map(|k| self.tables[c][k * stride * self.n_inputs..(k * stride + 1) * self.n_inputs].to_vec())
            .collect()
    }

    /// Simulates condition `c`; returns `out[k][j]` for every node.
    pub fn run(&self, z: &[f64], c: usize) -> Result<Vec<Vec<f64>>> {
        let n = self.layout.n_nodes;
        let inv_tau: Vec<f64> = self.layer_of.iter().map(|&l| 1.0 / z[self.layout.tau().start + l]).collect();
        let cvec = &z[self.layout.c()];
        let table = &self.tables[c];
        let ni = self.n_inputs;
        let field = |x: &[f64], row: usize, out: &mut [f64]| {
            out.copy_from_slice(cvec);
            let u = &table[row * ni..(row + 1) * ni];
            for (e, &wv) in self.mask.iter().zip(z) {
                match e.block {
                    Block::W => out[e.row] += wv * x[e.col],
                    Block::V => out[e.row] += wv * u[e.col],
                }
            }
            for j in 0..n {
                out[j] = (out[j].max(0.0) - x[j]) * inv_tau[j];
            }
        };
        let mut x: Vec<f64> = z[self.layout.x0()].to_vec();
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let h = self.h;
        let mut out = Vec::with_capacity(self.samples);
        out.push(x.clone());
        let mut row = 0;
        for _ in 1..self.samples {
            for _ in 0..self.substeps {
                field(&x, row, &mut k1);
                for j in 0..n {
                    tmp[j] = x[j] + 0.5 * h * k1[j];
                }
                field(&tmp, row + 1, &mut k2);
                for j in 0..n {
                    tmp[j] = x[j] + 0.5 * h * k2[j];
                }
                field(&tmp, row + 1, &mut k3);
                for j in 0..n {
                    tmp[j] = x[j] + h * k3[j];
                }
                field(&tmp, row + 2, &mut k4);
                for j in 0..n {
                    x[j] = (x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])).max(0.0);
                }
                row += 2;
            }
            if let Some(v) = x.iter().find(|v| !(v.abs() < DIVERGENCE_LIMIT)) {
                return Err(HsrError::SimulationDiverged(format!("rate reached {v:e}")));
            }
            out.push(x.clone());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltn::{simulate, Ceiling, LtNetwork};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn case_study_structure_is_valid() {
        let s = Structure::case_study();
        s.validate().unwrap();
        assert_eq!(s.n_layers(), 3);
        assert_eq!(s.mask.len(), 32);
        assert_eq!(ParamLayout::of(&s).len(), 32 + 3 + 16);
        assert_eq!(parameter_names(&s).len(), 51);
    }

    #[test]
    fn dale_violation_is_rejected() {
        let mut s = Structure::case_study();
        s.mask[0].sign = Sign::Inhibitory;
        assert!(s.validate().is_err());
    }

    #[test]
    fn structure_json_uses_one_based_layers() {
        let s = Structure::case_study();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains(r#""id":"A1-E-LC","layer":3"#));
        let back: Structure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn time_cell_is_literal() {
        assert_eq!(time_cell(-7.0, -7.0), 14.0);
        assert!((time_cell(-7.0, -1e-3) - 7.001).abs() < 1e-12);
        assert_eq!(time_cell(-7.0, 0.0), 0.0);
        assert_eq!(time_cell(-7.0, 3.0), 0.0);
    }

    #[test]
    fn rule_inputs_follow_condition() {
        let s = Structure::case_study();
        let sim = Simulator::new(&s, 2, -7.0, 0.1, 141, 0.25);
        let lc = sim.inputs_at_samples(0);
        let pd = sim.inputs_at_samples(1);
        for k in 0..141 {
            assert_eq!((lc[k][0], lc[k][1]), (1.0, 0.0));
            assert_eq!((pd[k][0], pd[k][1]), (0.0, 1.0));
            assert_eq!(lc[k][3], pd[k][3]);
        }
        assert_eq!(lc[0][2], 14.0);
        assert!((lc[69][2] - 7.1).abs() < 1e-9);
        assert_eq!(lc[70][2], 0.0);
        // Smoothed pulse peaks near the middle of [0, 1].
        let peak = (0..141).max_by(|&a, &b| lc[a][3].total_cmp(&lc[b][3])).unwrap();
        assert!((lc[peak][3] - 0.383).abs() < 0.01);
        assert!((sim.inputs_at_samples(0)[75][3] - lc[75][4]).abs() < 1e-15);
    }

    #[test]
    fn simulator_matches_layer_simulation_for_constant_inputs() {
        // One layer, no time-varying inputs: compare with LtNetwork::simulate.
        let s = Structure {
            nodes: vec![
                NodeSpec { id: "a".into(), layer: 0, sign: Sign::Excitatory, manifest: true },
                NodeSpec { id: "b".into(), layer: 0, sign: Sign::Inhibitory, manifest: true },
            ],
            inputs: vec![InputSpec { id: "r".into(), kind: InputKind::Rule { condition: 0 } }],
            mask: vec![
                MaskEntry { block: Block::W, row: 0, col: 0, sign: Sign::Excitatory },
                MaskEntry { block: Block::W, row: 0, col: 1, sign: Sign::Inhibitory },
                MaskEntry { block: Block::W, row: 1, col: 0, sign: Sign::Excitatory },
                MaskEntry { block: Block::V, row: 0, col: 0, sign: Sign::Excitatory },
            ],
        };
        let z = [0.5, -0.7, 0.9, 2.0, 1.3, 0.4, -0.2, 1.0, 3.0];
        let sim = Simulator::new(&s, 1, 0.0, 0.1, 51, 0.25);
        let ours = sim.run(&z, 0).unwrap();
        let w = DMatrix::from_row_slice(2, 2, &[0.5, -0.7, 0.9, 0.0]);
        let c = DVector::from_vec(vec![2.4, -0.2]);
        let net = LtNetwork::new(w, c, vec![Ceiling::Unbounded; 2], 1.3, DMatrix::zeros(2, 0), 0).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 3.0]);
        let h = 0.1 / sim.substeps() as f64;
        let traj = simulate(&net, &x0, |_| DVector::zeros(2), (0.0, 5.0), h).unwrap();
        for k in 0..51 {
            let other = &traj.samples()[k * sim.substeps()];
            for j in 0..2 {
                assert!((ours[k][j] - other[j]).abs() < 1e-12, "k {k} j {j}");
            }
        }
    }

    #[test]
    fn divergence_is_reported() {
        let s = Structure {
            nodes: vec![NodeSpec { id: "a".into(), layer: 0, sign: Sign::Excitatory, manifest: true }],
            inputs: vec![],
            mask: vec![MaskEntry { block: Block::W, row: 0, col: 0, sign: Sign::Excitatory }],
        };
        let sim = Simulator::new(&s, 1, 0.0, 0.1, 1001, 0.25);
        let err = sim.run(&[20.0, 0.3, 0.0, 1.0], 0).unwrap_err();
        assert!(matches!(err, HsrError::SimulationDiverged(_)));
    }

    #[test]
    fn rate_csv_round_trip() {
        let r = RateSeries::new("LC", -7.0, 0.1, vec!["a".into(), "b".into()], vec![vec![0.1, 0.2, 1.0 / 3.0], vec![5.0, 4.0, 3.0]]).unwrap();
        let back = RateSeries::from_csv(&r.to_csv(), "LC").unwrap();
        assert_eq!(back.node_ids, r.node_ids);
        assert_eq!(back.values, r.values);
        assert!((back.dt - 0.1).abs() < 1e-15);
    }

    #[test]
    fn negative_rates_are_rejected() {
        assert!(RateSeries::new("x", 0.0, 0.1, vec!["a".into()], vec![vec![1.0, -1.0]]).is_err());
    }
}
