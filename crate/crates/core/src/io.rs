//! JSON documents for networks, hierarchies, equilibrium maps and control
//! laws. Matrices are row-major arrays of arrays; unbounded ceilings are the
//! string `"inf"`. Layer numbers in documents start at 1.

use crate::control::{ControlLaw, ControlMode, Feedforward, OnlineSolve};
use crate::equilibria::{AffinePiece, PiecewiseAffineMap, Region};
use crate::error::{HsrError, Result};
use crate::hierarchy::Hierarchy;
use crate::ltn::{Ceiling, LtNetwork, Sign};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub type Rows = Vec<Vec<f64>>;

pub fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Builds a matrix from rows; `cols` fixes the width when `rows` is empty.
pub fn from_rows(rows: &Rows, n_rows: usize, cols: Option<usize>, what: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return match cols {
            _ if n_rows == 0 => Ok(DMatrix::zeros(0, cols.unwrap_or(0))),
            Some(0) => Ok(DMatrix::zeros(n_rows, 0)),
            _ => Err(HsrError::InvalidInput(format!("{what}: expected {n_rows} rows, found none"))),
        };
    }
    if rows.len() != n_rows {
        return Err(HsrError::InvalidInput(format!("{what}: expected {n_rows} rows, found {}", rows.len())));
    }
    let width = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(HsrError::InvalidInput(format!("{what}: row {} has {} entries, expected {width}", i + 1, rows[i].len())));
    }
    if let Some(c) = cols {
        if c != width {
            return Err(HsrError::InvalidInput(format!("{what}: expected {c} columns, found {width}")));
        }
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(HsrError::InvalidInput(format!("{what}: entries must be finite")));
    }
    Ok(DMatrix::from_row_iterator(n_rows, width, rows.iter().flatten().copied()))
}

fn vector(v: &[f64], len: usize, what: &str) -> Result<DVector<f64>> {
    if v.len() != len {
        return Err(HsrError::InvalidInput(format!("{what}: expected {len} entries, found {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(HsrError::InvalidInput(format!("{what}: entries must be finite")));
    }
    Ok(DVector::from_column_slice(v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CeilingDoc {
    Finite(f64),
    Text(String),
}

impl CeilingDoc {
    fn parse(&self) -> Result<Ceiling<f64>> {
        match self {
            CeilingDoc::Finite(v) if v.is_finite() => Ok(Ceiling::Finite(*v)),
            CeilingDoc::Finite(v) => Err(HsrError::InvalidInput(format!("ceiling {v} must be finite or \"inf\""))),
            CeilingDoc::Text(s) if s.eq_ignore_ascii_case("inf") => Ok(Ceiling::Unbounded),
            CeilingDoc::Text(s) => Err(HsrError::InvalidInput(format!("unknown ceiling `{s}`"))),
        }
    }

    fn from_ceiling(c: Ceiling<f64>) -> Self {
        match c {
            Ceiling::Finite(v) => CeilingDoc::Finite(v),
            Ceiling::Unbounded => CeilingDoc::Text("inf".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub n: usize,
    #[serde(rename = "W")]
    pub w: Rows,
    pub c: Vec<f64>,
    pub m: Vec<CeilingDoc>,
    pub tau: f64,
    #[serde(rename = "B", default)]
    pub b: Rows,
    #[serde(default)]
    pub r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_mask: Option<Vec<Sign>>,
}

impl NetworkDoc {
    pub fn to_network(&self) -> Result<LtNetwork<f64>> {
        let n = self.n;
        let w = from_rows(&self.w, n, Some(n), "W")?;
        let c = vector(&self.c, n, "c")?;
        if self.m.len() != n {
            return Err(HsrError::InvalidInput(format!("m: expected {n} entries, found {}", self.m.len())));
        }
        let m = self.m.iter().map(CeilingDoc::parse).collect::<Result<Vec<_>>>()?;
        let b = from_rows(&self.b, n, if self.b.is_empty() { Some(0) } else { None }, "B")?;
        let net = LtNetwork::new(w, c, m, self.tau, b, self.r)?;
        match &self.sign_mask {
            Some(mask) => net.with_sign_mask(mask.clone()),
            None => Ok(net),
        }
    }

    pub fn from_network(net: &LtNetwork<f64>) -> Self {
        Self {
            n: net.n(),
            w: to_rows(net.w()),
            c: net.c().iter().copied().collect(),
            m: net.m().iter().map(|c| CeilingDoc::from_ceiling(*c)).collect(),
            tau: net.tau(),
            b: if net.p() == 0 { Vec::new() } else { to_rows(net.b()) },
            r: net.r(),
            sign_mask: net.sign_mask().map(<[Sign]>::to_vec),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub layers: Vec<NetworkDoc>,
    /// `W_{i,i+1}` for `i = 1..N-1`.
    #[serde(default)]
    pub w_down: Vec<Rows>,
    /// `W_{i+1,i}` for `i = 1..N-1`.
    #[serde(default)]
    pub w_up: Vec<Rows>,
}

impl HierarchyDoc {
    pub fn to_hierarchy(&self) -> Result<Hierarchy<f64>> {
        let layers = self.layers.iter().map(NetworkDoc::to_network).collect::<Result<Vec<_>>>()?;
        let blocks = layers.len().saturating_sub(1);
        if self.w_down.len() != blocks || self.w_up.len() != blocks {
            return Err(HsrError::InvalidInput(format!(
                "{} layers need {blocks} entries in w_down and w_up",
                layers.len()
            )));
        }
        let mut down = Vec::with_capacity(blocks);
        let mut up = Vec::with_capacity(blocks);
        for i in 0..blocks {
            let (a, b) = (layers[i].n(), layers[i + 1].n());
            down.push(from_rows(&self.w_down[i], a, Some(b), &format!("w_down[{}]", i + 1))?);
            up.push(from_rows(&self.w_up[i], b, Some(a), &format!("w_up[{}]", i + 1))?);
        }
        Hierarchy::new(layers, down, up)
    }

    pub fn from_hierarchy(h: &Hierarchy<f64>) -> Self {
        Self {
            description: None,
            layers: h.layers().iter().map(NetworkDoc::from_network).collect(),
            w_down: (0..h.len() - 1).map(|i| to_rows(h.w_down(i))).collect(),
            w_up: (0..h.len() - 1).map(|i| to_rows(h.w_up(i))).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceDoc {
    pub sigma: String,
    #[serde(rename = "F")]
    pub gain: Rows,
    pub f: Vec<f64>,
    #[serde(rename = "G")]
    pub region: Rows,
    pub g: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDoc {
    pub input_dim: usize,
    pub output_dim: usize,
    pub pieces: Vec<PieceDoc>,
}

impl MapDoc {
    pub fn from_map(map: &PiecewiseAffineMap<f64>) -> Self {
        Self {
            input_dim: map.input_dim(),
            output_dim: map.output_dim(),
            pieces: map
                .pieces()
                .iter()
                .map(|p| PieceDoc {
                    sigma: p.label.to_string(),
                    gain: to_rows(&p.gain),
                    f: p.offset.iter().copied().collect(),
                    region: to_rows(&p.region.g_mat),
                    g: p.region.g_off.iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn to_map(&self) -> Result<PiecewiseAffineMap<f64>> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                Ok(AffinePiece {
                    label: p.sigma.parse()?,
                    gain: from_rows(&p.gain, self.output_dim, Some(self.input_dim), "F")?,
                    offset: vector(&p.f, self.output_dim, "f")?,
                    region: Region {
                        g_mat: from_rows(&p.region, p.g.len(), Some(self.input_dim), "G")?,
                        g_off: DVector::from_column_slice(&p.g),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PiecewiseAffineMap::from_pieces(self.input_dim, self.output_dim, pieces)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UbarMode {
    None,
    Constant,
    Online,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineDoc {
    pub w_up_minus: Rows,
    pub offset: Vec<f64>,
    /// Right inverse of `B^-` (exact solve).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Rows>,
    /// Inhibition direction (scaled solve).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlDoc {
    pub layer: usize,
    #[serde(rename = "K")]
    pub k: Rows,
    pub ubar_mode: UbarMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ubar: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub online: Option<OnlineDoc>,
}

impl ControlDoc {
    pub fn from_law(law: &ControlLaw<f64>) -> Self {
        let (ubar_mode, ubar, online) = match &law.feedforward {
            Feedforward::None => (UbarMode::None, None, None),
            Feedforward::Constant(u) => (UbarMode::Constant, Some(u.iter().copied().collect()), None),
            Feedforward::Online { w_up_minus, offset, solve } => (
                UbarMode::Online,
                None,
                Some(OnlineDoc {
                    w_up_minus: to_rows(w_up_minus),
                    offset: offset.iter().copied().collect(),
                    exact: match solve {
                        OnlineSolve::Exact(p) => Some(to_rows(p)),
                        OnlineSolve::Scaled(_) => None,
                    },
                    scaled: match solve {
                        OnlineSolve::Scaled(v) => Some(v.iter().copied().collect()),
                        OnlineSolve::Exact(_) => None,
                    },
                }),
            ),
        };
        let mode = match law.mode() {
            ControlMode::FeedbackOnly => "feedback",
            ControlMode::FeedforwardOnly => "feedforward",
            ControlMode::Combined => "combined",
        };
        Self { layer: law.layer + 1, k: to_rows(&law.k), ubar_mode, mode: Some(mode.into()), ubar, online }
    }

    /// Rebuilds the law against the hierarchy it controls.
    pub fn to_law(&self, h: &Hierarchy<f64>) -> Result<ControlLaw<f64>> {
        if self.layer == 0 || self.layer > h.len() {
            return Err(HsrError::InvalidInput(format!("control layer {} out of range", self.layer)));
        }
        let layer = self.layer - 1;
        let net = h.layer(layer);
        let k = from_rows(&self.k, net.p(), Some(net.n()), "K")?;
        let feedforward = match self.ubar_mode {
            UbarMode::None => Feedforward::None,
            UbarMode::Constant => {
                let u = self.ubar.as_ref().ok_or_else(|| HsrError::InvalidInput("constant mode needs `ubar`".into()))?;
                Feedforward::Constant(vector(u, net.p(), "ubar")?)
            }
            UbarMode::Online => {
                let doc = self.online.as_ref().ok_or_else(|| HsrError::InvalidInput("online mode needs `online`".into()))?;
                if layer == 0 {
                    return Err(HsrError::InvalidInput("the slowest layer has no layer above".into()));
                }
                let r = net.r();
                let solve = match (&doc.exact, &doc.scaled) {
                    (Some(p), None) => OnlineSolve::Exact(from_rows(p, net.p(), Some(r), "online.exact")?),
                    (None, Some(v)) => OnlineSolve::Scaled(vector(v, net.p(), "online.scaled")?),
                    _ => return Err(HsrError::InvalidInput("online needs exactly one of `exact`, `scaled`".into())),
                };
                Feedforward::Online {
                    w_up_minus: from_rows(&doc.w_up_minus, r, Some(h.layer(layer - 1).n()), "online.w_up_minus")?,
                    offset: vector(&doc.offset, r, "online.offset")?,
                    solve,
                }
            }
        };
        Ok(ControlLaw { layer, k, feedforward })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlsDoc {
    #[serde(default)]
    pub schema: Option<String>,
    pub controls: Vec<ControlDoc>,
}

impl ControlsDoc {
    pub fn to_laws(&self, h: &Hierarchy<f64>) -> Result<Vec<ControlLaw<f64>>> {
        self.controls.iter().map(|c| c.to_law(h)).collect()
    }
}

/// Parses JSON with line and column in the error message.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        HsrError::InvalidInput(format!("{what}: line {}, column {}: {e}", e.line(), e.column()))
    })
}
