//! Identification problem: structure, data, bounds and objective weights.

use super::model::{parameter_bounds, parameter_names, Bounds, ParamLayout, RateSeries, Simulator, Structure};
use crate::error::{HsrError, Result};

pub const DEFAULT_GAMMA1: f64 = 250.0;
pub const DEFAULT_GAMMA2: f64 = 150.0;

/// Everything needed to evaluate the objective for a parameter vector.
#[derive(Clone, Debug)]
pub struct SysIdProblem {
    structure: Structure,
    data: Vec<RateSeries>,
    bounds: Bounds,
    gamma1: f64,
    gamma2: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    manifest: Vec<usize>,
    sim: Simulator,
}

impl SysIdProblem {
    /// `data[c]` holds the manifest rates of condition `c`; columns are
    /// matched to manifest nodes by id.
    pub fn new(structure: Structure, data: Vec<RateSeries>, bounds: Bounds) -> Result<Self> {
        structure.validate()?;
        if data.is_empty() {
            return Err(HsrError::InvalidInput("no rate data".into()));
        }
        if !(bounds.tau_min > 0.0 && bounds.tau_max >= bounds.tau_min && bounds.w_max >= 0.0 && bounds.v_max >= 0.0) {
            return Err(HsrError::InvalidInput(format!("inconsistent bounds {bounds:?}")));
        }
        let ids = structure.manifest_ids();
        let first = &data[0];
        let mut ordered = Vec::with_capacity(data.len());
        for d in &data {
            d.validate()?;
            if d.len() != first.len() || (d.dt - first.dt).abs() > 1e-12 || (d.t0 - first.t0).abs() > 1e-12 {
                return Err(HsrError::InvalidInput(format!(
                    "condition `{}` is sampled differently from `{}`",
                    d.condition, first.condition
                )));
            }
            let mut values = Vec::with_capacity(ids.len());
            for id in &ids {
                let col = d.node_ids.iter().position(|x| x == id).ok_or_else(|| {
                    HsrError::InvalidInput(format!("condition `{}` has no column for node `{id}`", d.condition))
                })?;
                values.push(d.values[col].clone());
            }
            if d.node_ids.len() != ids.len() {
                return Err(HsrError::InvalidInput(format!(
                    "condition `{}` has {} columns for {} manifest nodes",
                    d.condition,
                    d.node_ids.len(),
                    ids.len()
                )));
            }
            ordered.push(RateSeries { values, node_ids: ids.clone(), ..d.clone() });
        }
        for i in &structure.inputs {
            if let super::model::InputKind::Rule { condition } = i.kind {
                if condition >= data.len() {
                    return Err(HsrError::InvalidInput(format!(
                        "input `{}` refers to condition {condition} but only {} are given",
                        i.id,
                        data.len()
                    )));
                }
            }
        }
        let max_rate = ordered
            .iter()
            .flat_map(|d| d.values.iter().flatten())
            .fold(0.0f64, |a, &b| a.max(b));
        let (lower, upper) = parameter_bounds(&structure, &bounds, max_rate);
        let sim = Simulator::new(&structure, ordered.len(), first.t0, first.dt, first.len(), bounds.tau_min);
        Ok(Self {
            manifest: structure.manifest(),
            structure,
            data: ordered,
            bounds,
            gamma1: DEFAULT_GAMMA1,
            gamma2: DEFAULT_GAMMA2,
            lower,
            upper,
            sim,
        })
    }

    pub fn with_weights(mut self, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 >= 0.0 && gamma2 >= 0.0) {
            return Err(HsrError::InvalidInput("objective weights must be non-negative".into()));
        }
        self.gamma1 = gamma1;
        self.gamma2 = gamma2;
        Ok(self)
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Data reordered to the manifest node order of the structure.
    pub fn data(&self) -> &[RateSeries] {
        &self.data
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::of(&self.structure)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn parameter_names(&self) -> Vec<String> {
        parameter_names(&self.structure)
    }

    pub fn substeps(&self) -> usize {
        self.sim.substeps()
    }

    pub fn check_z(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(HsrError::DimensionMismatch(format!("z has {} entries, expected {}", z.len(), self.dim())));
        }
        for (i, ((&v, &lo), &hi)) in z.iter().zip(&self.lower).zip(&self.upper).enumerate() {
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            if !(v >= lo - slack && v <= hi + slack) {
                return Err(HsrError::InvalidInput(format!(
                    "parameter {} = {v} outside [{lo}, {hi}]",
                    self.parameter_names()[i]
                )));
            }
        }
        Ok(())
    }

    /// Simulated manifest rates per condition, in the layout of [`Self::data`].
    pub(crate) fn simulate_manifest(&self, z: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
        (0..self.data.len())
            .map(|c| {
                let run = self.sim.run(z, c)?;
                Ok(self.manifest.iter().map(|&j| run.iter().map(|x| x[j]).collect()).collect())
            })
            .collect()
    }

    /// Exogenous inputs of condition `c` at the sample times.
    pub fn inputs(&self, c: usize) -> Vec<Vec<f64>> {
        self.sim.inputs_at_samples(c)
    }
}
