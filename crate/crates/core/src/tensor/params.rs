use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeding::{fnv1a, stream_rng};

use super::tape::Value;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

pub type ParamId = usize;

/// Gradient buffers indexed by [`ParamId`]; accumulation order is fixed by
/// the caller so training is deterministic.
#[derive(Debug, Clone)]
pub struct GradAccum {
    grads: Vec<Option<Vec<f64>>>,
}

impl GradAccum {
    pub fn new(n_params: usize) -> Self {
        GradAccum {
            grads: vec![None; n_params],
        }
    }

    pub fn add(&mut self, id: ParamId, g: &[f64]) {
        match &mut self.grads[id] {
            Some(buf) => {
                for (b, x) in buf.iter_mut().zip(g.iter()) {
                    *b += x;
                }
            }
            None => self.grads[id] = Some(g.to_vec()),
        }
    }

    pub fn merge(&mut self, other: &GradAccum) {
        for (id, g) in other.grads.iter().enumerate() {
            if let Some(g) = g {
                self.add(id, g);
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for g in self.grads.iter_mut().flatten() {
            for x in g.iter_mut() {
                *x *= c;
            }
        }
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        self.grads[id].as_deref().unwrap_or(&[])
    }

    pub fn take(&self, id: ParamId) -> Option<&Vec<f64>> {
        self.grads[id].as_ref()
    }

    pub fn l2_norm(&self) -> f64 {
        self.grads
            .iter()
            .flatten()
            .flat_map(|g| g.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

/// Named parameter tensors plus Adam moment buffers.
///
/// Parameter names are dotted paths (`ds.pol.out_w`, `ctx.cell.wf`, ...);
/// the leading segment selects the agent section, which the RL update masks
/// by.
#[derive(Debug, Clone)]
pub struct ParamStore {
    names: Vec<String>,
    ids: BTreeMap<String, ParamId>,
    values: Vec<Value>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            ids: BTreeMap::new(),
            values: Vec::new(),
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    /// Define a parameter initialized uniformly in `[-scale, scale]`, seeded
    /// by the master seed and the parameter name (independent of definition
    /// order).
    pub fn define_uniform(&mut self, name: &str, shape: &[usize], scale: f64, master_seed: u64) -> ParamId {
        let mut rng = stream_rng(master_seed, "param-init", fnv1a(name));
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
        self.define(
            name,
            Value {
                shape: shape.to_vec(),
                data,
            },
        )
    }

    pub fn define_const(&mut self, name: &str, shape: &[usize], value: f64) -> ParamId {
        let n: usize = shape.iter().product();
        self.define(
            name,
            Value {
                shape: shape.to_vec(),
                data: vec![value; n],
            },
        )
    }

    pub fn define(&mut self, name: &str, value: Value) -> ParamId {
        assert!(
            !self.ids.contains_key(name),
            "parameter {name:?} defined twice"
        );
        let id = self.values.len();
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        self.m.push(vec![0.0; value.len()]);
        self.v.push(vec![0.0; value.len()]);
        self.values.push(value);
        id
    }

    pub fn id(&self, name: &str) -> ParamId {
        *self
            .ids
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name:?}"))
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, id: ParamId) -> &Value {
        &self.values[id]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Value {
        &mut self.values[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Total number of scalar parameters.
    pub fn n_scalars(&self) -> usize {
        self.values.iter().map(Value::len).sum()
    }

    /// Snapshot of all parameter values (the EWC anchor).
    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.values.iter().map(|v| v.data.clone()).collect()
    }

    /// One Adam step over the parameters selected by `include`. The bias
    /// correction uses a shared step counter incremented per call.
    pub fn adam_update(
        &mut self,
        grads: &GradAccum,
        lr: f64,
        include: &dyn Fn(&str) -> bool,
    ) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for id in 0..self.values.len() {
            if !include(&self.names[id]) {
                continue;
            }
            let zero = [];
            let g: &[f64] = match grads.take(id) {
                Some(g) => {
                    if g.len() != self.values[id].len() {
                        return Err(Error::dimension(
                            format!("adam_update of {:?}", self.names[id]),
                            format!("{}", self.values[id].len()),
                            format!("{}", g.len()),
                        ));
                    }
                    g
                }
                None => &zero,
            };
            let value = &mut self.values[id].data;
            let m = &mut self.m[id];
            let v = &mut self.v[id];
            for i in 0..value.len() {
                let gi = g.get(i).copied().unwrap_or(0.0);
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * gi;
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                value[i] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
            }
        }
        Ok(())
    }

    /// Reset the optimizer state (a fresh Adam is used per training stage).
    pub fn reset_optimizer(&mut self) {
        for m in &mut self.m {
            m.iter_mut().for_each(|x| *x = 0.0);
        }
        for v in &mut self.v {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
        self.step = 0;
    }
}
