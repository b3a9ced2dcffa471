use super::tape::{Grads, Params};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Moments are created lazily per parameter.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    t: u64,
    m: Params,
    v: Params,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: Params::new(),
            v: Params::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut Params, grads: &Grads) -> Result<()> {
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for (name, p) in params.iter_mut() {
            let Some(g) = grads.get(name) else { continue };
            p.same_shape(g, "adam_step")?;
            if !self.m.contains(name) {
                self.m.insert(name, g.map(|_| 0.0));
                self.v.insert(name, g.map(|_| 0.0));
            }
            let m = self.m.get_mut(name).expect("inserted");
            for (mv, gv) in m.data_mut().iter_mut().zip(g.data()) {
                *mv = beta1 * *mv + (1.0 - beta1) * gv;
            }
            let v = self.v.get_mut(name).expect("inserted");
            for (vv, gv) in v.data_mut().iter_mut().zip(g.data()) {
                *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
            }
            let (m, v) = (self.m.get(name).expect("m"), self.v.get(name).expect("v"));
            for ((pv, mv), vv) in p.data_mut().iter_mut().zip(m.data()).zip(v.data()) {
                *pv -= lr * (mv / c1) / ((vv / c2).sqrt() + eps);
            }
            if !p.is_finite() {
                return Err(Error::Numeric(format!("parameter {name} diverged at step {}", self.t)));
            }
        }
        Ok(())
    }
}
