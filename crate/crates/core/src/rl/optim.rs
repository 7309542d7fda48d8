use serde::{Deserialize, Serialize};

/// Updates a flat parameter vector from its gradient.
pub trait Optimizer {
    fn step(&mut self, params: &mut [f64], grad: &[f64]);
    /// Step size of the next update.
    fn learning_rate(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OptimizerConfig {
    /// Gradient descent; with `cosine` the step decays to `lr * min_lr_ratio`
    /// over the run.
    Sgd {
        lr: f64,
        #[serde(default)]
        momentum: f64,
        #[serde(default = "yes")]
        cosine: bool,
        #[serde(default)]
        min_lr_ratio: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "beta1")]
        beta1: f64,
        #[serde(default = "beta2")]
        beta2: f64,
        #[serde(default = "adam_eps")]
        eps: f64,
    },
}

fn yes() -> bool {
    true
}
fn beta1() -> f64 {
    0.9
}
fn beta2() -> f64 {
    0.999
}
fn adam_eps() -> f64 {
    1e-8
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adam {
            lr: 1e-3,
            beta1: beta1(),
            beta2: beta2(),
            eps: adam_eps(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), String> {
        let ok = match *self {
            OptimizerConfig::Sgd {
                lr,
                momentum,
                min_lr_ratio,
                ..
            } => lr > 0.0 && (0.0..1.0).contains(&momentum) && (0.0..=1.0).contains(&min_lr_ratio),
            OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => lr > 0.0 && (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("invalid optimizer settings {self:?}"))
        }
    }

    /// An optimizer for a run of `total_steps` updates over `n` parameters.
    pub fn build(&self, n: usize, total_steps: usize) -> Box<dyn Optimizer> {
        match *self {
            OptimizerConfig::Sgd {
                lr,
                momentum,
                cosine,
                min_lr_ratio,
            } => Box::new(Sgd {
                lr,
                momentum,
                cosine,
                min_lr: lr * min_lr_ratio,
                total_steps: total_steps.max(1),
                t: 0,
                velocity: vec![0.0; if momentum > 0.0 { n } else { 0 }],
            }),
            OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => Box::new(Adam {
                lr,
                beta1,
                beta2,
                eps,
                t: 0,
                m: vec![0.0; n],
                v: vec![0.0; n],
            }),
        }
    }
}

pub struct Sgd {
    lr: f64,
    momentum: f64,
    cosine: bool,
    min_lr: f64,
    total_steps: usize,
    t: usize,
    velocity: Vec<f64>,
}

impl Optimizer for Sgd {
    fn learning_rate(&self) -> f64 {
        if !self.cosine {
            return self.lr;
        }
        let frac = (self.t.min(self.total_steps) as f64) / self.total_steps as f64;
        self.min_lr + 0.5 * (self.lr - self.min_lr) * (1.0 + (std::f64::consts::PI * frac).cos())
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let lr = self.learning_rate();
        if self.velocity.is_empty() {
            for (p, g) in params.iter_mut().zip(grad) {
                *p -= lr * g;
            }
        } else {
            for ((p, g), v) in params.iter_mut().zip(grad).zip(self.velocity.iter_mut()) {
                *v = self.momentum * *v + g;
                *p -= lr * *v;
            }
        }
        self.t += 1;
    }
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Optimizer for Adam {
    fn learning_rate(&self) -> f64 {
        self.lr
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}
