//! Single-mode state preparation with layers `K(kappa) G(gamma, phi, zeta)` applied to the
//! vacuum, optimized with Adam on analytic gradients.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::gates;
use crate::gradients::{self, Cotangent};
use crate::nongaussian;
use crate::state::{self, StateVector};
use crate::tensor::GateTensor;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Real coordinates per layer: `Re gamma, Im gamma, phi, r, delta, kappa`.
pub const COORDS_PER_LAYER: usize = 6;

/// One layer `K(kappa) D(gamma) R(phi) S(r e^{i delta})`; `r` is kept non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub gamma: C64,
    pub phi: f64,
    pub r: f64,
    pub delta: f64,
    pub kappa: f64,
}

impl LayerParams {
    pub const ZERO: LayerParams = LayerParams { gamma: ZERO, phi: 0.0, r: 0.0, delta: 0.0, kappa: 0.0 };

    pub fn to_coords(&self) -> [f64; COORDS_PER_LAYER] {
        [self.gamma.re, self.gamma.im, self.phi, self.r, self.delta, self.kappa]
    }

    pub fn from_coords(c: &[f64]) -> Self {
        LayerParams { gamma: C64::new(c[0], c[1]), phi: c[2], r: c[3].max(0.0), delta: c[4], kappa: c[5] }
    }

    fn check(&self) -> Result<()> {
        if !self.to_coords().iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("layer parameters"));
        }
        if self.r < 0.0 {
            return Err(Error::InvalidParameter { name: "r", reason: format!("squeezing amplitude {} is negative", self.r) });
        }
        Ok(())
    }
}

pub fn flatten(params: &[LayerParams]) -> Vec<f64> {
    params.iter().flat_map(|p| p.to_coords()).collect()
}

pub fn unflatten(coords: &[f64]) -> Vec<LayerParams> {
    coords.chunks(COORDS_PER_LAYER).map(LayerParams::from_coords).collect()
}

struct LayerCache {
    gate: GateTensor,
    input: StateVector,
    /// After the Gaussian gate, before the Kerr phase.
    mid: StateVector,
}

/// States produced by [`forward`], kept for [`backward`].
pub struct ForwardCache {
    params: Vec<LayerParams>,
    layers: Vec<LayerCache>,
    output: StateVector,
}

impl ForwardCache {
    pub fn output(&self) -> &StateVector {
        &self.output
    }
}

/// `psi_out = U |0>`, the first layer acting first.
pub fn forward(params: &[LayerParams], cutoff: usize) -> Result<ForwardCache> {
    if cutoff < 2 {
        return Err(Error::InvalidParameter { name: "cutoff", reason: "state preparation needs cutoff >= 2".into() });
    }
    if params.is_empty() {
        return Err(Error::InvalidParameter { name: "layers", reason: "at least one layer is required".into() });
    }
    let mut psi = StateVector::vacuum(1, cutoff)?;
    let mut layers = Vec::with_capacity(params.len());
    for p in params {
        p.check()?;
        let gate = gates::single_mode_gaussian(p.gamma, p.phi, C64::from_polar(p.r, p.delta), cutoff)?;
        let mid = state::apply_gate(&gate, &psi, &[0])?;
        let out = kerr_apply(p.kappa, &mid);
        layers.push(LayerCache { gate, input: psi, mid });
        psi = out;
    }
    Ok(ForwardCache { params: params.to_vec(), layers, output: psi })
}

fn kerr_apply(kappa: f64, psi: &StateVector) -> StateVector {
    let amps = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, z)| z * C64::from_polar(1.0, kappa * (n * n) as f64))
        .collect();
    StateVector::from_contraction(1, psi.cutoff(), amps)
}

/// Loss `-|<target|out>|` and its gradient with respect to every real coordinate, in
/// the order of [`flatten`].
pub fn backward(cache: &ForwardCache, target: &StateVector) -> Result<(state::LossValue, Vec<f64>)> {
    let lv = state::loss(&cache.output, target)?;
    let n = cache.output.cutoff();
    let o = lv.overlap;
    // dL/d conj(psi_out); zero when the overlap vanishes, where -|o| has no gradient
    let mut up: Vec<C64> = if o.norm() > 0.0 {
        target.amplitudes().iter().map(|t| -(o / (2.0 * o.norm())) * t).collect()
    } else {
        vec![ZERO; n]
    };
    let mut grads = vec![0.0; cache.layers.len() * COORDS_PER_LAYER];
    for (li, layer) in cache.layers.iter().enumerate().rev() {
        let p = &cache.params[li];
        let g = &mut grads[li * COORDS_PER_LAYER..(li + 1) * COORDS_PER_LAYER];
        // Kerr: psi' = diag(e^{i kappa n^2}) psi
        let mut dk = 0.0;
        for (k, (u, z)) in up.iter_mut().zip(layer.mid.amplitudes()).enumerate() {
            let ph = C64::from_polar(1.0, p.kappa * (k * k) as f64);
            dk += 2.0 * (u.conj() * C64::new(0.0, (k * k) as f64) * ph * z).re;
            *u *= ph.conj();
        }
        g[5] = dk;
        // Gaussian gate: dL/d conj(G_mn) = up_m conj(psi_n)
        let input = layer.input.amplitudes();
        let mut cot = vec![ZERO; n * n];
        for a in 0..n {
            for b in 0..n {
                cot[a * n + b] = up[a] * input[b].conj();
            }
        }
        let cot = Cotangent::new(1, n, cot)?;
        let jacs = gradients::single_mode_jacobians_polar(p.gamma, p.phi, p.r, p.delta)?;
        let dg: Vec<GateTensor> =
            jacs.iter().map(|j| gradients::grad_from_jacobian(&layer.gate, j)).collect::<Result<_>>()?;
        let dgamma_conj = gradients::combine_upstream(&cot, &dg[0], &dg[1])?;
        g[0] = 2.0 * dgamma_conj.re;
        g[1] = 2.0 * dgamma_conj.im;
        for (slot, d) in [(2, &dg[2]), (3, &dg[3]), (4, &dg[4])] {
            g[slot] = gradients::combine_upstream(&cot, d, d)?.re;
        }
        // dL/d conj(psi_in) = G^dag dL/d conj(psi_out)
        let mut next = vec![ZERO; n];
        for (a, u) in up.iter().enumerate() {
            if *u == ZERO {
                continue;
            }
            for (b, slot) in next.iter_mut().enumerate() {
                *slot += layer.gate.get(&[a, b]).conj() * u;
            }
        }
        up = next;
    }
    if let Some(i) = grads.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteValue(format!(
            "gradient of layer {} coordinate {}",
            i / COORDS_PER_LAYER,
            i % COORDS_PER_LAYER
        )));
    }
    Ok((lv, grads))
}

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(format!("adam.lr must be positive, got {}", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(format!("adam.{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(format!("adam.eps must be positive, got {}", self.eps));
        }
        Ok(())
    }
}

/// Moment estimates for a real coordinate vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        AdamState { config, m: vec![0.0; len], v: vec![0.0; len], step: 0 }
    }

    /// One update `x <- x - lr m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, x: &mut [f64], grad: &[f64]) -> Result<()> {
        if x.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::DimensionMismatch("Adam state and gradient lengths differ".into()));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteValue(format!("gradient coordinate {i} at step {}", self.step)));
        }
        self.step += 1;
        let c = self.config;
        let b1t = 1.0 - c.beta1.powi(self.step as i32);
        let b2t = 1.0 - c.beta2.powi(self.step as i32);
        for i in 0..x.len() {
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * grad[i];
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            x[i] -= c.lr * (self.m[i] / b1t) / ((self.v[i] / b2t).sqrt() + c.eps);
        }
        Ok(())
    }
}

/// Trace of one optimization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub cutoff: usize,
    pub layers: usize,
    pub losses: Vec<f64>,
    pub fidelities: Vec<f64>,
    /// Seconds since the start of the run, per step; the only non-deterministic field.
    pub elapsed: Vec<f64>,
    pub final_params: Vec<LayerParams>,
    pub final_fidelity: f64,
}

impl RunRecord {
    pub fn best_fidelity(&self) -> f64 {
        self.fidelities.iter().copied().fold(self.final_fidelity, f64::max)
    }

    /// `step,loss,fidelity,elapsed_s`, one row per step.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("step,loss,fidelity,elapsed_s\n");
        for i in 0..self.losses.len() {
            s.push_str(&format!("{},{:.17e},{:.17e},{:.6}\n", i, self.losses[i], self.fidelities[i], self.elapsed[i]));
        }
        s
    }
}

/// Options of [`optimize_state_prep`] beyond the circuit shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub steps: usize,
    pub adam: AdamConfig,
    pub init_scale: f64,
    /// Stop once the fidelity reaches this value.
    pub stop_at: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { steps: 1000, adam: AdamConfig::default(), init_scale: 0.01, stop_at: None }
    }
}

/// Parameters drawn uniformly from `[-scale, scale]` per coordinate, `r` clipped at 0.
pub fn initial_params(layers: usize, scale: f64, seed: u64) -> Vec<LayerParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..layers * COORDS_PER_LAYER).map(|_| rng.gen_range(-scale..=scale)).collect();
    unflatten(&coords)
}

/// Adam on `-|<target|U|0>|` from a seeded small random start.
pub fn optimize_state_prep(target: &StateVector, layers: usize, opts: &RunOptions, seed: u64) -> Result<RunRecord> {
    if target.modes() != 1 {
        return Err(Error::DimensionMismatch("state preparation targets a single mode".into()));
    }
    opts.adam.validate().map_err(|message| Error::Config { line: None, message })?;
    let cutoff = target.cutoff();
    let mut x = flatten(&initial_params(layers, opts.init_scale, seed));
    let mut adam = AdamState::new(opts.adam, x.len());
    let start = Instant::now();
    let mut rec = RunRecord {
        seed,
        cutoff,
        layers,
        losses: Vec::with_capacity(opts.steps),
        fidelities: Vec::with_capacity(opts.steps),
        elapsed: Vec::with_capacity(opts.steps),
        final_params: Vec::new(),
        final_fidelity: 0.0,
    };
    for _ in 0..opts.steps {
        let params = unflatten(&x);
        let cache = forward(&params, cutoff)?;
        let (lv, grad) = backward(&cache, target)?;
        if !lv.value.is_finite() {
            return Err(Error::NonFiniteValue(format!("loss at step {}", rec.losses.len())));
        }
        rec.losses.push(lv.value);
        rec.fidelities.push(-lv.value);
        rec.elapsed.push(start.elapsed().as_secs_f64());
        if opts.stop_at.is_some_and(|f| -lv.value >= f) {
            rec.final_params = params;
            rec.final_fidelity = -lv.value;
            return Ok(rec);
        }
        adam.step(&mut x, &grad)?;
        // r >= 0
        for layer in x.chunks_mut(COORDS_PER_LAYER) {
            layer[3] = layer[3].max(0.0);
        }
    }
    rec.final_params = unflatten(&x);
    let out = forward(&rec.final_params, cutoff)?;
    rec.final_fidelity = -state::loss(out.output(), target)?.value;
    Ok(rec)
}

/// Independent runs, one thread per seed; results in seed order.
pub fn optimize_seeds(target: &StateVector, layers: usize, opts: &RunOptions, seeds: &[u64]) -> Result<Vec<RunRecord>> {
    std::thread::scope(|s| {
        let handles: Vec<_> =
            seeds.iter().map(|&seed| s.spawn(move || optimize_state_prep(target, layers, opts, seed))).collect();
        handles.into_iter().map(|h| h.join().expect("optimizer thread panicked")).collect()
    })
}

fn positive<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<usize, D::Error> {
    let v = usize::deserialize(d)?;
    if v == 0 {
        return Err(serde::de::Error::custom("value must be at least 1"));
    }
    Ok(v)
}

fn cutoff_value<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<usize, D::Error> {
    let v = usize::deserialize(d)?;
    if v < 2 {
        return Err(serde::de::Error::custom(format!("cutoff must be at least 2, got {v}")));
    }
    Ok(v)
}

fn default_seeds() -> usize {
    1
}

fn default_init_scale() -> f64 {
    0.01
}

/// A state-preparation experiment as read from TOML or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Target amplitudes as `[re, im]` pairs, zero-padded to the cutoff and normalized.
    pub target: Vec<[f64; 2]>,
    #[serde(deserialize_with = "positive")]
    pub layers: usize,
    #[serde(deserialize_with = "cutoff_value")]
    pub cutoff: usize,
    #[serde(deserialize_with = "positive")]
    pub steps: usize,
    pub seed: u64,
    /// Number of consecutive seeds starting at `seed`, run concurrently.
    #[serde(default = "default_seeds", deserialize_with = "positive")]
    pub seeds: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub stop_at_fidelity: Option<f64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first occurrence of `key` as a TOML key or JSON member name.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        t.starts_with(&format!("{key} ")) || t.starts_with(&format!("{key}=")) || t.contains(&format!("\"{key}\""))
    })
    .map(|i| i + 1)
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config {
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    /// Reads `.json` as JSON and anything else as TOML.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    fn validate(&self, text: &str) -> Result<()> {
        let fail = |key: &str, message: String| Err(Error::Config { line: line_of_key(text, key), message });
        if self.target.is_empty() || self.target.len() > self.cutoff {
            return fail("target", format!("target has {} amplitudes, expected 1..={}", self.target.len(), self.cutoff));
        }
        if self.target.iter().flatten().any(|x| !x.is_finite()) {
            return fail("target", "target amplitudes must be finite".into());
        }
        if self.target.iter().all(|[re, im]| *re == 0.0 && *im == 0.0) {
            return fail("target", "target is the zero vector".into());
        }
        if let Err(message) = self.adam.validate() {
            let key = message.split(['.', ' ']).nth(1).unwrap_or("adam").to_string();
            return fail(&key, message);
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return fail("init_scale", format!("init_scale must be non-negative, got {}", self.init_scale));
        }
        if let Some(f) = self.stop_at_fidelity {
            if !(0.0..=1.0).contains(&f) {
                return fail("stop_at_fidelity", format!("stop_at_fidelity must lie in [0, 1], got {f}"));
            }
        }
        Ok(())
    }

    pub fn target_state(&self) -> Result<StateVector> {
        let mut amps: Vec<C64> = self.target.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        amps.resize(self.cutoff, ZERO);
        StateVector::normalized(1, self.cutoff, amps)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions { steps: self.steps, adam: self.adam, init_scale: self.init_scale, stop_at: self.stop_at_fidelity }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed + i).collect()
    }

    /// Runs every seed and returns the records in seed order.
    pub fn run(&self) -> Result<Vec<RunRecord>> {
        optimize_seeds(&self.target_state()?, self.layers, &self.run_options(), &self.seed_list())
    }
}

/// `d/d kappa` of the Kerr layer through a state, for cross-checks.
pub fn kerr_state_derivative(kappa: f64, psi: &StateVector) -> Result<StateVector> {
    let g = nongaussian::kerr_gradient(kappa, psi.cutoff())?;
    state::apply_gate(&g, psi, &[0])
}
