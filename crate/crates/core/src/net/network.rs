use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::autodiff::{he_init, BatchStats, ParamId, ParamStore, Tape, Tensor, Var, BN_EPS};
use crate::error::{Error, Result};

use super::config::NetworkConfig;

/// Initial PReLU slope.
pub const PRELU_INIT: f32 = 0.25;
/// Weight of the previous running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Running batch-norm statistics of one pre-activation step.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats {
    pub name: String,
    pub mean: Vec<f32>,
    pub var: Vec<f32>,
    pub initialized: bool,
}

impl RunningStats {
    fn new(name: String, channels: usize) -> Self {
        Self {
            name,
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
            initialized: false,
        }
    }

    /// The first batch seeds the statistics; later batches blend in with
    /// weight `1 - BN_MOMENTUM`.
    fn update(&mut self, batch: &BatchStats) {
        let keep = if self.initialized { BN_MOMENTUM } else { 0.0 };
        for (r, &b) in self.mean.iter_mut().zip(&batch.mean) {
            *r = (keep * *r as f64 + (1.0 - keep) * b) as f32;
        }
        for (r, &b) in self.var.iter_mut().zip(&batch.var) {
            *r = (keep * *r as f64 + (1.0 - keep) * b) as f32;
        }
        self.initialized = true;
    }
}

#[derive(Clone, Debug)]
struct PreActivation {
    gamma: ParamId,
    beta: ParamId,
    slope: ParamId,
    stats: usize,
}

#[derive(Clone, Debug)]
struct Block {
    name: String,
    pre: Option<PreActivation>,
    weight: ParamId,
    bias: ParamId,
}

/// The semi-dense fully convolutional network.
#[derive(Clone, Debug)]
pub struct Network {
    config: NetworkConfig,
    pub(crate) store: ParamStore<f32>,
    pub(crate) stats: Vec<RunningStats>,
    paths: Vec<Vec<Block>>,
    head: Vec<Block>,
    seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerCount {
    pub name: String,
    pub kind: LayerKind,
    pub weights: usize,
    pub biases: usize,
    /// Batch-norm scale/shift and PReLU slopes feeding this layer.
    pub extras: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Fc,
    Classifier,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParameterCount {
    pub layers: Vec<LayerCount>,
    pub conv: usize,
    pub fc: usize,
    pub classifier: usize,
    pub extras: usize,
}

impl ParameterCount {
    /// Convolution, fully-connected and classifier weights plus biases.
    pub fn core_total(&self) -> usize {
        self.conv + self.fc + self.classifier
    }

    pub fn total(&self) -> usize {
        self.core_total() + self.extras
    }
}

struct Builder<'a> {
    store: ParamStore<f32>,
    stats: Vec<RunningStats>,
    rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    fn block(&mut self, name: String, cin: usize, cout: usize, k: usize, pre: bool) -> Result<Block> {
        let pre = pre.then(|| {
            let stats = self.stats.len();
            self.stats.push(RunningStats::new(format!("{name}.bn"), cin));
            PreActivation {
                gamma: self.store.add(format!("{name}.bn.gamma"), Tensor::full(&[cin], 1.0)),
                beta: self.store.add(format!("{name}.bn.beta"), Tensor::zeros(&[cin])),
                slope: self.store.add(format!("{name}.prelu"), Tensor::full(&[cin], PRELU_INIT)),
                stats,
            }
        });
        let w = he_init(&[cout, cin, k, k, k], cin * k * k * k, self.rng)?;
        let weight = self.store.add(format!("{name}.weight"), w);
        let bias = self.store.add(format!("{name}.bias"), Tensor::zeros(&[cout]));
        Ok(Block {
            name,
            pre,
            weight,
            bias,
        })
    }
}

impl Network {
    /// Build a freshly He-initialized network.
    pub fn build(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = Builder {
            store: ParamStore::new(),
            stats: Vec::new(),
            rng: &mut rng,
        };
        let widths = config.conv_widths()?;
        let k = config.kernel_size;
        let mut paths = Vec::new();
        for p in 0..config.paths() {
            let mut blocks = Vec::new();
            let mut cin = config.path_input_channels();
            for (i, &cout) in widths.iter().enumerate() {
                // the first block sees normalized intensities directly
                blocks.push(b.block(format!("path{p}.conv{}", i + 1), cin, cout, k, i > 0)?);
                cin = cout;
            }
            paths.push(blocks);
        }
        let mut head = Vec::new();
        let mut cin = config.concat_channels()?;
        for (j, &cout) in config.fc_widths()?.iter().enumerate() {
            head.push(b.block(format!("fc{}", j + 1), cin, cout, 1, true)?);
            cin = cout;
        }
        head.push(b.block("classifier".into(), cin, config.num_classes, 1, true)?);
        let Builder { store, stats, .. } = b;
        Ok(Self {
            config,
            store,
            stats,
            paths,
            head,
            seed,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<f32> {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }

    pub fn running_stats(&self) -> &[RunningStats] {
        &self.stats
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    /// Output side for a given input side.
    pub fn output_side(&self, input_side: usize) -> Option<usize> {
        input_side.checked_sub(self.config.shrink())
    }

    fn check_input(&self, input: &Tensor<f32>) -> Result<[usize; 5]> {
        let dims = input.dims5("network input")?;
        if dims[0] == 0 {
            return Err(Error::shape("network input", "empty batch"));
        }
        if dims[1] != self.config.modalities {
            return Err(Error::shape(
                "network input",
                format!("expected {} modalities, got {}", self.config.modalities, dims[1]),
            ));
        }
        let min = self.config.receptive_field();
        if let Some(&side) = dims[2..].iter().find(|&&s| s < min) {
            return Err(Error::InputTooSmall { side, min });
        }
        Ok(dims)
    }

    fn apply_block(
        &self,
        tape: &mut Tape<f32>,
        block: &Block,
        x: Var,
        mode: Mode,
        batch_stats: &mut Vec<(usize, BatchStats)>,
    ) -> Result<Var> {
        let mut h = x;
        if let Some(pre) = &block.pre {
            let gamma = tape.param(&self.store, pre.gamma);
            let beta = tape.param(&self.store, pre.beta);
            h = match mode {
                Mode::Train => {
                    let (y, s) = tape.batch_norm_train(h, gamma, beta, BN_EPS)?;
                    batch_stats.push((pre.stats, s));
                    y
                }
                Mode::Infer => {
                    let rs = &self.stats[pre.stats];
                    if !rs.initialized {
                        return Err(Error::UninitializedStatistics(rs.name.clone()));
                    }
                    let mean: Vec<f64> = rs.mean.iter().map(|&v| v as f64).collect();
                    let var: Vec<f64> = rs.var.iter().map(|&v| v as f64).collect();
                    tape.batch_norm_infer(h, gamma, beta, &mean, &var, BN_EPS)?
                }
            };
            let slope = tape.param(&self.store, pre.slope);
            h = tape.prelu(h, slope)?;
        }
        let w = tape.param(&self.store, block.weight);
        let b = tape.param(&self.store, block.bias);
        tape.conv3d(h, w, b).map_err(|e| match e {
            Error::Shape { detail, .. } => Error::Shape {
                op: "conv3d",
                detail: format!("{}: {detail}", block.name),
            },
            other => other,
        })
    }

    /// Record the forward pass on `tape` and return the class-probability node.
    ///
    /// Train mode normalizes with batch statistics and returns them so the
    /// caller can fold them into the running estimates.
    pub fn forward_tape(
        &self,
        tape: &mut Tape<f32>,
        input: Tensor<f32>,
        mode: Mode,
    ) -> Result<(Var, Vec<(usize, BatchStats)>)> {
        let [b, m, d, h, w] = self.check_input(&input)?;
        let shrink = self.config.shrink();
        let out = [d - shrink, h - shrink, w - shrink];
        let mut batch_stats = Vec::new();
        let inputs: Vec<Var> = if self.paths.len() == 1 {
            vec![tape.input(input)]
        } else {
            let vol = d * h * w;
            let data = input.data();
            (0..m)
                .map(|c| {
                    let mut chan = Vec::with_capacity(b * vol);
                    for bi in 0..b {
                        let start = (bi * m + c) * vol;
                        chan.extend_from_slice(&data[start..start + vol]);
                    }
                    Tensor::new(vec![b, 1, d, h, w], chan).map(|t| tape.input(t))
                })
                .collect::<Result<_>>()?
        };
        let mut features = Vec::new();
        for (path, &x) in self.paths.iter().zip(&inputs) {
            let mut cur = x;
            for block in path {
                cur = self.apply_block(tape, block, cur, mode, &mut batch_stats)?;
                features.push(tape.crop_center(cur, out)?);
            }
        }
        let mut cur = tape.concat_channels(&features)?;
        for block in &self.head {
            cur = self.apply_block(tape, block, cur, mode, &mut batch_stats)?;
        }
        let probs = tape.softmax_channels(cur)?;
        Ok((probs, batch_stats))
    }

    pub fn apply_batch_stats(&mut self, stats: &[(usize, BatchStats)]) {
        for (idx, s) in stats {
            self.stats[*idx].update(s);
        }
    }

    /// Class probabilities for a batch of segments.
    pub fn forward_segment(&mut self, input: Tensor<f32>, mode: Mode) -> Result<Tensor<f32>> {
        let mut tape = Tape::new();
        let (probs, stats) = self.forward_tape(&mut tape, input, mode)?;
        self.apply_batch_stats(&stats);
        Ok(tape.value(probs).clone())
    }

    /// Inference-mode forward pass; never mutates the network.
    pub fn predict(&self, input: Tensor<f32>) -> Result<Tensor<f32>> {
        let mut tape = Tape::new();
        let (probs, _) = self.forward_tape(&mut tape, input, Mode::Infer)?;
        Ok(tape.value(probs).clone())
    }

    pub fn parameter_count(&self) -> ParameterCount {
        let mut layers = Vec::new();
        let all = self.paths.iter().flatten().map(|b| (b, LayerKind::Conv)).chain(
            self.head.iter().enumerate().map(|(i, b)| {
                let kind = if i + 1 == self.head.len() {
                    LayerKind::Classifier
                } else {
                    LayerKind::Fc
                };
                (b, kind)
            }),
        );
        for (block, kind) in all {
            let extras = block.pre.as_ref().map_or(0, |p| {
                self.store.get(p.gamma).value.len()
                    + self.store.get(p.beta).value.len()
                    + self.store.get(p.slope).value.len()
            });
            layers.push(LayerCount {
                name: block.name.clone(),
                kind,
                weights: self.store.get(block.weight).value.len(),
                biases: self.store.get(block.bias).value.len(),
                extras,
            });
        }
        let sum = |k: LayerKind| {
            layers
                .iter()
                .filter(|l| l.kind == k)
                .map(|l| l.weights + l.biases)
                .sum()
        };
        ParameterCount {
            conv: sum(LayerKind::Conv),
            fc: sum(LayerKind::Fc),
            classifier: sum(LayerKind::Classifier),
            extras: layers.iter().map(|l| l.extras).sum(),
            layers,
        }
    }
}
