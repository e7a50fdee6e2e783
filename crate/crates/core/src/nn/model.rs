use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use super::conv::ConvGeometry;
use super::dense::{dense_backward_accumulate, dense_forward_into};
use super::loss::{cross_entropy_slice, softmax_in_place};
use super::pool::pool_output;
use super::spec::LayerSpec;
use crate::rng::rng_from;
use crate::tensor::{ShapeError, Tensor};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("architecture is empty")]
    Empty,
    #[error("architecture must end with a dense layer followed by softmax")]
    BadHead,
    #[error("softmax may only appear as the final layer")]
    MisplacedSoftmax,
    #[error("layer {layer}: {source}")]
    Shape { layer: usize, source: ShapeError },
    #[error("expected {expected} parameter tensors, got {actual}")]
    ParamCount { expected: usize, actual: usize },
    #[error("parameter {index}: expected shape {expected:?}, got {actual:?}")]
    ParamShape { index: usize, expected: Vec<usize>, actual: Vec<usize> },
    #[error("label {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },
}

#[derive(Debug, Clone)]
enum Stage {
    Conv { geom: ConvGeometry, param: usize },
    Relu,
    MaxPool { pool_h: usize, pool_w: usize, stride: usize, out: [usize; 3], in_w: usize },
    Flatten,
    Dense { units: usize, param: usize },
    Softmax,
}

struct Plan {
    stages: Vec<Stage>,
    /// `shapes[i]` is the input shape of stage `i`; the last entry is the output shape.
    shapes: Vec<Vec<usize>>,
    param_shapes: Vec<Vec<usize>>,
    /// fan-in of each weight tensor (biases carry `None`)
    fan_in: Vec<Option<usize>>,
}

fn plan(specs: &[LayerSpec], input_shape: &[usize]) -> Result<Plan, ModelError> {
    if specs.is_empty() {
        return Err(ModelError::Empty);
    }
    let n = specs.len();
    if n < 2 || specs[n - 1] != LayerSpec::Softmax || !matches!(specs[n - 2], LayerSpec::Dense { .. }) {
        return Err(ModelError::BadHead);
    }
    if specs[..n - 1].contains(&LayerSpec::Softmax) {
        return Err(ModelError::MisplacedSoftmax);
    }
    if input_shape.is_empty() || input_shape.contains(&0) {
        return Err(ModelError::Shape { layer: 0, source: ShapeError::BadShape("input dimensions must be positive") });
    }
    let mut p = Plan { stages: Vec::new(), shapes: vec![input_shape.to_vec()], param_shapes: Vec::new(), fan_in: Vec::new() };
    let mut shape = input_shape.to_vec();
    for (layer, spec) in specs.iter().enumerate() {
        let wrap = |source| ModelError::Shape { layer, source };
        let stage = match *spec {
            LayerSpec::Conv { filters, kernel_h, kernel_w, stride, padding } => {
                let geom = ConvGeometry::new(&shape, kernel_h, kernel_w, filters, stride, padding).map_err(wrap)?;
                let param = p.param_shapes.len();
                p.param_shapes.push(geom.kernel_shape().into());
                p.fan_in.push(Some(kernel_h * kernel_w * geom.in_c));
                p.param_shapes.push(vec![filters]);
                p.fan_in.push(None);
                shape = geom.output_shape().into();
                Stage::Conv { geom, param }
            }
            LayerSpec::Relu => Stage::Relu,
            LayerSpec::MaxPool { pool_h, pool_w, stride } => {
                let out = pool_output(&shape, pool_h, pool_w, stride).map_err(wrap)?;
                let in_w = shape[1];
                shape = out.into();
                Stage::MaxPool { pool_h, pool_w, stride, out, in_w }
            }
            LayerSpec::Flatten => {
                shape = vec![shape.iter().product()];
                Stage::Flatten
            }
            LayerSpec::Dense { units } => {
                if units == 0 {
                    return Err(wrap(ShapeError::BadShape("dense units must be positive")));
                }
                let inputs: usize = shape.iter().product();
                let param = p.param_shapes.len();
                p.param_shapes.push(vec![inputs, units]);
                p.fan_in.push(Some(inputs));
                p.param_shapes.push(vec![units]);
                p.fan_in.push(None);
                shape = vec![units];
                Stage::Dense { units, param }
            }
            LayerSpec::Softmax => Stage::Softmax,
        };
        p.stages.push(stage);
        p.shapes.push(shape.clone());
    }
    Ok(p)
}

/// He-normal weights (`std = sqrt(2 / fan_in)`) and zero biases, drawn in
/// layer order from a stream determined by `seed`.
pub fn init_params(specs: &[LayerSpec], input_shape: &[usize], seed: u64) -> Result<Vec<Tensor>, ModelError> {
    let p = plan(specs, input_shape)?;
    let mut rng = rng_from(seed, &[0x1417]);
    Ok(p
        .param_shapes
        .iter()
        .zip(&p.fan_in)
        .map(|(shape, fan_in)| match fan_in {
            Some(fan_in) => {
                let std = libm::sqrt(2.0 / *fan_in as f64);
                let normal = Normal::new(0.0, std).expect("finite positive std");
                let n: usize = shape.iter().product();
                let data = (0..n).map(|_| normal.sample(&mut rng)).collect();
                Tensor::from_vec(shape, data).expect("shape/product agree")
            }
            None => Tensor::zeros(shape),
        })
        .collect())
}

/// Result of a forward/backward pass on one labelled sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOutcome {
    pub loss: f64,
    pub correct: bool,
}

/// A sequential network: architecture, resolved shapes, and parameters.
#[derive(Debug, Clone)]
pub struct Model {
    specs: Vec<LayerSpec>,
    input_shape: Vec<usize>,
    stages: Vec<Stage>,
    shapes: Vec<Vec<usize>>,
    params: Vec<Tensor>,
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Model {
    pub fn new(specs: &[LayerSpec], input_shape: &[usize], seed: u64) -> Result<Self, ModelError> {
        let params = init_params(specs, input_shape, seed)?;
        Self::with_params(specs, input_shape, params)
    }

    pub fn with_params(specs: &[LayerSpec], input_shape: &[usize], params: Vec<Tensor>) -> Result<Self, ModelError> {
        let p = plan(specs, input_shape)?;
        if params.len() != p.param_shapes.len() {
            return Err(ModelError::ParamCount { expected: p.param_shapes.len(), actual: params.len() });
        }
        for (index, (t, expected)) in params.iter().zip(&p.param_shapes).enumerate() {
            if t.shape() != expected.as_slice() {
                return Err(ModelError::ParamShape { index, expected: expected.clone(), actual: t.shape().into() });
            }
        }
        Ok(Self { specs: specs.to_vec(), input_shape: input_shape.to_vec(), stages: p.stages, shapes: p.shapes, params })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.shapes.last().map_or(0, |s| s[0])
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Stable names for the parameter tensors, e.g. `layer0.weight`.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.params.len());
        for (i, stage) in self.stages.iter().enumerate() {
            if matches!(stage, Stage::Conv { .. } | Stage::Dense { .. }) {
                names.push(format!("layer{i}.weight"));
                names.push(format!("layer{i}.bias"));
            }
        }
        names
    }

    /// Zero tensors shaped like the parameters.
    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| Tensor::zeros(p.shape())).collect()
    }

    fn check_input(&self, input: &Tensor) -> Result<(), ShapeError> {
        if input.shape() != self.input_shape.as_slice() {
            return Err(ShapeError::ShapeMismatch { expected: self.input_shape.clone(), actual: input.shape().into() });
        }
        Ok(())
    }

    /// Runs every stage except the final softmax. Returns the input of each
    /// stage plus the logits, and the max-pool selections per stage.
    fn run(&self, input: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
        let last = self.stages.len() - 1;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.stages.len());
        let mut picks: Vec<Vec<usize>> = vec![Vec::new(); self.stages.len()];
        acts.push(input.to_vec());
        for (i, stage) in self.stages[..last].iter().enumerate() {
            let x = &acts[i];
            let out_len: usize = self.shapes[i + 1].iter().product();
            let y = match stage {
                Stage::Conv { geom, param } => {
                    let mut y = vec![0.0; out_len];
                    geom.forward_into(x, self.params[*param].data(), self.params[param + 1].data(), &mut y);
                    y
                }
                Stage::Relu => x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
                Stage::MaxPool { pool_h, pool_w, stride, out, in_w } => {
                    let [oh, ow, c] = *out;
                    let mut y = vec![0.0; out_len];
                    let mut sel = Vec::with_capacity(out_len);
                    for oy in 0..oh {
                        for ox in 0..ow {
                            for ch in 0..c {
                                let mut best_idx = ((oy * stride) * in_w + ox * stride) * c + ch;
                                for py in 0..*pool_h {
                                    for px in 0..*pool_w {
                                        let idx = ((oy * stride + py) * in_w + ox * stride + px) * c + ch;
                                        if x[idx] > x[best_idx] {
                                            best_idx = idx;
                                        }
                                    }
                                }
                                y[(oy * ow + ox) * c + ch] = x[best_idx];
                                sel.push(best_idx);
                            }
                        }
                    }
                    picks[i] = sel;
                    y
                }
                Stage::Flatten => x.clone(),
                Stage::Dense { units, param } => {
                    let mut y = vec![0.0; *units];
                    dense_forward_into(x, self.params[*param].data(), self.params[param + 1].data(), &mut y);
                    y
                }
                Stage::Softmax => unreachable!("softmax is always the final stage"),
            };
            acts.push(y);
        }
        (acts, picks)
    }

    /// Pre-softmax scores.
    pub fn logits(&self, input: &Tensor) -> Result<Tensor, ShapeError> {
        self.check_input(input)?;
        let (mut acts, _) = self.run(input.data());
        let z = acts.pop().expect("at least one activation");
        Tensor::from_vec(&[z.len()], z)
    }

    /// Class probability distribution for one input.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, ShapeError> {
        let mut z = self.logits(input)?;
        softmax_in_place(z.data_mut());
        Ok(z)
    }

    pub fn predict(&self, input: &Tensor) -> Result<usize, ShapeError> {
        Ok(argmax(self.logits(input)?.data()))
    }

    /// Cross-entropy loss of one sample without computing gradients.
    pub fn evaluate(&self, input: &Tensor, label: usize) -> Result<SampleOutcome, ModelError> {
        let k = self.num_classes();
        if label >= k {
            return Err(ModelError::BadLabel { label, classes: k });
        }
        let p = self.forward(input).map_err(|source| ModelError::Shape { layer: 0, source })?;
        let mut y = vec![0.0; k];
        y[label] = 1.0;
        Ok(SampleOutcome { loss: cross_entropy_slice(&y, p.data()), correct: argmax(p.data()) == label })
    }

    /// Forward and backward pass for one sample; parameter gradients of the
    /// cross-entropy loss are added into `grads`.
    pub fn accumulate_gradients(&self, input: &Tensor, label: usize, grads: &mut [Tensor]) -> Result<SampleOutcome, ModelError> {
        let k = self.num_classes();
        if label >= k {
            return Err(ModelError::BadLabel { label, classes: k });
        }
        if grads.len() != self.params.len() {
            return Err(ModelError::ParamCount { expected: self.params.len(), actual: grads.len() });
        }
        self.check_input(input).map_err(|source| ModelError::Shape { layer: 0, source })?;
        let (acts, picks) = self.run(input.data());
        let logits = acts.last().expect("logits");
        let mut probs = logits.clone();
        softmax_in_place(&mut probs);
        let mut y = vec![0.0; k];
        y[label] = 1.0;
        let outcome = SampleOutcome { loss: cross_entropy_slice(&y, &probs), correct: argmax(&probs) == label };

        let mut g = probs;
        g[label] -= 1.0;
        let last = self.stages.len() - 1;
        for i in (0..last).rev() {
            let x = &acts[i];
            let need_input = i > 0;
            g = match &self.stages[i] {
                Stage::Conv { geom, param } => {
                    let (head, tail) = grads.split_at_mut(param + 1);
                    let mut gin = if need_input { vec![0.0; x.len()] } else { Vec::new() };
                    geom.backward_accumulate(
                        &g,
                        x,
                        self.params[*param].data(),
                        need_input.then_some(gin.as_mut_slice()),
                        head[*param].data_mut(),
                        tail[0].data_mut(),
                    );
                    gin
                }
                Stage::Relu => {
                    for (gv, &xv) in g.iter_mut().zip(x) {
                        if xv <= 0.0 {
                            *gv = 0.0;
                        }
                    }
                    g
                }
                Stage::MaxPool { .. } => {
                    let mut gin = vec![0.0; x.len()];
                    for (&gv, &idx) in g.iter().zip(&picks[i]) {
                        gin[idx] += gv;
                    }
                    gin
                }
                Stage::Flatten => g,
                Stage::Dense { param, .. } => {
                    let (head, tail) = grads.split_at_mut(param + 1);
                    let mut gin = if need_input { vec![0.0; x.len()] } else { Vec::new() };
                    dense_backward_accumulate(
                        &g,
                        x,
                        self.params[*param].data(),
                        need_input.then_some(gin.as_mut_slice()),
                        head[*param].data_mut(),
                        tail[0].data_mut(),
                    );
                    gin
                }
                Stage::Softmax => unreachable!("softmax is always the final stage"),
            };
        }
        Ok(outcome)
    }
}
