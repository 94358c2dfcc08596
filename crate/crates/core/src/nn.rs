//! Feed-forward ReLU controllers: loading, exact evaluation and sound output
//! bounds over input boxes.
//!
//! Two bound engines are provided. [`NeuralNet::ibp_post`] pushes intervals
//! through each layer. [`NeuralNet::crown_post`] substitutes linear bounding
//! functions backwards from the outputs to the inputs, relaxing unstable ReLU
//! neurons with a chord above and a slope-0/1 line below; its pre-activation
//! bounds come from IBP.

use crate::error::{Error, Result};
use crate::geometry::{HyperBox, Interval};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn parse(name: &str) -> Result<Self> {
        match name {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::UnsupportedActivation(other.to_string())),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }
}

/// Which postcondition engine to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMethod {
    Ibp,
    #[default]
    Crown,
}

/// One affine map followed by an activation: `h = act(W·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Array2<f64>,
    bias: Array1<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::Shape(format!(
                "bias has {} entries but weights have {} rows",
                bias.len(),
                weights.nrows()
            )));
        }
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::Shape("layer has an empty weight matrix".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Builds a layer from row-major weights.
    pub fn from_rows(rows: &[Vec<f64>], bias: &[f64], activation: Activation) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(Error::Shape(format!(
                "weight row {bad} has {} entries, expected {ncols}",
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let weights = Array2::from_shape_vec((rows.len(), ncols), flat)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(weights, Array1::from(bias.to_vec()), activation)
    }

    pub fn in_width(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_width(&self) -> usize {
        self.weights.nrows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .rows()
            .into_iter()
            .zip(self.bias.iter())
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (w, v)| acc + w * v))
            .collect()
    }

    /// Sign-split interval image of the affine part. On point inputs the
    /// arithmetic matches [`Layer::affine`] operation for operation.
    fn affine_interval(&self, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.weights
            .rows()
            .into_iter()
            .zip(self.bias.iter())
            .map(|(row, &b)| {
                row.iter().zip(lo.iter().zip(hi)).fold(
                    (b, b),
                    |(acc_lo, acc_hi), (&w, (&l, &h))| {
                        if w >= 0.0 {
                            (acc_lo + w * l, acc_hi + w * h)
                        } else {
                            (acc_lo + w * h, acc_hi + w * l)
                        }
                    },
                )
            })
            .unzip()
    }
}

/// A deterministic feed-forward network `f: ℝ^input_dim → ℝ^output_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNet {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<Layer>,
}

/// On-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub input_dim: usize,
    pub output_dim: usize,
    pub layers: Vec<LayerDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDocument {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: String,
}

/// Parses and validates a model document.
pub fn load_network(content: &[u8]) -> Result<NeuralNet> {
    let doc: ModelDocument =
        serde_json::from_slice(content).map_err(|e| Error::Parse(e.to_string()))?;
    NeuralNet::from_document(&doc)
}

impl NeuralNet {
    pub fn new(input_dim: usize, output_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::Shape(
                "input_dim and output_dim must be positive".into(),
            ));
        }
        if layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        let mut width = input_dim;
        for (k, layer) in layers.iter().enumerate() {
            if layer.in_width() != width {
                return Err(Error::Shape(format!(
                    "layer {k} expects {} inputs but receives {width}",
                    layer.in_width()
                )));
            }
            width = layer.out_width();
        }
        if width != output_dim {
            return Err(Error::Shape(format!(
                "last layer produces {width} outputs, output_dim is {output_dim}"
            )));
        }
        Ok(Self {
            input_dim,
            output_dim,
            layers,
        })
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        let layers = doc
            .layers
            .iter()
            .map(|l| Layer::from_rows(&l.weights, &l.bias, Activation::parse(&l.activation)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.input_dim, doc.output_dim, layers)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            layers: self
                .layers
                .iter()
                .map(|l| LayerDocument {
                    weights: l.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
                    bias: l.bias.to_vec(),
                    activation: l.activation.name().to_string(),
                })
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Exact forward pass.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.affine(&h);
            h.iter_mut().for_each(|v| *v = layer.activation.apply(*v));
        }
        Ok(h)
    }

    /// Interval bound propagation. Returns the pre-activation bounds of every
    /// layer followed by the output bounds.
    fn ibp_trace(&self, p: &HyperBox) -> Result<(Vec<PreActivation>, HyperBox)> {
        if p.dims() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: p.dims(),
            });
        }
        let mut lo = p.lo();
        let mut hi = p.hi();
        let mut pre = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (zl, zh) = layer.affine_interval(&lo, &hi);
            lo = zl.iter().map(|&v| layer.activation.apply(v)).collect();
            hi = zh.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push((zl, zh));
        }
        let out = HyperBox::new(
            lo.iter()
                .zip(&hi)
                .map(|(&l, &h)| Interval::new(l, h))
                .collect::<Result<Vec<_>>>()?,
        )?;
        Ok((pre, out))
    }

    /// Sound output box over `p` by interval bound propagation.
    pub fn ibp_post(&self, p: &HyperBox) -> Result<HyperBox> {
        self.ibp_trace(p).map(|(_, out)| out)
    }

    /// Sound output box over `p` by backward linear relaxation.
    ///
    /// The linear bounds are evaluated in a different order than [`eval`], so
    /// they are widened by a margin proportional to the magnitude of the
    /// terms involved and then intersected with the IBP box, which rounds
    /// exactly like `eval` does.
    ///
    /// [`eval`]: NeuralNet::eval
    pub fn crown_post(&self, p: &HyperBox) -> Result<HyperBox> {
        let (pre, ibp) = self.ibp_trace(p)?;
        let out = self.output_dim;
        // Rows 0..out bound +y_j from above, rows out..2·out bound -y_j from above.
        let mut lambda = Array2::<f64>::zeros((2 * out, out));
        for j in 0..out {
            lambda[[j, j]] = 1.0;
            lambda[[out + j, j]] = -1.0;
        }
        let mut constant = Array1::<f64>::zeros(2 * out);
        // magnitude of everything summed into `constant`
        let mut scale = Array1::<f64>::zeros(2 * out);

        for (layer, (zl, zh)) in self.layers.iter().zip(&pre).rev() {
            if layer.activation == Activation::Relu {
                let relax: Vec<ReluRelaxation> = zl
                    .iter()
                    .zip(zh)
                    .map(|(&l, &u)| ReluRelaxation::new(l, u))
                    .collect();
                for ((mut row, c), m) in lambda
                    .axis_iter_mut(Axis(0))
                    .zip(constant.iter_mut())
                    .zip(scale.iter_mut())
                {
                    for (coef, r) in row.iter_mut().zip(&relax) {
                        let (slope, intercept) = if *coef >= 0.0 { r.upper } else { r.lower };
                        *c += *coef * intercept;
                        *m += (*coef * intercept).abs();
                        *coef *= slope;
                    }
                }
            }
            constant += &lambda.dot(&layer.bias);
            scale += &lambda.mapv(f64::abs).dot(&layer.bias.mapv(f64::abs));
            lambda = lambda.dot(&layer.weights);
        }

        let lo = p.lo();
        let hi = p.hi();
        let bounds: Vec<f64> = lambda
            .rows()
            .into_iter()
            .zip(constant.iter().zip(&scale))
            .map(|(row, (&c, &m))| {
                let (value, magnitude) = row.iter().zip(lo.iter().zip(&hi)).fold(
                    (c, m + c.abs()),
                    |(acc, mag), (&w, (&l, &h))| {
                        (
                            acc + if w >= 0.0 { w * h } else { w * l },
                            mag + w.abs() * l.abs().max(h.abs()),
                        )
                    },
                );
                value + CROWN_MARGIN * (1.0 + magnitude)
            })
            .collect();
        let intervals = (0..out)
            .map(|j| {
                let upper = bounds[j].min(ibp.interval(j).hi());
                let lower = (-bounds[out + j]).max(ibp.interval(j).lo());
                Interval::new(lower, upper)
            })
            .collect::<Result<Vec<_>>>()?;
        HyperBox::new(intervals)
    }

    pub fn post(&self, p: &HyperBox, method: BoundMethod) -> Result<HyperBox> {
        match method {
            BoundMethod::Ibp => self.ibp_post(p),
            BoundMethod::Crown => self.crown_post(p),
        }
    }
}

/// Lower and upper pre-activation bounds of one layer.
type PreActivation = (Vec<f64>, Vec<f64>);

/// Relative widening of CROWN bounds, far above the rounding error of the
/// networks this tool targets and far below any meaningful bound gap.
const CROWN_MARGIN: f64 = 1e-12;

/// Linear lines `(slope, intercept)` bounding `max(z, 0)` on `[l, u]`.
struct ReluRelaxation {
    upper: (f64, f64),
    lower: (f64, f64),
}

impl ReluRelaxation {
    fn new(l: f64, u: f64) -> Self {
        if l >= 0.0 {
            Self {
                upper: (1.0, 0.0),
                lower: (1.0, 0.0),
            }
        } else if u <= 0.0 {
            Self {
                upper: (0.0, 0.0),
                lower: (0.0, 0.0),
            }
        } else {
            let slope = u / (u - l);
            let alpha = if u >= -l { 1.0 } else { 0.0 };
            Self {
                upper: (slope, -slope * l),
                lower: (alpha, 0.0),
            }
        }
    }
}
