//! Encoder/decoder stacks (fully connected and convolutional) and the
//! reparameterized Gaussian latent.
//!
//! Images cross the model boundary as `(batch, C*H*W)` rows in channel-major
//! order. The convolutional path reshapes to `(batch, C, H, W)` internally.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Tensor, TensorError};

/// Encoder log-variance is clamped to this range before use.
pub const LOGVAR_MIN: f64 = -12.0;
pub const LOGVAR_MAX: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arch {
    Mlp,
    Cnn,
}

impl Arch {
    pub fn tag(self) -> u32 {
        match self {
            Arch::Mlp => 0,
            Arch::Cnn => 1,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(Arch::Mlp),
            1 => Some(Arch::Cnn),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arch::Mlp => "mlp",
            Arch::Cnn => "cnn",
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(Arch::Mlp),
            "cnn" => Ok(Arch::Cnn),
            other => Err(Error::Config(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageDims {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageDims {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width * self.channels
    }
}

/// One stage of an encoder or decoder stack.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Linear {
        inputs: usize,
        outputs: usize,
    },
    Conv {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    ConvT {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    Sigmoid,
    /// Reshape each sample to the given per-sample shape.
    Reshape(Vec<usize>),
}

impl Layer {
    /// Shapes of the weight and bias this layer owns, if any.
    fn param_shapes(&self) -> Option<([usize; 4], Vec<usize>, usize)> {
        match *self {
            Layer::Linear { inputs, outputs } => Some(([inputs, outputs, 0, 0], vec![outputs], inputs)),
            Layer::Conv {
                in_ch, out_ch, kernel, ..
            } => Some((
                [out_ch, in_ch, kernel, kernel],
                vec![out_ch, 1, 1],
                in_ch * kernel * kernel,
            )),
            Layer::ConvT {
                in_ch,
                out_ch,
                kernel,
                stride,
                ..
            } => Some((
                [in_ch, out_ch, kernel, kernel],
                vec![out_ch, 1, 1],
                (in_ch * kernel * kernel / (stride * stride)).max(1),
            )),
            _ => None,
        }
    }

    fn forward<'t, T: Scalar>(
        &self,
        x: Var<'t, T>,
        params: &mut impl Iterator<Item = Var<'t, T>>,
    ) -> Result<Var<'t, T>> {
        let mut next = || params.next().expect("parameter list matches layer list");
        let y = match self {
            Layer::Linear { .. } => {
                let (w, b) = (next(), next());
                x.matmul(w)?.add(b)?
            }
            Layer::Conv { stride, padding, .. } => {
                let (w, b) = (next(), next());
                x.conv2d(w, *stride, *padding)?.add(b)?
            }
            Layer::ConvT { stride, padding, .. } => {
                let (w, b) = (next(), next());
                x.conv_transpose2d(w, *stride, *padding)?.add(b)?
            }
            Layer::Relu => x.relu()?,
            Layer::Sigmoid => x.sigmoid()?,
            Layer::Reshape(per_sample) => {
                let mut shape = vec![x.shape()[0]];
                shape.extend_from_slice(per_sample);
                x.reshape(shape)?
            }
        };
        Ok(y)
    }
}

/// Encoder–decoder pair with flat parameter storage in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel<T: Scalar = f64> {
    pub arch: Arch,
    pub latent: usize,
    pub dims: ImageDims,
    /// Width of the hidden fully connected layers (MLP only; 0 for CNN).
    pub hidden: usize,
    encoder: Vec<Layer>,
    decoder: Vec<Layer>,
    encoder_params: usize,
    params: Vec<Tensor<T>>,
}

/// Per-sample Gaussian posterior parameters.
#[derive(Clone, Copy, Debug)]
pub struct EncoderOutput<'t, T: Scalar = f64> {
    pub mu: Var<'t, T>,
    /// Natural log of the per-dimension variance, already clamped.
    pub logvar: Var<'t, T>,
}

/// A reparameterized draw `z = mu + exp(logvar / 2) * epsilon`.
#[derive(Clone, Debug)]
pub struct GaussianLatent<'t, T: Scalar = f64> {
    pub z: Var<'t, T>,
    pub epsilon: Tensor<T>,
    pub mu: Var<'t, T>,
    pub logvar: Var<'t, T>,
}

/// The model's parameters placed on a tape as tracked leaves.
pub struct BoundParams<'t, T: Scalar = f64> {
    pub vars: Vec<Var<'t, T>>,
    encoder_params: usize,
}

fn mlp_stacks(latent: usize, dims: ImageDims, hidden: usize) -> (Vec<Layer>, Vec<Layer>) {
    let d = dims.pixels();
    let encoder = vec![
        Layer::Linear {
            inputs: d,
            outputs: hidden,
        },
        Layer::Relu,
        Layer::Linear {
            inputs: hidden,
            outputs: hidden,
        },
        Layer::Relu,
        Layer::Linear {
            inputs: hidden,
            outputs: 2 * latent,
        },
    ];
    let decoder = vec![
        Layer::Linear {
            inputs: latent,
            outputs: hidden,
        },
        Layer::Relu,
        Layer::Linear {
            inputs: hidden,
            outputs: hidden,
        },
        Layer::Relu,
        Layer::Linear {
            inputs: hidden,
            outputs: d,
        },
        Layer::Sigmoid,
    ];
    (encoder, decoder)
}

fn cnn_stacks(latent: usize, dims: ImageDims) -> (Vec<Layer>, Vec<Layer>) {
    let c = dims.channels;
    let conv = |in_ch, out_ch, stride, padding| Layer::Conv {
        in_ch,
        out_ch,
        kernel: 4,
        stride,
        padding,
    };
    let convt = |in_ch, out_ch| Layer::ConvT {
        in_ch,
        out_ch,
        kernel: 4,
        stride: 2,
        padding: 1,
    };
    // 64 -> 32 -> 16 -> 8 -> 4 -> 1
    let encoder = vec![
        Layer::Reshape(vec![c, dims.height, dims.width]),
        conv(c, 32, 2, 1),
        Layer::Relu,
        conv(32, 32, 2, 1),
        Layer::Relu,
        conv(32, 64, 2, 1),
        Layer::Relu,
        conv(64, 64, 2, 1),
        Layer::Relu,
        conv(64, 32, 1, 0),
        Layer::Relu,
        Layer::Reshape(vec![32]),
        Layer::Linear {
            inputs: 32,
            outputs: 2 * latent,
        },
    ];
    // 1 -> 2 -> 4 -> 8 -> 16 -> 32 -> 64
    let decoder = vec![
        Layer::Linear {
            inputs: latent,
            outputs: 256,
        },
        Layer::Relu,
        Layer::Reshape(vec![256, 1, 1]),
        convt(256, 64),
        Layer::Relu,
        convt(64, 64),
        Layer::Relu,
        convt(64, 32),
        Layer::Relu,
        convt(32, 32),
        Layer::Relu,
        convt(32, c),
        Layer::Relu,
        convt(c, c),
        Layer::Sigmoid,
        Layer::Reshape(vec![dims.pixels()]),
    ];
    (encoder, decoder)
}

fn layer_param_shapes(layers: &[Layer]) -> Vec<(Vec<usize>, Vec<usize>, usize)> {
    layers
        .iter()
        .filter_map(Layer::param_shapes)
        .map(|(w, b, fan_in)| {
            let w: Vec<usize> = w.into_iter().filter(|&d| d > 0).collect();
            (w, b, fan_in)
        })
        .collect()
}

impl<T: Scalar> VaeModel<T> {
    fn from_stacks(
        arch: Arch,
        latent: usize,
        dims: ImageDims,
        hidden: usize,
        encoder: Vec<Layer>,
        decoder: Vec<Layer>,
        rng: &mut impl Rng,
    ) -> Self {
        let enc = layer_param_shapes(&encoder);
        let dec = layer_param_shapes(&decoder);
        let mut params = Vec::new();
        for (w, b, fan_in) in enc.iter().chain(dec.iter()) {
            // He-uniform bound keeps relu activations at unit scale.
            let bound = (6.0 / *fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            params.push(Tensor::from_fn(w.clone(), |_| T::lit(dist.sample(rng))));
            params.push(Tensor::zeros(b.clone()));
        }
        Self {
            arch,
            latent,
            dims,
            hidden,
            encoder,
            decoder,
            encoder_params: 2 * enc.len(),
            params,
        }
    }

    /// Fully connected encoder/decoder with two hidden layers of width `hidden`.
    pub fn build_mlp(latent: usize, dims: ImageDims, hidden: usize, rng: &mut impl Rng) -> Result<Self> {
        if latent == 0 || hidden == 0 || dims.pixels() == 0 {
            return Err(Error::Config("latent, hidden and image dims must be positive".into()));
        }
        let (e, d) = mlp_stacks(latent, dims, hidden);
        Ok(Self::from_stacks(Arch::Mlp, latent, dims, hidden, e, d, rng))
    }

    /// Convolutional stack for 64x64 images.
    pub fn build_cnn(latent: usize, dims: ImageDims, rng: &mut impl Rng) -> Result<Self> {
        if latent == 0 || dims.channels == 0 {
            return Err(Error::Config("latent and channels must be positive".into()));
        }
        if dims.height != 64 || dims.width != 64 {
            return Err(Error::Config(format!(
                "cnn architecture needs 64x64 images, got {}x{}",
                dims.height, dims.width
            )));
        }
        let (e, d) = cnn_stacks(latent, dims);
        Ok(Self::from_stacks(Arch::Cnn, latent, dims, 0, e, d, rng))
    }

    /// Rebuilds a model skeleton and installs `params`, checking their shapes.
    pub fn from_parts(
        arch: Arch,
        latent: usize,
        dims: ImageDims,
        hidden: usize,
        params: Vec<Tensor<T>>,
    ) -> Result<Self> {
        let (e, d) = match arch {
            Arch::Mlp => mlp_stacks(latent, dims, hidden),
            Arch::Cnn => cnn_stacks(latent, dims),
        };
        let expected: Vec<Vec<usize>> = layer_param_shapes(&e)
            .into_iter()
            .chain(layer_param_shapes(&d))
            .flat_map(|(w, b, _)| [w, b])
            .collect();
        let got: Vec<Vec<usize>> = params.iter().map(|p| p.shape().to_vec()).collect();
        if expected != got {
            return Err(Error::Config(format!(
                "parameter shapes {got:?} do not match {} architecture {expected:?}",
                arch.name()
            )));
        }
        let encoder_params = 2 * layer_param_shapes(&e).len();
        Ok(Self {
            arch,
            latent,
            dims,
            hidden,
            encoder: e,
            decoder: d,
            encoder_params,
            params,
        })
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::numel).sum()
    }

    pub fn encoder_param_count(&self) -> usize {
        self.params[..self.encoder_params].iter().map(Tensor::numel).sum()
    }

    pub fn encoder_layers(&self) -> &[Layer] {
        &self.encoder
    }

    pub fn decoder_layers(&self) -> &[Layer] {
        &self.decoder
    }

    /// Output width of the encoder's final layer (always `2 * latent`).
    pub fn encoder_output_width(&self) -> usize {
        match self.encoder.iter().rev().find(|l| matches!(l, Layer::Linear { .. })) {
            Some(Layer::Linear { outputs, .. }) => *outputs,
            _ => unreachable!("encoders end in a linear layer"),
        }
    }

    pub fn bind<'t>(&self, tape: &'t Tape<T>) -> BoundParams<'t, T> {
        BoundParams {
            vars: self.params.iter().map(|p| tape.param(p.clone())).collect(),
            encoder_params: self.encoder_params,
        }
    }

    /// Same as [`bind`](Self::bind) but excluded from differentiation.
    pub fn bind_frozen<'t>(&self, tape: &'t Tape<T>) -> BoundParams<'t, T> {
        BoundParams {
            vars: self.params.iter().map(|p| tape.constant(p.clone())).collect(),
            encoder_params: self.encoder_params,
        }
    }

    /// Binds externally supplied parameter vars (e.g. slices of a flat vector).
    pub fn bind_vars<'t>(&self, vars: Vec<Var<'t, T>>) -> BoundParams<'t, T> {
        assert_eq!(vars.len(), self.params.len());
        BoundParams {
            vars,
            encoder_params: self.encoder_params,
        }
    }

    fn check_width(&self, op: &'static str, x: &Var<'_, T>, width: usize) -> Result<()> {
        let shape = x.shape();
        if shape.len() != 2 || shape[1] != width {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: shape,
                rhs: vec![0, width],
            }
            .into());
        }
        Ok(())
    }

    /// Encodes a `(batch, C*H*W)` batch into posterior parameters.
    pub fn encode<'t>(&self, p: &BoundParams<'t, T>, x: Var<'t, T>) -> Result<EncoderOutput<'t, T>> {
        self.check_width("encode", &x, self.dims.pixels())?;
        let mut it = p.vars[..p.encoder_params].iter().copied();
        let mut h = x;
        for layer in &self.encoder {
            h = layer.forward(h, &mut it)?;
        }
        let l = self.latent;
        let mu = h.slice(1, 0, l)?;
        let logvar = h.slice(1, l, 2 * l)?.clamp(LOGVAR_MIN, LOGVAR_MAX)?;
        Ok(EncoderOutput { mu, logvar })
    }

    /// Decodes `(batch, L)` codes into `(batch, C*H*W)` pixel intensities in (0, 1).
    pub fn decode<'t>(&self, p: &BoundParams<'t, T>, z: Var<'t, T>) -> Result<Var<'t, T>> {
        self.check_width("decode", &z, self.latent)?;
        let mut it = p.vars[p.encoder_params..].iter().copied();
        let mut h = z;
        for layer in &self.decoder {
            h = layer.forward(h, &mut it)?;
        }
        Ok(h)
    }

    /// Encoder means for a batch, evaluated without gradient tracking.
    pub fn encode_mean(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let tape = Tape::new();
        let p = self.bind_frozen(&tape);
        let enc = self.encode(&p, tape.constant(x.clone()))?;
        Ok(enc.mu.value())
    }

    /// Decodes a batch of codes without gradient tracking.
    pub fn decode_values(&self, z: &Tensor<T>) -> Result<Tensor<T>> {
        let tape = Tape::new();
        let p = self.bind_frozen(&tape);
        let y = self.decode(&p, tape.constant(z.clone()))?;
        Ok(y.value())
    }
}

/// Draws `epsilon ~ N(0, I)` from `rng` and forms `z = mu + exp(logvar/2) * epsilon`.
pub fn reparameterize<'t, T: Scalar>(enc: &EncoderOutput<'t, T>, rng: &mut impl Rng) -> Result<GaussianLatent<'t, T>> {
    let shape = enc.mu.shape();
    let epsilon = Tensor::from_fn(shape, |_| {
        let e: f64 = StandardNormal.sample(rng);
        T::lit(e)
    });
    reparameterize_with(enc, epsilon)
}

/// Reparameterization with a caller-supplied noise draw.
pub fn reparameterize_with<'t, T: Scalar>(
    enc: &EncoderOutput<'t, T>,
    epsilon: Tensor<T>,
) -> Result<GaussianLatent<'t, T>> {
    let tape = enc.mu.tape();
    let eps = tape.constant(epsilon.clone());
    let std = enc.logvar.scale(0.5)?.exp()?;
    let z = enc.mu.add(std.mul(eps)?)?;
    Ok(GaussianLatent {
        z,
        epsilon,
        mu: enc.mu,
        logvar: enc.logvar,
    })
}
