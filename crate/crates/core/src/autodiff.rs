//! Reverse-mode automatic differentiation over a per-forward-pass tape.
//!
//! A [`Tape`] records every operation applied to [`Var`] handles in
//! topological order. Leaves are created with [`Tape::param`] (tracked) or
//! [`Tape::constant`] (untracked). An operation is recorded as tracked when
//! any of its inputs is tracked; [`Tape::backward`] walks the record in
//! reverse and accumulates adjoints.

use std::cell::{Ref, RefCell};

use crate::scalar::Scalar;
use crate::tensor::kernels::{self, ConvGeom};
use crate::tensor::{Result, Tensor, TensorError};

/// Position of a node on its tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Operation kinds together with their attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    Leaf,
    /// Elementwise, rhs broadcast onto lhs.
    Add,
    Sub,
    Mul,
    /// Multiply by a constant.
    Scale(f64),
    /// Add a constant.
    Shift(f64),
    MatMul,
    Conv2d {
        stride: usize,
        padding: usize,
    },
    ConvTranspose2d {
        stride: usize,
        padding: usize,
    },
    Relu,
    Sigmoid,
    Exp,
    Log,
    Square,
    /// Saturating clamp; zero gradient outside `[lo, hi]`.
    Clamp {
        lo: f64,
        hi: f64,
    },
    Sum,
    Mean,
    Reshape(Vec<usize>),
    Slice {
        axis: usize,
        start: usize,
        end: usize,
    },
    Concat {
        axis: usize,
    },
}

impl OpKind {
    fn name(&self) -> &'static str {
        match self {
            OpKind::Leaf => "leaf",
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::Scale(_) => "scale",
            OpKind::Shift(_) => "shift",
            OpKind::MatMul => "matmul",
            OpKind::Conv2d { .. } => "conv2d",
            OpKind::ConvTranspose2d { .. } => "conv_transpose2d",
            OpKind::Relu => "relu",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Exp => "exp",
            OpKind::Log => "log",
            OpKind::Square => "square",
            OpKind::Clamp { .. } => "clamp",
            OpKind::Sum => "sum",
            OpKind::Mean => "mean",
            OpKind::Reshape(_) => "reshape",
            OpKind::Slice { .. } => "slice",
            OpKind::Concat { .. } => "concat",
        }
    }

    fn arity(&self) -> Option<usize> {
        match self {
            OpKind::Leaf => Some(0),
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::MatMul => Some(2),
            OpKind::Conv2d { .. } | OpKind::ConvTranspose2d { .. } => Some(2),
            OpKind::Concat { .. } => None,
            _ => Some(1),
        }
    }
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    kind: OpKind,
    inputs: Vec<NodeId>,
    tracked: bool,
}

/// Ordered operation record for one forward pass.
pub struct Tape<T: Scalar = f64> {
    nodes: RefCell<Vec<Node<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t, T: Scalar = f64> {
    tape: &'t Tape<T>,
    id: NodeId,
}

impl<T: Scalar> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var({}, {:?})", self.id.0, self.shape())
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor<T>, kind: OpKind, inputs: Vec<NodeId>, tracked: bool) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            kind,
            inputs,
            tracked,
        });
        Var {
            tape: self,
            id: NodeId(nodes.len() - 1),
        }
    }

    /// A leaf that receives a gradient.
    pub fn param(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, OpKind::Leaf, Vec::new(), true)
    }

    /// A leaf excluded from differentiation.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, OpKind::Leaf, Vec::new(), false)
    }

    pub fn value(&self, id: NodeId) -> Ref<'_, Tensor<T>> {
        Ref::map(self.nodes.borrow(), |n| &n[id.0].value)
    }

    pub fn is_tracked(&self, id: NodeId) -> bool {
        self.nodes.borrow()[id.0].tracked
    }

    /// Applies `kind` to `inputs`, recording the operation.
    pub fn apply<'t>(&'t self, kind: OpKind, inputs: &[Var<'t, T>]) -> Result<Var<'t, T>> {
        if let Some(n) = kind.arity() {
            if n != inputs.len() || n == 0 {
                return Err(TensorError::InvalidArgument {
                    op: kind.name(),
                    detail: format!("expected {n} inputs, got {}", inputs.len()),
                });
            }
        }
        for v in inputs {
            assert!(std::ptr::eq(v.tape, self), "Var used with a foreign tape");
        }
        let (value, tracked) = {
            let nodes = self.nodes.borrow();
            let vals: Vec<&Tensor<T>> = inputs.iter().map(|v| &nodes[v.id.0].value).collect();
            let tracked = inputs.iter().any(|v| nodes[v.id.0].tracked);
            (forward(&kind, &vals)?, tracked)
        };
        let ids = inputs.iter().map(|v| v.id).collect();
        Ok(self.push(value, kind, ids, tracked))
    }

    /// Reverse sweep from a tracked scalar `loss`.
    pub fn backward(&self, loss: Var<'_, T>) -> Result<Gradients<T>> {
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id.0];
        if !root.value.is_scalar() {
            return Err(TensorError::NonScalarLoss(root.value.shape().to_vec()));
        }
        if !root.tracked {
            return Err(TensorError::UntrackedLoss);
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.id.0] = Some(Tensor::full(root.value.shape().to_vec(), T::one()));
        for i in (0..=loss.id.0).rev() {
            let node = &nodes[i];
            if !node.tracked || node.kind == OpKind::Leaf {
                continue;
            }
            let Some(g) = grads[i].as_ref() else { continue };
            let ins: Vec<&Tensor<T>> = node.inputs.iter().map(|id| &nodes[id.0].value).collect();
            let contributions = adjoint(&node.kind, &ins, &node.value, g);
            for (id, c) in node.inputs.iter().zip(contributions) {
                if !nodes[id.0].tracked {
                    continue;
                }
                match &mut grads[id.0] {
                    Some(acc) => acc.add_assign(&c),
                    slot @ None => *slot = Some(c),
                }
            }
        }
        let shapes = nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }
}

/// Adjoints of every node reached by a backward sweep.
pub struct Gradients<T: Scalar = f64> {
    grads: Vec<Option<Tensor<T>>>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to `id`; zeros when the loss does not depend on it.
    pub fn get(&self, id: NodeId) -> Tensor<T> {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(self.shapes[id.0].clone()),
        }
    }

    pub fn wrt(&self, v: Var<'_, T>) -> Tensor<T> {
        self.get(v.id)
    }

    /// Moves the gradient out, leaving zeros behind.
    pub fn take(&mut self, v: Var<'_, T>) -> Tensor<T> {
        self.grads[v.id.0]
            .take()
            .unwrap_or_else(|| Tensor::zeros(self.shapes[v.id.0].clone()))
    }
}

fn domain(op: &'static str, detail: impl Into<String>) -> TensorError {
    TensorError::Domain {
        op,
        detail: detail.into(),
    }
}

fn forward<T: Scalar>(kind: &OpKind, x: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let out = match kind {
        OpKind::Leaf => unreachable!("leaves are pushed directly"),
        OpKind::Add => kernels::binary("add", x[0], x[1], |a, b| a + b)?,
        OpKind::Sub => kernels::binary("sub", x[0], x[1], |a, b| a - b)?,
        OpKind::Mul => kernels::binary("mul", x[0], x[1], |a, b| a * b)?,
        OpKind::Scale(c) => {
            let c = T::lit(*c);
            x[0].map(|v| v * c)
        }
        OpKind::Shift(c) => {
            let c = T::lit(*c);
            x[0].map(|v| v + c)
        }
        OpKind::MatMul => kernels::matmul(x[0], x[1])?,
        OpKind::Conv2d { stride, padding } => kernels::conv2d(x[0], x[1], *stride, *padding)?,
        OpKind::ConvTranspose2d { stride, padding } => kernels::conv_transpose2d(x[0], x[1], *stride, *padding)?,
        OpKind::Relu => x[0].map(|v| if v > T::zero() { v } else { T::zero() }),
        OpKind::Sigmoid => x[0].map(sigmoid),
        OpKind::Exp => {
            let y = x[0].map(|v| v.exp());
            if !y.all_finite() {
                return Err(domain("exp", "overflow"));
            }
            y
        }
        OpKind::Log => {
            if let Some(bad) = x[0].data().iter().find(|v| !(**v > T::zero())) {
                return Err(domain("log", format!("non-positive input {bad}")));
            }
            x[0].map(|v| v.ln())
        }
        OpKind::Square => x[0].map(|v| v * v),
        OpKind::Clamp { lo, hi } => {
            let (lo, hi) = (T::lit(*lo), T::lit(*hi));
            x[0].map(|v| v.max(lo).min(hi))
        }
        OpKind::Sum => Tensor::scalar(x[0].sum()),
        OpKind::Mean => Tensor::scalar(x[0].sum() / T::lit(x[0].numel() as f64)),
        OpKind::Reshape(shape) => x[0].reshape(shape.clone())?,
        OpKind::Slice { axis, start, end } => kernels::slice(x[0], *axis, *start, *end)?,
        OpKind::Concat { axis } => kernels::concat(x, *axis)?,
    };
    Ok(out)
}

#[inline]
fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

fn conv_geom_of<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, stride: usize, padding: usize) -> ConvGeom {
    let s = x.shape();
    let k = w.shape();
    ConvGeom::new(s[1], s[2], s[3], k[2], k[3], stride, padding).expect("validated on forward")
}

/// Returns one contribution per input, shaped like that input.
fn adjoint<T: Scalar>(kind: &OpKind, x: &[&Tensor<T>], y: &Tensor<T>, g: &Tensor<T>) -> Vec<Tensor<T>> {
    match kind {
        OpKind::Leaf => Vec::new(),
        OpKind::Add => vec![g.clone(), kernels::reduce_to(g, x[1].shape())],
        OpKind::Sub => vec![g.clone(), kernels::reduce_to(g, x[1].shape()).map(|v| -v)],
        OpKind::Mul => {
            let ga = kernels::binary("mul", g, x[1], |a, b| a * b).expect("validated on forward");
            let gb = kernels::reduce_to(&g.zip_map(x[0], |a, b| a * b), x[1].shape());
            vec![ga, gb]
        }
        OpKind::Scale(c) => {
            let c = T::lit(*c);
            vec![g.map(|v| v * c)]
        }
        OpKind::Shift(_) => vec![g.clone()],
        OpKind::MatMul => vec![
            kernels::matmul_t(g, false, x[1], true).expect("validated on forward"),
            kernels::matmul_t(x[0], true, g, false).expect("validated on forward"),
        ],
        OpKind::Conv2d { stride, padding } => conv2d_adjoint(x[0], x[1], g, *stride, *padding),
        OpKind::ConvTranspose2d { stride, padding } => conv_transpose2d_adjoint(x[0], x[1], g, *stride, *padding),
        OpKind::Relu => vec![g.zip_map(x[0], |g, v| if v > T::zero() { g } else { T::zero() })],
        OpKind::Sigmoid => vec![g.zip_map(y, |g, s| g * s * (T::one() - s))],
        OpKind::Exp => vec![g.zip_map(y, |g, e| g * e)],
        OpKind::Log => vec![g.zip_map(x[0], |g, v| g / v)],
        OpKind::Square => vec![g.zip_map(x[0], |g, v| T::lit(2.0) * g * v)],
        OpKind::Clamp { lo, hi } => {
            let (lo, hi) = (T::lit(*lo), T::lit(*hi));
            vec![g.zip_map(x[0], |g, v| if v >= lo && v <= hi { g } else { T::zero() })]
        }
        OpKind::Sum => vec![Tensor::full(x[0].shape().to_vec(), g.item())],
        OpKind::Mean => {
            let n = T::lit(x[0].numel() as f64);
            vec![Tensor::full(x[0].shape().to_vec(), g.item() / n)]
        }
        OpKind::Reshape(_) => vec![g.reshape(x[0].shape().to_vec()).expect("same element count")],
        OpKind::Slice { axis, start, end } => {
            let mut out = Tensor::zeros(x[0].shape().to_vec());
            let (outer, len, inner) = kernels::around(x[0].shape(), *axis);
            let w = (end - start) * inner;
            for o in 0..outer {
                let base = o * len * inner + start * inner;
                out.data_mut()[base..base + w].copy_from_slice(&g.data()[o * w..(o + 1) * w]);
            }
            vec![out]
        }
        OpKind::Concat { axis } => {
            let (outer, total, inner) = kernels::around(g.shape(), *axis);
            let mut offset = 0;
            x.iter()
                .map(|p| {
                    let len = p.shape()[*axis];
                    let mut data = Vec::with_capacity(p.numel());
                    for o in 0..outer {
                        let base = (o * total + offset) * inner;
                        data.extend_from_slice(&g.data()[base..base + len * inner]);
                    }
                    offset += len;
                    Tensor::new(p.shape().to_vec(), data).expect("part shape")
                })
                .collect()
        }
    }
}

fn conv2d_adjoint<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    g: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Vec<Tensor<T>> {
    let geom = conv_geom_of(x, w, stride, padding);
    let n = x.shape()[0];
    let co = w.shape()[0];
    let (rows, ncol) = (geom.col_rows(), geom.col_cols());
    let plane = geom.channels * geom.height * geom.width;
    let mut gx = Tensor::zeros(x.shape().to_vec());
    let mut gw = Tensor::zeros(w.shape().to_vec());
    let mut cols = vec![T::zero(); rows * ncol];
    for b in 0..n {
        let gb = &g.data()[b * co * ncol..(b + 1) * co * ncol];
        kernels::im2col(&geom, &x.data()[b * plane..(b + 1) * plane], &mut cols);
        // gw += gb (co x ncol) * cols^T (ncol x rows)
        T::gemm(
            co,
            ncol,
            rows,
            T::one(),
            gb,
            ncol as isize,
            1,
            &cols,
            1,
            ncol as isize,
            T::one(),
            gw.data_mut(),
            rows as isize,
            1,
        );
        // dcols = w^T (rows x co) * gb (co x ncol)
        T::gemm(
            rows,
            co,
            ncol,
            T::one(),
            w.data(),
            1,
            rows as isize,
            gb,
            ncol as isize,
            1,
            T::zero(),
            &mut cols,
            ncol as isize,
            1,
        );
        kernels::col2im(&geom, &cols, &mut gx.data_mut()[b * plane..(b + 1) * plane]);
    }
    vec![gx, gw]
}

fn conv_transpose2d_adjoint<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    g: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Vec<Tensor<T>> {
    // The forward sweeps the kernel over the output plane.
    let geom = conv_geom_of(g, &Tensor::zeros([1, 1, w.shape()[2], w.shape()[3]]), stride, padding);
    let n = x.shape()[0];
    let ci = x.shape()[1];
    let (rows, ncol) = (geom.col_rows(), geom.col_cols());
    let out_plane = geom.channels * geom.height * geom.width;
    let mut gx = Tensor::zeros(x.shape().to_vec());
    let mut gw = Tensor::zeros(w.shape().to_vec());
    let mut cols = vec![T::zero(); rows * ncol];
    for b in 0..n {
        kernels::im2col(&geom, &g.data()[b * out_plane..(b + 1) * out_plane], &mut cols);
        let xb = &x.data()[b * ci * ncol..(b + 1) * ci * ncol];
        // gx_b = w (ci x rows) * cols (rows x ncol)
        T::gemm(
            ci,
            rows,
            ncol,
            T::one(),
            w.data(),
            rows as isize,
            1,
            &cols,
            ncol as isize,
            1,
            T::zero(),
            &mut gx.data_mut()[b * ci * ncol..(b + 1) * ci * ncol],
            ncol as isize,
            1,
        );
        // gw += xb (ci x ncol) * cols^T (ncol x rows)
        T::gemm(
            ci,
            ncol,
            rows,
            T::one(),
            xb,
            ncol as isize,
            1,
            &cols,
            1,
            ncol as isize,
            T::one(),
            gw.data_mut(),
            rows as isize,
            1,
        );
    }
    vec![gx, gw]
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn value(&self) -> Tensor<T> {
        self.tape.value(self.id).clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.value(self.id).shape().to_vec()
    }

    /// The single element of a one-element value.
    pub fn item(&self) -> T {
        self.tape.value(self.id).item()
    }

    fn unary(self, kind: OpKind) -> Result<Self> {
        self.tape.apply(kind, &[self])
    }

    fn binary(self, kind: OpKind, rhs: Self) -> Result<Self> {
        self.tape.apply(kind, &[self, rhs])
    }

    pub fn add(self, rhs: Self) -> Result<Self> {
        self.binary(OpKind::Add, rhs)
    }

    pub fn sub(self, rhs: Self) -> Result<Self> {
        self.binary(OpKind::Sub, rhs)
    }

    pub fn mul(self, rhs: Self) -> Result<Self> {
        self.binary(OpKind::Mul, rhs)
    }

    pub fn matmul(self, rhs: Self) -> Result<Self> {
        self.binary(OpKind::MatMul, rhs)
    }

    pub fn conv2d(self, weight: Self, stride: usize, padding: usize) -> Result<Self> {
        self.binary(OpKind::Conv2d { stride, padding }, weight)
    }

    pub fn conv_transpose2d(self, weight: Self, stride: usize, padding: usize) -> Result<Self> {
        self.binary(OpKind::ConvTranspose2d { stride, padding }, weight)
    }

    pub fn scale(self, c: f64) -> Result<Self> {
        self.unary(OpKind::Scale(c))
    }

    pub fn shift(self, c: f64) -> Result<Self> {
        self.unary(OpKind::Shift(c))
    }

    pub fn relu(self) -> Result<Self> {
        self.unary(OpKind::Relu)
    }

    pub fn sigmoid(self) -> Result<Self> {
        self.unary(OpKind::Sigmoid)
    }

    pub fn exp(self) -> Result<Self> {
        self.unary(OpKind::Exp)
    }

    pub fn log(self) -> Result<Self> {
        self.unary(OpKind::Log)
    }

    pub fn square(self) -> Result<Self> {
        self.unary(OpKind::Square)
    }

    pub fn clamp(self, lo: f64, hi: f64) -> Result<Self> {
        self.unary(OpKind::Clamp { lo, hi })
    }

    pub fn sum(self) -> Result<Self> {
        self.unary(OpKind::Sum)
    }

    pub fn mean(self) -> Result<Self> {
        self.unary(OpKind::Mean)
    }

    pub fn reshape(self, shape: impl Into<Vec<usize>>) -> Result<Self> {
        self.unary(OpKind::Reshape(shape.into()))
    }

    pub fn slice(self, axis: usize, start: usize, end: usize) -> Result<Self> {
        self.unary(OpKind::Slice { axis, start, end })
    }

    pub fn concat(parts: &[Self], axis: usize) -> Result<Self> {
        let first = parts.first().ok_or(TensorError::InvalidArgument {
            op: "concat",
            detail: "no inputs".into(),
        })?;
        first.tape.apply(OpKind::Concat { axis }, parts)
    }
}

/// Largest relative disagreement between the tape gradient of `f` at `point`
/// and a central finite difference with the given `step`.
///
/// Per coordinate the error is
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn finite_difference_check<T, F>(f: F, point: &Tensor<T>, step: T) -> Result<T>
where
    T: Scalar,
    F: for<'t> Fn(&'t Tape<T>, Var<'t, T>) -> Result<Var<'t, T>>,
{
    if !(step > T::zero()) {
        return Err(TensorError::InvalidArgument {
            op: "finite_difference_check",
            detail: "step must be positive".into(),
        });
    }
    let analytic = {
        let tape = Tape::new();
        let x = tape.param(point.clone());
        let y = f(&tape, x)?;
        tape.backward(y)?.wrt(x)
    };
    let eval = |p: Tensor<T>| -> Result<T> {
        let tape = Tape::new();
        let x = tape.constant(p);
        let y = f(&tape, x)?;
        Ok(y.item())
    };
    let floor = T::lit(1e-8);
    let two = T::lit(2.0);
    let mut worst = T::zero();
    let mut probe = point.clone();
    for i in 0..point.numel() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let up = eval(probe.clone())?;
        probe.data_mut()[i] = orig - step;
        let down = eval(probe.clone())?;
        probe.data_mut()[i] = orig;
        let numeric = (up - down) / (two * step);
        let a = analytic.data()[i];
        let err = (a - numeric).abs() / floor.max(a.abs() + numeric.abs());
        worst = worst.max(err);
    }
    Ok(worst)
}
