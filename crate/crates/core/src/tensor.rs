//! Dense row-major tensors and the forward kernels the tape dispatches to.

use std::fmt;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("{op}: {detail}")]
    InvalidArgument { op: &'static str, detail: String },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("backward requires a tracked loss")]
    UntrackedLoss,
}

pub type Result<T, E = TensorError> = std::result::Result<T, E>;

fn invalid(op: &'static str, detail: impl Into<String>) -> TensorError {
    TensorError::InvalidArgument {
        op,
        detail: detail.into(),
    }
}

/// A dense tensor. `shape.iter().product() == data.len()` always holds.
#[derive(Clone, PartialEq)]
pub struct Tensor<T: Scalar = f64> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<T>) -> Result<Self> {
        let shape = shape.into();
        if shape.contains(&0) {
            return Err(invalid("tensor", format!("zero-sized dimension in {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(invalid(
                "tensor",
                format!("shape {shape:?} needs {n} elements, got {}", data.len()),
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: impl Into<Vec<usize>>, value: T) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    pub fn scalar(value: T) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros([n, n]);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    pub fn from_fn(shape: impl Into<Vec<usize>>, mut f: impl FnMut(usize) -> T) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Self {
            shape,
            data: (0..n).map(&mut f).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// The single element of a one-element tensor.
    pub fn item(&self) -> T {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn reshape(&self, shape: impl Into<Vec<usize>>) -> Result<Self> {
        let shape = shape.into();
        let n: usize = shape.iter().product();
        if n != self.numel() || shape.contains(&0) {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                lhs: self.shape.clone(),
                rhs: shape,
            });
        }
        Ok(Self {
            shape,
            data: self.data.clone(),
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.shape, other.shape);
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Converts element type. `f32 -> f64 -> f32` is exact.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Forward kernels. Every function validates shapes and returns a fresh tensor.
pub mod kernels {
    use super::*;

    /// Maps each flat index of `out_shape` to a flat index of `rhs_shape`,
    /// with `rhs_shape` right-aligned and broadcast along unit dimensions.
    pub fn broadcast_index(out_shape: &[usize], rhs_shape: &[usize]) -> Option<Vec<usize>> {
        let r = rhs_shape.len();
        let o = out_shape.len();
        if r > o {
            // Leading unit dims on the rhs are harmless.
            if rhs_shape[..r - o].iter().any(|&d| d != 1) {
                return None;
            }
            return broadcast_index(out_shape, &rhs_shape[r - o..]);
        }
        let mut strides = vec![0usize; o];
        let mut acc = 1usize;
        for i in (0..r).rev() {
            let od = out_shape[o - r + i];
            let rd = rhs_shape[i];
            if rd == od {
                strides[o - r + i] = acc;
            } else if rd != 1 {
                return None;
            }
            acc *= rd;
        }
        let n: usize = out_shape.iter().product();
        let mut idx = Vec::with_capacity(n);
        let mut counter = vec![0usize; o];
        let mut flat = 0usize;
        for _ in 0..n {
            idx.push(flat);
            for d in (0..o).rev() {
                counter[d] += 1;
                flat += strides[d];
                if counter[d] < out_shape[d] {
                    break;
                }
                flat -= strides[d] * counter[d];
                counter[d] = 0;
            }
        }
        Some(idx)
    }

    pub(crate) enum Broadcast {
        Same,
        Scalar,
        Suffix(usize),
        General(Vec<usize>),
    }

    pub(crate) fn plan(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Result<Broadcast> {
        if lhs == rhs {
            return Ok(Broadcast::Same);
        }
        let rn: usize = rhs.iter().product();
        if rn == 1 {
            return Ok(Broadcast::Scalar);
        }
        if rhs.len() < lhs.len() && lhs.ends_with(rhs) {
            return Ok(Broadcast::Suffix(rn));
        }
        broadcast_index(lhs, rhs)
            .map(Broadcast::General)
            .ok_or_else(|| TensorError::ShapeMismatch {
                op,
                lhs: lhs.to_vec(),
                rhs: rhs.to_vec(),
            })
    }

    pub(crate) fn rhs_at(plan: &Broadcast, i: usize) -> usize {
        match plan {
            Broadcast::Same => i,
            Broadcast::Scalar => 0,
            Broadcast::Suffix(n) => i % n,
            Broadcast::General(idx) => idx[i],
        }
    }

    /// Elementwise `f(lhs, rhs)` with `rhs` broadcast onto `lhs`'s shape.
    pub fn binary<T: Scalar>(
        op: &'static str,
        lhs: &Tensor<T>,
        rhs: &Tensor<T>,
        f: impl Fn(T, T) -> T,
    ) -> Result<Tensor<T>> {
        let p = plan(op, &lhs.shape, &rhs.shape)?;
        let data = lhs
            .data
            .iter()
            .enumerate()
            .map(|(i, &a)| f(a, rhs.data[rhs_at(&p, i)]))
            .collect();
        Ok(Tensor {
            shape: lhs.shape.clone(),
            data,
        })
    }

    /// Sums `grad` (shaped like the broadcast output) back down to `rhs_shape`.
    pub fn reduce_to<T: Scalar>(grad: &Tensor<T>, rhs_shape: &[usize]) -> Tensor<T> {
        let mut out = Tensor::zeros(rhs_shape.to_vec());
        let p = plan("reduce", &grad.shape, rhs_shape).expect("shape validated on forward");
        for (i, &g) in grad.data.iter().enumerate() {
            out.data[rhs_at(&p, i)] += g;
        }
        out
    }

    fn dims2(op: &'static str, t: &Tensor<impl Scalar>) -> Result<(usize, usize)> {
        match t.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            s => Err(invalid(op, format!("expected a matrix, got shape {s:?}"))),
        }
    }

    /// `C = op(A) * op(B)` where `op` optionally transposes.
    pub fn matmul_t<T: Scalar>(a: &Tensor<T>, ta: bool, b: &Tensor<T>, tb: bool) -> Result<Tensor<T>> {
        let (ar, ac) = dims2("matmul", a)?;
        let (br, bc) = dims2("matmul", b)?;
        let (m, k, rsa, csa) = if ta {
            (ac, ar, 1, ac as isize)
        } else {
            (ar, ac, ac as isize, 1)
        };
        let (k2, n, rsb, csb) = if tb {
            (bc, br, 1, bc as isize)
        } else {
            (br, bc, bc as isize, 1)
        };
        if k != k2 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: a.shape.clone(),
                rhs: b.shape.clone(),
            });
        }
        let mut out = Tensor::zeros([m, n]);
        T::gemm(
            m,
            k,
            n,
            T::one(),
            &a.data,
            rsa,
            csa,
            &b.data,
            rsb,
            csb,
            T::zero(),
            &mut out.data,
            n as isize,
            1,
        );
        Ok(out)
    }

    pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        matmul_t(a, false, b, false)
    }

    /// Geometry of a 2-d convolution window sweep over one image plane.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct ConvGeom {
        pub channels: usize,
        pub height: usize,
        pub width: usize,
        pub kh: usize,
        pub kw: usize,
        pub stride: usize,
        pub padding: usize,
        pub out_h: usize,
        pub out_w: usize,
    }

    impl ConvGeom {
        pub fn new(
            channels: usize,
            height: usize,
            width: usize,
            kh: usize,
            kw: usize,
            stride: usize,
            padding: usize,
        ) -> Result<Self> {
            if stride == 0 {
                return Err(invalid("conv2d", "stride must be >= 1"));
            }
            let ph = height + 2 * padding;
            let pw = width + 2 * padding;
            if ph < kh || pw < kw {
                return Err(invalid(
                    "conv2d",
                    format!("kernel {kh}x{kw} larger than padded input {ph}x{pw}"),
                ));
            }
            Ok(Self {
                channels,
                height,
                width,
                kh,
                kw,
                stride,
                padding,
                out_h: (ph - kh) / stride + 1,
                out_w: (pw - kw) / stride + 1,
            })
        }

        pub fn col_rows(&self) -> usize {
            self.channels * self.kh * self.kw
        }

        pub fn col_cols(&self) -> usize {
            self.out_h * self.out_w
        }

        #[inline]
        fn source(&self, oy: usize, ox: usize, ky: usize, kx: usize) -> Option<(usize, usize)> {
            let y = (oy * self.stride + ky) as isize - self.padding as isize;
            let x = (ox * self.stride + kx) as isize - self.padding as isize;
            if y < 0 || x < 0 || y >= self.height as isize || x >= self.width as isize {
                None
            } else {
                Some((y as usize, x as usize))
            }
        }
    }

    /// Unfolds one `(C, H, W)` plane into a `(C*kh*kw, out_h*out_w)` matrix.
    pub fn im2col<T: Scalar>(g: &ConvGeom, img: &[T], cols: &mut [T]) {
        let ncol = g.col_cols();
        for c in 0..g.channels {
            for ky in 0..g.kh {
                for kx in 0..g.kw {
                    let row = (c * g.kh + ky) * g.kw + kx;
                    let dst = &mut cols[row * ncol..(row + 1) * ncol];
                    for oy in 0..g.out_h {
                        for ox in 0..g.out_w {
                            dst[oy * g.out_w + ox] = match g.source(oy, ox, ky, kx) {
                                Some((y, x)) => img[(c * g.height + y) * g.width + x],
                                None => T::zero(),
                            };
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`im2col`]: scatter-adds columns back into a plane.
    pub fn col2im<T: Scalar>(g: &ConvGeom, cols: &[T], img: &mut [T]) {
        let ncol = g.col_cols();
        for c in 0..g.channels {
            for ky in 0..g.kh {
                for kx in 0..g.kw {
                    let row = (c * g.kh + ky) * g.kw + kx;
                    let src = &cols[row * ncol..(row + 1) * ncol];
                    for oy in 0..g.out_h {
                        for ox in 0..g.out_w {
                            if let Some((y, x)) = g.source(oy, ox, ky, kx) {
                                img[(c * g.height + y) * g.width + x] += src[oy * g.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }

    fn dims4(op: &'static str, t: &Tensor<impl Scalar>) -> Result<[usize; 4]> {
        match t.shape.as_slice() {
            &[a, b, c, d] => Ok([a, b, c, d]),
            s => Err(invalid(op, format!("expected a 4-d tensor, got shape {s:?}"))),
        }
    }

    /// Cross-correlation: `x (N, Ci, H, W)`, `w (Co, Ci, kh, kw)` -> `(N, Co, Ho, Wo)`.
    pub fn conv2d<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, stride: usize, padding: usize) -> Result<Tensor<T>> {
        let [n, ci, h, wd] = dims4("conv2d", x)?;
        let [co, wci, kh, kw] = dims4("conv2d", w)?;
        if ci != wci {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                lhs: x.shape.clone(),
                rhs: w.shape.clone(),
            });
        }
        let g = ConvGeom::new(ci, h, wd, kh, kw, stride, padding)?;
        let (rows, ncol) = (g.col_rows(), g.col_cols());
        let mut out = Tensor::zeros([n, co, g.out_h, g.out_w]);
        let mut cols = vec![T::zero(); rows * ncol];
        let plane = ci * h * wd;
        for b in 0..n {
            im2col(&g, &x.data[b * plane..(b + 1) * plane], &mut cols);
            let dst = &mut out.data[b * co * ncol..(b + 1) * co * ncol];
            T::gemm(
                co,
                rows,
                ncol,
                T::one(),
                &w.data,
                rows as isize,
                1,
                &cols,
                ncol as isize,
                1,
                T::zero(),
                dst,
                ncol as isize,
                1,
            );
        }
        Ok(out)
    }

    /// Transposed convolution: `x (N, Ci, H, W)`, `w (Ci, Co, kh, kw)` ->
    /// `(N, Co, (H-1)*s - 2p + kh, (W-1)*s - 2p + kw)`. This is the adjoint of
    /// [`conv2d`] with the same weight layout read as `(Ci, Co, ..)`.
    pub fn conv_transpose2d<T: Scalar>(
        x: &Tensor<T>,
        w: &Tensor<T>,
        stride: usize,
        padding: usize,
    ) -> Result<Tensor<T>> {
        let [n, ci, h, wd] = dims4("conv_transpose2d", x)?;
        let [wci, co, kh, kw] = dims4("conv_transpose2d", w)?;
        if ci != wci {
            return Err(TensorError::ShapeMismatch {
                op: "conv_transpose2d",
                lhs: x.shape.clone(),
                rhs: w.shape.clone(),
            });
        }
        if stride == 0 {
            return Err(invalid("conv_transpose2d", "stride must be >= 1"));
        }
        let oh = ((h - 1) * stride + kh)
            .checked_sub(2 * padding)
            .filter(|&v| v > 0)
            .ok_or_else(|| invalid("conv_transpose2d", "padding too large for output"))?;
        let ow = ((wd - 1) * stride + kw)
            .checked_sub(2 * padding)
            .filter(|&v| v > 0)
            .ok_or_else(|| invalid("conv_transpose2d", "padding too large for output"))?;
        let g = ConvGeom::new(co, oh, ow, kh, kw, stride, padding)?;
        debug_assert_eq!((g.out_h, g.out_w), (h, wd));
        let (rows, ncol) = (g.col_rows(), g.col_cols());
        let mut out = Tensor::zeros([n, co, oh, ow]);
        let mut cols = vec![T::zero(); rows * ncol];
        for b in 0..n {
            let xb = &x.data[b * ci * ncol..(b + 1) * ci * ncol];
            // cols = w^T (rows x ci) * xb (ci x ncol)
            T::gemm(
                rows,
                ci,
                ncol,
                T::one(),
                &w.data,
                1,
                rows as isize,
                xb,
                ncol as isize,
                1,
                T::zero(),
                &mut cols,
                ncol as isize,
                1,
            );
            col2im(&g, &cols, &mut out.data[b * co * oh * ow..(b + 1) * co * oh * ow]);
        }
        Ok(out)
    }

    /// Splits a shape around `axis` into (outer, axis length, inner).
    pub(crate) fn around(shape: &[usize], axis: usize) -> (usize, usize, usize) {
        let outer = shape[..axis].iter().product();
        let inner = shape[axis + 1..].iter().product();
        (outer, shape[axis], inner)
    }

    pub fn slice<T: Scalar>(x: &Tensor<T>, axis: usize, start: usize, end: usize) -> Result<Tensor<T>> {
        if axis >= x.rank() || start >= end || end > x.shape[axis] {
            return Err(invalid(
                "slice",
                format!("range {start}..{end} on axis {axis} invalid for shape {:?}", x.shape),
            ));
        }
        let (outer, len, inner) = around(&x.shape, axis);
        let width = end - start;
        let mut data = Vec::with_capacity(outer * width * inner);
        for o in 0..outer {
            let base = o * len * inner;
            data.extend_from_slice(&x.data[base + start * inner..base + end * inner]);
        }
        let mut shape = x.shape.clone();
        shape[axis] = width;
        Ok(Tensor { shape, data })
    }

    pub fn concat<T: Scalar>(parts: &[&Tensor<T>], axis: usize) -> Result<Tensor<T>> {
        let first = parts.first().ok_or_else(|| invalid("concat", "no inputs"))?;
        if axis >= first.rank() {
            return Err(invalid(
                "concat",
                format!("axis {axis} out of range for {:?}", first.shape),
            ));
        }
        for p in &parts[1..] {
            let compatible = p.rank() == first.rank()
                && p.shape
                    .iter()
                    .zip(&first.shape)
                    .enumerate()
                    .all(|(d, (a, b))| d == axis || a == b);
            if !compatible {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    lhs: first.shape.clone(),
                    rhs: p.shape.clone(),
                });
            }
        }
        let (outer, _, inner) = around(&first.shape, axis);
        let total: usize = parts.iter().map(|p| p.shape[axis]).sum();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for p in parts {
                let w = p.shape[axis] * inner;
                data.extend_from_slice(&p.data[o * w..(o + 1) * w]);
            }
        }
        let mut shape = first.shape.clone();
        shape[axis] = total;
        Ok(Tensor { shape, data })
    }
}

#[cfg(test)]
mod tests {
    use super::kernels::*;
    use super::*;

    #[test]
    fn constructor_checks_element_count() {
        assert!(Tensor::<f64>::new([2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f64>::new([2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::<f64>::new([0, 3], vec![]).is_err());
    }

    #[test]
    fn identity_matmul() {
        let a = Tensor::<f64>::from_fn([3, 3], |i| i as f64 - 4.0);
        assert_eq!(matmul(&Tensor::eye(3), &a).unwrap(), a);
    }

    #[test]
    fn matmul_rejects_inner_mismatch() {
        let a = Tensor::<f64>::zeros([2, 3]);
        let err = matmul(&a, &a).unwrap_err();
        assert!(matches!(err, TensorError::ShapeMismatch { op: "matmul", .. }));
    }

    #[test]
    fn bias_broadcast_over_channels() {
        let x = Tensor::<f64>::zeros([2, 3, 2, 2]);
        let b = Tensor::new([3, 1, 1], vec![1.0, 2.0, 3.0]).unwrap();
        let y = binary("add", &x, &b, |a, b| a + b).unwrap();
        assert_eq!(&y.data()[..8], &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
        assert_eq!(y.data()[12], 1.0);
        let back = reduce_to(&y, &[3, 1, 1]);
        assert_eq!(back.data(), &[8.0, 16.0, 24.0]);
    }

    #[test]
    fn conv_output_sizes() {
        let x = Tensor::<f64>::zeros([1, 3, 64, 64]);
        let w = Tensor::<f64>::zeros([32, 3, 4, 4]);
        assert_eq!(conv2d(&x, &w, 2, 1).unwrap().shape(), &[1, 32, 32, 32]);
        let z = Tensor::<f64>::zeros([1, 256, 1, 1]);
        let wt = Tensor::<f64>::zeros([256, 64, 4, 4]);
        assert_eq!(conv_transpose2d(&z, &wt, 2, 1).unwrap().shape(), &[1, 64, 2, 2]);
    }

    #[test]
    fn conv2d_against_direct_loops() {
        let x = Tensor::<f64>::from_fn([2, 2, 5, 5], |i| ((i * 7) % 11) as f64 - 5.0);
        let w = Tensor::<f64>::from_fn([3, 2, 3, 3], |i| ((i * 5) % 7) as f64 * 0.25 - 0.5);
        let (s, p) = (2, 1);
        let y = conv2d(&x, &w, s, p).unwrap();
        let [_, _, oh, ow] = [2, 3, 3, 3];
        for b in 0..2 {
            for o in 0..3 {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = 0.0;
                        for c in 0..2 {
                            for ky in 0..3 {
                                for kx in 0..3 {
                                    let yy = (oy * s + ky) as isize - p as isize;
                                    let xx = (ox * s + kx) as isize - p as isize;
                                    if (0..5).contains(&yy) && (0..5).contains(&xx) {
                                        acc += x.data()[((b * 2 + c) * 5 + yy as usize) * 5 + xx as usize]
                                            * w.data()[((o * 2 + c) * 3 + ky) * 3 + kx];
                                    }
                                }
                            }
                        }
                        let got = y.data()[((b * 3 + o) * oh + oy) * ow + ox];
                        assert!((got - acc).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn conv_transpose_is_adjoint_of_conv() {
        // <conv(x, w), y> == <x, convT(y, w)>
        let x = Tensor::<f64>::from_fn([1, 2, 6, 6], |i| (i as f64 * 0.37).sin());
        let w = Tensor::<f64>::from_fn([3, 2, 4, 4], |i| (i as f64 * 0.11).cos());
        let cx = conv2d(&x, &w, 2, 1).unwrap();
        let y = Tensor::<f64>::from_fn(cx.shape().to_vec(), |i| (i as f64 * 0.23).sin());
        let ty = conv_transpose2d(&y, &w, 2, 1).unwrap();
        assert_eq!(ty.shape(), x.shape());
        let lhs: f64 = cx.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(ty.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn slice_concat_round_trip() {
        let x = Tensor::<f64>::from_fn([3, 4, 2], |i| i as f64);
        let a = slice(&x, 1, 0, 1).unwrap();
        let b = slice(&x, 1, 1, 4).unwrap();
        assert_eq!(concat(&[&a, &b], 1).unwrap(), x);
    }
}
