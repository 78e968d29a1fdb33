//! Parameters and a small reverse-mode tape.
//!
//! A [`Graph`] records every operator application together with its output
//! value. [`Graph::backward`] walks the record in reverse, calling the
//! hand-written adjoint of each operator, and accumulates parameter
//! gradients into the owning [`ParamStore`].

use std::collections::HashMap;

use crate::error::{shape_err, Error, Result};
use crate::tensor::{ops, Real, Shape, Tensor};
use crate::wavelet::{self, Subband};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Real> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { name: name.into(), value, grad }
    }
}

/// Ordered, named collection of trainable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Parameter<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> Result<ParamId> {
        let name = name.into();
        if self.find(&name).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate parameter name {name:?}")));
        }
        self.params.push(Parameter::new(name, value));
        Ok(ParamId(self.params.len() - 1))
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.params[id.0]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<T>> {
        self.params.iter_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    /// Number of scalar trainable values.
    pub fn numel(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(T::zero());
        }
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Parameter { name: p.name.clone(), value: p.value.cast(), grad: p.grad.cast() })
                .collect(),
        }
    }

    /// All values concatenated in parameter order.
    pub fn flat_values(&self) -> Vec<T> {
        self.params.iter().flat_map(|p| p.value.data().iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<T> {
        self.params.iter().flat_map(|p| p.grad.data().iter().copied()).collect()
    }

    pub fn set_flat_values(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.numel() {
            return shape_err(format!("{} flat values for {} parameters", flat.len(), self.numel()));
        }
        let mut offset = 0;
        for p in &mut self.params {
            let n = p.value.len();
            p.value.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op<T> {
    Input,
    Param(ParamId),
    Conv2d { x: Var, weight: Var, bias: Var },
    Relu(Var),
    Upsample { x: Var, scale: usize },
    Add(Var, Var),
    Analyze { x: Var, band: Subband },
    Synthesize([Var; 4]),
    Huber { pred: Var, target: Var, delta: T },
    Scale { x: Var, k: T },
    Sum(Vec<Var>),
}

#[derive(Clone, Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

#[derive(Clone, Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    param_vars: HashMap<ParamId, Var>,
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), param_vars: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    /// Constant input; receives a gradient but is not trained.
    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Input)
    }

    /// Trainable leaf. Repeated calls for the same id return the same node.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        let v = self.push(store.get(id).value.clone(), Op::Param(id));
        self.param_vars.insert(id, v);
        v
    }

    pub fn conv2d(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var> {
        let out = ops::conv2d(self.value(x), self.value(weight), self.value(bias))?;
        Ok(self.push(out, Op::Conv2d { x, weight, bias }))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = ops::relu(self.value(x));
        self.push(out, Op::Relu(x))
    }

    pub fn upsample(&mut self, x: Var, scale: usize) -> Result<Var> {
        let out = ops::bilinear_upsample(self.value(x), scale)?;
        Ok(self.push(out, Op::Upsample { x, scale }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(self.value(b))?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// One Haar subband of `x`.
    pub fn analyze(&mut self, x: Var, band: Subband) -> Result<Var> {
        let out = wavelet::analyze_band(self.value(x), band)?;
        Ok(self.push(out, Op::Analyze { x, band }))
    }

    /// All four subbands, in `LL, LH, HL, HH` order.
    pub fn dwt(&mut self, x: Var) -> Result<[Var; 4]> {
        Ok([
            self.analyze(x, Subband::LL)?,
            self.analyze(x, Subband::LH)?,
            self.analyze(x, Subband::HL)?,
            self.analyze(x, Subband::HH)?,
        ])
    }

    /// Haar synthesis from `[LL, LH, HL, HH]`.
    pub fn idwt(&mut self, bands: [Var; 4]) -> Result<Var> {
        let pyramid = wavelet::WaveletPyramid {
            ll: self.value(bands[0]).clone(),
            high: [self.value(bands[1]).clone(), self.value(bands[2]).clone(), self.value(bands[3]).clone()],
        };
        let out = wavelet::idwt2_haar(&pyramid)?;
        Ok(self.push(out, Op::Synthesize(bands)))
    }

    /// Mean Huber loss, recorded as a `(1, 1, 1, 1)` node.
    pub fn huber(&mut self, pred: Var, target: Var, delta: T) -> Result<Var> {
        let loss = ops::huber(self.value(pred), self.value(target), delta)?;
        Ok(self.push(Tensor::scalar(loss), Op::Huber { pred, target, delta }))
    }

    pub fn scale(&mut self, x: Var, k: T) -> Var {
        let out = self.value(x).scale(k);
        self.push(out, Op::Scale { x, k })
    }

    /// Elementwise sum of same-shaped nodes, accumulated left to right.
    pub fn sum(&mut self, terms: &[Var]) -> Result<Var> {
        let (first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("sum of zero terms".into()))?;
        let mut out = self.value(*first).clone();
        for &t in rest {
            out.add_assign(self.value(t))?;
        }
        Ok(self.push(out, Op::Sum(terms.to_vec())))
    }

    /// Reverse-mode sweep from a scalar `loss`. Parameter gradients are
    /// added to `store`; gradients of every node are returned.
    pub fn backward(&self, loss: Var, store: &mut ParamStore<T>) -> Result<Gradients<T>> {
        if self.nodes.is_empty() || loss.0 >= self.nodes.len() {
            return Err(Error::NoForwardPass);
        }
        if self.value(loss).shape() != Shape::scalar() {
            return shape_err(format!("backward needs a scalar loss, got shape {}", self.value(loss).shape()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(T::one()));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Input => {}
                Op::Param(id) => store.get_mut(*id).grad.add_assign(&g)?,
                Op::Conv2d { x, weight, bias } => {
                    let cg = ops::conv2d_backward(self.value(*x), self.value(*weight), &g)?;
                    accumulate(&mut grads, *x, cg.input)?;
                    accumulate(&mut grads, *weight, cg.weight)?;
                    accumulate(&mut grads, *bias, cg.bias)?;
                }
                Op::Relu(x) => {
                    let gx = ops::relu_backward(self.value(*x), &g)?;
                    accumulate(&mut grads, *x, gx)?;
                }
                Op::Upsample { x, scale } => {
                    let gx = ops::bilinear_upsample_backward(self.value(*x).shape(), *scale, &g)?;
                    accumulate(&mut grads, *x, gx)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g.clone())?;
                }
                Op::Analyze { x, band } => {
                    let mut gx = Tensor::zeros(self.value(*x).shape());
                    wavelet::synthesize_band_into(&g, *band, &mut gx)?;
                    accumulate(&mut grads, *x, gx)?;
                }
                Op::Synthesize(bands) => {
                    for (&v, band) in bands.iter().zip(Subband::ALL) {
                        accumulate(&mut grads, v, wavelet::analyze_band(&g, band)?)?;
                    }
                }
                Op::Huber { pred, target, delta } => {
                    let gp = ops::huber_backward(self.value(*pred), self.value(*target), *delta, g.item())?;
                    accumulate(&mut grads, *target, gp.scale(-T::one()))?;
                    accumulate(&mut grads, *pred, gp)?;
                }
                Op::Scale { x, k } => accumulate(&mut grads, *x, g.scale(*k))?,
                Op::Sum(terms) => {
                    for &t in terms {
                        accumulate(&mut grads, t, g.clone())?;
                    }
                }
            }
            if matches!(self.nodes[i].op, Op::Input | Op::Param(_)) {
                grads[i] = Some(g);
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate<T: Real>(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) -> Result<()> {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

/// Gradients of the loss with respect to leaf nodes (inputs and parameters).
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}
