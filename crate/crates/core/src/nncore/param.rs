use std::sync::Arc;

use super::Real;
use crate::error::{ensure, Error, Result};

/// Role of a parameter buffer. Running statistics are state, not trainable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Weight,
    Bias,
    BnGamma,
    BnBeta,
    RunningMean,
    RunningVar,
}

impl ParamKind {
    pub fn is_trainable(self) -> bool {
        !matches!(self, ParamKind::RunningMean | ParamKind::RunningVar)
    }

    /// Weight decay applies to conv/linear weights only.
    pub fn decays(self) -> bool {
        matches!(self, ParamKind::Weight)
    }

    pub fn code(self) -> u8 {
        match self {
            ParamKind::Weight => 0,
            ParamKind::Bias => 1,
            ParamKind::BnGamma => 2,
            ParamKind::BnBeta => 3,
            ParamKind::RunningMean => 4,
            ParamKind::RunningVar => 5,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => ParamKind::Weight,
            1 => ParamKind::Bias,
            2 => ParamKind::BnGamma,
            3 => ParamKind::BnBeta,
            4 => ParamKind::RunningMean,
            5 => ParamKind::RunningVar,
            other => return Err(Error::Format(format!("unknown parameter kind {other}"))),
        })
    }
}

/// A named parameter buffer with its gradient.
#[derive(Debug, Clone)]
pub struct Param<T> {
    pub name: String,
    pub kind: ParamKind,
    pub value: Vec<T>,
    pub grad: Vec<T>,
}

impl<T: Real> Param<T> {
    pub fn new(name: impl Into<String>, kind: ParamKind, value: Vec<T>) -> Self {
        let grad = vec![T::ZERO; value.len()];
        Self { name: name.into(), kind, value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = T::ZERO);
    }
}

/// Anything that owns parameters in a fixed order.
pub trait Module<T: Real> {
    fn params(&self) -> Vec<&Param<T>>;
    fn params_mut(&mut self) -> Vec<&mut Param<T>>;
    /// Switches batch-norm layers between batch and running statistics.
    fn set_training(&mut self, training: bool);

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_trainable(&self) -> usize {
        self.params().iter().filter(|p| p.kind.is_trainable()).map(|p| p.value.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutEntry {
    pub name: String,
    pub kind: ParamKind,
    pub offset: usize,
    pub len: usize,
}

/// Ordered index of every parameter buffer of a model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layout {
    entries: Vec<LayoutEntry>,
    total: usize,
}

impl Layout {
    pub fn from_entries(items: impl IntoIterator<Item = (String, ParamKind, usize)>) -> Self {
        let mut total = 0;
        let entries = items
            .into_iter()
            .map(|(name, kind, len)| {
                let e = LayoutEntry { name, kind, offset: total, len };
                total += len;
                e
            })
            .collect();
        Self { entries, total }
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn trainable_len(&self) -> usize {
        self.entries.iter().filter(|e| e.kind.is_trainable()).map(|e| e.len).sum()
    }

    /// Ranges of the flat vector holding trainable entries.
    pub fn trainable_ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.entries.iter().filter(|e| e.kind.is_trainable()).map(|e| e.offset..e.offset + e.len)
    }
}

/// Flat view of all parameter buffers of a model (trainable values and
/// batch-norm running statistics) in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<T> {
    layout: Arc<Layout>,
    values: Vec<T>,
}

impl<T: Real> ParamVector<T> {
    pub fn new(layout: Arc<Layout>, values: Vec<T>) -> Result<Self> {
        ensure!(
            layout.total_len() == values.len(),
            Layout,
            "layout describes {} values, got {}",
            layout.total_len(),
            values.len()
        );
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || self.layout == other.layout
    }

    pub fn check_layout(&self, other: &Self) -> Result<()> {
        ensure!(self.same_layout(other), Layout, "parameter layouts differ");
        Ok(())
    }

    /// Squared Euclidean distance over trainable entries only.
    pub fn trainable_sq_distance(&self, other: &Self) -> Result<f64> {
        self.check_layout(other)?;
        let mut acc = 0.0;
        for r in self.layout.trainable_ranges() {
            for (a, b) in self.values[r.clone()].iter().zip(&other.values[r]) {
                let d = a.to_f64() - b.to_f64();
                acc += d * d;
            }
        }
        Ok(acc)
    }

    pub fn cast<U: Real>(&self) -> ParamVector<U> {
        ParamVector {
            layout: self.layout.clone(),
            values: self.values.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }
}

pub fn layout_of<T: Real>(module: &impl Module<T>) -> Layout {
    Layout::from_entries(module.params().into_iter().map(|p| (p.name.clone(), p.kind, p.value.len())))
}

/// Copies every parameter buffer of `module` into a flat vector.
pub fn flatten_params<T: Real>(module: &impl Module<T>) -> ParamVector<T> {
    let params = module.params();
    let layout = Layout::from_entries(params.iter().map(|p| (p.name.clone(), p.kind, p.value.len())));
    let mut values = Vec::with_capacity(layout.total_len());
    for p in &params {
        values.extend_from_slice(&p.value);
    }
    ParamVector { layout: Arc::new(layout), values }
}

/// Flat copy of the gradient buffers, sharing `like`'s layout.
pub fn flatten_grads<T: Real>(module: &impl Module<T>, like: &ParamVector<T>) -> Result<ParamVector<T>> {
    let mut values = Vec::with_capacity(like.len());
    for p in module.params() {
        values.extend_from_slice(&p.grad);
    }
    ParamVector::new(like.layout.clone(), values)
}

/// Loads a flat vector back into `module`, checking names, kinds and sizes.
pub fn load_params<T: Real>(module: &mut impl Module<T>, params: &ParamVector<T>) -> Result<()> {
    let entries = params.layout.entries();
    let mut targets = module.params_mut();
    ensure!(
        targets.len() == entries.len(),
        Layout,
        "model has {} buffers, vector has {}",
        targets.len(),
        entries.len()
    );
    for (p, e) in targets.iter().zip(entries) {
        ensure!(
            p.name == e.name && p.kind == e.kind && p.value.len() == e.len,
            Layout,
            "entry {} ({:?}, {}) does not match model buffer {} ({:?}, {})",
            e.name,
            e.kind,
            e.len,
            p.name,
            p.kind,
            p.value.len()
        );
    }
    for (p, e) in targets.iter_mut().zip(entries) {
        p.value.copy_from_slice(&params.values[e.offset..e.offset + e.len]);
    }
    Ok(())
}
