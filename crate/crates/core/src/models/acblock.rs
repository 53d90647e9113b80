use rand::Rng;

use crate::error::{ensure, Result};
use crate::nncore::{AvgPool1d, BatchNorm1d, Conv1d, DepthwiseConv1d, Param, Real, Relu, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcBlockCfg {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl AcBlockCfg {
    pub fn new(c_in: usize, c_out: usize, stride: usize) -> Self {
        Self { c_in, c_out, kernel: 3, stride }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.stride == 1 || self.stride == 2, Param, "ACBlock stride must be 1 or 2, got {}", self.stride);
        ensure!(self.kernel % 2 == 1, Param, "ACBlock kernel must be odd, got {}", self.kernel);
        ensure!(self.c_in >= 1 && self.c_out >= 1, Param, "ACBlock channels must be positive");
        Ok(())
    }

    pub fn output_len(&self, len: usize) -> usize {
        len.div_ceil(self.stride)
    }
}

/// Three parallel branches summed and rectified:
///
/// * pointwise then depthwise: `BN(DW(BN(PW(x))))`, PW maps `c_in -> c_out`;
/// * depthwise then pointwise: `BN(PW(BN(DW(x))))`, DW runs over `c_in`;
/// * residual: `Pool(BN(Conv1x1(x)))`, pooling only when `stride > 1`.
///
/// The stride lives in both depthwise convolutions and in the pooling.
#[derive(Debug, Clone)]
pub struct AcBlock<T> {
    pub cfg: AcBlockCfg,
    pub pd_pw: Conv1d<T>,
    pub pd_bn1: BatchNorm1d<T>,
    pub pd_dw: DepthwiseConv1d<T>,
    pub pd_bn2: BatchNorm1d<T>,
    pub dp_dw: DepthwiseConv1d<T>,
    pub dp_bn1: BatchNorm1d<T>,
    pub dp_pw: Conv1d<T>,
    pub dp_bn2: BatchNorm1d<T>,
    pub res_conv: Conv1d<T>,
    pub res_bn: BatchNorm1d<T>,
    pub res_pool: Option<AvgPool1d>,
    relu: Relu,
}

impl<T: Real> AcBlock<T> {
    pub fn new<R: Rng + ?Sized>(name: &str, cfg: AcBlockCfg, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let AcBlockCfg { c_in, c_out, kernel, stride } = cfg;
        Ok(Self {
            cfg,
            pd_pw: Conv1d::pointwise(&format!("{name}.pd.pw"), c_in, c_out, true, rng)?,
            pd_bn1: BatchNorm1d::new(&format!("{name}.pd.bn1"), c_out),
            pd_dw: DepthwiseConv1d::new(&format!("{name}.pd.dw"), c_out, kernel, stride, true, rng)?,
            pd_bn2: BatchNorm1d::new(&format!("{name}.pd.bn2"), c_out),
            dp_dw: DepthwiseConv1d::new(&format!("{name}.dp.dw"), c_in, kernel, stride, true, rng)?,
            dp_bn1: BatchNorm1d::new(&format!("{name}.dp.bn1"), c_in),
            dp_pw: Conv1d::pointwise(&format!("{name}.dp.pw"), c_in, c_out, true, rng)?,
            dp_bn2: BatchNorm1d::new(&format!("{name}.dp.bn2"), c_out),
            res_conv: Conv1d::pointwise(&format!("{name}.res.conv"), c_in, c_out, true, rng)?,
            res_bn: BatchNorm1d::new(&format!("{name}.res.bn"), c_out),
            res_pool: (stride > 1).then(|| AvgPool1d::new(stride, stride)).transpose()?,
            relu: Relu::default(),
        })
    }

    /// Outputs of the three branches before summation.
    pub fn branches(&mut self, x: &Tensor<T>) -> Result<[Tensor<T>; 3]> {
        ensure!(
            x.channels() == self.cfg.c_in,
            Shape,
            "ACBlock expects {} channels, got {}",
            self.cfg.c_in,
            x.channels()
        );
        let pd = self.pd_pw.forward(x)?;
        let pd = self.pd_bn1.forward(&pd)?;
        let pd = self.pd_dw.forward(&pd)?;
        let pd = self.pd_bn2.forward(&pd)?;

        let dp = self.dp_dw.forward(x)?;
        let dp = self.dp_bn1.forward(&dp)?;
        let dp = self.dp_pw.forward(&dp)?;
        let dp = self.dp_bn2.forward(&dp)?;

        let res = self.res_conv.forward(x)?;
        let mut res = self.res_bn.forward(&res)?;
        if let Some(pool) = &mut self.res_pool {
            res = pool.forward(&res)?;
        }
        if !(pd.same_shape(&dp) && pd.same_shape(&res)) {
            return Err(crate::Error::Contract(format!(
                "ACBlock branch shapes disagree: {:?} {:?} {:?}",
                pd.shape(),
                dp.shape(),
                res.shape()
            )));
        }
        Ok([pd, dp, res])
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let [mut sum, dp, res] = self.branches(x)?;
        sum.add_assign(&dp);
        sum.add_assign(&res);
        self.relu.forward_inplace(&mut sum);
        Ok(sum)
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let ds = self.relu.backward(dy)?;

        let g = self.pd_bn2.backward(&ds)?;
        let g = self.pd_dw.backward(&g)?;
        let g = self.pd_bn1.backward(&g)?;
        let mut dx = self.pd_pw.backward(&g)?;

        let g = self.dp_bn2.backward(&ds)?;
        let g = self.dp_pw.backward(&g)?;
        let g = self.dp_bn1.backward(&g)?;
        dx.add_assign(&self.dp_dw.backward(&g)?);

        let g = match &self.res_pool {
            Some(pool) => pool.backward(&ds)?,
            None => ds,
        };
        let g = self.res_bn.backward(&g)?;
        dx.add_assign(&self.res_conv.backward(&g)?);
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        let mut v = self.pd_pw.params();
        v.extend(self.pd_bn1.params());
        v.extend(self.pd_dw.params());
        v.extend(self.pd_bn2.params());
        v.extend(self.dp_dw.params());
        v.extend(self.dp_bn1.params());
        v.extend(self.dp_pw.params());
        v.extend(self.dp_bn2.params());
        v.extend(self.res_conv.params());
        v.extend(self.res_bn.params());
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = self.pd_pw.params_mut();
        v.extend(self.pd_bn1.params_mut());
        v.extend(self.pd_dw.params_mut());
        v.extend(self.pd_bn2.params_mut());
        v.extend(self.dp_dw.params_mut());
        v.extend(self.dp_bn1.params_mut());
        v.extend(self.dp_pw.params_mut());
        v.extend(self.dp_bn2.params_mut());
        v.extend(self.res_conv.params_mut());
        v.extend(self.res_bn.params_mut());
        v
    }

    pub fn set_training(&mut self, training: bool) {
        for bn in [&mut self.pd_bn1, &mut self.pd_bn2, &mut self.dp_bn1, &mut self.dp_bn2, &mut self.res_bn] {
            bn.training = training;
        }
    }

    /// Trainable parameter count.
    pub fn num_params(&self) -> usize {
        self.params().iter().filter(|p| p.kind.is_trainable()).map(|p| p.value.len()).sum()
    }

    /// Multiply-accumulates for one sample of length `len` (convolutions only).
    pub fn macs(&self, len: usize) -> usize {
        let AcBlockCfg { c_in, c_out, kernel, .. } = self.cfg;
        let lout = self.cfg.output_len(len);
        c_in * c_out * len + c_out * kernel * lout + c_in * kernel * lout + c_in * c_out * lout + c_in * c_out * len
    }
}
