use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DimMethod {
    Formula,
    Optimizer,
    Empirical,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DimValue {
    pub value: f64,
    pub method: DimMethod,
    pub error: f64,
}

impl DimValue {
    pub fn formula(value: f64) -> Self {
        DimValue { value, method: DimMethod::Formula, error: 4.0 * f64::EPSILON * value.abs() }
    }

    pub fn optimizer(value: f64, error: f64) -> Self {
        DimValue { value, method: DimMethod::Optimizer, error }
    }

    pub fn empirical(value: f64, error: f64) -> Self {
        DimValue { value, method: DimMethod::Empirical, error }
    }
}

/// Lower, Hausdorff, lower box, upper box and Assouad dimension. Families
/// without a formula for some of them leave those `None`.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionReport {
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ldim: Option<DimValue>,
    pub hdim: DimValue,
    pub lbdim: DimValue,
    pub ubdim: DimValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdim: Option<DimValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adim: Option<DimValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax: Option<[f64; 2]>,
}

impl DimensionReport {
    /// Present values in chain order, with names.
    pub fn chain(&self) -> Vec<(&'static str, DimValue)> {
        let mut v = Vec::new();
        if let Some(d) = self.ldim {
            v.push(("ldim", d));
        }
        v.push(("hdim", self.hdim));
        v.push(("lbdim", self.lbdim));
        v.push(("ubdim", self.ubdim));
        if let Some(d) = self.adim {
            v.push(("adim", d));
        }
        v
    }

    /// `ldim <= hdim <= lbdim <= ubdim <= adim <= 1` up to the error bars.
    pub fn chain_holds(&self) -> bool {
        let c = self.chain();
        c.windows(2).all(|w| w[0].1.value <= w[1].1.value + w[0].1.error + w[1].1.error)
            && c.last().is_some_and(|(_, d)| d.value <= 1.0 + d.error)
    }

    /// Consecutive differences along the chain.
    pub fn gaps(&self) -> Vec<(String, f64)> {
        self.chain().windows(2).map(|w| (format!("{}->{}", w[0].0, w[1].0), w[1].1.value - w[0].1.value)).collect()
    }
}
