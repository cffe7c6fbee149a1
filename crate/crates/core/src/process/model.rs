use std::path::Path;

use crate::error::{Error, Result};
use crate::kv::{self, KvDoc};

use super::polynomial::{check_stationarity, LagPolynomial};

/// Student's-t innovations: `eps = scale * t(dof)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    dof: f64,
    scale: f64,
}

impl NoiseSpec {
    pub fn new(dof: f64, scale: f64) -> Result<Self> {
        if !(dof > 2.0) || !dof.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "degrees of freedom must be finite and > 2, got {dof}"
            )));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale must be finite and > 0, got {scale}"
            )));
        }
        Ok(Self { dof, scale })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Variance of `scale * t(dof)`.
    pub fn variance(&self) -> f64 {
        self.scale * self.scale * self.dof / (self.dof - 2.0)
    }
}

/// `Phi(L) Psi(L^{-1}) y_t = eps_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarModel {
    lag: LagPolynomial,
    lead: LagPolynomial,
    noise: NoiseSpec,
}

impl MarModel {
    pub fn new(lag_coeffs: Vec<f64>, lead_coeffs: Vec<f64>, noise: NoiseSpec) -> Result<Self> {
        let lag = LagPolynomial::backward(lag_coeffs);
        let lead = LagPolynomial::forward(lead_coeffs);
        for (poly, what) in [(&lag, "lag"), (&lead, "lead")] {
            let report = check_stationarity(poly);
            if !report.stationary {
                return Err(Error::NonStationary(format!(
                    "{what} polynomial {:?} has root moduli {:?}",
                    poly.coeffs(),
                    report.root_moduli
                )));
            }
        }
        Ok(Self { lag, lead, noise })
    }

    /// MAR(1,1) shorthand.
    pub fn mar11(phi: f64, psi: f64, dof: f64, scale: f64) -> Result<Self> {
        Self::new(vec![phi], vec![psi], NoiseSpec::new(dof, scale)?)
    }

    pub fn r(&self) -> usize {
        self.lag.order()
    }

    pub fn s(&self) -> usize {
        self.lead.order()
    }

    pub fn lag(&self) -> &LagPolynomial {
        &self.lag
    }

    pub fn lead(&self) -> &LagPolynomial {
        &self.lead
    }

    pub fn lag_coeffs(&self) -> &[f64] {
        self.lag.coeffs()
    }

    pub fn lead_coeffs(&self) -> &[f64] {
        self.lead.coeffs()
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    /// `(phi, psi)` for a MAR(1,1); unsupported-order error otherwise.
    pub fn mar11_coeffs(&self) -> Result<(f64, f64)> {
        if self.r() != 1 || self.s() != 1 {
            return Err(Error::Unsupported(format!(
                "this operation is defined for MAR(1,1) only, got MAR({},{})",
                self.r(),
                self.s()
            )));
        }
        Ok((self.lag.coeffs()[0], self.lead.coeffs()[0]))
    }
}

/// Offset of a regressor relative to `t`: -1 lag, 0 contemporaneous, +1 lead.
pub fn check_offsets(offsets: &[i64]) -> Result<()> {
    match offsets.iter().find(|o| !(-1..=1).contains(*o)) {
        Some(o) => Err(Error::InvalidArgument(format!(
            "regressor offset {o} not in {{-1, 0, 1}}"
        ))),
        None => Ok(()),
    }
}

/// `Phi(L) Psi(L^{-1}) y_t - sum_k beta_k x_{k, t + offset_k} = eps_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarxModel {
    base: MarModel,
    beta: Vec<f64>,
    offsets: Vec<i64>,
}

impl MarxModel {
    pub fn new(base: MarModel, beta: Vec<f64>, offsets: Vec<i64>) -> Result<Self> {
        if beta.len() != offsets.len() || beta.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "MARX needs q >= 1 loadings with one offset each ({} vs {})",
                beta.len(),
                offsets.len()
            )));
        }
        check_offsets(&offsets)?;
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("non-finite regressor loading".into()));
        }
        Ok(Self {
            base,
            beta,
            offsets,
        })
    }

    pub fn base(&self) -> &MarModel {
        &self.base
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn q(&self) -> usize {
        self.beta.len()
    }
}

/// One multiplicative seasonal factor `(1 - coeff * L^{±displacement})`.
/// Displacement 0 means the factor is absent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeasonalTerm {
    pub coeff: f64,
    pub displacement: usize,
}

impl SeasonalTerm {
    pub fn new(coeff: f64, displacement: usize) -> Result<Self> {
        if !(coeff.abs() < 1.0) {
            return Err(Error::NonStationary(format!(
                "seasonal coefficient {coeff} must satisfy |c| < 1"
            )));
        }
        if displacement == 0 && coeff != 0.0 {
            return Err(Error::InvalidArgument(
                "a seasonal coefficient needs a displacement >= 1".into(),
            ));
        }
        Ok(Self {
            coeff,
            displacement,
        })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_present(&self) -> bool {
        self.displacement > 0
    }
}

/// `(1 - phi* L^R)(1 - psi* L^{-S}) Phi(L) Psi(L^{-1}) y_t = eps_t`.
///
/// Coefficients are stored with the sign they carry inside the factors, so a
/// factor written `(1 + 0.30 L^{-12})` has `seasonal_lead.coeff = -0.30`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmarModel {
    base: MarModel,
    seasonal_lag: SeasonalTerm,
    seasonal_lead: SeasonalTerm,
}

impl SmarModel {
    pub fn new(base: MarModel, seasonal_lag: SeasonalTerm, seasonal_lead: SeasonalTerm) -> Result<Self> {
        SeasonalTerm::new(seasonal_lag.coeff, seasonal_lag.displacement)?;
        SeasonalTerm::new(seasonal_lead.coeff, seasonal_lead.displacement)?;
        if !seasonal_lag.is_present() && !seasonal_lead.is_present() {
            return Err(Error::InvalidArgument(
                "SMAR needs at least one seasonal displacement".into(),
            ));
        }
        Ok(Self {
            base,
            seasonal_lag,
            seasonal_lead,
        })
    }

    pub fn base(&self) -> &MarModel {
        &self.base
    }

    pub fn seasonal_lag(&self) -> SeasonalTerm {
        self.seasonal_lag
    }

    pub fn seasonal_lead(&self) -> SeasonalTerm {
        self.seasonal_lead
    }
}

/// Any of the three model families.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Mar(MarModel),
    Marx(MarxModel),
    Smar(SmarModel),
}

impl AnyModel {
    pub fn base(&self) -> &MarModel {
        match self {
            Self::Mar(m) => m,
            Self::Marx(m) => m.base(),
            Self::Smar(m) => m.base(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Mar(_) => "MAR",
            Self::Marx(_) => "MARX",
            Self::Smar(_) => "SMAR",
        }
    }

    /// Observations lost at the start and at the end of the sample when
    /// computing residuals.
    pub fn edge_loss(&self) -> (usize, usize) {
        let b = self.base();
        match self {
            Self::Smar(m) => (
                b.r() + m.seasonal_lag.displacement,
                b.s() + m.seasonal_lead.displacement,
            ),
            Self::Marx(m) => {
                let lead = m.offsets.iter().copied().max().unwrap_or(0).max(0) as usize;
                let lag = (-m.offsets.iter().copied().min().unwrap_or(0)).max(0) as usize;
                (b.r().max(lag), b.s().max(lead))
            }
            Self::Mar(_) => (b.r(), b.s()),
        }
    }

    pub fn to_kv(&self, regressor_names: Option<&[String]>) -> KvDoc {
        let b = self.base();
        let mut doc = KvDoc::new();
        doc.set("r", b.r().to_string());
        doc.set("s", b.s().to_string());
        doc.set("lag_coeffs", kv::fmt_f64_list(b.lag_coeffs()));
        doc.set("lead_coeffs", kv::fmt_f64_list(b.lead_coeffs()));
        doc.set("dof", kv::fmt_f64(b.noise().dof()));
        doc.set("scale", kv::fmt_f64(b.noise().scale()));
        let (beta, offsets) = match self {
            Self::Marx(m) => (
                kv::fmt_f64_list(m.beta()),
                m.offsets()
                    .iter()
                    .map(|o| o.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            _ => (String::new(), String::new()),
        };
        doc.set("beta", beta);
        doc.set("offsets", offsets);
        let (lag, lead) = match self {
            Self::Smar(m) => (m.seasonal_lag, m.seasonal_lead),
            _ => (SeasonalTerm::none(), SeasonalTerm::none()),
        };
        doc.set("seasonal_lag", kv::fmt_f64(lag.coeff));
        doc.set("seasonal_lead", kv::fmt_f64(lead.coeff));
        doc.set("R", lag.displacement.to_string());
        doc.set("S", lead.displacement.to_string());
        if let (Self::Marx(_), Some(names)) = (self, regressor_names) {
            doc.set("regressors", names.join(","));
        }
        doc
    }

    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let r = kv::parse_usize("r", doc.require("r")?)?;
        let s = kv::parse_usize("s", doc.require("s")?)?;
        let lag = kv::parse_f64_list("lag_coeffs", doc.require("lag_coeffs")?)?;
        let lead = kv::parse_f64_list("lead_coeffs", doc.require("lead_coeffs")?)?;
        if lag.len() != r || lead.len() != s {
            return Err(Error::Model(format!(
                "orders r={r}, s={s} do not match {} lag and {} lead coefficients",
                lag.len(),
                lead.len()
            )));
        }
        let dof = kv::parse_f64("dof", doc.require("dof")?)?;
        let scale = kv::parse_f64("scale", doc.require("scale")?)?;
        let base = MarModel::new(lag, lead, NoiseSpec::new(dof, scale)?)?;

        let beta = kv::parse_f64_list("beta", doc.get("beta").unwrap_or(""))?;
        let offsets = kv::parse_i64_list("offsets", doc.get("offsets").unwrap_or(""))?;
        let seas_lag = kv::parse_f64("seasonal_lag", doc.get("seasonal_lag").unwrap_or("0"))?;
        let seas_lead = kv::parse_f64("seasonal_lead", doc.get("seasonal_lead").unwrap_or("0"))?;
        let big_r = kv::parse_usize("R", doc.get("R").unwrap_or("0"))?;
        let big_s = kv::parse_usize("S", doc.get("S").unwrap_or("0"))?;
        let seasonal = big_r > 0 || big_s > 0 || seas_lag != 0.0 || seas_lead != 0.0;

        match (beta.is_empty() && offsets.is_empty(), seasonal) {
            (true, false) => Ok(Self::Mar(base)),
            (false, false) => Ok(Self::Marx(MarxModel::new(base, beta, offsets)?)),
            (true, true) => Ok(Self::Smar(SmarModel::new(
                base,
                SeasonalTerm::new(seas_lag, big_r)?,
                SeasonalTerm::new(seas_lead, big_s)?,
            )?)),
            (false, true) => Err(Error::Model(
                "a model cannot have both regressors and seasonal factors".into(),
            )),
        }
    }

    /// Regressor column names recorded alongside a MARX model, if any.
    pub fn regressor_names(doc: &KvDoc) -> Option<Vec<String>> {
        doc.get("regressors")
            .filter(|s| !s.is_empty())
            .map(|s| s.split(',').map(|p| p.trim().to_string()).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>, regressor_names: Option<&[String]>) -> Result<()> {
        self.to_kv(regressor_names).save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvDoc::load(path)?)
    }
}

impl From<MarModel> for AnyModel {
    fn from(m: MarModel) -> Self {
        Self::Mar(m)
    }
}

impl From<MarxModel> for AnyModel {
    fn from(m: MarxModel) -> Self {
        Self::Marx(m)
    }
}

impl From<SmarModel> for AnyModel {
    fn from(m: SmarModel) -> Self {
        Self::Smar(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn noise_validation() {
        assert!(NoiseSpec::new(2.0, 1.0).is_err());
        assert!(NoiseSpec::new(3.0, 0.0).is_err());
        assert!((NoiseSpec::new(4.0, 2.0).unwrap().variance() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn non_stationary_rejected() {
        assert!(matches!(MarModel::mar11(0.5, 1.2, 4.0, 1.0), Err(Error::NonStationary(_))));
        assert!(SeasonalTerm::new(1.0, 12).is_err());
        assert!(SeasonalTerm::new(0.3, 0).is_err());
    }

    #[test]
    fn kind_detection_from_file() {
        let base = MarModel::mar11(0.59, 0.96, 3.99, 1.0).unwrap();
        let smar = AnyModel::Smar(
            SmarModel::new(base.clone(), SeasonalTerm::none(), SeasonalTerm::new(-0.3, 12).unwrap()).unwrap(),
        );
        let doc = smar.to_kv(None);
        assert_eq!(doc.get("S"), Some("12"));
        assert_eq!(AnyModel::from_kv(&doc).unwrap(), smar);

        let marx = AnyModel::Marx(MarxModel::new(base, vec![1.64, -0.53, -0.04], vec![1, 1, 1]).unwrap());
        let names = vec!["ip".to_string(), "ex".into(), "ir".into()];
        let doc = marx.to_kv(Some(&names));
        assert_eq!(AnyModel::from_kv(&doc).unwrap(), marx);
        assert_eq!(AnyModel::regressor_names(&doc).unwrap(), names);
    }

    #[test]
    fn malformed_model_files() {
        let doc = KvDoc::parse("r = 2\ns = 0\nlag_coeffs = 0.5\nlead_coeffs =\ndof = 4\nscale = 1\n").unwrap();
        assert!(matches!(AnyModel::from_kv(&doc), Err(Error::Model(_))));
        let doc = KvDoc::parse("r = 1\ns = 0\nlag_coeffs = 1.5\nlead_coeffs =\ndof = 4\nscale = 1\n").unwrap();
        assert!(matches!(AnyModel::from_kv(&doc), Err(Error::NonStationary(_))));
    }

    proptest! {
        #[test]
        fn serialization_round_trip(
            phi in -0.95f64..0.95, psi in -0.95f64..0.95,
            dof in 2.01f64..50.0, scale in 1e-3f64..1e3,
        ) {
            let m = AnyModel::Mar(MarModel::mar11(phi, psi, dof, scale).unwrap());
            let text = m.to_kv(None).render();
            let back = AnyModel::from_kv(&KvDoc::parse(&text).unwrap()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
