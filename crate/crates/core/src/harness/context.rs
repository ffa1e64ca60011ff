//! Per-instance quantities, each computed at most once and only on demand.

use std::cell::{OnceCell, RefCell};
use std::collections::BTreeMap;

use crate::chain::{ChainMatrix, DistVector};
use crate::config::MIXING_EPS;
use crate::exact::{
    cesaro_mixing_time, hitting_times_to, intersection_cdf, max_hitting_time, t_h_bruteforce,
    tv_mixing_time, T_H_BRUTEFORCE_MAX_N,
};
use crate::families::{central_node, generate, FamilySpec};
use crate::mc::{
    estimate_pi_pi_expectation, estimate_ti, estimate_ti_star, intersection_moments,
    s_t_diagnostic, EstimateWithCI, IntersectionMoments, McConfig, SDiagnostic, StarEstimate,
    StartLaw, TiEstimate,
};
use crate::spectral::{
    closed_form_spectrum, compute_q, green_table, return_sum_qt, spectral_qt, spectrum,
    uniform_mixing_time, QSummary, Spectrum,
};

use super::HarnessConfig;

/// Failure to obtain a quantity, kept as text so results can be cached and
/// quoted in check records.
pub type Reason = String;
pub type Q<T> = std::result::Result<T, Reason>;

fn reason(e: crate::Error) -> Reason {
    e.to_string()
}

/// `t_H` or the Cesàro proxy that stands in for it on large chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeSetValue {
    pub value: f64,
    pub proxy: bool,
}

pub struct InstanceContext<'a> {
    pub id: String,
    pub spec: Option<FamilySpec>,
    pub chain: ChainMatrix,
    pub cfg: &'a HarnessConfig,
    spectrum: OnceCell<Q<Spectrum>>,
    q: OnceCell<Q<QSummary>>,
    t_mix: OnceCell<Q<u64>>,
    t_ces: OnceCell<Q<u64>>,
    t_unif: OnceCell<Q<u64>>,
    t_hit: OnceCell<Q<f64>>,
    t_h: OnceCell<Q<LargeSetValue>>,
    ti: OnceCell<Q<TiEstimate>>,
    ti_star: OnceCell<Q<StarEstimate>>,
    pi_pi: OnceCell<Q<EstimateWithCI>>,
    central: OnceCell<Q<(usize, f64)>>,
    pi_pi_cdf: OnceCell<Q<Vec<f64>>>,
    qt: RefCell<BTreeMap<u64, f64>>,
    moments: RefCell<BTreeMap<u64, Q<IntersectionMoments>>>,
    s_diag: RefCell<BTreeMap<u64, Q<SDiagnostic>>>,
}

impl<'a> InstanceContext<'a> {
    pub fn from_spec(spec: &FamilySpec, cfg: &'a HarnessConfig) -> crate::Result<Self> {
        let n = spec.state_count()?;
        if n > cfg.nmax {
            return Err(crate::Error::Budget(format!(
                "{spec} has {n} states, budget allows {}",
                cfg.nmax
            )));
        }
        Ok(Self::new(
            spec.to_string(),
            Some(*spec),
            generate(spec)?,
            cfg,
        ))
    }

    pub fn new(
        id: String,
        spec: Option<FamilySpec>,
        chain: ChainMatrix,
        cfg: &'a HarnessConfig,
    ) -> Self {
        Self {
            id,
            spec,
            chain,
            cfg,
            spectrum: OnceCell::new(),
            q: OnceCell::new(),
            t_mix: OnceCell::new(),
            t_ces: OnceCell::new(),
            t_unif: OnceCell::new(),
            t_hit: OnceCell::new(),
            t_h: OnceCell::new(),
            ti: OnceCell::new(),
            ti_star: OnceCell::new(),
            pi_pi: OnceCell::new(),
            central: OnceCell::new(),
            pi_pi_cdf: OnceCell::new(),
            qt: RefCell::new(BTreeMap::new()),
            moments: RefCell::new(BTreeMap::new()),
            s_diag: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn n(&self) -> usize {
        self.chain.n()
    }

    pub fn is_tree(&self) -> bool {
        self.spec.as_ref().is_some_and(|s| s.is_tree())
    }

    pub fn spectrum(&self) -> Q<&Spectrum> {
        self.spectrum
            .get_or_init(|| {
                if let Some(spec) = &self.spec {
                    if let Some(s) = closed_form_spectrum(spec).map_err(reason)? {
                        return Ok(s);
                    }
                }
                if self.n() > self.cfg.dense_max_n {
                    return Err(format!(
                        "dense eigensolve needs n <= {}",
                        self.cfg.dense_max_n
                    ));
                }
                spectrum(&self.chain).map_err(reason)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn q(&self) -> Q<QSummary> {
        self.q
            .get_or_init(|| compute_q(self.spectrum()?).map_err(reason))
            .clone()
    }

    pub fn t_mix(&self) -> Q<u64> {
        self.t_mix
            .get_or_init(|| tv_mixing_time(&self.chain, MIXING_EPS).map_err(reason))
            .clone()
    }

    pub fn t_ces(&self) -> Q<u64> {
        self.t_ces
            .get_or_init(|| cesaro_mixing_time(&self.chain).map_err(reason))
            .clone()
    }

    pub fn t_unif(&self) -> Q<u64> {
        self.t_unif
            .get_or_init(|| uniform_mixing_time(&self.chain).map_err(reason))
            .clone()
    }

    pub fn t_hit(&self) -> Q<f64> {
        self.t_hit
            .get_or_init(|| max_hitting_time(&self.chain).map_err(reason))
            .clone()
    }

    /// Exact `t_H` up to the enumeration limit, the Cesàro proxy beyond.
    pub fn t_h(&self) -> Q<LargeSetValue> {
        self.t_h
            .get_or_init(|| {
                if self.n() <= T_H_BRUTEFORCE_MAX_N.min(self.cfg.th_bruteforce_max_n) {
                    let r = t_h_bruteforce(&self.chain).map_err(reason)?;
                    Ok(LargeSetValue {
                        value: r.value,
                        proxy: false,
                    })
                } else {
                    Ok(LargeSetValue {
                        value: self.t_ces()? as f64,
                        proxy: true,
                    })
                }
            })
            .clone()
    }

    fn mc(&self) -> McConfig {
        let mut mc = self.cfg.mc.clone();
        if mc.t_rel_hint.is_none() {
            mc.t_rel_hint = self.q().ok().map(|q| q.t_rel);
        }
        mc
    }

    pub fn ti(&self) -> Q<TiEstimate> {
        self.ti
            .get_or_init(|| estimate_ti(&self.chain, &self.mc()).map_err(reason))
            .clone()
    }

    pub fn ti_star(&self) -> Q<StarEstimate> {
        self.ti_star
            .get_or_init(|| estimate_ti_star(&self.chain, &self.mc()).map_err(reason))
            .clone()
    }

    pub fn pi_pi(&self) -> Q<EstimateWithCI> {
        self.pi_pi
            .get_or_init(|| estimate_pi_pi_expectation(&self.chain, &self.mc()).map_err(reason))
            .clone()
    }

    /// Central node `v` and `max_x E_x tau_v`.
    pub fn central_hitting(&self) -> Q<(usize, f64)> {
        self.central
            .get_or_init(|| {
                let tree = self
                    .spec
                    .as_ref()
                    .ok_or("no family description")?
                    .tree()
                    .map_err(reason)?
                    .ok_or("not a tree")?;
                let v = central_node(&self.chain, &tree).map_err(reason)?;
                let h = hitting_times_to(&self.chain, v).map_err(reason)?;
                Ok((v, h.into_iter().fold(0.0, f64::max)))
            })
            .clone()
    }

    /// `Q_t = sum_z g_t(0, z)^2`.
    pub fn qt(&self, t: u64) -> f64 {
        if let Some(&v) = self.qt.borrow().get(&t) {
            return v;
        }
        let v = green_table(&self.chain, 0, t).g.iter().map(|g| g * g).sum();
        self.qt.borrow_mut().insert(t, v);
        v
    }

    /// `sum_{i,j<=t} p_{i+j}(0,0)`.
    pub fn return_sum(&self, t: u64) -> f64 {
        return_sum_qt(&self.chain, 0, t)
    }

    pub fn spectral_qt(&self, t: u64) -> Q<f64> {
        Ok(spectral_qt(self.spectrum()?, t))
    }

    pub fn moments(&self, t: u64) -> Q<IntersectionMoments> {
        if let Some(v) = self.moments.borrow().get(&t) {
            return v.clone();
        }
        let cfg = self.cfg.mc.clone().with_samples(self.cfg.moment_samples);
        let v = intersection_moments(&self.chain, StartLaw::State(0), StartLaw::State(0), t, &cfg)
            .map_err(reason);
        self.moments.borrow_mut().insert(t, v.clone());
        v
    }

    pub fn s_diagnostic(&self, t: u64) -> Q<SDiagnostic> {
        if let Some(v) = self.s_diag.borrow().get(&t) {
            return v.clone();
        }
        let cfg = self.cfg.mc.clone().with_samples(self.cfg.s_t_samples);
        let v = s_t_diagnostic(&self.chain, 0, t, &cfg).map_err(reason);
        self.s_diag.borrow_mut().insert(t, v.clone());
        v
    }

    /// `P_{pi,pi}(I_t > 0)` for `t = 0..=horizon`.
    pub fn pi_pi_cdf(&self) -> Q<&Vec<f64>> {
        self.pi_pi_cdf
            .get_or_init(|| {
                let pi = DistVector::new(self.chain.pi().to_vec()).map_err(reason)?;
                intersection_cdf(
                    &self.chain,
                    &pi,
                    &pi,
                    self.cfg.sandwich_horizon,
                    self.cfg.exact_budget,
                )
                .map_err(reason)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Everything computed so far, keyed by quantity name.
    pub fn quantities(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("n".to_string(), self.n() as f64);
        let mut put = |k: &str, v: Option<f64>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        let ok = |c: &OnceCell<Q<u64>>| c.get().and_then(|r| r.as_ref().ok()).map(|&v| v as f64);
        put("t_mix", ok(&self.t_mix));
        put("t_ces", ok(&self.t_ces));
        put("t_unif", ok(&self.t_unif));
        put(
            "t_hit",
            self.t_hit.get().and_then(|r| r.as_ref().ok()).copied(),
        );
        if let Some(Ok(h)) = self.t_h.get() {
            put(if h.proxy { "t_H_proxy" } else { "t_H" }, Some(h.value));
        }
        if let Some(Ok(q)) = self.q.get() {
            put("Q", Some(q.q));
            put("t_rel", Some(q.t_rel));
        }
        if let Some(Ok(e)) = self.ti.get() {
            put("t_I_hat", Some(e.estimate.mean));
            put("t_I_hat.se", Some(e.estimate.std_error));
        }
        if let Some(Ok(e)) = self.ti_star.get() {
            put("t_I_star_hat", Some(e.estimate.mean));
            put("t_I_star_hat.se", Some(e.estimate.std_error));
        }
        if let Some(Ok(e)) = self.pi_pi.get() {
            put("E_pi_pi_hat", Some(e.mean));
            put("E_pi_pi_hat.se", Some(e.std_error));
        }
        if let Some(Ok((v, h))) = self.central.get() {
            put("central_node", Some(*v as f64));
            put("central_hitting", Some(*h));
        }
        for (t, v) in self.qt.borrow().iter() {
            put(&format!("Q_t[{t}]"), Some(*v));
        }
        if let Some(Ok(tu)) = self.t_unif.get() {
            if let Some(&v) = self.qt.borrow().get(tu) {
                put("E_I", Some(v));
            }
        }
        for (t, v) in self.moments.borrow().iter() {
            if let Ok(v) = v {
                put(&format!("mean_I_t[{t}]"), Some(v.first.mean));
                put(&format!("mean_I_t_sq[{t}]"), Some(v.second.mean));
            }
        }
        for (t, v) in self.s_diag.borrow().iter() {
            if let Ok(v) = v {
                put(&format!("s_t_frequency[{t}]"), Some(v.frequency));
            }
        }
        m
    }

    /// Estimates embedded verbatim in the report provenance.
    pub fn estimates(&self) -> BTreeMap<String, EstimateWithCI> {
        let mut m = BTreeMap::new();
        if let Some(Ok(e)) = self.ti.get() {
            m.insert("t_I_hat".to_string(), e.estimate.clone());
        }
        if let Some(Ok(e)) = self.ti_star.get() {
            m.insert("t_I_star_hat".to_string(), e.estimate.clone());
        }
        if let Some(Ok(e)) = self.pi_pi.get() {
            m.insert("E_pi_pi_hat".to_string(), e.clone());
        }
        m
    }

    /// Free-text facts about how quantities were obtained.
    pub fn notes(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        if let Some(Ok(s)) = self.spectrum.get() {
            m.insert("spectrum".to_string(), format!("{:?}", s.source));
        }
        if let Some(Ok(h)) = self.t_h.get() {
            let how = if h.proxy {
                "t_ces proxy (enumeration out of budget)"
            } else {
                "exact enumeration"
            };
            m.insert("t_H".to_string(), how.to_string());
        }
        if let Some(Ok(e)) = self.ti.get() {
            m.insert(
                "t_I_hat".to_string(),
                format!(
                    "{:?} over {} candidates, argmax {:?}",
                    e.mode, e.candidates, e.argmax
                ),
            );
        }
        if let Some(Ok(e)) = self.ti_star.get() {
            m.insert(
                "t_I_star_hat".to_string(),
                format!(
                    "{:?} over {} candidates, argmax {}",
                    e.mode, e.candidates, e.argmax
                ),
            );
        }
        m
    }
}
