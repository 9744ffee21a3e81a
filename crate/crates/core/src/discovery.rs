//! Discovery probabilities `D(j, t)`, their partial sums `Ψ(T)`, the
//! learnability classes they induce and the exploration threshold.
//!
//! `t` counts explore plays since the last discovery (so `t - 1` plays have
//! failed) and `j` is how many useful actions are still hidden.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscoveryError {
    #[error("invalid discovery model: {0}")]
    Invalid(String),
    #[error("Ψ reached only {reached} (target {target}) within {cutoff} steps")]
    ThresholdUnreachable { reached: f64, target: f64, cutoff: u64 },
    #[error("N must be positive and delta in (0, 1]")]
    BadThresholdArgs,
}

/// Behaviour of a table model past its last explicit value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    Zero,
    Constant { beta: f64 },
    PowerLaw { c: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscoveryKind {
    /// `D(1,t) = beta`.
    Constant { beta: f64 },
    /// `D(1,t) = c t^-p`.
    PowerLaw { c: f64, p: f64 },
    /// Scan `total` candidates once, in order, without replacement; `useful`
    /// of them are useful. `positions` (1-based, ascending) fixes where;
    /// by default they are spread evenly.
    BruteForceSystematic {
        total: u64,
        useful: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        positions: Option<Vec<u64>>,
    },
    /// Draw one of `total` candidates uniformly with replacement.
    BruteForceRandom { total: u64, useful: u64 },
    /// Explicit `D(1,t)` for `t = 1..=values.len()`, then `tail`. Without a
    /// tail the values past the table are treated as zero and the model
    /// cannot be classified.
    Table {
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<Tail>,
    },
}

/// How `D(1,t)` extends to `j` hidden actions. Ignored by the brute-force
/// kinds, whose `j` dependence is exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JDependence {
    /// `1 - (1 - D(1,t))^j`: each hidden action is found independently.
    #[default]
    Independent,
    /// `D(j,t) = D(1,t)`.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryModel {
    #[serde(flatten)]
    pub kind: DiscoveryKind,
    #[serde(default)]
    pub j_dependence: JDependence,
}

/// Learnability class of a discovery model, with its witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum PsiClass {
    /// `D(1,t) < 1` everywhere and `Ψ(∞) ≤ psi_bound < ∞`.
    Impossible { psi_bound: f64 },
    /// Learnable, but `Ψ` grows slower than any `m1 ln T + m2`.
    PossibleNotPoly { psi_limit: Option<f64> },
    /// `Ψ(T) ≥ m1 ln T + m2` for all `T ≥ 1`.
    PolynomialTime { m1: f64, m2: f64 },
    /// Table without tail metadata; `Ψ` at the end of the table.
    UnknownBeyondHorizon { psi_at_horizon: f64 },
}

impl PsiClass {
    pub fn name(&self) -> &'static str {
        match self {
            PsiClass::Impossible { .. } => "Impossible",
            PsiClass::PossibleNotPoly { .. } => "PossibleNotPoly",
            PsiClass::PolynomialTime { .. } => "PolynomialTime",
            PsiClass::UnknownBeyondHorizon { .. } => "UnknownBeyondHorizon",
        }
    }
}

/// Steps summed exactly before the integral tail bound takes over.
const SERIES_TERMS: u64 = 1_000_000;
/// Past this many terms `psi` of a power law switches to Euler–Maclaurin.
const EXACT_SUM_LIMIT: u64 = 10_000_000;
/// Default search cutoff for [`exploration_threshold`].
pub const DEFAULT_THRESHOLD_CUTOFF: u64 = 10_000_000;

fn in_unit(x: f64) -> bool {
    x > 0.0 && x <= 1.0
}

impl DiscoveryModel {
    pub fn new(kind: DiscoveryKind) -> Result<Self, DiscoveryError> {
        let m = Self { kind, j_dependence: JDependence::Independent };
        m.validate()?;
        Ok(m)
    }

    pub fn constant(beta: f64) -> Self {
        Self::new(DiscoveryKind::Constant { beta }).expect("beta in (0, 1]")
    }

    pub fn power_law(c: f64, p: f64) -> Self {
        Self::new(DiscoveryKind::PowerLaw { c, p }).expect("c in (0, 1], p ≥ 0")
    }

    pub fn with_j_dependence(mut self, rule: JDependence) -> Self {
        self.j_dependence = rule;
        self
    }

    pub fn validate(&self) -> Result<(), DiscoveryError> {
        let bad = |msg: String| Err(DiscoveryError::Invalid(msg));
        let check_tail = |tail: &Tail| match *tail {
            Tail::Zero => Ok(()),
            Tail::Constant { beta } if in_unit(beta) => Ok(()),
            Tail::PowerLaw { c, p } if in_unit(c) && p >= 0.0 && p.is_finite() => Ok(()),
            ref t => Err(DiscoveryError::Invalid(format!("tail parameters out of range: {t:?}"))),
        };
        match &self.kind {
            DiscoveryKind::Constant { beta } if !in_unit(*beta) => bad(format!("beta = {beta} not in (0, 1]")),
            DiscoveryKind::PowerLaw { c, p } if !in_unit(*c) || !(*p >= 0.0) || !p.is_finite() => {
                bad(format!("power law needs c in (0, 1] and p ≥ 0, got c = {c}, p = {p}"))
            }
            DiscoveryKind::BruteForceSystematic { total, useful, positions } => {
                if *total == 0 || useful > total {
                    return bad(format!("need 0 < total and useful ≤ total, got {total}, {useful}"));
                }
                if let Some(pos) = positions {
                    if pos.len() as u64 != *useful {
                        return bad(format!("{} positions for {useful} useful actions", pos.len()));
                    }
                    if pos.windows(2).any(|w| w[0] >= w[1]) || pos.iter().any(|&p| p == 0 || p > *total) {
                        return bad("positions must be strictly ascending within 1..=total".into());
                    }
                }
                Ok(())
            }
            DiscoveryKind::BruteForceRandom { total, useful } if *total == 0 || useful > total => {
                bad(format!("need 0 < total and useful ≤ total, got {total}, {useful}"))
            }
            DiscoveryKind::Table { values, tail } => {
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return bad(format!("table value {v} outside [0, 1]"));
                }
                tail.as_ref().map_or(Ok(()), check_tail)
            }
            _ => Ok(()),
        }
    }

    /// `D(1, t)`.
    pub fn single(&self, t: u64) -> f64 {
        self.probability(1, t)
    }

    /// `D(j, t)`.
    pub fn probability(&self, j: u64, t: u64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        let t = t.max(1);
        match &self.kind {
            DiscoveryKind::BruteForceRandom { total, .. } => (j as f64 / *total as f64).min(1.0),
            DiscoveryKind::BruteForceSystematic { total, .. } => {
                if t >= *total {
                    1.0
                } else {
                    (j as f64 / (*total - t + 1) as f64).min(1.0)
                }
            }
            _ => {
                let d1 = self.base(t);
                match self.j_dependence {
                    JDependence::Flat => d1,
                    JDependence::Independent => 1.0 - (1.0 - d1).powi(j.min(i32::MAX as u64) as i32),
                }
            }
        }
    }

    fn base(&self, t: u64) -> f64 {
        match &self.kind {
            DiscoveryKind::Constant { beta } => *beta,
            DiscoveryKind::PowerLaw { c, p } => c * (t as f64).powf(-p),
            DiscoveryKind::Table { values, tail } => {
                if let Some(v) = values.get(t as usize - 1) {
                    *v
                } else {
                    match tail {
                        None | Some(Tail::Zero) => 0.0,
                        Some(Tail::Constant { beta }) => *beta,
                        Some(Tail::PowerLaw { c, p }) => c * (t as f64).powf(-p),
                    }
                }
            }
            _ => self.probability(1, t),
        }
    }

    /// Number of candidates a systematic model scans.
    pub fn scan_length(&self) -> Option<u64> {
        match &self.kind {
            DiscoveryKind::BruteForceSystematic { total, .. } => Some(*total),
            _ => None,
        }
    }

    /// 1-based scan positions of the useful actions of a systematic model.
    pub fn useful_positions(&self) -> Option<Vec<u64>> {
        match &self.kind {
            DiscoveryKind::BruteForceSystematic { total, useful, positions } => Some(match positions {
                Some(p) => p.clone(),
                None => (1..=*useful).map(|k| (k * total).div_ceil(*useful)).collect(),
            }),
            _ => None,
        }
    }
}

/// `Ψ(T) = Σ_{t=1}^{T} D(1, t)`.
pub fn psi(model: &DiscoveryModel, big_t: u64) -> f64 {
    match &model.kind {
        DiscoveryKind::Constant { beta } => beta * big_t as f64,
        DiscoveryKind::BruteForceRandom { total, .. } => big_t as f64 / *total as f64,
        DiscoveryKind::PowerLaw { c, p } => c * power_sum(*p, big_t),
        DiscoveryKind::BruteForceSystematic { total, .. } => {
            let scanned = big_t.min(*total - 1);
            let head: f64 = (1..=scanned).rev().map(|t| 1.0 / (*total - t + 1) as f64).sum();
            head + big_t.saturating_sub(scanned) as f64
        }
        DiscoveryKind::Table { values, tail } => {
            let n = values.len() as u64;
            let head: f64 = values.iter().take(big_t as usize).sum();
            if big_t <= n {
                return head;
            }
            head + match tail {
                None | Some(Tail::Zero) => 0.0,
                Some(Tail::Constant { beta }) => beta * (big_t - n) as f64,
                Some(Tail::PowerLaw { c, p }) => c * (power_sum(*p, big_t) - power_sum(*p, n)),
            }
        }
    }
}

/// `Σ_{t=1}^{T} t^-p`, summed smallest terms first.
fn power_sum(p: f64, big_t: u64) -> f64 {
    let f = |t: f64| t.powf(-p);
    if big_t <= EXACT_SUM_LIMIT {
        return (1..=big_t).rev().map(|t| f(t as f64)).sum();
    }
    let a = EXACT_SUM_LIMIT as f64;
    let b = big_t as f64;
    let head = power_sum(p, EXACT_SUM_LIMIT);
    let integral = if (p - 1.0).abs() < 1e-15 { (b / a).ln() } else { (b.powf(1.0 - p) - a.powf(1.0 - p)) / (1.0 - p) };
    let df = |t: f64| -p * t.powf(-p - 1.0);
    head + integral + (f(b) - f(a)) / 2.0 + (df(b) - df(a)) / 12.0
}

/// Upper bound on `Σ_{t>n} t^-p` for `p > 1`, `n ≥ 1`.
fn power_tail_bound(p: f64, n: u64) -> f64 {
    (n as f64).powf(1.0 - p) / (p - 1.0)
}

/// Minimum over `T` of `Ψ(T) - m1 ln T`, valid for a model whose `D(1,t)`
/// is at least `m1 / t` for every `t > n`.
fn certificate_offset(model: &DiscoveryModel, m1: f64, n: u64) -> f64 {
    let mut acc = 0.0;
    let mut best = f64::INFINITY;
    for t in 1..n {
        acc += model.single(t);
        best = best.min(acc - m1 * (t as f64).ln());
    }
    if n >= 1 {
        acc += model.single(n);
    }
    // beyond n, Ψ(T) - m1 ln(T + 1) never decreases
    best.min(acc - m1 * ((n + 1) as f64).ln()).min(0.0)
}

/// Learnability class of a model.
pub fn classify(model: &DiscoveryModel) -> PsiClass {
    let converging = |head_max: f64, bound: f64| {
        if head_max >= 1.0 {
            PsiClass::PossibleNotPoly { psi_limit: Some(bound) }
        } else {
            PsiClass::Impossible { psi_bound: bound }
        }
    };
    match &model.kind {
        DiscoveryKind::Constant { beta } => PsiClass::PolynomialTime { m1: *beta, m2: 0.0 },
        DiscoveryKind::BruteForceRandom { total, .. } | DiscoveryKind::BruteForceSystematic { total, .. } => {
            PsiClass::PolynomialTime { m1: 1.0 / *total as f64, m2: 0.0 }
        }
        DiscoveryKind::PowerLaw { c, p } => {
            if *p <= 1.0 {
                PsiClass::PolynomialTime { m1: *c, m2: 0.0 }
            } else {
                let bound = c * (power_sum(*p, SERIES_TERMS) + power_tail_bound(*p, SERIES_TERMS));
                converging(*c, bound)
            }
        }
        DiscoveryKind::Table { values, tail } => {
            let n = values.len() as u64;
            let head: f64 = values.iter().sum();
            let head_max = values.iter().copied().fold(0.0, f64::max);
            match tail {
                None => PsiClass::UnknownBeyondHorizon { psi_at_horizon: head },
                Some(Tail::Zero) => converging(head_max, head),
                Some(Tail::PowerLaw { c, p }) if *p > 1.0 => {
                    let from = n.max(1);
                    let mut bound = head + c * power_tail_bound(*p, from);
                    if n == 0 {
                        bound += c;
                    }
                    let top = if n == 0 { *c } else { head_max };
                    converging(top, bound)
                }
                Some(Tail::PowerLaw { c, .. }) => {
                    PsiClass::PolynomialTime { m1: *c, m2: certificate_offset(model, *c, n) }
                }
                Some(Tail::Constant { beta }) => {
                    PsiClass::PolynomialTime { m1: *beta, m2: certificate_offset(model, *beta, n) }
                }
            }
        }
    }
}

/// Sample points `T = 10^0, …, 10^6` at which certificates are checked.
pub fn certificate_points() -> impl Iterator<Item = u64> {
    (0..=6).map(|e| 10u64.pow(e))
}

/// Whether `Ψ(T) ≥ m1 ln T + m2` holds at every sample point.
pub fn certificate_holds(model: &DiscoveryModel, m1: f64, m2: f64) -> bool {
    certificate_points().all(|t| psi(model, t) >= m1 * (t as f64).ln() + m2 - 1e-12)
}

/// Least `T` with `Ψ(T) ≥ ln(4N/δ)`, searched up to the default cutoff.
pub fn exploration_threshold(model: &DiscoveryModel, n: u64, delta: f64) -> Result<u64, DiscoveryError> {
    exploration_threshold_with_cutoff(model, n, delta, DEFAULT_THRESHOLD_CUTOFF)
}

pub fn exploration_threshold_with_cutoff(
    model: &DiscoveryModel,
    n: u64,
    delta: f64,
    cutoff: u64,
) -> Result<u64, DiscoveryError> {
    if n == 0 || !(delta > 0.0 && delta <= 1.0) {
        return Err(DiscoveryError::BadThresholdArgs);
    }
    let target = (4.0 * n as f64 / delta).ln();
    if let PsiClass::Impossible { psi_bound } = classify(model) {
        if psi_bound < target {
            return Err(DiscoveryError::ThresholdUnreachable { reached: psi_bound, target, cutoff });
        }
    }
    let linear_rate = match &model.kind {
        DiscoveryKind::Constant { beta } => Some(*beta),
        DiscoveryKind::BruteForceRandom { total, .. } => Some(1.0 / *total as f64),
        _ => None,
    };
    if let Some(rate) = linear_rate {
        // closed form, nudged against rounding in either direction
        let mut t = ((target / rate).ceil() as u64).max(1);
        while t > 1 && psi(model, t - 1) >= target {
            t -= 1;
        }
        while psi(model, t) < target {
            t += 1;
        }
        return if t <= cutoff {
            Ok(t)
        } else {
            Err(DiscoveryError::ThresholdUnreachable { reached: psi(model, cutoff), target, cutoff })
        };
    }
    let mut acc = 0.0;
    for t in 1..=cutoff {
        acc += model.single(t);
        if acc >= target {
            return Ok(t);
        }
    }
    Err(DiscoveryError::ThresholdUnreachable { reached: acc, target, cutoff })
}

/// One explore play with `j` hidden useful actions at clock `t`.
///
/// Systematic models are deterministic: `t` is the scan position and the
/// play succeeds exactly at the useful positions.
pub fn sample_discovery<R: Rng + ?Sized>(model: &DiscoveryModel, j: u64, t: u64, rng: &mut R) -> bool {
    if j == 0 {
        return false;
    }
    if let Some(pos) = model.useful_positions() {
        return pos.binary_search(&t).is_ok();
    }
    let d = model.probability(j, t);
    d >= 1.0 || rng.random::<f64>() < d
}

impl FromStr for DiscoveryModel {
    type Err = DiscoveryError;

    /// `constant:B`, `power:C,P`, `systematic:TOTAL,USEFUL`,
    /// `random:TOTAL,USEFUL`, or `table:V1,V2,…[;zero|;constant:B|;power:C,P]`.
    fn from_str(text: &str) -> Result<Self, DiscoveryError> {
        let bad = || DiscoveryError::Invalid(format!("cannot parse discovery model {text:?}"));
        let nums = |s: &str| -> Result<Vec<f64>, DiscoveryError> {
            s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect()
        };
        let ints = |s: &str| -> Result<Vec<u64>, DiscoveryError> {
            s.split(',').map(|x| x.trim().parse::<u64>().map_err(|_| bad())).collect()
        };
        let (name, rest) = text.split_once(':').ok_or_else(bad)?;
        let kind = match name.trim() {
            "constant" => match nums(rest)?[..] {
                [beta] => DiscoveryKind::Constant { beta },
                _ => return Err(bad()),
            },
            "power" => match nums(rest)?[..] {
                [c, p] => DiscoveryKind::PowerLaw { c, p },
                _ => return Err(bad()),
            },
            "systematic" => match ints(rest)?[..] {
                [total, useful] => DiscoveryKind::BruteForceSystematic { total, useful, positions: None },
                _ => return Err(bad()),
            },
            "random" => match ints(rest)?[..] {
                [total, useful] => DiscoveryKind::BruteForceRandom { total, useful },
                _ => return Err(bad()),
            },
            "table" => {
                let (vals, tail) = match rest.split_once(';') {
                    Some((v, t)) => (v, Some(t.trim())),
                    None => (rest, None),
                };
                let tail = match tail {
                    None => None,
                    Some("zero") => Some(Tail::Zero),
                    Some(t) => match DiscoveryModel::from_str(t)?.kind {
                        DiscoveryKind::Constant { beta } => Some(Tail::Constant { beta }),
                        DiscoveryKind::PowerLaw { c, p } => Some(Tail::PowerLaw { c, p }),
                        _ => return Err(bad()),
                    },
                };
                DiscoveryKind::Table { values: nums(vals)?, tail }
            }
            _ => return Err(bad()),
        };
        DiscoveryModel::new(kind)
    }
}

impl fmt::Display for DiscoveryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DiscoveryKind::Constant { beta } => write!(f, "constant:{beta}"),
            DiscoveryKind::PowerLaw { c, p } => write!(f, "power:{c},{p}"),
            DiscoveryKind::BruteForceSystematic { total, useful, .. } => write!(f, "systematic:{total},{useful}"),
            DiscoveryKind::BruteForceRandom { total, useful } => write!(f, "random:{total},{useful}"),
            DiscoveryKind::Table { values, tail } => {
                let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "table:{}", vals.join(","))?;
                match tail {
                    None => Ok(()),
                    Some(Tail::Zero) => write!(f, ";zero"),
                    Some(Tail::Constant { beta }) => write!(f, ";constant:{beta}"),
                    Some(Tail::PowerLaw { c, p }) => write!(f, ";power:{c},{p}"),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(values: &[f64], tail: Option<Tail>) -> DiscoveryModel {
        DiscoveryModel::new(DiscoveryKind::Table { values: values.to_vec(), tail }).unwrap()
    }

    #[test]
    fn psi_examples() {
        assert!((psi(&DiscoveryModel::constant(0.1), 50) - 5.0).abs() < 1e-12);
        assert_eq!(psi(&table(&[0.5, 0.25], None), 2), 0.75);
        let basel = std::f64::consts::PI.powi(2) / 6.0;
        let p = psi(&DiscoveryModel::power_law(1.0, 2.0), 10_000);
        assert!(p < basel && basel - p <= 1.0 / 10_000.0);
    }

    #[test]
    fn euler_maclaurin_tail_joins_the_exact_sum() {
        let exact: f64 = (1..=EXACT_SUM_LIMIT + 1000).rev().map(|t| (t as f64).powf(-1.5)).sum();
        let approx = power_sum(1.5, EXACT_SUM_LIMIT + 1000);
        assert!((exact - approx).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&DiscoveryModel::constant(0.1)), PsiClass::PolynomialTime { m1: 0.1, m2: 0.0 });
        match classify(&DiscoveryModel::power_law(0.1, 2.0)) {
            PsiClass::Impossible { psi_bound } => {
                let exact = 0.1 * std::f64::consts::PI.powi(2) / 6.0;
                assert!(psi_bound >= exact && psi_bound - exact < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(classify(&DiscoveryModel::power_law(1.0, 1.0)), PsiClass::PolynomialTime { .. }));
        assert!(matches!(classify(&DiscoveryModel::power_law(1.0, 2.0)), PsiClass::PossibleNotPoly { .. }));
        assert!(matches!(classify(&table(&[0.5], None)), PsiClass::UnknownBeyondHorizon { .. }));
        assert_eq!(classify(&table(&[0.5, 0.25], Some(Tail::Zero))), PsiClass::Impossible { psi_bound: 0.75 });
        assert!(matches!(classify(&table(&[1.0], Some(Tail::Zero))), PsiClass::PossibleNotPoly { .. }));
    }

    #[test]
    fn table_certificates_hold() {
        let m = table(&[0.0, 0.0, 0.0, 0.9], Some(Tail::PowerLaw { c: 0.3, p: 1.0 }));
        let PsiClass::PolynomialTime { m1, m2 } = classify(&m) else { panic!() };
        assert!(m2 < 0.0);
        assert!(certificate_holds(&m, m1, m2));
        let m = table(&[0.0; 10], Some(Tail::Constant { beta: 0.2 }));
        let PsiClass::PolynomialTime { m1, m2 } = classify(&m) else { panic!() };
        assert!(certificate_holds(&m, m1, m2));
    }

    #[test]
    fn thresholds() {
        assert_eq!(exploration_threshold(&DiscoveryModel::constant(0.1), 100, 0.1).unwrap(), 83);
        assert_eq!(exploration_threshold(&DiscoveryModel::constant(1.0), 1, 1.0).unwrap(), 2);
        let err = exploration_threshold(&DiscoveryModel::power_law(0.1, 2.0), 100, 0.1).unwrap_err();
        assert!(matches!(err, DiscoveryError::ThresholdUnreachable { reached, .. } if reached < 0.17));
        let harmonic = exploration_threshold(&DiscoveryModel::power_law(1.0, 1.0), 1, 1.0).unwrap();
        assert_eq!(harmonic, 2); // 1 < ln 4 ≤ 1 + 1/2
        let err = exploration_threshold_with_cutoff(&DiscoveryModel::constant(0.001), 100, 0.1, 10).unwrap_err();
        assert!(matches!(err, DiscoveryError::ThresholdUnreachable { cutoff: 10, .. }));
    }

    #[test]
    fn systematic_scan_is_deterministic() {
        let m = DiscoveryModel::new(DiscoveryKind::BruteForceSystematic {
            total: 6,
            useful: 2,
            positions: Some(vec![3, 5]),
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hits: Vec<u64> = (1..=6).filter(|&t| sample_discovery(&m, 2, t, &mut rng)).collect();
        assert_eq!(hits, vec![3, 5]);
        let spread =
            DiscoveryModel::new(DiscoveryKind::BruteForceSystematic { total: 10, useful: 3, positions: None }).unwrap();
        assert_eq!(spread.useful_positions().unwrap(), vec![4, 7, 10]);
    }

    #[test]
    fn j_zero_never_discovers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = DiscoveryModel::constant(1.0);
        assert!((0..100).all(|t| !sample_discovery(&m, 0, t + 1, &mut rng)));
    }

    #[test]
    fn j_dependence_rules() {
        let m = DiscoveryModel::constant(0.5);
        assert_eq!(m.probability(2, 1), 0.75);
        assert_eq!(m.clone().with_j_dependence(JDependence::Flat).probability(2, 1), 0.5);
        let r = DiscoveryModel::new(DiscoveryKind::BruteForceRandom { total: 340, useful: 116 }).unwrap();
        assert!((r.probability(116, 9) - 116.0 / 340.0).abs() < 1e-15);
    }

    #[test]
    fn parse_and_print() {
        for text in ["constant:0.1", "power:0.1,2", "systematic:340,116", "random:340,116", "table:0.5,0.25;power:1,2"]
        {
            let m: DiscoveryModel = text.parse().unwrap();
            assert_eq!(m.to_string(), text);
        }
        assert!("constant:1.5".parse::<DiscoveryModel>().is_err());
        assert!("wobble:1".parse::<DiscoveryModel>().is_err());
    }

    #[test]
    fn serde_shape() {
        let m: DiscoveryModel = serde_json::from_str(r#"{"kind": "power_law", "c": 0.1, "p": 2.0}"#).unwrap();
        assert_eq!(m, DiscoveryModel::power_law(0.1, 2.0));
        let back: DiscoveryModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
