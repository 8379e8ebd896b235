//! Takagi-Sugeno inference with Gaussian premises and product AND.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Below this total firing strength the weighted average is replaced by the
/// consequent of the strongest rule.
pub const FIRING_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMf {
    center: f64,
    sigma: f64,
}

impl GaussianMf {
    pub fn new(center: f64, sigma: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::ModelStructure(format!("non-finite MF center {center}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::ModelStructure(format!("MF sigma must be positive, got {sigma}")));
        }
        Ok(Self { center, sigma })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `exp(-(x - c)^2 / (2 sigma^2))`
    #[inline]
    pub fn membership(&self, x: f64) -> f64 {
        self.log_membership(x).exp()
    }

    #[inline]
    pub(crate) fn log_membership(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.sigma;
        -0.5 * u * u
    }

    pub(crate) fn set(&mut self, center: f64, sigma: f64) {
        debug_assert!(sigma > 0.0);
        self.center = center;
        self.sigma = sigma;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Consequent {
    /// Confidence score in [0, 100].
    Constant(f64),
    Linear { coefficients: Vec<f64>, bias: f64 },
}

impl Consequent {
    pub fn zero_linear(dims: usize) -> Self {
        Consequent::Linear {
            coefficients: vec![0.0; dims],
            bias: 0.0,
        }
    }

    #[inline]
    pub fn output(&self, input: &[f64]) -> f64 {
        match self {
            Consequent::Constant(value) => *value,
            Consequent::Linear { coefficients, bias } => {
                coefficients.iter().zip(input).map(|(a, x)| a * x).sum::<f64>() + bias
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Consequent::Linear { .. })
    }
}

pub fn consequent_output(consequent: &Consequent, input: &[f64]) -> f64 {
    consequent.output(input)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    /// One MF-bank index per input dimension.
    pub antecedent: Vec<usize>,
    pub consequent: Consequent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Fis,
    Anfis,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Fis => "fis",
            Variant::Anfis => "anfis",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fis" => Ok(Variant::Fis),
            "anfis" => Ok(Variant::Anfis),
            other => Err(Error::Config(format!("unknown model variant '{other}'"))),
        }
    }
}

/// One expert: Gaussian MF banks per input dimension plus a rule list.
#[derive(Debug, Clone, PartialEq)]
pub struct SugenoFis {
    dimension_names: Vec<String>,
    mf_banks: Vec<Vec<GaussianMf>>,
    rules: Vec<Rule>,
    variant: Variant,
}

impl SugenoFis {
    pub fn new(
        dimension_names: Vec<String>,
        mf_banks: Vec<Vec<GaussianMf>>,
        rules: Vec<Rule>,
        variant: Variant,
    ) -> Result<Self> {
        let dims = mf_banks.len();
        if dimension_names.len() != dims {
            return Err(Error::ModelStructure(format!(
                "{} dimension names for {dims} MF banks",
                dimension_names.len()
            )));
        }
        if let Some(d) = mf_banks.iter().position(Vec::is_empty) {
            return Err(Error::ModelStructure(format!("MF bank {d} is empty")));
        }
        if rules.is_empty() {
            return Err(Error::ModelStructure("model has no rules".into()));
        }
        let linear = rules[0].consequent.is_linear();
        for (i, rule) in rules.iter().enumerate() {
            if rule.antecedent.len() != dims {
                return Err(Error::ModelStructure(format!(
                    "rule {i}: {} antecedent indices for {dims} dimensions",
                    rule.antecedent.len()
                )));
            }
            for (d, &m) in rule.antecedent.iter().enumerate() {
                if m >= mf_banks[d].len() {
                    return Err(Error::ModelStructure(format!(
                        "rule {i}: MF index {m} out of range for dimension {d}"
                    )));
                }
            }
            match &rule.consequent {
                Consequent::Constant(v) => {
                    if linear {
                        return Err(Error::ModelStructure("mixed consequent kinds".into()));
                    }
                    if !(0.0..=100.0).contains(v) {
                        return Err(Error::ModelStructure(format!(
                            "rule {i}: constant consequent {v} outside [0, 100]"
                        )));
                    }
                }
                Consequent::Linear { coefficients, bias } => {
                    if !linear {
                        return Err(Error::ModelStructure("mixed consequent kinds".into()));
                    }
                    if coefficients.len() != dims {
                        return Err(Error::ModelStructure(format!(
                            "rule {i}: {} coefficients for {dims} dimensions",
                            coefficients.len()
                        )));
                    }
                    if !bias.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
                        return Err(Error::ModelStructure(format!("rule {i}: non-finite consequent")));
                    }
                }
            }
        }
        Ok(Self {
            dimension_names,
            mf_banks,
            rules,
            variant,
        })
    }

    pub fn dimension_names(&self) -> &[String] {
        &self.dimension_names
    }

    pub fn dims(&self) -> usize {
        self.mf_banks.len()
    }

    pub fn mf_banks(&self) -> &[Vec<GaussianMf>] {
        &self.mf_banks
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn has_linear_consequents(&self) -> bool {
        self.rules[0].consequent.is_linear()
    }

    pub(crate) fn mf_banks_mut(&mut self) -> &mut [Vec<GaussianMf>] {
        &mut self.mf_banks
    }

    pub(crate) fn rules_mut(&mut self) -> &mut [Rule] {
        &mut self.rules
    }

    fn check_input(&self, input: &[f64]) {
        assert_eq!(
            input.len(),
            self.dims(),
            "input has {} components, model expects {}",
            input.len(),
            self.dims()
        );
    }

    /// Product of the rule's antecedent membership degrees.
    pub fn firing_strength(&self, rule_index: usize, input: &[f64]) -> f64 {
        self.check_input(input);
        self.rules[rule_index]
            .antecedent
            .iter()
            .enumerate()
            .map(|(d, &m)| self.mf_banks[d][m].membership(input[d]))
            .product()
    }

    pub fn firing_strengths(&self, input: &[f64]) -> Vec<f64> {
        (0..self.rules.len())
            .map(|i| self.firing_strength(i, input))
            .collect()
    }

    fn strongest_rule(&self, input: &[f64]) -> usize {
        let mut best = 0;
        let mut best_log = f64::NEG_INFINITY;
        for (i, rule) in self.rules.iter().enumerate() {
            let log_w: f64 = rule
                .antecedent
                .iter()
                .enumerate()
                .map(|(d, &m)| self.mf_banks[d][m].log_membership(input[d]))
                .sum();
            if log_w > best_log {
                best_log = log_w;
                best = i;
            }
        }
        best
    }

    /// Normalized firing strengths `w_i / sum(w)`. Falls back to a one-hot
    /// vector on the strongest rule when the sum underflows.
    pub fn normalized_strengths(&self, input: &[f64]) -> Vec<f64> {
        let mut w = self.firing_strengths(input);
        let total: f64 = w.iter().sum();
        if total < FIRING_EPSILON {
            let best = self.strongest_rule(input);
            w.iter_mut().for_each(|v| *v = 0.0);
            w[best] = 1.0;
        } else {
            w.iter_mut().for_each(|v| *v /= total);
        }
        w
    }

    /// Weighted average of rule outputs (raw, never clamped).
    pub fn evaluate(&self, input: &[f64]) -> f64 {
        self.check_input(input);
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, rule) in self.rules.iter().enumerate() {
            let w = self.firing_strength(i, input);
            num += w * rule.consequent.output(input);
            den += w;
        }
        if den < FIRING_EPSILON {
            return self.rules[self.strongest_rule(input)].consequent.output(input);
        }
        num / den
    }
}
