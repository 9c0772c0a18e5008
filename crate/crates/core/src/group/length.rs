use std::collections::HashMap;

use super::base::Elem;
use super::normal_form::{NormalForm, Sign, Syllable};
use super::presentation::HnnPresentation;
use super::GroupError;

/// Weights on the base group.
#[derive(Debug, Clone, PartialEq)]
pub enum G0Weights {
    /// Same weight for every element, including e₀.
    Constant(f64),
    /// Dense table indexed by element id (finite base groups).
    Table(Vec<f64>),
    /// Sparse table with a default for unlisted elements (integers).
    Sparse { values: HashMap<Elem, f64>, default: f64 },
    /// `scale · |g|`, the supp(μ₀) word metric computed on demand (integers).
    WordMetric { scale: f64 },
}

/// ℓ(g₀) ≤ C·|g₀|^κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub c: f64,
    pub kappa: u32,
}

/// A generalised length ℓ on G₀ ∪ {t, t⁻¹}, extended to G through the normal
/// form: ℓ(g₁t₁…gₙtₙg_{n+1}) = Σ (ℓ(gᵢ) + ℓ(tᵢ)) + ℓ(g_{n+1}).
#[derive(Debug, Clone, PartialEq)]
pub struct LengthFunction {
    pub g0: G0Weights,
    pub t: f64,
    pub t_inv: f64,
    pub growth_bound: Option<GrowthBound>,
}

impl LengthFunction {
    /// ℓ ≡ 1 on G₀ ∪ {t, t⁻¹}.
    pub fn unit() -> Self {
        Self {
            g0: G0Weights::Constant(1.0),
            t: 1.0,
            t_inv: 1.0,
            growth_bound: None,
        }
    }

    /// ℓ = 0 on G₀ and 1 on t^{±1}; evaluates to the t-length.
    pub fn t_only() -> Self {
        Self {
            g0: G0Weights::Constant(0.0),
            t: 1.0,
            t_inv: 1.0,
            growth_bound: None,
        }
    }

    /// supp(μ₀) word metric on G₀ and 1 on t^{±1}.
    pub fn word(pres: &HnnPresentation) -> Result<Self, GroupError> {
        let g0 = match pres.base().elements() {
            Some(elems) => {
                let mut table = Vec::new();
                for g in elems {
                    let d = pres.word_metric(g).ok_or_else(|| {
                        GroupError::InvalidLength("word metric needs generators spanning G0".into())
                    })?;
                    table.push(d as f64);
                }
                G0Weights::Table(table)
            }
            None => {
                if !pres.generators_span() {
                    return Err(GroupError::InvalidLength(
                        "word metric needs generators spanning G0".into(),
                    ));
                }
                G0Weights::WordMetric { scale: 1.0 }
            }
        };
        Ok(Self {
            g0,
            t: 1.0,
            t_inv: 1.0,
            growth_bound: Some(GrowthBound { c: 1.0, kappa: 1 }),
        })
    }

    /// Explicit weights; unlisted base elements get `default`.
    pub fn table(
        pres: &HnnPresentation,
        values: &HashMap<Elem, f64>,
        default: f64,
        t: f64,
        t_inv: f64,
    ) -> Self {
        let g0 = match pres.base().elements() {
            Some(elems) => G0Weights::Table(
                elems
                    .map(|g| values.get(&g).copied().unwrap_or(default))
                    .collect(),
            ),
            None => G0Weights::Sparse {
                values: values.clone(),
                default,
            },
        };
        Self {
            g0,
            t,
            t_inv,
            growth_bound: None,
        }
    }

    pub fn with_growth_bound(mut self, c: f64, kappa: u32) -> Self {
        self.growth_bound = Some(GrowthBound { c, kappa });
        self
    }

    #[inline]
    pub fn base(&self, pres: &HnnPresentation, g: Elem) -> f64 {
        match &self.g0 {
            G0Weights::Constant(c) => *c,
            G0Weights::Table(v) => v[g.index()],
            G0Weights::Sparse { values, default } => values.get(&g).copied().unwrap_or(*default),
            G0Weights::WordMetric { scale } => {
                scale * pres.word_metric(g).map(f64::from).unwrap_or(f64::INFINITY)
            }
        }
    }

    #[inline]
    pub fn stable(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.t,
            Sign::Minus => self.t_inv,
        }
    }

    /// ℓ(g t^{±1}) for one syllable.
    #[inline]
    pub fn syllable(&self, pres: &HnnPresentation, s: Syllable) -> f64 {
        self.base(pres, s.rep) + self.stable(s.sign)
    }

    pub fn eval(&self, pres: &HnnPresentation, w: &NormalForm) -> f64 {
        w.syllables()
            .iter()
            .map(|&s| self.syllable(pres, s))
            .sum::<f64>()
            + self.base(pres, w.trailing())
    }

    /// c·ℓ.
    pub fn scaled(&self, c: f64) -> Self {
        let g0 = match &self.g0 {
            G0Weights::Constant(x) => G0Weights::Constant(c * x),
            G0Weights::Table(v) => G0Weights::Table(v.iter().map(|x| c * x).collect()),
            G0Weights::Sparse { values, default } => G0Weights::Sparse {
                values: values.iter().map(|(k, v)| (*k, c * v)).collect(),
                default: c * default,
            },
            G0Weights::WordMetric { scale } => G0Weights::WordMetric { scale: c * scale },
        };
        Self {
            g0,
            t: c * self.t,
            t_inv: c * self.t_inv,
            growth_bound: self.growth_bound.map(|b| GrowthBound { c: c * b.c, kappa: b.kappa }),
        }
    }

    /// True if ℓ vanishes on every letter.
    pub fn is_zero(&self) -> bool {
        let base_zero = match &self.g0 {
            G0Weights::Constant(c) => *c == 0.0,
            G0Weights::Table(v) => v.iter().all(|&x| x == 0.0),
            G0Weights::Sparse { values, default } => *default == 0.0 && values.values().all(|&x| x == 0.0),
            G0Weights::WordMetric { scale } => *scale == 0.0,
        };
        base_zero && self.t == 0.0 && self.t_inv == 0.0
    }

    /// Checks non-negativity, and the growth bound exhaustively on finite
    /// base groups (|e₀| is taken as 1 so constant weights are admissible).
    pub fn validate(&self, pres: &HnnPresentation) -> Result<(), GroupError> {
        let neg = |x: f64| x.is_nan() || x < 0.0;
        if neg(self.t) || neg(self.t_inv) {
            return Err(GroupError::InvalidLength("stable-letter weights must be >= 0".into()));
        }
        let bad_base = match &self.g0 {
            G0Weights::Constant(c) => neg(*c),
            G0Weights::Table(v) => v.iter().any(|&x| neg(x)),
            G0Weights::Sparse { values, default } => neg(*default) || values.values().any(|&x| neg(x)),
            G0Weights::WordMetric { scale } => neg(*scale),
        };
        if bad_base {
            return Err(GroupError::InvalidLength("base weights must be >= 0".into()));
        }
        if let (Some(bound), Some(elems)) = (self.growth_bound, pres.base().elements()) {
            for g in elems {
                let Some(d) = pres.word_metric(g) else {
                    return Err(GroupError::InvalidLength(
                        "growth bound needs generators spanning G0".into(),
                    ));
                };
                let limit = bound.c * f64::from(d.max(1)).powi(bound.kappa as i32);
                if self.base(pres, g) > limit {
                    return Err(GroupError::InvalidLength(format!(
                        "growth bound violated at `{}`",
                        pres.name(g)
                    )));
                }
            }
        }
        Ok(())
    }
}
