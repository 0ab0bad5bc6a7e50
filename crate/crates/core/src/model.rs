//! Model primitives: country parameters, ratio coordinates and the
//! conflict payoff.
//!
//! Every solver works in ratio coordinates `(lambda, beta, alpha, epsilon)`
//! with `lambda = lambda_1 / lambda_2` and `beta = beta_1 / beta_2`. Country
//! labels are chosen so that `beta <= lambda`: country 1 holds the edge in
//! aggressive potential and country 2 the edge in production.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest admissible lower cutoff of the private resource variable.
pub const MAX_EPSILON: f64 = 0.1;

/// Public characteristics of one country.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountryParams {
    /// Aggressive (military or tariff) power per unit of resource.
    pub aggression: f64,
    /// Production value per unit of resource.
    pub production: f64,
    /// Expected resource level.
    pub expected_resource: f64,
}

impl CountryParams {
    pub fn new(aggression: f64, production: f64, expected_resource: f64) -> Result<Self> {
        let p = Self {
            aggression,
            production,
            expected_resource,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("aggression", self.aggression),
            ("production", self.production),
            ("expected_resource", self.expected_resource),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// How raw country parameters are scaled before ratios are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Both countries are scaled by `2 R_1`; the expected resources cancel
    /// from every ratio.
    #[default]
    SharedScale,
    /// Country `i` is scaled by its own `2 R_i`, so the ratios pick up a
    /// factor `R_1 / R_2`.
    PerCountry,
}

/// Normalized public parameters in which all solvers operate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictRatios {
    pub lambda: f64,
    pub beta: f64,
    /// Fraction of its production a losing country keeps.
    pub alpha: f64,
    /// Lower cutoff of the private resource variable.
    pub epsilon: f64,
    /// True when the input countries were relabeled to enforce `beta <= lambda`.
    pub swapped: bool,
}

impl ConflictRatios {
    /// Builds ratio coordinates directly, relabeling the countries when
    /// `beta > lambda`.
    pub fn new(lambda: f64, beta: f64, alpha: f64, epsilon: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("beta", beta)?;
        let (lambda, beta, swapped) = if beta > lambda {
            (1.0 / lambda, 1.0 / beta, true)
        } else {
            (lambda, beta, false)
        };
        let ratios = Self {
            lambda,
            beta,
            alpha,
            epsilon,
            swapped,
        };
        ratios.validate()?;
        Ok(ratios)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("lambda", self.lambda)?;
        check_positive("beta", self.beta)?;
        if self.beta > self.lambda {
            return Err(domain(format!(
                "beta ({}) must not exceed lambda ({})",
                self.beta, self.lambda
            )));
        }
        check_alpha_solver(self.alpha)?;
        if !(self.epsilon.is_finite() && (0.0..MAX_EPSILON).contains(&self.epsilon)) {
            return Err(domain(format!(
                "epsilon must lie in [0, {MAX_EPSILON}), got {}",
                self.epsilon
            )));
        }
        if !self.is_equal_case() && self.epsilon <= 0.0 {
            return Err(domain("epsilon must be positive when lambda != beta"));
        }
        Ok(())
    }

    /// True when neither country has a comparative advantage (`lambda == beta`).
    pub fn is_equal_case(&self) -> bool {
        self.lambda == self.beta
    }

    /// Exponent `beta / lambda` carried by country 1's strategy.
    pub fn p(&self) -> f64 {
        self.beta / self.lambda
    }

    /// Exponent `lambda / beta` carried by country 2's strategy.
    pub fn q(&self) -> f64 {
        self.lambda / self.beta
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Solvers need `alpha < 1`: several coefficients carry `1 / (1 - alpha)`.
pub(crate) fn check_alpha_solver(alpha: f64) -> Result<()> {
    if alpha.is_finite() && (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(domain(format!("alpha must lie in [0, 1), got {alpha}")))
    }
}

/// Reduces two countries to ratio coordinates using the shared `2 R_1` scale.
pub fn normalize_ratios(
    c1: CountryParams,
    c2: CountryParams,
    alpha: f64,
    epsilon: f64,
) -> Result<ConflictRatios> {
    normalize_ratios_with(c1, c2, alpha, epsilon, Normalization::SharedScale)
}

pub fn normalize_ratios_with(
    c1: CountryParams,
    c2: CountryParams,
    alpha: f64,
    epsilon: f64,
    normalization: Normalization,
) -> Result<ConflictRatios> {
    c1.validate()?;
    c2.validate()?;
    check_alpha_solver(alpha)?;
    let scale = match normalization {
        Normalization::SharedScale => 1.0,
        Normalization::PerCountry => c1.expected_resource / c2.expected_resource,
    };
    let lambda = scale * c1.aggression / c2.aggression;
    let beta = scale * c1.production / c2.production;
    ConflictRatios::new(lambda, beta, alpha, epsilon)
}

/// A country's bid given its private resource draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub r: f64,
    pub b: f64,
}

impl Bid {
    pub fn new(r: f64, b: f64) -> Result<Self> {
        if !(r.is_finite() && b.is_finite()) || b < 0.0 {
            return Err(domain(format!("bid must be finite and nonnegative, got b={b}")));
        }
        Ok(Self { r, b })
    }

    /// Whether the bid stays within the available resource.
    pub fn is_feasible(&self) -> bool {
        self.b <= self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    Country1,
    Country2,
    Tie,
}

/// One side of a conflict in absolute (not ratio) units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contestant {
    pub r: f64,
    pub b: f64,
    /// Production rate `beta_i`.
    pub production: f64,
    /// Aggression rate `lambda_i`.
    pub aggression: f64,
}

impl Contestant {
    pub fn kept(&self) -> f64 {
        self.production * (self.r - self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffOutcome {
    pub w1: f64,
    pub w2: f64,
    pub winner: Winner,
}

/// Resolves a single conflict.
///
/// The side with the larger aggressive effort `lambda_i * b_i` wins and takes
/// `1 - alpha` of the loser's production; the loser keeps `alpha` of its own.
/// Equal efforts (exact floating-point equality) leave both sides with their
/// own production.
pub fn payoff(c1: Contestant, c2: Contestant, alpha: f64) -> Result<PayoffOutcome> {
    for (name, v) in [
        ("production_1", c1.production),
        ("production_2", c2.production),
        ("aggression_1", c1.aggression),
        ("aggression_2", c2.aggression),
    ] {
        check_positive(name, v)?;
    }
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    for v in [c1.r, c1.b, c2.r, c2.b] {
        if !v.is_finite() {
            return Err(domain("resources and bids must be finite"));
        }
    }
    Ok(resolve(c1, c2, alpha))
}

#[inline]
pub(crate) fn resolve(c1: Contestant, c2: Contestant, alpha: f64) -> PayoffOutcome {
    let e1 = c1.aggression * c1.b;
    let e2 = c2.aggression * c2.b;
    let (k1, k2) = (c1.kept(), c2.kept());
    if e1 > e2 {
        PayoffOutcome {
            w1: k1 + (1.0 - alpha) * k2,
            w2: alpha * k2,
            winner: Winner::Country1,
        }
    } else if e1 < e2 {
        PayoffOutcome {
            w1: alpha * k1,
            w2: k2 + (1.0 - alpha) * k1,
            winner: Winner::Country2,
        }
    } else {
        PayoffOutcome {
            w1: k1,
            w2: k2,
            winner: Winner::Tie,
        }
    }
}

/// Payoff in ratio units: country 2's rates are normalized to one.
pub fn ratio_payoff(r1: f64, b1: f64, r2: f64, b2: f64, ratios: &ConflictRatios) -> PayoffOutcome {
    resolve(
        Contestant {
            r: r1,
            b: b1,
            production: ratios.beta,
            aggression: ratios.lambda,
        },
        Contestant {
            r: r2,
            b: b2,
            production: 1.0,
            aggression: 1.0,
        },
        ratios.alpha,
    )
}

/// Parameter file accepted by the command-line front end.
///
/// Either the raw per-country keys or the `lambda`/`beta` ratios must be
/// present; ratios win when both are given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub lambda1_tilde: Option<f64>,
    pub beta1_tilde: Option<f64>,
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    pub lambda2_tilde: Option<f64>,
    pub beta2_tilde: Option<f64>,
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub normalization: Normalization,
}

impl ParamsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Raw country pair, if all six raw keys are present.
    pub fn countries(&self) -> Option<(CountryParams, CountryParams)> {
        Some((
            CountryParams {
                aggression: self.lambda1_tilde?,
                production: self.beta1_tilde?,
                expected_resource: self.r1?,
            },
            CountryParams {
                aggression: self.lambda2_tilde?,
                production: self.beta2_tilde?,
                expected_resource: self.r2?,
            },
        ))
    }

    /// `(lambda, beta)` in the file's own country order, before relabeling.
    pub fn ratio_pair(&self) -> Result<(f64, f64)> {
        if let (Some(lambda), Some(beta)) = (self.lambda, self.beta) {
            return Ok((lambda, beta));
        }
        let (c1, c2) = self.countries().ok_or_else(|| {
            Error::Config("parameter file needs lambda/beta or all six raw keys".into())
        })?;
        c1.validate()?;
        c2.validate()?;
        let scale = match self.normalization {
            Normalization::SharedScale => 1.0,
            Normalization::PerCountry => c1.expected_resource / c2.expected_resource,
        };
        Ok((
            scale * c1.aggression / c2.aggression,
            scale * c1.production / c2.production,
        ))
    }

    pub fn to_ratios(&self) -> Result<ConflictRatios> {
        let alpha = self
            .alpha
            .ok_or_else(|| Error::Config("parameter file lacks alpha".into()))?;
        let (lambda, beta) = self.ratio_pair()?;
        ConflictRatios::new(lambda, beta, alpha, self.epsilon.unwrap_or(0.0))
    }
}
