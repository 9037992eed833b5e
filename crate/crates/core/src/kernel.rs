//! Raised-cosine expansion of the Gaussian range kernel.
//!
//! `[cos(t / (sigma_r sqrt N))]^N` tends to `exp(-t^2 / 2 sigma_r^2)` as the
//! order `N` grows, and expands binomially into `N + 1` complex exponentials
//! `c_n exp(i omega_n t)`. Each exponential is shiftable, which is what lets
//! the fast filter replace the per-pixel range weighting by Gaussian blurs.
//! The small-weight tail terms at both ends of the expansion can be dropped
//! for a bounded error `epsilon`.

use crate::error::{invalid, Result};

/// Orders below this keep every term.
pub const FULL_EXPANSION_BELOW: usize = 40;
/// Orders from [`FULL_EXPANSION_BELOW`] up to this use the exact cumulative
/// truncation rule; larger orders use the Chernoff estimate.
pub const CHERNOFF_FROM: usize = 100;
pub const CUMULATIVE_EPSILON: f64 = 0.01;
pub const CHERNOFF_EPSILON: f64 = 0.1;

/// Above this order the binomial coefficients are built in log space.
const LOG_SPACE_ABOVE: usize = 60;

/// How the truncation index was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// All `N + 1` terms retained.
    None,
    /// Largest `M` whose retained mass exceeds `1 - epsilon / 2`.
    Cumulative,
    /// Closed-form Chernoff estimate of `M`.
    Chernoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm {
    pub index: usize,
    pub coeff: f64,
    pub omega: f64,
}

/// A truncated raised-cosine approximation, valid on `[-T, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelApproximation {
    order: usize,
    truncation: usize,
    epsilon: Option<f64>,
    rule: Truncation,
    sigma_r: f64,
    dynamic_range: f64,
    terms: Vec<KernelTerm>,
}

fn check_sigma_r(sigma_r: f64) -> Result<()> {
    if sigma_r.is_finite() && sigma_r > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            "sigma_r",
            format!("must be finite and > 0, got {sigma_r}"),
        ))
    }
}

/// Real-valued lower bound `0.405 (T / sigma_r)^2` on the order.
pub fn minimum_order(dynamic_range: f64, sigma_r: f64) -> f64 {
    0.405 * (dynamic_range / sigma_r).powi(2)
}

/// Smallest integer order whose raised cosine is positive and monotone on
/// `[-T, T]`, floored at 1.
pub fn select_order(dynamic_range: f64, sigma_r: f64) -> Result<usize> {
    check_sigma_r(sigma_r)?;
    if !(dynamic_range.is_finite() && dynamic_range >= 0.0) {
        return Err(invalid(
            "T",
            format!("must be finite and >= 0, got {dynamic_range}"),
        ));
    }
    Ok((minimum_order(dynamic_range, sigma_r).ceil() as usize).max(1))
}

pub fn raised_cosine(t: f64, order: usize, sigma_r: f64) -> f64 {
    (t / (sigma_r * (order as f64).sqrt()))
        .cos()
        .powi(order as i32)
}

pub fn gaussian_range_kernel(t: f64, sigma_r: f64) -> f64 {
    (-t * t / (2.0 * sigma_r * sigma_r)).exp()
}

/// `c_n = C(N, n) / 2^N` for `n = 0..=N`.
pub fn binomial_weights(order: usize) -> Vec<f64> {
    if order <= LOG_SPACE_ABOVE {
        let mut row = vec![1u64; order + 1];
        for n in 1..order {
            // C(N, n) = C(N, n-1) (N - n + 1) / n, exact in u64 up to N = 60
            row[n] = row[n - 1] * (order - n + 1) as u64 / n as u64;
        }
        let scale = 0.5f64.powi(order as i32);
        row.into_iter().map(|c| c as f64 * scale).collect()
    } else {
        let mut log_c = -(order as f64) * std::f64::consts::LN_2;
        let mut out = Vec::with_capacity(order + 1);
        out.push(log_c.exp());
        for n in 1..=order {
            log_c += ((order - n + 1) as f64).ln() - (n as f64).ln();
            out.push(log_c.exp());
        }
        out
    }
}

/// Largest `M <= N/2` with `c_M + ... + c_{N-M} > 1 - epsilon / 2`.
///
/// Evaluated through the tail mass `2 (c_0 + ... + c_{M-1}) < epsilon / 2`
/// to avoid cancellation against 1.
pub fn cumulative_truncation(weights: &[f64], epsilon: f64) -> usize {
    let order = weights.len() - 1;
    let mut tail = 0.0;
    let mut best = 0;
    for m in 1..=order / 2 {
        tail += weights[m - 1];
        if 2.0 * tail < epsilon / 2.0 {
            best = m;
        } else {
            break;
        }
    }
    best
}

/// `floor((N - sqrt(4 N ln(2 / epsilon))) / 2)`, clamped to `[0, (N-1)/2]`.
pub fn chernoff_truncation(order: usize, epsilon: f64) -> usize {
    let n = order as f64;
    let m = ((n - (4.0 * n * (2.0 / epsilon).ln()).sqrt()) / 2.0).floor();
    let upper = (order.saturating_sub(1) / 2) as f64;
    m.clamp(0.0, upper) as usize
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(invalid(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ))
    }
}

impl KernelApproximation {
    /// Builds the approximation with the order regimes: every term below order
    /// 40, the cumulative rule with epsilon 0.01 below order 100, and the
    /// Chernoff estimate with epsilon 0.1 from order 100 on.
    pub fn build(dynamic_range: f64, sigma_r: f64) -> Result<Self> {
        Self::build_with(dynamic_range, sigma_r, None)
    }

    /// Like [`build`](Self::build), but a given `epsilon` replaces the regime
    /// default and truncation is applied at every order: cumulative below
    /// order 100, Chernoff from 100 on.
    pub fn build_with(dynamic_range: f64, sigma_r: f64, epsilon: Option<f64>) -> Result<Self> {
        let order = select_order(dynamic_range, sigma_r)?;
        if let Some(e) = epsilon {
            check_epsilon(e)?;
        }
        let weights = binomial_weights(order);
        let (rule, epsilon) = match epsilon {
            Some(e) if order < CHERNOFF_FROM => (Truncation::Cumulative, Some(e)),
            Some(e) => (Truncation::Chernoff, Some(e)),
            None if order < FULL_EXPANSION_BELOW => (Truncation::None, None),
            None if order < CHERNOFF_FROM => (Truncation::Cumulative, Some(CUMULATIVE_EPSILON)),
            None => (Truncation::Chernoff, Some(CHERNOFF_EPSILON)),
        };
        let truncation = match (rule, epsilon) {
            (Truncation::Cumulative, Some(e)) => cumulative_truncation(&weights, e),
            (Truncation::Chernoff, Some(e)) => chernoff_truncation(order, e),
            _ => 0,
        };
        let scale = sigma_r * (order as f64).sqrt();
        let terms = (truncation..=order - truncation)
            .map(|n| KernelTerm {
                index: n,
                coeff: weights[n],
                omega: (2.0 * n as f64 - order as f64) / scale,
            })
            .collect();
        Ok(Self {
            order,
            truncation,
            epsilon,
            rule,
            sigma_r,
            dynamic_range,
            terms,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of terms dropped from each end of the expansion.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn rule(&self) -> Truncation {
        self.rule
    }

    pub fn sigma_r(&self) -> f64 {
        self.sigma_r
    }

    pub fn dynamic_range(&self) -> f64 {
        self.dynamic_range
    }

    /// Retained terms `n = M ..= N - M`, in increasing `n`.
    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn retained_mass(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff).sum()
    }

    /// Truncated expansion at `t`. Terms `n` and `N - n` are conjugate, so
    /// the sum is real and is evaluated as a cosine sum.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|k| k.coeff * (k.omega * t).cos())
            .sum()
    }

    /// Upper bound on `|truncated - full|`: twice the dropped tail mass.
    pub fn truncation_bound(&self) -> f64 {
        (1.0 - self.retained_mass()).max(0.0)
    }
}

pub fn truncated_kernel(t: f64, approx: &KernelApproximation) -> f64 {
    approx.evaluate(t)
}
