//! Mass-action kinetics, the entropy-like Lyapunov function, the generator
//! and the embedded jump chain.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Complex, MassActionSystem, ReactionId, State};

/// Mass-action intensity `prod_i x_i! / (x_i - y_i)!`, zero unless `x >= y`.
///
/// Evaluated as a product of falling factors, never through factorials.
pub fn intensity(y: &Complex, x: &State) -> Result<f64> {
    if y.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: y.dim(), found: x.dim() });
    }
    Ok(intensity_unchecked(y, x))
}

pub(crate) fn intensity_unchecked(y: &Complex, x: &State) -> f64 {
    let mut prod = 1.0;
    for (&yi, &xi) in y.coeffs().iter().zip(x.counts()) {
        let yi = u64::from(yi);
        if xi < yi {
            return 0.0;
        }
        for j in 0..yi {
            prod *= (xi - j) as f64;
        }
    }
    prod
}

fn entropy_term(t: u64) -> f64 {
    if t == 0 {
        1.0
    } else {
        let t = t as f64;
        t * (t.ln() - 1.0) + 1.0
    }
}

/// `V(x) = sum_i x_i (ln x_i - 1) + 1`, with `0 ln 0 = 0`.
pub fn lyapunov(x: &State) -> f64 {
    x.counts().iter().map(|&t| entropy_term(t)).sum()
}

/// Per-coordinate `f(t + d) - f(t)` for `f(t) = t(ln t - 1) + 1`, written so
/// that large `t` does not cancel catastrophically.
fn entropy_increment(t: u64, d: i64) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let end = t.checked_add_signed(d).expect("increment leaves the nonnegative orthant");
    if t == 0 {
        let e = end as f64;
        return e * (e.ln() - 1.0);
    }
    let tf = t as f64;
    if end == 0 {
        return tf - tf * tf.ln();
    }
    let df = d as f64;
    tf * (df / tf).ln_1p() + df * (end as f64).ln() - df
}

/// `V(x + h) - V(x)`, evaluated coordinate-wise without forming `V(x)`.
///
/// Panics if `x + h` has a negative coordinate.
pub fn lyapunov_increment(x: &State, h: &[i64]) -> f64 {
    x.counts().iter().zip(h).map(|(&t, &d)| entropy_increment(t, d)).sum()
}

impl MassActionSystem {
    fn check_dim(&self, x: &State) -> Result<()> {
        let d = self.network().dim();
        if x.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.dim() });
        }
        Ok(())
    }

    /// `kappa * intensity(source, x)` for one reaction.
    pub fn reaction_rate(&self, rxn: ReactionId, x: &State) -> Result<f64> {
        let kappa = self.rate_constant(rxn)?;
        self.check_dim(x)?;
        Ok(kappa * intensity_unchecked(self.network().source(rxn), x))
    }

    /// Rates of every reaction at `x`, in declaration order.
    pub fn reaction_rates(&self, x: &State) -> Vec<f64> {
        let mut out = vec![0.0; self.network().num_reactions()];
        self.fill_rates(x, &mut out);
        out
    }

    pub(crate) fn fill_rates(&self, x: &State, out: &mut [f64]) {
        let net = self.network();
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.kappa()[i] * intensity_unchecked(net.source(i), x);
        }
    }

    /// Total outgoing rate; zero exactly at absorbing states.
    pub fn total_rate(&self, x: &State) -> f64 {
        let net = self.network();
        (0..net.num_reactions())
            .map(|i| self.kappa()[i] * intensity_unchecked(net.source(i), x))
            .sum()
    }

    pub fn is_absorbing(&self, x: &State) -> bool {
        let net = self.network();
        (0..net.num_reactions()).all(|i| !x.dominates(net.source(i)))
    }

    /// Rates aggregated by net jump vector; zero-rate jumps are omitted.
    pub fn transition_rates(&self, x: &State) -> BTreeMap<Vec<i64>, f64> {
        let net = self.network();
        let mut out = BTreeMap::new();
        for i in 0..net.num_reactions() {
            let rate = self.kappa()[i] * intensity_unchecked(net.source(i), x);
            if rate > 0.0 {
                *out.entry(net.jump(i).to_vec()).or_insert(0.0) += rate;
            }
        }
        out
    }

    /// Generator applied to the Lyapunov function at `x`:
    /// `sum_r rate_r(x) (V(x + jump_r) - V(x))`.
    pub fn generator_applied(&self, x: &State) -> f64 {
        let net = self.network();
        let mut acc = 0.0;
        for i in 0..net.num_reactions() {
            let rate = self.kappa()[i] * intensity_unchecked(net.source(i), x);
            if rate > 0.0 {
                acc += rate * lyapunov_increment(x, net.jump(i));
            }
        }
        acc
    }

    /// One-step law of the embedded chain from `x`.
    pub fn embedded_step_distribution(&self, x: &State) -> Result<BTreeMap<State, f64>> {
        self.check_dim(x)?;
        let rates = self.transition_rates(x);
        let total: f64 = rates.values().sum();
        if total <= 0.0 {
            return Err(Error::AbsorbingState(x.clone()));
        }
        Ok(rates
            .into_iter()
            .map(|(h, q)| {
                let target = x.offset(&h).expect("positive rate implies a valid target");
                (target, q / total)
            })
            .collect())
    }

    /// Probability that the embedded chain started at `x` fires exactly the
    /// given reactions, in order, as its first `path.len()` jumps.
    pub fn path_probability(&self, x: &State, path: &[ReactionId]) -> Result<f64> {
        self.check_dim(x)?;
        let net = self.network();
        for &r in path {
            net.reaction(r)?;
        }
        let mut z = x.clone();
        let mut prob = 1.0;
        for &r in path {
            let rate = self.kappa()[r] * intensity_unchecked(net.source(r), &z);
            if rate == 0.0 {
                return Ok(0.0);
            }
            prob *= rate / self.total_rate(&z);
            z = z.offset(net.jump(r)).expect("positive rate implies a valid target");
        }
        Ok(prob)
    }
}
