//! Logistic regression on one-hot categorical predictors, fitted by
//! full-batch gradient ascent on the penalised log-likelihood.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub(crate) struct Design {
    /// Cardinality of each predictor; level 0 is the reference level.
    pub cards: Vec<u32>,
}

impl Design {
    pub fn width(&self) -> usize {
        1 + self.cards.iter().map(|&c| c.saturating_sub(1) as usize).sum::<usize>()
    }

    /// Indices of the active features (intercept first) for a pattern.
    pub fn active(&self, pattern: &[u32], out: &mut Vec<usize>) {
        out.clear();
        out.push(0);
        let mut offset = 1;
        for (&card, &v) in self.cards.iter().zip(pattern) {
            if v > 0 {
                out.push(offset + v as usize - 1);
            }
            offset += card.saturating_sub(1) as usize;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    /// Intercept followed by one coefficient per non-reference level.
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub max_iter: usize,
    pub l2: f64,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 5000,
            l2: 1e-4,
            tolerance: 1e-7,
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fits `P(y = 1 | pattern)` from aggregated `(pattern, trials, successes)`.
pub(crate) fn fit(
    design: &Design,
    groups: &[(Vec<u32>, f64, f64)],
    options: &FitOptions,
) -> LogisticFit {
    let width = design.width();
    let total: f64 = groups.iter().map(|g| g.1).sum();
    let step = 4.0 / (1.0 + design.cards.len() as f64);
    let actives: Vec<Vec<usize>> = groups
        .iter()
        .map(|(p, _, _)| {
            let mut a = Vec::new();
            design.active(p, &mut a);
            a
        })
        .collect();

    let mut beta = vec![0.0f64; width];
    let rate = groups.iter().map(|g| g.2).sum::<f64>() / total;
    beta[0] = (rate.clamp(1e-6, 1.0 - 1e-6) / (1.0 - rate.clamp(1e-6, 1.0 - 1e-6))).ln();
    let mut grad = vec![0.0f64; width];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iter {
        iterations += 1;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for ((_, trials, successes), active) in groups.iter().zip(&actives) {
            let eta: f64 = active.iter().map(|&j| beta[j]).sum();
            let resid = successes - trials * sigmoid(eta);
            for &j in active {
                grad[j] += resid;
            }
        }
        let mut norm = 0.0f64;
        for (j, g) in grad.iter_mut().enumerate() {
            *g /= total;
            if j > 0 {
                *g -= options.l2 * beta[j];
            }
            norm = norm.max(g.abs());
        }
        if norm < options.tolerance {
            converged = true;
            break;
        }
        for (b, g) in beta.iter_mut().zip(&grad) {
            *b += step * g;
        }
    }
    LogisticFit {
        coefficients: beta,
        iterations,
        converged,
    }
}

pub(crate) fn predict(design: &Design, fit: &LogisticFit, pattern: &[u32], scratch: &mut Vec<usize>) -> f64 {
    design.active(pattern, scratch);
    sigmoid(scratch.iter().map(|&j| fit.coefficients[j]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_model_recovers_group_rates() {
        let design = Design { cards: vec![2] };
        let groups = vec![(vec![0], 1000.0, 900.0), (vec![1], 1000.0, 300.0)];
        let f = fit(&design, &groups, &FitOptions::default());
        let mut s = Vec::new();
        assert!((predict(&design, &f, &[0], &mut s) - 0.9).abs() < 1e-3);
        assert!((predict(&design, &f, &[1], &mut s) - 0.3).abs() < 1e-3);
    }

    #[test]
    fn design_layout() {
        let d = Design { cards: vec![3, 1, 2] };
        assert_eq!(d.width(), 4);
        let mut a = Vec::new();
        d.active(&[2, 0, 1], &mut a);
        assert_eq!(a, vec![0, 2, 3]);
        d.active(&[0, 0, 0], &mut a);
        assert_eq!(a, vec![0]);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
