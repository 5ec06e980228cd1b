//! Convergence-rate predictions for the adaptive solver and its
//! slack-tolerant variants, evaluated from a run's accepted step constants.

use crate::solvers::SlackMode;

/// Distance-to-solution bounds `b_0 ... b_N` implied by the accepted step
/// constants: `b_0 = v0` and
///
/// `b_{k+1} = b_k / (1 + mu / L_{k+1}) + s_{k+1}`,
///
/// where the per-step increment `s` is `0` for the plain method,
/// `delta / (L_{k+1} + mu)` for the additive-slack variant, and `delta` for
/// the multiplicative-slack variant.
pub fn theoretical_bound(
    v0: f64,
    mu: f64,
    l_sequence: &[f64],
    delta: f64,
    mode: SlackMode,
) -> Vec<f64> {
    let mut bounds = Vec::with_capacity(l_sequence.len() + 1);
    let mut b = v0;
    bounds.push(b);
    for &l in l_sequence {
        b /= 1.0 + mu / l;
        b += match mode {
            SlackMode::None => 0.0,
            SlackMode::Additive => delta / (l + mu),
            SlackMode::Multiplicative => delta,
        };
        bounds.push(b);
    }
    bounds
}

/// The constant-rate bound `(1 + mu / (2 L))^{-k} v0` for `k = 0 ... iters`,
/// valid for the plain adaptive method whenever `L_0 <= 2 L`.
pub fn uniform_rate_bound(v0: f64, mu: f64, l: f64, iters: usize) -> Vec<f64> {
    let rate = 1.0 / (1.0 + mu / (2.0 * l));
    let mut bounds = Vec::with_capacity(iters + 1);
    let mut b = v0;
    bounds.push(b);
    for _ in 0..iters {
        b *= rate;
        bounds.push(b);
    }
    bounds
}

/// Limiting distance floor `(1 + 2 L / mu) delta` of the multiplicative-slack
/// variant: the fixed point of its bound recursion with every step constant
/// at the worst case `2 L`.
pub fn multiplicative_limit_floor(mu: f64, l: f64, delta: f64) -> f64 {
    (1.0 + 2.0 * l / mu) * delta
}

/// Outcome of checking a run's backtracking effort against its budget.
#[derive(Debug, Clone)]
pub struct TrialBudgetReport {
    pub total_trials: u64,
    pub iterations: usize,
    /// `2 N + log2(2 L / L_0)`.
    pub bound: f64,
    /// `bound - total_trials`; nonnegative when the budget holds.
    pub slack: f64,
    pub holds: bool,
}

/// Checks the identity-driven budget on acceptance-test evaluations: with
/// `t_k` trials in iteration `k`, the accepted constants satisfy
/// `L_N = L_0 2^(sum t_k - 2 N)`, so `L_N <= 2 L` forces
/// `sum t_k <= 2 N + log2(2 L / L_0)`.
pub fn trial_budget_check(trials: &[u64], l0: f64, l: f64) -> TrialBudgetReport {
    let total: u64 = trials.iter().sum();
    let n = trials.len();
    let bound = 2.0 * n as f64 + (2.0 * l / l0).log2();
    let slack = bound - total as f64;
    TrialBudgetReport {
        total_trials: total,
        iterations: n,
        bound,
        slack,
        holds: slack >= 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_bound_is_the_product_of_rates() {
        let ls = [2.0, 4.0, 4.0];
        let b = theoretical_bound(10.0, 1.0, &ls, 0.0, SlackMode::None);
        assert_eq!(b.len(), 4);
        let direct = 10.0 / (1.5 * 1.25 * 1.25);
        assert!((b[3] - direct).abs() < 1e-12);
    }

    #[test]
    fn additive_bound_matches_manual_unrolling() {
        let ls = [2.0, 2.0];
        let (mu, delta) = (1.0, 0.1);
        let b = theoretical_bound(1.0, mu, &ls, delta, SlackMode::Additive);
        let b1 = 1.0 / 1.5 + delta / 3.0;
        let b2 = b1 / 1.5 + delta / 3.0;
        assert!((b[1] - b1).abs() < 1e-15);
        assert!((b[2] - b2).abs() < 1e-15);
    }

    #[test]
    fn multiplicative_recursion_converges_to_the_floor() {
        let (mu, l, delta) = (1.0, 5.0, 1e-3);
        let ls = vec![2.0 * l; 4000];
        let b = theoretical_bound(1.0, mu, &ls, delta, SlackMode::Multiplicative);
        let floor = multiplicative_limit_floor(mu, l, delta);
        let last = *b.last().unwrap();
        assert!((last - floor).abs() < 1e-12, "{last} vs {floor}");
        // The recursion approaches the floor from whichever side it starts.
        assert!(b.iter().all(|v| *v <= 1.0 + 1e-15));
    }

    #[test]
    fn uniform_rate_decays_geometrically() {
        let b = uniform_rate_bound(8.0, 2.0, 4.0, 3);
        assert_eq!(b.len(), 4);
        assert!((b[3] - 8.0 / 1.25f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn budget_report_flags_exhausted_budgets() {
        // Identity: total = 2 N + log2(L_N / L_0); with L_N <= 2 L it holds.
        let ok = trial_budget_check(&[1, 2, 2], 4.0, 2.0);
        assert!(ok.holds);
        assert_eq!(ok.total_trials, 5);
        assert!((ok.bound - 6.0).abs() < 1e-12);
        let broken = trial_budget_check(&[5, 5, 5], 4.0, 2.0);
        assert!(!broken.holds);
    }
}
