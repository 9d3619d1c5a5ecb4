//! Quadratic Lyapunov function, drift, drift-plus-penalty and the
//! virtual-queue recursion.
//!
//! Queues are stored dimensionless: a queue value of `1.0` means one full
//! per-slot budget of accumulated surplus. The objective this module helps
//! minimize every slot is
//!
//! ```text
//!   ΔL(t) + V·p(t),   L(t) = ½ Σ_i Q_i(t)²
//! ```
//!
//! and the learning reward is its negation.

use crate::error::{Error, Result};

/// A bank of `I` virtual queues, each tracking one long-term average
/// constraint against its own per-slot budget.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueueBank {
    queues: Vec<f64>,
    budgets: Vec<f64>,
}

impl VirtualQueueBank {
    /// Empty queues, one per budget.
    pub fn new(budgets: Vec<f64>) -> Result<Self> {
        if budgets.is_empty() {
            return Err(Error::Domain("queue bank needs at least one budget".into()));
        }
        if let Some(b) = budgets.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Domain(format!("budget must be positive and finite, got {b}")));
        }
        Ok(Self {
            queues: vec![0.0; budgets.len()],
            budgets,
        })
    }

    /// Bank with explicit queue values, used for tests and restoring state.
    pub fn with_queues(queues: Vec<f64>, budgets: Vec<f64>) -> Result<Self> {
        let mut bank = Self::new(budgets)?;
        if queues.len() != bank.budgets.len() {
            return Err(Error::Domain(format!(
                "{} queues for {} budgets",
                queues.len(),
                bank.budgets.len()
            )));
        }
        if let Some(q) = queues.iter().find(|q| !(q.is_finite() && **q >= 0.0)) {
            return Err(Error::Domain(format!("queue must be non-negative, got {q}")));
        }
        bank.queues = queues;
        Ok(bank)
    }

    pub fn len(&self) -> usize {
        self.queues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queues.is_empty()
    }

    pub fn queues(&self) -> &[f64] {
        &self.queues
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    /// Advances every queue by one slot given the per-queue consumption.
    pub fn update(&self, consumed: &[f64]) -> Result<Self> {
        if consumed.len() != self.len() {
            return Err(Error::Domain(format!(
                "{} consumption values for {} queues",
                consumed.len(),
                self.len()
            )));
        }
        let queues = self
            .queues
            .iter()
            .zip(&self.budgets)
            .zip(consumed)
            .map(|((&q, &b), &c)| virtual_queue_update(q, c, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            queues,
            budgets: self.budgets.clone(),
        })
    }
}

/// Trade-off weight between queue stability and the penalty objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DppWeights {
    v: f64,
}

impl DppWeights {
    pub fn new(v: f64) -> Result<Self> {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Domain(format!("V must be non-negative and finite, got {v}")));
        }
        Ok(Self { v })
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

/// Normalized virtual-queue recursion `max(q + (consumed − budget)/budget, 0)`.
pub fn virtual_queue_update(q: f64, consumed: f64, budget: f64) -> Result<f64> {
    if !(q.is_finite() && consumed.is_finite() && budget.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite queue update input (q={q}, consumed={consumed}, budget={budget})"
        )));
    }
    if q < 0.0 {
        return Err(Error::Domain(format!("queue must be non-negative, got {q}")));
    }
    if consumed < 0.0 {
        return Err(Error::Domain(format!("consumption must be non-negative, got {consumed}")));
    }
    if budget <= 0.0 {
        return Err(Error::Domain(format!("budget must be positive, got {budget}")));
    }
    Ok((q + (consumed - budget) / budget).max(0.0))
}

/// `½ Σ q_i²`.
pub fn lyapunov_value(bank: &VirtualQueueBank) -> f64 {
    0.5 * bank.queues.iter().map(|q| q * q).sum::<f64>()
}

pub fn lyapunov_drift(l_next: f64, l_now: f64) -> f64 {
    l_next - l_now
}

pub fn drift_plus_penalty(drift: f64, penalty: f64, weights: DppWeights) -> f64 {
    drift + weights.v * penalty
}

pub fn reward_from_dpp(dpp: f64) -> f64 {
    -dpp
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bank(queues: &[f64]) -> VirtualQueueBank {
        VirtualQueueBank::with_queues(queues.to_vec(), vec![140.0; queues.len()]).unwrap()
    }

    #[test]
    fn queue_update_examples() {
        assert_eq!(virtual_queue_update(0.0, 140.0, 140.0).unwrap(), 0.0);
        assert!((virtual_queue_update(0.5, 168.0, 140.0).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(virtual_queue_update(0.1, 112.0, 140.0).unwrap(), 0.0);
    }

    #[test]
    fn queue_update_rejects_bad_input() {
        assert!(matches!(virtual_queue_update(f64::NAN, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(virtual_queue_update(0.0, f64::INFINITY, 1.0), Err(Error::Domain(_))));
        assert!(virtual_queue_update(0.0, 1.0, 0.0).is_err());
        assert!(virtual_queue_update(-0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn lyapunov_value_examples() {
        assert_eq!(lyapunov_value(&bank(&[0.0])), 0.0);
        assert_eq!(lyapunov_value(&bank(&[2.0])), 2.0);
        assert_eq!(lyapunov_value(&bank(&[3.0, 4.0])), 12.5);
    }

    #[test]
    fn drift_and_dpp_examples() {
        assert_eq!(lyapunov_drift(2.0, 2.0), 0.0);
        assert_eq!(lyapunov_drift(12.5, 2.0), 10.5);
        assert_eq!(lyapunov_drift(0.0, 2.0), -2.0);

        let w = |v| DppWeights::new(v).unwrap();
        assert_eq!(drift_plus_penalty(0.0, 0.0, w(1.0)), 0.0);
        assert_eq!(drift_plus_penalty(2.5, -4.0, w(1.0)), -1.5);
        assert_eq!(drift_plus_penalty(2.5, -4.0, w(0.0)), 2.5);

        assert_eq!(reward_from_dpp(0.0), 0.0);
        assert_eq!(reward_from_dpp(-1.5), 1.5);
        assert_eq!(reward_from_dpp(2.5), -2.5);
    }

    #[test]
    fn bank_validation() {
        assert!(VirtualQueueBank::new(vec![]).is_err());
        assert!(VirtualQueueBank::new(vec![0.0]).is_err());
        assert!(VirtualQueueBank::with_queues(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(VirtualQueueBank::with_queues(vec![-1.0], vec![1.0]).is_err());
        assert!(DppWeights::new(-0.5).is_err());
        let b = VirtualQueueBank::new(vec![140.0, 10.0]).unwrap();
        let b = b.update(&[168.0, 5.0]).unwrap();
        assert!((b.queues()[0] - 0.2).abs() < 1e-15);
        assert_eq!(b.queues()[1], 0.0);
    }

    proptest! {
        #[test]
        fn queue_never_negative(q in 0.0..50.0f64, c in 0.0..1e4f64, b in 1e-3..1e4f64) {
            prop_assert!(virtual_queue_update(q, c, b).unwrap() >= 0.0);
        }

        #[test]
        fn value_monotone_in_each_queue(
            qs in proptest::collection::vec(0.0..100.0f64, 1..6),
            idx in 0usize..6,
            bump in 1e-6..10.0f64,
        ) {
            let i = idx % qs.len();
            let mut raised = qs.clone();
            raised[i] += bump;
            prop_assert!(lyapunov_value(&bank(&raised)) > lyapunov_value(&bank(&qs)));
        }

        #[test]
        fn dpp_reductions(d in -1e3..1e3f64, p in -1e3..1e3f64, v in 0.0..10.0f64) {
            prop_assert_eq!(drift_plus_penalty(d, p, DppWeights::new(0.0).unwrap()), d);
            prop_assert_eq!(drift_plus_penalty(d, 0.0, DppWeights::new(v).unwrap()), d);
            prop_assert_eq!(reward_from_dpp(reward_from_dpp(d)), d);
        }
    }
}
