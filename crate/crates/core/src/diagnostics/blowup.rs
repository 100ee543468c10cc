use std::fmt;

use crate::model::PksState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlowUpReason {
    /// `‖n‖_∞` exceeded `factor · ‖n_in‖_∞`.
    SupThreshold,
    NonFinite,
    TimeStepCollapse,
}

impl fmt::Display for BlowUpReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlowUpReason::SupThreshold => "sup_threshold",
            BlowUpReason::NonFinite => "non_finite",
            BlowUpReason::TimeStepCollapse => "time_step_collapse",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowUpSignal {
    pub t: f64,
    pub sup_n: f64,
    pub reason: BlowUpReason,
}

impl BlowUpSignal {
    pub fn from_sup(t: f64, sup_n: f64, init_sup: f64, factor: f64) -> Option<Self> {
        if !sup_n.is_finite() {
            Some(Self {
                t,
                sup_n,
                reason: BlowUpReason::NonFinite,
            })
        } else if sup_n > factor * init_sup {
            Some(Self {
                t,
                sup_n,
                reason: BlowUpReason::SupThreshold,
            })
        } else {
            None
        }
    }
}

/// Signals blow-up when `‖n‖_∞ > factor · init_sup` or `n` is non-finite.
pub fn blowup_check(state: &PksState, init_sup: f64, factor: f64) -> Option<BlowUpSignal> {
    let v = state.n.values();
    let sup = if v.iter().all(|x| x.is_finite()) {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    } else {
        f64::NAN
    };
    BlowUpSignal::from_sup(state.t, sup, init_sup, factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::grid::TorusGrid;

    #[test]
    fn threshold_rule() {
        let g = TorusGrid::new(2, 8).unwrap();
        let flat = PksState::new(Field::constant(&g, 2.0), Field::zeros(&g));
        assert_eq!(blowup_check(&flat, 2.0, 1e3), None);
        let mut v = vec![1.0; g.len()];
        v[5] = 1001.0;
        let spiky = PksState::new(Field::from_physical(&g, v.clone()).unwrap(), Field::zeros(&g));
        let sig = blowup_check(&spiky, 1.0, 1e3).unwrap();
        assert_eq!(sig.reason, BlowUpReason::SupThreshold);
        v[5] = f64::INFINITY;
        let bad = PksState::new(Field::from_physical(&g, v).unwrap(), Field::zeros(&g));
        assert_eq!(blowup_check(&bad, 1.0, 1e3).unwrap().reason, BlowUpReason::NonFinite);
    }
}
