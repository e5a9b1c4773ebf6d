//! Stability diagnostics: eigenvalues, unit-circle classification, design
//! constraints, root-locus sweeps and discrete frequency response.

pub mod eigen;
mod frequency;
mod locus;
mod stability;

pub use eigen::{eigenvalues, spectral_radius, spectrum};
pub use frequency::{frequency_response, CrossoverStatus, FrequencyGrid, FrequencyResponse};
pub use locus::{
    root_locus, Crossing, CrossingDirection, Feedback, LocusSample, LoopSetup, ObserverGain,
    RootLocusTrace, Sweep, SweepParameter,
};
pub use stability::{classify, ConstraintCheck, Stability, StabilityReport, MARGINAL_BAND};

use crate::error::Result;
use crate::loops::{inertia_ratio, inner_constraint};
use crate::observer::{gain_upper_bound, ObserverConfig};
use crate::plant::DiscretePlant;

/// Name of the stand-alone observer check `0 < g_D < 2 / ||D_Dn||_1`.
pub const OBSERVER_GAIN_CHECK: &str = "observer_gain_bound";
/// Name of the inner-loop check `0 < alpha g < 2`.
pub const INNER_LOOP_CHECK: &str = "inner_loop_gain_product";

/// Both closed-form design constraints for an observer acting on `plant`.
pub fn constraint_checks(plant: &DiscretePlant, cfg: &ObserverConfig) -> Result<Vec<ConstraintCheck>> {
    let bound = gain_upper_bound(cfg.nominal())?;
    let equivalent_gain = cfg.normalized_gain() * bound / 2.0;
    let alpha = inertia_ratio(plant, cfg);
    let product = alpha * cfg.normalized_gain();
    Ok(vec![
        ConstraintCheck {
            name: OBSERVER_GAIN_CHECK.to_string(),
            satisfied: cfg.stability().is_stable(),
            value: cfg.gain().unwrap_or(equivalent_gain),
            bound,
        },
        ConstraintCheck {
            name: INNER_LOOP_CHECK.to_string(),
            satisfied: product > 0.0 && inner_constraint(alpha, cfg.normalized_gain())?.is_stable(),
            value: product,
            bound: 2.0,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::ContinuousPlant;

    fn checks(j_n: f64, g: f64) -> Vec<ConstraintCheck> {
        let plant = ContinuousPlant::rigid(0.1).unwrap().discretize(1e-3).unwrap();
        let nominal = ContinuousPlant::rigid(j_n).unwrap().discretize(1e-3).unwrap();
        constraint_checks(&plant, &ObserverConfig::new(nominal, g).unwrap()).unwrap()
    }

    #[test]
    fn default_gain_passes_both() {
        let c = checks(0.1, 50.0);
        assert!(c.iter().all(|c| c.satisfied));
        assert!((c[0].bound - 199.900_049_975_012_5).abs() < 1e-9);
        assert_eq!(c[0].value, 50.0);
    }

    #[test]
    fn excessive_gain_fails_the_observer_bound() {
        let c = checks(0.1, 250.0);
        assert!(!c[0].satisfied);
        assert!(!c[1].satisfied);
    }

    #[test]
    fn heavy_nominal_fails_only_the_inner_check() {
        // alpha = 2.5, normalized gain 1.0 -> product 2.5
        let nominal = ContinuousPlant::rigid(0.25).unwrap().discretize(1e-3).unwrap();
        let plant = ContinuousPlant::rigid(0.1).unwrap().discretize(1e-3).unwrap();
        let cfg = ObserverConfig::from_normalized_gain(nominal, 1.0).unwrap();
        let c = constraint_checks(&plant, &cfg).unwrap();
        assert!(c[0].satisfied);
        assert!(!c[1].satisfied);
        assert!((c[1].value - 2.5).abs() < 1e-12);
    }
}
