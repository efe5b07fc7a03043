use serde::{Deserialize, Serialize};

/// Scheduler latency/energy charges.
///
/// The slow path costs `c0 + c1*n + c2*n^2` ns for a ready queue of length
/// `n`, and `slow_power` nJ per ns of that runtime. The classifier runs off
/// the critical path, so only its energy is charged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverheadModel {
    pub fast_latency_ns: f64,
    pub fast_energy_nj: f64,
    pub slow_c0_ns: f64,
    pub slow_c1_ns: f64,
    pub slow_c2_ns: f64,
    pub slow_power_nj_per_ns: f64,
    pub classifier_latency_ns: f64,
    pub classifier_energy_nj: f64,
}

impl Default for OverheadModel {
    fn default() -> Self {
        OverheadModel {
            fast_latency_ns: 6.0,
            fast_energy_nj: 2.3,
            slow_c0_ns: 40.0,
            slow_c1_ns: 10.0,
            slow_c2_ns: 2.0,
            slow_power_nj_per_ns: 0.4,
            classifier_latency_ns: 13.0,
            classifier_energy_nj: 1.9,
        }
    }
}

impl OverheadModel {
    pub fn zero() -> Self {
        OverheadModel {
            fast_latency_ns: 0.0,
            fast_energy_nj: 0.0,
            slow_c0_ns: 0.0,
            slow_c1_ns: 0.0,
            slow_c2_ns: 0.0,
            slow_power_nj_per_ns: 0.0,
            classifier_latency_ns: 0.0,
            classifier_energy_nj: 0.0,
        }
    }

    pub fn slow_latency(&self, n: usize) -> f64 {
        let n = n as f64;
        self.slow_c0_ns + self.slow_c1_ns * n + self.slow_c2_ns * n * n
    }

    pub fn slow_energy(&self, n: usize) -> f64 {
        self.slow_power_nj_per_ns * self.slow_latency(n)
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("fast_latency_ns", self.fast_latency_ns),
            ("fast_energy_nj", self.fast_energy_nj),
            ("slow_c0_ns", self.slow_c0_ns),
            ("slow_c1_ns", self.slow_c1_ns),
            ("slow_c2_ns", self.slow_c2_ns),
            ("slow_power_nj_per_ns", self.slow_power_nj_per_ns),
            ("classifier_latency_ns", self.classifier_latency_ns),
            ("classifier_energy_nj", self.classifier_energy_nj),
        ];
        match fields.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            Some((name, v)) => Err(format!("overhead constant {name} = {v} must be >= 0")),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_slow_latency_at_four_ready_tasks() {
        assert_eq!(OverheadModel::default().slow_latency(4), 112.0);
    }

    #[test]
    fn slow_latency_is_non_decreasing() {
        let m = OverheadModel::default();
        assert!((0..200).all(|n| m.slow_latency(n) <= m.slow_latency(n + 1)));
    }

    #[test]
    fn negative_constants_are_rejected() {
        let m = OverheadModel {
            slow_c1_ns: -1.0,
            ..OverheadModel::default()
        };
        assert!(m.validate().is_err());
        assert!(OverheadModel::default().validate().is_ok());
    }
}
