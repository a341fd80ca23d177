use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::stream;

/// How the true power-coefficient deviation evolves over a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// Bounded random walk.
    Walk,
    /// Piecewise-constant values from `{−Δ, 0, +Δ}`.
    Regime,
}

impl std::str::FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "walk" => Ok(Self::Walk),
            "regime" => Ok(Self::Regime),
            other => Err(format!(
                "unknown schedule '{other}', expected walk or regime"
            )),
        }
    }
}

/// Additive deviation `δₖ` of the true `Cp` from the nominal surface.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueCpSchedule {
    pub offsets: Vec<f64>,
    pub bound: f64,
    pub kind: ScheduleKind,
}

impl TrueCpSchedule {
    /// Zero deviation everywhere.
    pub fn nominal(len: usize) -> Self {
        Self {
            offsets: vec![0.0; len],
            bound: 0.0,
            kind: ScheduleKind::Regime,
        }
    }

    /// Explicit regimes as `(offset, steps)` pairs, concatenated.
    pub fn from_regimes(regimes: &[(f64, usize)]) -> Self {
        let offsets: Vec<f64> = regimes
            .iter()
            .flat_map(|&(value, steps)| std::iter::repeat_n(value, steps))
            .collect();
        let bound = regimes.iter().map(|r| r.0.abs()).fold(0.0, f64::max);
        Self {
            offsets,
            bound,
            kind: ScheduleKind::Regime,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Number of constant segments.
    pub fn regime_count(&self) -> usize {
        if self.offsets.is_empty() {
            return 0;
        }
        1 + self.offsets.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

/// Seeded deviation schedule of `len` samples bounded by `bound`.
///
/// Walk: `δₖ₊₁ = clamp(δₖ + εₖ, ±bound)` with `εₖ ~ N(0, (bound/200)²)`.
/// Regime: a value drawn uniformly from `{−bound, 0, +bound}` every
/// `dwell_steps` samples.
pub fn generate_cp_schedule(
    kind: ScheduleKind,
    bound: f64,
    len: usize,
    seed: u64,
    dwell_steps: usize,
) -> TrueCpSchedule {
    let bound = bound.abs();
    let mut rng = stream(seed, 100);
    let offsets = match kind {
        ScheduleKind::Walk => {
            let step_std = bound / 200.0;
            let mut delta: f64 = 0.0;
            (0..len)
                .map(|_| {
                    let current = delta;
                    let eps: f64 = rng.sample(StandardNormal);
                    delta = (delta + step_std * eps).clamp(-bound, bound);
                    current
                })
                .collect()
        }
        ScheduleKind::Regime => {
            let dwell = dwell_steps.max(1);
            let levels = [-bound, 0.0, bound];
            let mut offsets = Vec::with_capacity(len);
            while offsets.len() < len {
                let value = levels[rng.random_range(0..levels.len())];
                let n = dwell.min(len - offsets.len());
                offsets.extend(std::iter::repeat_n(value, n));
            }
            offsets
        }
    };
    TrueCpSchedule {
        offsets,
        bound,
        kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bound_is_nominal() {
        for kind in [ScheduleKind::Walk, ScheduleKind::Regime] {
            let s = generate_cp_schedule(kind, 0.0, 5000, 1, 2000);
            assert!(s.offsets.iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn regime_dwell_limits_segments() {
        // 300 s at 0.05 s with 100 s dwell
        for seed in 0..20 {
            let s = generate_cp_schedule(ScheduleKind::Regime, 0.04, 6000, seed, 2000);
            assert_eq!(s.len(), 6000);
            assert!(s.regime_count() <= 3);
            assert!(s.offsets.iter().all(|d| [-0.04, 0.0, 0.04].contains(d)));
        }
    }

    #[test]
    fn walk_respects_bound() {
        let s = generate_cp_schedule(ScheduleKind::Walk, 0.04, 1_000_000, 9, 0);
        assert!(s.offsets.iter().all(|d| d.abs() <= 0.04));
        // the walk actually moves and reaches the bound over a long run
        assert!(s.offsets.iter().any(|d| d.abs() == 0.04));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_cp_schedule(ScheduleKind::Walk, 0.04, 1000, 4, 0);
        let b = generate_cp_schedule(ScheduleKind::Walk, 0.04, 1000, 4, 0);
        assert_eq!(a, b);
    }

    #[test]
    fn explicit_regimes() {
        let s = TrueCpSchedule::from_regimes(&[(0.0, 3), (0.04, 2), (-0.04, 1)]);
        assert_eq!(s.offsets, vec![0.0, 0.0, 0.0, 0.04, 0.04, -0.04]);
        assert_eq!(s.bound, 0.04);
        assert_eq!(s.regime_count(), 3);
    }
}
