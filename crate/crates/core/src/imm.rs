//! Interacting multiple-model estimator over a bank of EKFs.
//!
//! One cycle runs, in order: filtering (predict + update per mode), mode
//! probability update from the residual likelihoods, probability-weighted
//! combination of the mode estimates, and interaction, which mixes the mode
//! estimates through the Markov chain. The mixed states seed the next cycle's
//! predictions.

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::ekf::{
    predict, symmetrize, update, EstimatorState, NoiseModel, StateModel, UpdateReport,
};
use crate::error::ImmError;

/// Lower bound applied to every mode probability after the Bayes update.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Row-stochastic Markov transition matrix; entry `(i, j)` is `P(i → j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix(DMatrix<f64>);

impl TransitionMatrix {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self, ImmError> {
        if matrix.nrows() == 0 {
            return Err(ImmError::EmptyBank);
        }
        if matrix.nrows() != matrix.ncols() {
            return Err(ImmError::InvalidTransition(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for (i, row) in matrix.row_iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(ImmError::InvalidTransition(format!(
                    "row {i} has invalid entry {v}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(ImmError::InvalidTransition(format!(
                    "row {i} sums to {sum}"
                )));
            }
        }
        Ok(Self(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ImmError> {
        let m = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(ImmError::InvalidTransition(format!(
                "row of length {} in a {m}-row matrix",
                bad.len()
            )));
        }
        Self::from_matrix(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
    }

    /// `stay` on the diagonal, the remainder spread evenly off the diagonal.
    pub fn symmetric(modes: usize, stay: f64) -> Result<Self, ImmError> {
        let off = if modes > 1 {
            (1.0 - stay) / (modes - 1) as f64
        } else {
            0.0
        };
        let stay = if modes > 1 { stay } else { 1.0 };
        Self::from_matrix(DMatrix::from_fn(modes, modes, |i, j| {
            if i == j {
                stay
            } else {
                off
            }
        }))
    }

    pub fn identity(modes: usize) -> Self {
        Self(DMatrix::identity(modes, modes))
    }

    pub fn modes(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// Checks that `mu` lies on the probability simplex.
pub fn validate_mode_probabilities(mu: &[f64]) -> Result<(), ImmError> {
    if mu.is_empty() {
        return Err(ImmError::EmptyBank);
    }
    if let Some(v) = mu.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(ImmError::InvalidModeProbabilities(format!(
            "invalid entry {v}"
        )));
    }
    let sum: f64 = mu.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(ImmError::InvalidModeProbabilities(format!(
            "entries sum to {sum}"
        )));
    }
    Ok(())
}

/// Gaussian residual likelihood `(2π·S)^(−1/2)·exp(−½ z²/S)`.
///
/// This normalization is specific to a scalar output; for `n` outputs the
/// constant becomes `((2π)ⁿ·det S)^(−1/2)`.
pub fn likelihood(residual: f64, innovation_cov: f64) -> Result<f64, ImmError> {
    if !(innovation_cov > 0.0 && innovation_cov.is_finite()) {
        return Err(ImmError::NonPositiveInnovation {
            value: innovation_cov,
        });
    }
    let norm = (2.0 * std::f64::consts::PI * innovation_cov).sqrt();
    Ok((-0.5 * residual * residual / innovation_cov).exp() / norm)
}

/// Result of a Bayes update of the mode probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUpdate {
    pub probabilities: Vec<f64>,
    /// All weighted likelihoods were zero; the prior was kept.
    pub underflow: bool,
}

fn floor_and_normalize(mut mu: Vec<f64>) -> Vec<f64> {
    for v in &mut mu {
        *v = v.max(PROBABILITY_FLOOR);
    }
    let total: f64 = mu.iter().sum();
    for v in &mut mu {
        *v /= total;
    }
    mu
}

/// `μ⁺ⱼ ∝ μ⁻ⱼ Λⱼ`, floored at [`PROBABILITY_FLOOR`] and renormalized.
pub fn update_mode_probs(prior: &[f64], likelihoods: &[f64]) -> Result<ModeUpdate, ImmError> {
    if prior.len() != likelihoods.len() {
        return Err(ImmError::DimensionMismatch {
            expected: prior.len(),
            actual: likelihoods.len(),
        });
    }
    let weighted: Vec<f64> = prior.iter().zip(likelihoods).map(|(m, l)| m * l).collect();
    let total: f64 = weighted.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Ok(ModeUpdate {
            probabilities: prior.to_vec(),
            underflow: true,
        });
    }
    Ok(ModeUpdate {
        probabilities: floor_and_normalize(weighted.into_iter().map(|w| w / total).collect()),
        underflow: false,
    })
}

/// Moment-matched Gaussian mixture: weighted mean plus weighted covariance
/// with the spread-of-means term.
fn moment_match<'a>(
    states: impl Iterator<Item = (&'a EstimatorState, f64)> + Clone,
) -> EstimatorState {
    let x = states
        .clone()
        .fold(Vector2::zeros(), |acc, (s, w)| acc + s.x * w);
    let p = states.fold(Matrix2::zeros(), |acc, (s, w)| {
        let d = x - s.x;
        acc + (s.p + d * d.transpose()) * w
    });
    EstimatorState::new(x, symmetrize(p))
}

/// Probability-weighted combination of the mode estimates.
pub fn combine(states: &[EstimatorState], mu: &[f64]) -> EstimatorState {
    moment_match(states.iter().zip(mu.iter().copied()))
}

/// `μ⁻ⱼ(k+1) = Σᵢ Πᵢⱼ μ⁺ᵢ(k)`.
pub fn predict_mode_probs(transition: &TransitionMatrix, posterior: &[f64]) -> Vec<f64> {
    let pi = transition.matrix();
    (0..pi.ncols())
        .map(|j| (0..pi.nrows()).map(|i| pi[(i, j)] * posterior[i]).sum())
        .collect()
}

/// Mixing weights `W(i, j) = Πᵢⱼ μ⁺ᵢ / μ⁻ⱼ`; each column is a distribution over `i`.
pub fn mixing_weights(
    transition: &TransitionMatrix,
    posterior: &[f64],
    prior_next: &[f64],
) -> Result<DMatrix<f64>, ImmError> {
    let pi = transition.matrix();
    let m = pi.nrows();
    if let Some(mode) = prior_next.iter().position(|&c| c <= 0.0) {
        return Err(ImmError::ZeroMixingDenominator { mode });
    }
    Ok(DMatrix::from_fn(m, m, |i, j| {
        pi[(i, j)] * posterior[i] / prior_next[j]
    }))
}

/// Mixed initial condition for every mode: column `j` of `weights` mixes into mode `j`.
pub fn mix(states: &[EstimatorState], weights: &DMatrix<f64>) -> Vec<EstimatorState> {
    (0..weights.ncols())
        .map(|j| moment_match(states.iter().zip(weights.column(j).iter().copied())))
        .collect()
}

/// One filter of the bank.
#[derive(Clone, Debug)]
pub struct FilterSlot<M> {
    pub model: M,
    pub noise: NoiseModel,
    /// Starting point of the next prediction (the mixed state after a cycle).
    pub state: EstimatorState,
}

impl<M> FilterSlot<M> {
    pub fn new(model: M, noise: NoiseModel, state: EstimatorState) -> Self {
        Self {
            model,
            noise,
            state,
        }
    }
}

/// Output of one IMM cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct ImmOutput {
    /// Combined estimate and covariance.
    pub state: EstimatorState,
    /// Posterior mode probabilities.
    pub mode_probabilities: Vec<f64>,
    /// Probability-weighted power coefficient, when the models provide one.
    pub cp: Option<f64>,
    /// Per-mode posterior estimates before interaction.
    pub mode_states: Vec<EstimatorState>,
    pub reports: Vec<UpdateReport>,
    pub likelihoods: Vec<f64>,
}

/// Bank of parallel filters with Markov mode switching.
#[derive(Clone, Debug)]
pub struct ModeBank<M> {
    slots: Vec<FilterSlot<M>>,
    prior: Vec<f64>,
    posterior: Vec<f64>,
    transition: TransitionMatrix,
    underflows: u64,
}

impl<M: StateModel> ModeBank<M> {
    /// `initial_probabilities` act as the prior of the first cycle; the slot
    /// states are its starting points.
    pub fn new(
        slots: Vec<FilterSlot<M>>,
        initial_probabilities: Vec<f64>,
        transition: TransitionMatrix,
    ) -> Result<Self, ImmError> {
        if slots.is_empty() {
            return Err(ImmError::EmptyBank);
        }
        for len in [initial_probabilities.len(), transition.modes()] {
            if len != slots.len() {
                return Err(ImmError::DimensionMismatch {
                    expected: slots.len(),
                    actual: len,
                });
            }
        }
        validate_mode_probabilities(&initial_probabilities)?;
        Ok(Self {
            slots,
            posterior: initial_probabilities.clone(),
            prior: initial_probabilities,
            transition,
            underflows: 0,
        })
    }

    pub fn modes(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[FilterSlot<M>] {
        &self.slots
    }

    /// Posterior mode probabilities of the last completed cycle.
    pub fn mode_probabilities(&self) -> &[f64] {
        &self.posterior
    }

    /// Predicted mode probabilities for the next cycle.
    pub fn prior_probabilities(&self) -> &[f64] {
        &self.prior
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    /// Number of cycles in which every weighted likelihood underflowed.
    pub fn underflow_count(&self) -> u64 {
        self.underflows
    }

    /// Runs one full cycle. On error the bank is left unchanged.
    pub fn step(&mut self, y: f64, u: &M::Input) -> Result<ImmOutput, ImmError> {
        let m = self.modes();
        let mut posteriors = Vec::with_capacity(m);
        let mut reports = Vec::with_capacity(m);
        for (mode, slot) in self.slots.iter().enumerate() {
            let run = || {
                let prior = predict(&slot.state, u, &slot.model, &slot.noise)?;
                update(&prior, y, u, &slot.model, &slot.noise)
            };
            let (post, report) = run().map_err(|source| ImmError::Filter { mode, source })?;
            posteriors.push(post);
            reports.push(report);
        }

        let likelihoods = reports
            .iter()
            .map(|r| likelihood(r.residual, r.innovation_cov))
            .collect::<Result<Vec<_>, _>>()?;
        let updated = update_mode_probs(&self.prior, &likelihoods)?;
        let mu = updated.probabilities;

        let combined = combine(&posteriors, &mu);
        let cp = self.cp_at(&combined.x, u, &mu);

        let prior_next = predict_mode_probs(&self.transition, &mu);
        let weights = mixing_weights(&self.transition, &mu, &prior_next)?;
        let mixed = mix(&posteriors, &weights);

        for (slot, state) in self.slots.iter_mut().zip(mixed) {
            slot.state = state;
        }
        self.prior = prior_next;
        self.posterior = mu.clone();
        if updated.underflow {
            self.underflows += 1;
        }
        Ok(ImmOutput {
            state: combined,
            mode_probabilities: mu,
            cp,
            mode_states: posteriors,
            reports,
            likelihoods,
        })
    }

    fn cp_at(&self, x: &Vector2<f64>, u: &M::Input, mu: &[f64]) -> Option<f64> {
        self.slots
            .iter()
            .zip(mu)
            .map(|(slot, w)| slot.model.power_coefficient(x, u).map(|cp| w * cp))
            .sum()
    }

    /// `Σⱼ μ⁺ⱼ · Cpⱼ(x, u)` using the posterior probabilities of the last cycle.
    pub fn estimate_cp(&self, x: &Vector2<f64>, u: &M::Input) -> Option<f64> {
        self.cp_at(x, u, &self.posterior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ekf::test_models::LinearModel;
    use crate::ekf::ExtendedKalmanFilter;
    use nalgebra::RowVector2;

    fn paper_pi() -> TransitionMatrix {
        TransitionMatrix::from_rows(&[
            vec![0.99, 0.005, 0.005],
            vec![0.005, 0.99, 0.005],
            vec![0.005, 0.005, 0.99],
        ])
        .unwrap()
    }

    fn scalar_state(x: f64, p: f64) -> EstimatorState {
        EstimatorState::new(Vector2::new(x, 0.0), Matrix2::new(p, 0.0, 0.0, 0.0))
    }

    #[test]
    fn likelihood_values() {
        assert!((likelihood(0.0, 1.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((likelihood(1.0, 1.0).unwrap() - 0.241_970_724_519_143_37).abs() < 1e-15);
        assert!((likelihood(0.0, 4.0).unwrap() - 0.199_471_140_200_716_35).abs() < 1e-15);
        assert!(matches!(
            likelihood(0.0, 0.0),
            Err(ImmError::NonPositiveInnovation { .. })
        ));
    }

    #[test]
    fn bayes_update_examples() {
        let third = 1.0 / 3.0;
        let out = update_mode_probs(&[third; 3], &[2.0, 1.0, 1.0]).unwrap();
        for (a, b) in out.probabilities.iter().zip([0.5, 0.25, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        let prior = [0.2, 0.5, 0.3];
        let out = update_mode_probs(&prior, &[0.7; 3]).unwrap();
        for (a, b) in out.probabilities.iter().zip(prior) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_prior_stays_dominant() {
        let eps = PROBABILITY_FLOOR;
        let floored = update_mode_probs(&[1.0, 0.0, 0.0], &[1.0; 3])
            .unwrap()
            .probabilities;
        assert!((floored[1] - eps).abs() < 1e-20);
        let out = update_mode_probs(&floored, &[2.0, 1.0, 1.0]).unwrap();
        assert!(out.probabilities[0] >= 1.0 - 3.0 * eps);
    }

    #[test]
    fn underflow_keeps_prior() {
        let prior = vec![0.2, 0.3, 0.5];
        let out = update_mode_probs(&prior, &[0.0; 3]).unwrap();
        assert!(out.underflow);
        assert_eq!(out.probabilities, prior);
    }

    #[test]
    fn combine_examples() {
        let a = EstimatorState::new(Vector2::new(1.0, 2.0), Matrix2::new(1.0, 0.1, 0.1, 2.0));
        let b = EstimatorState::new(Vector2::new(3.0, 1.0), Matrix2::new(2.0, 0.0, 0.0, 1.0));
        let out = combine(&[a, b], &[1.0, 0.0]);
        assert_eq!(out, a);

        let c = EstimatorState { x: a.x, ..b };
        let out = combine(&[a, c], &[0.25, 0.75]);
        assert!((out.p - (a.p * 0.25 + c.p * 0.75)).norm() < 1e-15);

        let out = combine(
            &[scalar_state(1.0, 0.0), scalar_state(3.0, 0.0)],
            &[0.5, 0.5],
        );
        assert_eq!(out.x[0], 2.0);
        assert_eq!(out.p[(0, 0)], 1.0);
    }

    #[test]
    fn markov_prediction() {
        let mu = [0.2, 0.3, 0.5];
        assert_eq!(predict_mode_probs(&TransitionMatrix::identity(3), &mu), mu);
        let out = predict_mode_probs(&paper_pi(), &[1.0, 0.0, 0.0]);
        assert_eq!(out, vec![0.99, 0.005, 0.005]);
        let sum: f64 = predict_mode_probs(&paper_pi(), &mu).iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixing_weight_examples() {
        let mu = [0.2, 0.3, 0.5];
        let id = TransitionMatrix::identity(3);
        let w = mixing_weights(&id, &mu, &predict_mode_probs(&id, &mu)).unwrap();
        assert_eq!(w, DMatrix::identity(3, 3));

        // uniform posterior, symmetric Π: columns are Π's columns renormalized
        let pi = TransitionMatrix::from_rows(&[
            vec![0.7, 0.2, 0.1],
            vec![0.2, 0.6, 0.2],
            vec![0.1, 0.2, 0.7],
        ])
        .unwrap();
        let uniform = [1.0 / 3.0; 3];
        let w = mixing_weights(&pi, &uniform, &predict_mode_probs(&pi, &uniform)).unwrap();
        for j in 0..3 {
            let col_sum: f64 = pi.matrix().column(j).sum();
            for i in 0..3 {
                assert!((w[(i, j)] - pi.matrix()[(i, j)] / col_sum).abs() < 1e-15);
            }
        }

        let mu = [0.8, 0.1, 0.1];
        let w = mixing_weights(&paper_pi(), &mu, &predict_mode_probs(&paper_pi(), &mu)).unwrap();
        let denom = 0.99 * 0.8 + 0.005 * 0.1 + 0.005 * 0.1;
        assert!((w[(0, 0)] - 0.99 * 0.8 / denom).abs() < 1e-15);
        assert!((w[(0, 0)] - 0.99874).abs() < 1e-5);
        assert!((w[(1, 0)] - 0.00063).abs() < 1e-5);
    }

    #[test]
    fn zero_denominator_is_reported() {
        let err = mixing_weights(&TransitionMatrix::identity(2), &[1.0, 0.0], &[1.0, 0.0]);
        assert_eq!(err, Err(ImmError::ZeroMixingDenominator { mode: 1 }));
    }

    #[test]
    fn mix_examples() {
        let states = [scalar_state(0.0, 1.0), scalar_state(2.0, 1.0)];
        assert_eq!(mix(&states, &DMatrix::identity(2, 2)), states.to_vec());

        let w = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.5, 1.0]);
        let out = mix(&states, &w);
        assert_eq!(out[0].x[0], 1.0);
        assert_eq!(out[0].p[(0, 0)], 2.0);
        assert_eq!(out[1], states[1]);

        let same = [states[0]; 2];
        let w = DMatrix::from_element(2, 2, 0.5);
        assert_eq!(mix(&same, &w), same.to_vec());
    }

    #[test]
    fn transition_validation() {
        assert!(TransitionMatrix::from_rows(&[vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(&[vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(&[vec![1.0, 0.0]]).is_err());
        let pi = paper_pi();
        assert_eq!(pi.to_rows()[0], vec![0.99, 0.005, 0.005]);
    }

    fn linear_model() -> LinearModel {
        LinearModel {
            a: Matrix2::new(0.95, 0.1, 0.0, 1.0),
            b: Vector2::new(0.05, 0.0),
            c: RowVector2::new(1.0, 0.0),
        }
    }

    fn start() -> EstimatorState {
        EstimatorState::new(Vector2::new(0.5, 1.0), Matrix2::new(0.2, 0.0, 0.0, 1.0))
    }

    #[test]
    fn single_mode_bank_is_a_plain_ekf() {
        let noise = NoiseModel::from_stds(0.01, 0.05, 0.1);
        let mut bank = ModeBank::new(
            vec![FilterSlot::new(linear_model(), noise, start())],
            vec![1.0],
            TransitionMatrix::identity(1),
        )
        .unwrap();
        let mut ekf = ExtendedKalmanFilter::new(linear_model(), noise, start());
        for k in 0..40 {
            let y = (k as f64 * 0.3).sin();
            let u = (k as f64 * 0.1).cos();
            let out = bank.step(y, &u).unwrap();
            ekf.step(y, &u).unwrap();
            assert_eq!(out.state, ekf.state);
        }
    }

    #[test]
    fn identical_modes_keep_uniform_probabilities() {
        let noise = NoiseModel::from_stds(0.01, 0.05, 0.1);
        let slots = (0..3)
            .map(|_| FilterSlot::new(linear_model(), noise, start()))
            .collect();
        let mut bank = ModeBank::new(slots, vec![1.0 / 3.0; 3], paper_pi()).unwrap();
        let mut ekf = ExtendedKalmanFilter::new(linear_model(), noise, start());
        for k in 0..60 {
            let y = 1.0 + (k as f64 * 0.7).sin();
            let out = bank.step(y, &0.2).unwrap();
            ekf.step(y, &0.2).unwrap();
            for mu in &out.mode_probabilities {
                assert!((mu - 1.0 / 3.0).abs() < 1e-12);
            }
            assert!((out.state.x - ekf.state.x).norm() <= 1e-10 * ekf.state.x.norm());
            assert!((out.state.p - ekf.state.p).norm() <= 1e-10 * ekf.state.p.norm());
        }
    }

    #[test]
    fn failed_step_leaves_bank_unchanged() {
        let ok = NoiseModel::from_stds(0.01, 0.05, 0.1);
        let broken = NoiseModel::new(Matrix2::zeros(), 0.0);
        let zero = EstimatorState::new(Vector2::zeros(), Matrix2::zeros());
        let slots = vec![
            FilterSlot::new(linear_model(), ok, start()),
            FilterSlot::new(linear_model(), broken, zero),
        ];
        let mut bank = ModeBank::new(
            slots,
            vec![0.5, 0.5],
            TransitionMatrix::symmetric(2, 0.9).unwrap(),
        )
        .unwrap();
        let before = bank.clone();
        let err = bank.step(1.0, &0.0).unwrap_err();
        assert!(matches!(err, ImmError::Filter { mode: 1, .. }));
        assert_eq!(bank.prior, before.prior);
        assert_eq!(bank.slots[0].state, before.slots[0].state);
    }

    #[test]
    fn bank_rejects_mismatched_dimensions() {
        let noise = NoiseModel::from_stds(0.01, 0.05, 0.1);
        let slots = vec![FilterSlot::new(linear_model(), noise, start()); 2];
        assert!(ModeBank::new(slots.clone(), vec![1.0], TransitionMatrix::identity(2)).is_err());
        assert!(
            ModeBank::new(slots.clone(), vec![0.5, 0.5], TransitionMatrix::identity(3)).is_err()
        );
        assert!(ModeBank::new(slots, vec![0.6, 0.6], TransitionMatrix::identity(2)).is_err());
    }
}
