//! POMDP model and belief-state arithmetic.

use nalgebra::DMatrix;

use crate::error::{check_index, Error, Result};

/// Observation probabilities at or below this are treated as impossible.
pub const ZERO_PROB: f64 = 1e-12;

const STOCHASTIC_TOL: f64 = 1e-9;

/// Optional labels carried over from a problem file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Names {
    pub states: Option<Vec<String>>,
    pub actions: Option<Vec<String>>,
    pub observations: Option<Vec<String>>,
}

/// A discrete POMDP with expected immediate rewards `R(s, a)`.
///
/// Immutable after construction. Transition and observation tables are dense.
#[derive(Debug, Clone)]
pub struct Pomdp {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    /// `P(s'|s,a)` per action, row `s`, column `s'`.
    transition: Vec<DMatrix<f64>>,
    /// `P(z|s',a)` at `(a * S + s') * Z + z`.
    observation: Vec<f64>,
    /// `R(s,a)` at `s * A + a`.
    reward: Vec<f64>,
    discount: f64,
    start: BeliefState,
    names: Names,
}

impl Pomdp {
    /// `transition[(a * S + s) * S + s']`, `observation[(a * S + s') * Z + z]`,
    /// `reward[s * A + a]`.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        num_observations: usize,
        transition: Vec<f64>,
        observation: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        let (ns, na, nz) = (num_states, num_actions, num_observations);
        if ns == 0 || na == 0 || nz == 0 {
            return Err(Error::InvalidModel(
                "states, actions and observations must be non-empty".into(),
            ));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::InvalidModel(format!(
                "discount {discount} outside (0, 1)"
            )));
        }
        if transition.len() != na * ns * ns {
            return Err(Error::InvalidModel("transition table has wrong size".into()));
        }
        if observation.len() != na * ns * nz {
            return Err(Error::InvalidModel("observation table has wrong size".into()));
        }
        if reward.len() != ns * na {
            return Err(Error::InvalidModel("reward table has wrong size".into()));
        }
        for a in 0..na {
            for s in 0..ns {
                let row = &transition[(a * ns + s) * ns..(a * ns + s + 1) * ns];
                check_distribution(row).map_err(|why| {
                    Error::InvalidModel(format!("P(.|s={s},a={a}) {why}"))
                })?;
                let row = &observation[(a * ns + s) * nz..(a * ns + s + 1) * nz];
                check_distribution(row).map_err(|why| {
                    Error::InvalidModel(format!("P(.|s'={s},a={a}) {why}"))
                })?;
            }
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidModel("non-finite reward".into()));
        }
        let transition = (0..na)
            .map(|a| {
                DMatrix::from_row_slice(ns, ns, &transition[a * ns * ns..(a + 1) * ns * ns])
            })
            .collect();
        Ok(Pomdp {
            num_states: ns,
            num_actions: na,
            num_observations: nz,
            transition,
            observation,
            reward,
            discount,
            start: BeliefState::uniform(ns),
            names: Names::default(),
        })
    }

    pub fn with_start(mut self, start: BeliefState) -> Result<Self> {
        if start.len() != self.num_states {
            return Err(Error::InvalidBelief("start belief has wrong length".into()));
        }
        self.start = start;
        Ok(self)
    }

    pub fn with_names(mut self, names: Names) -> Self {
        self.names = names;
        self
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn start(&self) -> &BeliefState {
        &self.start
    }

    pub fn names(&self) -> &Names {
        &self.names
    }

    #[inline]
    pub fn transition(&self, s: usize, a: usize, s_next: usize) -> f64 {
        self.transition[a][(s, s_next)]
    }

    /// `P(.|.,a)` with rows indexed by the current state.
    pub fn transition_matrix(&self, a: usize) -> &DMatrix<f64> {
        &self.transition[a]
    }

    #[inline]
    pub fn observation(&self, a: usize, s_next: usize, z: usize) -> f64 {
        self.observation[(a * self.num_states + s_next) * self.num_observations + z]
    }

    /// `P(.|s',a)` over observations.
    pub fn observation_row(&self, a: usize, s_next: usize) -> &[f64] {
        let nz = self.num_observations;
        let i = (a * self.num_states + s_next) * nz;
        &self.observation[i..i + nz]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.reward.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// `Σ_s b(s) P(s'|s,a)` for every `s'`.
    pub fn predict(&self, b: &[f64], a: usize) -> Vec<f64> {
        let t = &self.transition[a];
        let ns = self.num_states;
        let mut out = vec![0.0; ns];
        for (s, &bs) in b.iter().enumerate() {
            if bs == 0.0 {
                continue;
            }
            for (s2, o) in out.iter_mut().enumerate() {
                *o += bs * t[(s, s2)];
            }
        }
        out
    }

    /// Unnormalized successor weights `Σ_s b(s) P(s'|s,a) P(z|s',a)` given a
    /// prediction from [`Pomdp::predict`].
    pub fn weigh_observation(&self, predicted: &[f64], a: usize, z: usize) -> Vec<f64> {
        predicted
            .iter()
            .enumerate()
            .map(|(s2, &p)| p * self.observation(a, s2, z))
            .collect()
    }

    fn check_action(&self, a: usize) -> Result<()> {
        check_index("action", a, self.num_actions)
    }

    fn check_belief(&self, b: &BeliefState) -> Result<()> {
        if b.len() != self.num_states {
            return Err(Error::InvalidBelief(format!(
                "belief has {} entries, model has {} states",
                b.len(),
                self.num_states
            )));
        }
        Ok(())
    }

    /// `P(z|b,a)`.
    pub fn obs_prob(&self, b: &BeliefState, a: usize, z: usize) -> Result<f64> {
        self.check_belief(b)?;
        self.check_action(a)?;
        check_index("observation", z, self.num_observations)?;
        let pred = self.predict(b.probs(), a);
        let p: f64 = self.weigh_observation(&pred, a, z).iter().sum();
        Ok(p.clamp(0.0, 1.0))
    }

    /// `R(b,a) = Σ_s b(s) R(s,a)`.
    pub fn belief_reward(&self, b: &BeliefState, a: usize) -> Result<f64> {
        self.check_belief(b)?;
        self.check_action(a)?;
        Ok(b
            .probs()
            .iter()
            .enumerate()
            .map(|(s, &bs)| bs * self.reward(s, a))
            .sum())
    }

    /// Bayes update `b_z^a`. Fails with [`Error::ImpossibleObservation`] when
    /// `P(z|b,a) <= ZERO_PROB`.
    pub fn belief_update(&self, b: &BeliefState, a: usize, z: usize) -> Result<BeliefState> {
        self.check_belief(b)?;
        self.check_action(a)?;
        check_index("observation", z, self.num_observations)?;
        let pred = self.predict(b.probs(), a);
        let weights = self.weigh_observation(&pred, a, z);
        let total: f64 = weights.iter().sum();
        if total <= ZERO_PROB {
            return Err(Error::ImpossibleObservation {
                action: a,
                observation: z,
            });
        }
        Ok(BeliefState(weights.into_iter().map(|w| w / total).collect()))
    }
}

fn check_distribution(row: &[f64]) -> std::result::Result<(), String> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err("has a negative or non-finite entry".into());
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(format!("sums to {sum}"));
    }
    Ok(())
}

/// A probability distribution over states.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState(Vec<f64>);

impl BeliefState {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidBelief("empty".into()));
        }
        check_distribution(&probs).map_err(Error::InvalidBelief)?;
        Ok(BeliefState(probs))
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidBelief("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidBelief("weights sum to zero".into()));
        }
        Ok(BeliefState(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(num_states: usize) -> Self {
        BeliefState(vec![1.0 / num_states as f64; num_states])
    }

    pub fn point(num_states: usize, state: usize) -> Self {
        let mut p = vec![0.0; num_states];
        p[state] = 1.0;
        BeliefState(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(b, x)| b * x).sum()
    }

    pub fn max_abs_diff(&self, other: &BeliefState) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
