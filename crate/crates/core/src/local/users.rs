//! Simulated users for the local model.
//!
//! Raw rankings stay inside [`LocalClient`] implementations. Aggregator code
//! only ever sees the perturbed reports handed out by [`UserPool`], and every
//! report is recorded in the pool's [`PrivacyLedger`].

use rand::Rng;

use super::rr::Perturbation;
use crate::ranking::{Ranking, RankingProfile};

/// A user holding one private ranking.
pub trait LocalClient {
    /// Private indicator `1[π(j) < π(i)]`. Only [`UserPool`] calls this, and
    /// only while producing a recorded report.
    fn indicator(&self, j: usize, i: usize) -> f64;
}

#[derive(Debug, Clone)]
pub struct SimulatedUser {
    ranking: Ranking,
}

impl SimulatedUser {
    pub fn new(ranking: Ranking) -> Self {
        SimulatedUser { ranking }
    }
}

impl LocalClient for SimulatedUser {
    fn indicator(&self, j: usize, i: usize) -> f64 {
        if self.ranking.prefers(j, i) {
            1.0
        } else {
            0.0
        }
    }
}

/// Per-user count of perturbed reports and the privacy they consumed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrivacyLedger {
    applications: Vec<u32>,
    epsilon: Vec<f64>,
}

impl PrivacyLedger {
    fn with_users(count: usize) -> Self {
        PrivacyLedger {
            applications: vec![0; count],
            epsilon: vec![0.0; count],
        }
    }

    fn record(&mut self, user: usize, epsilon: f64) {
        self.applications[user] += 1;
        self.epsilon[user] += epsilon;
    }

    pub fn applications(&self, user: usize) -> u32 {
        self.applications[user]
    }

    pub fn epsilon_spent(&self, user: usize) -> f64 {
        self.epsilon[user]
    }

    pub fn max_applications(&self) -> u32 {
        self.applications.iter().copied().max().unwrap_or(0)
    }

    pub fn max_epsilon(&self) -> f64 {
        self.epsilon.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_applications(&self) -> u64 {
        self.applications.iter().map(|&a| a as u64).sum()
    }
}

/// The population taking part in a local protocol, plus non-contributing
/// dummy users used for padding.
#[derive(Debug, Clone)]
pub struct UserPool<C> {
    m: usize,
    users: Vec<C>,
    dummies: usize,
    ledger: PrivacyLedger,
}

impl UserPool<SimulatedUser> {
    pub fn from_profile(profile: &RankingProfile) -> Self {
        let users = profile
            .rankings()
            .iter()
            .cloned()
            .map(SimulatedUser::new)
            .collect();
        UserPool::new(profile.m(), users)
    }
}

impl<C: LocalClient> UserPool<C> {
    pub fn new(m: usize, users: Vec<C>) -> Self {
        let ledger = PrivacyLedger::with_users(users.len());
        UserPool {
            m,
            users,
            dummies: 0,
            ledger,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Users holding real data.
    pub fn real_users(&self) -> usize {
        self.users.len()
    }

    /// Real plus dummy users.
    pub fn len(&self) -> usize {
        self.users.len() + self.dummies
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ledger(&self) -> &PrivacyLedger {
        &self.ledger
    }

    /// Add dummy users until the population size is a multiple of `k`.
    pub fn pad_to_multiple(&mut self, k: usize) {
        let extra = (k - self.len() % k) % k;
        self.dummies += extra;
        self.ledger.applications.extend(std::iter::repeat_n(0, extra));
        self.ledger.epsilon.extend(std::iter::repeat_n(0.0, extra));
    }

    /// One perturbed report of user `user` on the `(j, i)` indicator.
    /// Dummy users report on the value 0.
    pub fn report_pair<R: Rng + ?Sized>(
        &mut self,
        user: usize,
        j: usize,
        i: usize,
        perturbation: &Perturbation,
        rng: &mut R,
    ) -> f64 {
        let value = match self.users.get(user) {
            Some(client) => client.indicator(j, i),
            None => 0.0,
        };
        self.ledger.record(user, perturbation.epsilon());
        perturbation.apply(value, rng)
    }
}
