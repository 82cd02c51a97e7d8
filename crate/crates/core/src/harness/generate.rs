//! Synthetic ranking profiles.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{Ranking, RankingProfile};

/// `n` i.i.d. Mallows rankings around `center` with dispersion `phi`.
///
/// Repeated insertion: the k-th item of `center` is inserted `r` slots before
/// the end of the partial list with probability proportional to `phi^r`,
/// which creates exactly `r` new inversions against `center`.
pub fn mallows_sample<R: Rng + ?Sized>(
    center: &Ranking,
    phi: f64,
    n: usize,
    rng: &mut R,
) -> Result<RankingProfile> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(Error::InvalidParameter(format!("phi must lie in (0,1], got {phi}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("profile needs n >= 1".into()));
    }
    let base = center.order();
    let m = base.len();
    // cumulative weights per insertion step, computed once
    let tables: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let mut acc = 0.0;
            (0..=k)
                .map(|r| {
                    acc += phi.powi(r as i32);
                    acc
                })
                .collect()
        })
        .collect();
    let mut rankings = Vec::with_capacity(n);
    let mut order = Vec::with_capacity(m);
    for _ in 0..n {
        order.clear();
        for (k, &item) in base.iter().enumerate() {
            let cum = &tables[k];
            let u = rng.random::<f64>() * cum[k];
            let r = cum.partition_point(|&c| c <= u).min(k);
            order.insert(k - r, item);
        }
        rankings.push(Ranking::from_order(&order)?);
    }
    RankingProfile::new(rankings)
}

/// `n` independent uniformly random permutations of `m` items.
pub fn uniform_profile<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<RankingProfile> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("need m, n >= 1, got m={m}, n={n}")));
    }
    let rankings = (0..n)
        .map(|_| {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(rng);
            Ranking::from_order(&order)
        })
        .collect::<Result<Vec<_>>>()?;
    RankingProfile::new(rankings)
}

/// A fixed Mallows core of `core` voters padded with cancelling pairs
/// `(π, reverse π)` up to `n` voters.
///
/// The pairs contribute exactly 1/2 to every weight, so every margin
/// `w_ij − 1/2` equals the core's margin times `core / n`. If `n − core` is
/// odd one extra uniform voter is added.
pub fn diluted_profile<R: Rng + ?Sized>(
    center: &Ranking,
    phi: f64,
    core: usize,
    n: usize,
    rng: &mut R,
) -> Result<RankingProfile> {
    if core == 0 || core > n {
        return Err(Error::InvalidParameter(format!("need 1 <= core <= n, got core={core}, n={n}")));
    }
    let m = center.len();
    let mut rankings = mallows_sample(center, phi, core, rng)?.rankings().to_vec();
    let rest = n - core;
    let filler = uniform_profile(m, rest / 2 + rest % 2 + 1, rng)?;
    let mut fill = filler.rankings().iter();
    for _ in 0..rest / 2 {
        let r = fill.next().expect("enough filler drawn");
        rankings.push(r.clone());
        rankings.push(r.reversed());
    }
    if rest % 2 == 1 {
        rankings.push(fill.next().expect("enough filler drawn").clone());
    }
    RankingProfile::new(rankings)
}

/// Which synthetic family an experiment draws its profiles from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    #[default]
    Uniform,
    Mallows { phi: f64 },
    Diluted { phi: f64, core: usize },
}

impl ProfileSpec {
    /// Draw a profile of `n` voters over `m` items centred on the identity.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, n: usize, rng: &mut R) -> Result<RankingProfile> {
        match *self {
            ProfileSpec::Uniform => uniform_profile(m, n, rng),
            ProfileSpec::Mallows { phi } => mallows_sample(&Ranking::identity(m), phi, n, rng),
            ProfileSpec::Diluted { phi, core } => diluted_profile(&Ranking::identity(m), phi, core, n, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::build_weights;
    use crate::seed::rng_from_seed;

    #[test]
    fn tiny_phi_returns_center() {
        let c = Ranking::from_order(&[3, 0, 2, 1]).unwrap();
        let p = mallows_sample(&c, 1e-9, 200, &mut rng_from_seed(1)).unwrap();
        assert!(p.rankings().iter().all(|r| *r == c));
    }

    #[test]
    fn single_item_profiles() {
        let p = uniform_profile(1, 5, &mut rng_from_seed(0)).unwrap();
        assert_eq!(p.n(), 5);
        assert!(p.rankings().iter().all(|r| *r == Ranking::identity(1)));
    }

    #[test]
    fn same_seed_same_profile() {
        let a = uniform_profile(6, 50, &mut rng_from_seed(9)).unwrap();
        let b = uniform_profile(6, 50, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_phi() {
        let c = Ranking::identity(3);
        assert!(mallows_sample(&c, 0.0, 1, &mut rng_from_seed(0)).is_err());
        assert!(mallows_sample(&c, 1.5, 1, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn diluted_margins_shrink_exactly() {
        let c = Ranking::identity(5);
        let core = mallows_sample(&c, 0.6, 40, &mut rng_from_seed(4)).unwrap();
        let full = diluted_profile(&c, 0.6, 40, 400, &mut rng_from_seed(4)).unwrap();
        assert_eq!(full.n(), 400);
        assert_eq!(&full.rankings()[..40], core.rankings());
        let (wc, wf) = (build_weights(&core), build_weights(&full));
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    let expected = (wc.get(i, j) - 0.5) * 0.1;
                    assert!((wf.get(i, j) - 0.5 - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn diluted_odd_remainder() {
        let p = diluted_profile(&Ranking::identity(4), 0.5, 3, 10, &mut rng_from_seed(2)).unwrap();
        assert_eq!(p.n(), 10);
    }
}
