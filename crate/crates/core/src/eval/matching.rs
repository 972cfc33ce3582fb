use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::hungarian;
use crate::error::{Error, Result};
use crate::raster::Minutia;
use crate::scalar::direction_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TypeMode {
    #[default]
    Exact,
    Agnostic,
}

/// How admissible pairs are turned into a one-to-one matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Assignment {
    /// Shortest admissible pair first; ties go to the lower predicted index,
    /// then the lower ground-truth index.
    #[default]
    Greedy,
    /// Maximum number of pairs, then minimum total distance.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchCriteria {
    /// Largest admissible distance in pixels.
    pub tau_d: f64,
    /// Largest admissible direction difference in radians.
    pub tau_theta: f64,
    pub type_mode: TypeMode,
}

impl Default for MatchCriteria {
    fn default() -> Self {
        Self {
            tau_d: 14.0,
            tau_theta: PI / 9.0,
            type_mode: TypeMode::Exact,
        }
    }
}

impl MatchCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_d.is_finite() && self.tau_d > 0.0) {
            return Err(Error::param(format!("tau_d must be positive, got {}", self.tau_d)));
        }
        if !(self.tau_theta > 0.0 && self.tau_theta <= PI) {
            return Err(Error::param(format!("tau_theta must lie in (0, pi], got {}", self.tau_theta)));
        }
        Ok(())
    }
}

pub fn admissible(pred: &Minutia, gt: &Minutia, crit: &MatchCriteria) -> bool {
    pred.distance(gt) <= crit.tau_d
        && direction_distance(pred.direction, gt.direction) <= crit.tau_theta
        && (crit.type_mode == TypeMode::Agnostic || pred.kind == gt.kind)
}

/// A one-to-one correspondence between predicted and ground-truth minutiae.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    /// `(pred index, gt index)`, sorted by predicted index.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
}

impl Matching {
    fn from_pairs(mut pairs: Vec<(usize, usize)>, n_pred: usize, n_gt: usize) -> Self {
        pairs.sort_unstable();
        let mut used_p = vec![false; n_pred];
        let mut used_g = vec![false; n_gt];
        for &(p, g) in &pairs {
            used_p[p] = true;
            used_g[g] = true;
        }
        Self {
            pairs,
            unmatched_pred: (0..n_pred).filter(|&i| !used_p[i]).collect(),
            unmatched_gt: (0..n_gt).filter(|&i| !used_g[i]).collect(),
        }
    }

    pub fn tp(&self) -> usize {
        self.pairs.len()
    }

    pub fn fp(&self) -> usize {
        self.unmatched_pred.len()
    }

    pub fn fn_(&self) -> usize {
        self.unmatched_gt.len()
    }
}

pub fn match_minutiae(pred: &[Minutia], gt: &[Minutia], crit: &MatchCriteria) -> Matching {
    match_minutiae_with(pred, gt, crit, Assignment::Greedy)
}

pub fn match_minutiae_with(pred: &[Minutia], gt: &[Minutia], crit: &MatchCriteria, how: Assignment) -> Matching {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            if admissible(p, g, crit) {
                candidates.push((p.distance(g), i, j));
            }
        }
    }
    let pairs = match how {
        Assignment::Greedy => greedy(candidates, pred.len(), gt.len()),
        Assignment::Optimal => optimal(&candidates, pred.len(), gt.len(), crit.tau_d),
    };
    Matching::from_pairs(pairs, pred.len(), gt.len())
}

fn greedy(mut candidates: Vec<(f64, usize, usize)>, n_pred: usize, n_gt: usize) -> Vec<(usize, usize)> {
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; n_pred];
    let mut used_g = vec![false; n_gt];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

fn optimal(candidates: &[(f64, usize, usize)], n_pred: usize, n_gt: usize, tau_d: f64) -> Vec<(usize, usize)> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let n = n_pred.max(n_gt);
    // Any admissible pair is cheaper than `step`, and leaving one more pair
    // unmatched always costs more than all admissible distances together.
    let step = tau_d + 1.0;
    let blocked = step * (n as f64 + 1.0);
    let mut cost = vec![blocked; n * n];
    for &(d, i, j) in candidates {
        cost[i * n + j] = d;
    }
    hungarian::solve(n, &cost)
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| i < n_pred && j < n_gt && cost[i * n + j] < blocked)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::MinutiaKind::{Bifurcation, Ending};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(x: f64, y: f64, d: f64, kind: crate::raster::MinutiaKind) -> Minutia {
        Minutia::new(x, y, d, kind)
    }

    /// Largest matching size over admissible pairs, by exhaustive DP over gt subsets.
    fn brute_max(pred: &[Minutia], gt: &[Minutia], crit: &MatchCriteria) -> usize {
        fn go(i: usize, used: u32, pred: &[Minutia], gt: &[Minutia], crit: &MatchCriteria, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
            if i == pred.len() {
                return 0;
            }
            if let Some(v) = memo[i][used as usize] {
                return v;
            }
            let mut best = go(i + 1, used, pred, gt, crit, memo);
            for j in 0..gt.len() {
                if used & (1 << j) == 0 && admissible(&pred[i], &gt[j], crit) {
                    best = best.max(1 + go(i + 1, used | (1 << j), pred, gt, crit, memo));
                }
            }
            memo[i][used as usize] = Some(best);
            best
        }
        let mut memo = vec![vec![None; 1 << gt.len()]; pred.len()];
        go(0, 0, pred, gt, crit, &mut memo)
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<Minutia> {
        (0..n)
            .map(|_| {
                let kind = if rng.gen_bool(0.5) { Ending } else { Bifurcation };
                m(rng.gen_range(0.0..extent), rng.gen_range(0.0..extent), rng.gen_range(0.0..2.0 * PI), kind)
            })
            .collect()
    }

    fn check_valid(mt: &Matching, pred: &[Minutia], gt: &[Minutia], crit: &MatchCriteria) {
        let mut ps: Vec<usize> = mt.pairs.iter().map(|p| p.0).collect();
        let mut gs: Vec<usize> = mt.pairs.iter().map(|p| p.1).collect();
        ps.sort();
        gs.sort();
        ps.dedup();
        gs.dedup();
        assert_eq!(ps.len(), mt.pairs.len());
        assert_eq!(gs.len(), mt.pairs.len());
        for &(i, j) in &mt.pairs {
            assert!(admissible(&pred[i], &gt[j], crit));
        }
        assert_eq!(mt.tp() + mt.fp(), pred.len());
        assert_eq!(mt.tp() + mt.fn_(), gt.len());
    }

    #[test]
    fn identity_matches_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = random_set(&mut rng, 30, 300.0);
        let mt = match_minutiae(&set, &set, &MatchCriteria::default());
        assert_eq!(mt.tp(), 30);
        assert_eq!(mt.fp(), 0);
        assert_eq!(mt.fn_(), 0);
    }

    #[test]
    fn ten_pixels_apart() {
        let pred = [m(10.0, 10.0, 0.0, Ending)];
        let gt = [m(20.0, 10.0, 0.0, Ending)];
        assert_eq!(match_minutiae(&pred, &gt, &MatchCriteria::default()).tp(), 1);
    }

    #[test]
    fn kind_rule() {
        let pred = [m(10.0, 10.0, 0.0, Ending)];
        let gt = [m(20.0, 10.0, 0.0, Bifurcation)];
        let exact = match_minutiae(&pred, &gt, &MatchCriteria::default());
        assert_eq!((exact.tp(), exact.fp(), exact.fn_()), (0, 1, 1));
        let crit = MatchCriteria {
            type_mode: TypeMode::Agnostic,
            ..Default::default()
        };
        assert_eq!(match_minutiae(&pred, &gt, &crit).tp(), 1);
    }

    #[test]
    fn thresholds_are_inclusive() {
        let crit = MatchCriteria::default();
        let pred = [m(0.0, 0.0, 0.0, Ending)];
        assert_eq!(match_minutiae(&pred, &[m(14.0, 0.0, 0.0, Ending)], &crit).tp(), 1);
        assert_eq!(match_minutiae(&pred, &[m(14.001, 0.0, 0.0, Ending)], &crit).tp(), 0);
        assert_eq!(match_minutiae(&pred, &[m(0.0, 0.0, 2.0 * PI - 0.3, Ending)], &crit).tp(), 1);
        assert_eq!(match_minutiae(&pred, &[m(0.0, 0.0, 0.36, Ending)], &crit).tp(), 0);
    }

    #[test]
    fn ties_prefer_lower_indices() {
        let pred = [m(0.0, 0.0, 0.0, Ending), m(10.0, 0.0, 0.0, Ending)];
        let gt = [m(5.0, 0.0, 0.0, Ending)];
        let mt = match_minutiae(&pred, &gt, &MatchCriteria::default());
        assert_eq!(mt.pairs, vec![(0, 0)]);
        assert_eq!(mt.unmatched_pred, vec![1]);
    }

    #[test]
    fn greedy_can_lose_to_relaxed_type_rule() {
        // A-X is only admissible without the kind rule and is the shortest
        // pair, so relaxing the rule lets it block both A-Y and B-X.
        let pred = [m(0.0, 0.0, 0.0, Ending), m(13.0, 0.0, 0.0, Bifurcation)];
        let gt = [m(1.0, 0.0, 0.0, Bifurcation), m(-2.0, 0.0, 0.0, Ending)];
        let exact = MatchCriteria::default();
        let agnostic = MatchCriteria {
            type_mode: TypeMode::Agnostic,
            ..exact
        };
        assert_eq!(match_minutiae(&pred, &gt, &exact).tp(), 2);
        assert_eq!(match_minutiae(&pred, &gt, &agnostic).tp(), 1);
        assert_eq!(match_minutiae_with(&pred, &gt, &agnostic, Assignment::Optimal).tp(), 2);
    }

    #[test]
    fn optimal_is_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let np = rng.gen_range(0..9);
            let ng = rng.gen_range(0..9);
            let pred = random_set(&mut rng, np, 40.0);
            let gt = random_set(&mut rng, ng, 40.0);
            for mode in [TypeMode::Exact, TypeMode::Agnostic] {
                let crit = MatchCriteria {
                    tau_theta: PI / 2.0,
                    type_mode: mode,
                    ..Default::default()
                };
                let mt = match_minutiae_with(&pred, &gt, &crit, Assignment::Optimal);
                check_valid(&mt, &pred, &gt, &crit);
                assert_eq!(mt.tp(), brute_max(&pred, &gt, &crit));
            }
            let exact = MatchCriteria::default();
            let agnostic = MatchCriteria {
                type_mode: TypeMode::Agnostic,
                ..exact
            };
            let a = match_minutiae_with(&pred, &gt, &agnostic, Assignment::Optimal).tp();
            let e = match_minutiae_with(&pred, &gt, &exact, Assignment::Optimal).tp();
            assert!(a >= e);
        }
    }

    #[test]
    fn greedy_is_valid_and_tight_on_dense_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let pred = random_set(&mut rng, 8, 50.0);
            let gt = random_set(&mut rng, 8, 50.0);
            let crit = MatchCriteria::default();
            let mt = match_minutiae(&pred, &gt, &crit);
            check_valid(&mt, &pred, &gt, &crit);
            // a maximal matching is at least half a maximum one
            assert!(2 * mt.tp() >= brute_max(&pred, &gt, &crit));
        }
    }

    #[test]
    fn criteria_validation() {
        assert!(MatchCriteria::default().validate().is_ok());
        for (d, t) in [(0.0, 0.3), (-1.0, 0.3), (14.0, 0.0), (14.0, 3.5), (f64::NAN, 0.3)] {
            let c = MatchCriteria {
                tau_d: d,
                tau_theta: t,
                type_mode: TypeMode::Exact,
            };
            assert!(c.validate().is_err());
        }
    }

    proptest! {
        #[test]
        fn greedy_monotone_in_tau_d(seed in any::<u64>(), t1 in 1.0f64..30.0, t2 in 1.0f64..30.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pred = random_set(&mut rng, 10, 60.0);
            let gt = random_set(&mut rng, 10, 60.0);
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let c = |t| MatchCriteria { tau_d: t, ..Default::default() };
            prop_assert!(match_minutiae(&pred, &gt, &c(lo)).tp() <= match_minutiae(&pred, &gt, &c(hi)).tp());
        }
    }
}
