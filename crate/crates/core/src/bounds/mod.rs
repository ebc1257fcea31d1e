//! Loss-tolerant local-hidden-state bounds `C_n(ξ)`.
//!
//! A cheating Bob sends Alice a pure state with Bloch vector `b` and keeps a
//! deterministic answer for each setting: `+1`, `−1`, or decline. Alice's
//! expected correlation on an answered setting is `a_k (u_k · b)`. Bob may
//! mix such strategies, and must answer a fraction `ξ` of rounds on average.
//! The bound is the largest conditional correlation
//!
//! ```text
//!     max  Σ_λ p_λ P_λ / Σ_λ p_λ m_λ   s.t.  Σ_λ p_λ m_λ ≥ n ξ
//! ```
//!
//! over mixtures `p` of strategies with payoff `P_λ` and `m_λ` answered
//! settings. With `y = p / Σ p m` this becomes the linear program
//!
//! ```text
//!     max Σ y P   s.t.   Σ y m = 1,   Σ y ≤ 1/(n ξ),   y ≥ 0,
//! ```
//!
//! whose basic solutions mix at most two strategies. For each answer pattern
//! only the best Bloch vector matters, `b ∝ Σ_k a_k u_k`, with payoff
//! `|Σ_k a_k u_k|`.

mod oracle;
pub mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::BlochVector;
use crate::steering::MeasurementSet;
use simplex::{Constraint, LinearProgram, Relation};

pub use oracle::bound_oracle;

/// Slack allowed when checking that a bound curve is non-increasing.
const MONOTONE_TOL: f64 = 1e-9;
/// Weights below this are dropped from reported witnesses.
const WITNESS_TOL: f64 = 1e-12;

/// Bob's deterministic response to one setting. Ordered `Plus < Minus < Null`
/// for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Answer {
    Plus,
    Minus,
    Null,
}

impl Answer {
    fn weight(self) -> f64 {
        match self {
            Answer::Plus => 1.0,
            Answer::Minus => -1.0,
            Answer::Null => 0.0,
        }
    }

    fn symbol(self) -> char {
        match self {
            Answer::Plus => '+',
            Answer::Minus => '-',
            Answer::Null => '0',
        }
    }
}

/// How the announce-fraction floor applies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnounceConstraint {
    /// Bob answers at least a fraction `ξ` of all rounds.
    #[default]
    Average,
    /// Bob answers at least a fraction `ξ` of the rounds of every setting.
    PerSetting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheatStrategy {
    pub bloch: BlochVector,
    pub answers: Vec<Answer>,
}

impl CheatStrategy {
    pub fn new(bloch: BlochVector, answers: Vec<Answer>) -> Result<Self> {
        if answers.iter().all(|a| *a == Answer::Null) {
            return Err(Error::EmptyStrategy);
        }
        Ok(Self { bloch, answers })
    }

    /// Strategy with the payoff-maximizing local state for `answers`.
    pub fn optimal(answers: Vec<Answer>, set: &MeasurementSet) -> Result<Self> {
        let w = weighted_sum(&answers, set);
        let bloch = BlochVector::unit(w.x, w.y, w.z).unwrap_or(BlochVector::Z);
        Self::new(bloch, answers)
    }

    /// Compact form such as `+-0`.
    pub fn pattern(&self) -> String {
        self.answers.iter().map(|a| a.symbol()).collect()
    }

    pub fn answered(&self) -> usize {
        self.answers.iter().filter(|a| **a != Answer::Null).count()
    }
}

fn weighted_sum(answers: &[Answer], set: &MeasurementSet) -> BlochVector {
    answers
        .iter()
        .zip(set.directions())
        .fold(BlochVector::new(0.0, 0.0, 0.0), |acc, (a, u)| acc.add(&u.scaled(a.weight())))
}

/// `(Σ_{answered} a_k (u_k · b), number answered)`.
pub fn strategy_payoff(strategy: &CheatStrategy, set: &MeasurementSet) -> (f64, usize) {
    let payoff = strategy.answers.iter().zip(set.directions()).map(|(a, u)| a.weight() * u.dot(&strategy.bloch)).sum();
    (payoff, strategy.answered())
}

/// All answer patterns except all-null, in lexicographic order.
fn enumerate_patterns(n: usize) -> Vec<Vec<Answer>> {
    const ALL: [Answer; 3] = [Answer::Plus, Answer::Minus, Answer::Null];
    let total = 3usize.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut p = vec![Answer::Null; n];
            for slot in p.iter_mut().rev() {
                *slot = ALL[code % 3];
                code /= 3;
            }
            p
        })
        .filter(|p| p.iter().any(|a| *a != Answer::Null))
        .collect()
}

/// `C_n(1)`: best correlation when every setting must be answered.
pub fn deterministic_bound(set: &MeasurementSet) -> f64 {
    let n = set.n();
    (0..1usize << n)
        .map(|mask| {
            let answers: Vec<Answer> =
                (0..n).map(|k| if mask >> k & 1 == 1 { Answer::Minus } else { Answer::Plus }).collect();
            weighted_sum(&answers, set).norm() / n as f64
        })
        .fold(0.0, f64::max)
}

/// Probability mixture of cheating strategies achieving a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub components: Vec<(f64, CheatStrategy)>,
}

impl Witness {
    /// `0.25*+00|0.75*++0` style summary.
    pub fn summary(&self) -> String {
        self.components
            .iter()
            .map(|(w, s)| format!("{w:.6}*{}", s.pattern()))
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Expected fraction of rounds Bob answers.
    pub fn announce_fraction(&self, n: usize) -> f64 {
        self.components.iter().map(|(w, s)| w * s.answered() as f64).sum::<f64>() / n as f64
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::InvalidParameter(format!("announce fraction {xi} outside (0, 1]")));
    }
    Ok(())
}

/// `C_n(ξ)` under the average announce constraint.
pub fn loss_tolerant_bound(set: &MeasurementSet, xi: f64) -> Result<(f64, Witness)> {
    loss_tolerant_bound_with(set, xi, AnnounceConstraint::Average)
}

pub fn loss_tolerant_bound_with(set: &MeasurementSet, xi: f64, mode: AnnounceConstraint) -> Result<(f64, Witness)> {
    check_xi(xi)?;
    let n = set.n();
    let strategies: Vec<CheatStrategy> =
        enumerate_patterns(n).into_iter().map(|p| CheatStrategy::optimal(p, set)).collect::<Result<_>>()?;
    let payoffs: Vec<f64> = strategies.iter().map(|s| strategy_payoff(s, set).0).collect();
    let answered: Vec<f64> = strategies.iter().map(|s| s.answered() as f64).collect();

    let mut constraints = vec![Constraint { coeffs: answered, relation: Relation::Eq, rhs: 1.0 }];
    match mode {
        AnnounceConstraint::Average => constraints.push(Constraint {
            coeffs: vec![1.0; strategies.len()],
            relation: Relation::Le,
            rhs: 1.0 / (n as f64 * xi),
        }),
        AnnounceConstraint::PerSetting => {
            for k in 0..n {
                let coeffs = strategies
                    .iter()
                    .map(|s| if s.answers[k] == Answer::Null { -xi } else { 1.0 - xi })
                    .collect();
                constraints.push(Constraint { coeffs, relation: Relation::Ge, rhs: 0.0 });
            }
        }
    }
    let sol = simplex::maximize(&LinearProgram { objective: payoffs, constraints })?;

    let total: f64 = sol.x.iter().sum();
    let components = sol
        .x
        .iter()
        .zip(strategies)
        .filter(|(y, _)| **y > WITNESS_TOL)
        .map(|(y, s)| (y / total, s))
        .collect();
    Ok((sol.value.clamp(0.0, 1.0), Witness { components }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub n: usize,
    pub xi_grid: Vec<f64>,
    pub c_values: Vec<f64>,
    pub witnesses: Vec<Witness>,
}

/// Evaluates `C_n` on a strictly increasing grid in `(0, 1]`.
pub fn bound_curve(set: &MeasurementSet, xi_grid: &[f64]) -> Result<BoundCurve> {
    bound_curve_with(set, xi_grid, AnnounceConstraint::Average)
}

pub fn bound_curve_with(set: &MeasurementSet, xi_grid: &[f64], mode: AnnounceConstraint) -> Result<BoundCurve> {
    for xi in xi_grid {
        check_xi(*xi)?;
    }
    if xi_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("xi grid must be strictly increasing".into()));
    }
    let points: Vec<(f64, Witness)> =
        xi_grid.par_iter().map(|&xi| loss_tolerant_bound_with(set, xi, mode)).collect::<Result<_>>()?;
    let (c_values, witnesses): (Vec<f64>, Vec<Witness>) = points.into_iter().unzip();
    for (i, w) in c_values.windows(2).enumerate() {
        if w[1] > w[0] + MONOTONE_TOL {
            return Err(Error::NonMonotoneBound { xi: xi_grid[i + 1] });
        }
    }
    Ok(BoundCurve { n: set.n(), xi_grid: xi_grid.to_vec(), c_values, witnesses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steering::platonic_set;
    use approx::assert_abs_diff_eq;

    fn answers(s: &str) -> Vec<Answer> {
        s.chars()
            .map(|ch| match ch {
                '+' => Answer::Plus,
                '-' => Answer::Minus,
                _ => Answer::Null,
            })
            .collect()
    }

    /// Upper concave envelope of `(m, best payoff with m answers)`, evaluated
    /// at `m = nξ`. Closed-form reference for the average-constraint bound.
    fn envelope_reference(points: &[(f64, f64)], xi: f64, n: usize) -> f64 {
        let target = (n as f64 * xi).max(1.0);
        let mut best = f64::NEG_INFINITY;
        for &(m1, p1) in points {
            for &(m2, p2) in points {
                if m1 <= target && target <= m2 {
                    let p = if m2 > m1 { p1 + (p2 - p1) * (target - m1) / (m2 - m1) } else { p1 };
                    best = best.max(p / target);
                }
                if m1 >= target {
                    best = best.max(p1 / m1);
                }
            }
        }
        best
    }

    #[test]
    fn payoff_examples() {
        let set = platonic_set(3).unwrap();
        let s = CheatStrategy::new(BlochVector::Z, answers("00+")).unwrap();
        assert_eq!(strategy_payoff(&s, &set), (1.0, 1));
        let b = BlochVector::unit(1.0, 1.0, 1.0).unwrap();
        let s = CheatStrategy::new(b, answers("+++")).unwrap();
        let (p, m) = strategy_payoff(&s, &set);
        assert_abs_diff_eq!(p, 3.0f64.sqrt(), epsilon = 1e-12);
        assert_eq!(m, 3);
        assert_eq!(CheatStrategy::new(BlochVector::Z, answers("000")), Err(Error::EmptyStrategy));
    }

    #[test]
    fn deterministic_bounds() {
        assert_abs_diff_eq!(deterministic_bound(&platonic_set(2).unwrap()), 1.0 / 2.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(deterministic_bound(&platonic_set(3).unwrap()), 1.0 / 3.0f64.sqrt(), epsilon = 1e-12);
        // Tetrahedron: two flipped signs give |Σ a u|² = 16/3.
        assert_abs_diff_eq!(deterministic_bound(&platonic_set(4).unwrap()), (16.0f64 / 3.0).sqrt() / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_bound_matches_sphere_grid_search() {
        let set = platonic_set(4).unwrap();
        let mut best: f64 = 0.0;
        let steps = 800;
        for i in 0..=steps {
            let t = std::f64::consts::PI * i as f64 / steps as f64;
            for j in 0..2 * steps {
                let p = std::f64::consts::PI * j as f64 / steps as f64;
                let b = BlochVector::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
                let v: f64 = set.directions().iter().map(|u| u.dot(&b).abs()).sum::<f64>() / 4.0;
                best = best.max(v);
            }
        }
        assert!((deterministic_bound(&set) - best).abs() < 1e-4);
        assert!(best <= deterministic_bound(&set) + 1e-12);
    }

    #[test]
    fn three_axis_bound_examples() {
        let set = platonic_set(3).unwrap();
        let (c1, _) = loss_tolerant_bound(&set, 1.0).unwrap();
        assert_abs_diff_eq!(c1, 1.0 / 3.0f64.sqrt(), epsilon = 1e-12);
        let (c_third, w) = loss_tolerant_bound(&set, 1.0 / 3.0).unwrap();
        assert_eq!(c_third, 1.0);
        assert!(w.components.iter().all(|(_, s)| s.answered() == 1));
        assert!(loss_tolerant_bound(&set, 0.0).is_err());
        assert!(loss_tolerant_bound(&set, 1.5).is_err());
    }

    #[test]
    fn lp_matches_concave_envelope() {
        // Best payoffs by answered count, from the analytic optimum.
        let root2 = 2.0f64.sqrt();
        let root3 = 3.0f64.sqrt();
        let three = [(1.0, 1.0), (2.0, root2), (3.0, root3)];
        let set = platonic_set(3).unwrap();
        for xi in [0.34, 0.4, 0.45, 0.5, 0.6, 2.0 / 3.0, 0.7, 0.85, 1.0] {
            let (c, w) = loss_tolerant_bound(&set, xi).unwrap();
            assert_abs_diff_eq!(c, envelope_reference(&three, xi, 3), epsilon = 1e-12);
            assert!(w.components.len() <= 2);
            assert!(w.announce_fraction(3) >= xi - 1e-12);
        }
    }

    #[test]
    fn bound_at_one_is_deterministic_bound() {
        for n in [2, 3, 4, 6] {
            let set = platonic_set(n).unwrap();
            assert_abs_diff_eq!(loss_tolerant_bound(&set, 1.0).unwrap().0, deterministic_bound(&set), epsilon = 1e-9);
        }
    }

    #[test]
    fn per_setting_mode_agrees_on_symmetric_sets() {
        for n in [3, 4] {
            let set = platonic_set(n).unwrap();
            for xi in [0.3, 0.45, 0.6, 0.8, 1.0] {
                let avg = loss_tolerant_bound(&set, xi).unwrap().0;
                let strict = loss_tolerant_bound_with(&set, xi, AnnounceConstraint::PerSetting).unwrap().0;
                assert!(strict <= avg + 1e-9);
                assert_abs_diff_eq!(strict, avg, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn oracle_agrees_with_lp() {
        for n in [3, 4] {
            let set = platonic_set(n).unwrap();
            for xi in [0.4, 0.5, 0.7, 1.0] {
                let lp = loss_tolerant_bound(&set, xi).unwrap().0;
                let brute = bound_oracle(&set, xi, 1e-2);
                assert!(lp >= brute - 1e-12, "n={n} xi={xi}: lp {lp} below oracle {brute}");
                assert!((lp - brute).abs() < 1e-4);
            }
        }
        let set = platonic_set(3).unwrap();
        assert_abs_diff_eq!(bound_oracle(&set, 1.0 / 3.0, 1e-2), 1.0, epsilon = 1e-4);
        assert!(bound_oracle(&set, 0.5, 1e-2) >= bound_oracle(&set, 0.9, 1e-2));
    }

    #[test]
    fn curve_endpoints_and_monotonicity() {
        let set = platonic_set(3).unwrap();
        let grid: Vec<f64> = (0..=66).map(|i| 1.0 / 3.0 + i as f64 * (2.0 / 3.0) / 66.0).collect();
        let curve = bound_curve(&set, &grid).unwrap();
        assert_eq!(curve.c_values[0], 1.0);
        assert_abs_diff_eq!(*curve.c_values.last().unwrap(), 1.0 / 3.0f64.sqrt(), epsilon = 1e-9);
        assert!(curve.c_values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(bound_curve(&set, &[0.0, 0.5]).is_err());
        assert!(bound_curve(&set, &[0.6, 0.5]).is_err());
    }

    #[test]
    fn four_settings_only_help_at_low_announce_fractions() {
        // More settings lower the bound near the n = 3 threshold, but the
        // tetrahedron lets the cheater answer pairs at |u1 − u2| = √(8/3),
        // which beats the axes in the middle of the range.
        let s3 = platonic_set(3).unwrap();
        let s4 = platonic_set(4).unwrap();
        for xi in [0.26, 0.3, 1.0 / 3.0, 0.36, 0.4, 0.44] {
            let c3 = loss_tolerant_bound(&s3, xi).unwrap().0;
            let c4 = loss_tolerant_bound(&s4, xi).unwrap().0;
            assert!(c4 <= c3 + 1e-12, "xi={xi}: c4 {c4} > c3 {c3}");
        }
        let c3 = loss_tolerant_bound(&s3, 0.5).unwrap().0;
        let c4 = loss_tolerant_bound(&s4, 0.5).unwrap().0;
        assert_abs_diff_eq!(c3, (1.0 + 2.0f64.sqrt()) / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c4, (8.0f64 / 3.0).sqrt() / 2.0, epsilon = 1e-12);
        assert!(c4 > c3);
    }

    #[test]
    fn witness_tie_breaking_is_reproducible() {
        let set = platonic_set(3).unwrap();
        let a = loss_tolerant_bound(&set, 0.45).unwrap().1;
        let b = loss_tolerant_bound(&set, 0.45).unwrap().1;
        assert_eq!(a, b);
        assert_eq!(a.summary(), b.summary());
    }
}
