//! Pairwise dual coordinate ascent for the soft-margin SVM.
//!
//! Maximises `W(α) = Σα_i − ½ΣΣ α_i α_j y_i y_j K_ij` subject to
//! `0 ≤ α_i ≤ C` and `Σ α_i y_i = 0`. A pass makes up to `n` pair updates.
//! Each update takes the most violating `α_i` and pairs it with the partner
//! of largest second-order gain, or when that pair cannot move, with the
//! remaining candidates in cyclic order from a seeded random start. The
//! two-variable subproblem is solved in closed form.
//!
//! Violations are judged without reference to `b`. With `v_t = y_t − g_t`,
//! the set that may still move up, `I_up = {α_t < C, y_t = +1} ∪ {α_t > 0, y_t = −1}`,
//! and the set that may move down, `I_low`, optimality is
//! `max_{I_up} v ≤ min_{I_low} v`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernel::GramMatrix;
use super::TrainConfig;
use crate::{Error, Result};

// Steps and bound distances below this are treated as zero.
const EPS: f64 = 1e-12;

// The solver converges against a slightly tighter tolerance than the one it
// is asked for, so margins recomputed from the stored model still pass.
const TOL_MARGIN: f64 = 0.999;

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub alphas: Vec<f64>,
    pub bias: f64,
}

struct Solver<'a> {
    gram: &'a GramMatrix,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    /// `g_i = Σ_j α_j y_j K_ij`, the decision value without bias.
    g: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn value(&self, t: usize) -> f64 {
        self.y[t] - self.g[t]
    }

    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    /// Index of the largest `v` in `I_up` (`up`) or the smallest in `I_low`;
    /// ties go to the lower index.
    fn extreme_index(&self, up: bool) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for t in 0..self.y.len() {
            let member = if up { self.in_up(t) } else { self.in_low(t) };
            if !member {
                continue;
            }
            let v = if up { self.value(t) } else { -self.value(t) };
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, t));
            }
        }
        best.map(|(_, t)| t)
    }

    /// The most violating vector on either side together with its best
    /// partner, whichever promises the larger gain.
    fn select(&self) -> Option<(usize, Option<usize>)> {
        let i_up = self.extreme_index(true)?;
        let i_low = self.extreme_index(false)?;
        if self.value(i_up) - self.value(i_low) <= 2.0 * self.tol {
            return None;
        }
        let from_up = self.best_partner(i_up, true);
        let from_low = self.best_partner(i_low, false);
        Some(match (from_up, from_low) {
            (Some((g_up, j)), Some((g_low, _))) if g_up >= g_low => (i_up, Some(j)),
            (_, Some((_, j))) => (i_low, Some(j)),
            (Some((_, j)), None) => (i_up, Some(j)),
            (None, None) => (i_up, None),
        })
    }

    /// `(max_{I_up} v, min_{I_low} v)`.
    fn extremes(&self) -> (f64, f64) {
        let (mut up, mut low) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..self.y.len() {
            let v = self.value(t);
            if self.in_up(t) {
                up = up.max(v);
            }
            if self.in_low(t) {
                low = low.min(v);
            }
        }
        (up, low)
    }

    /// Partner on the opposite side with the largest `gap² / curvature`.
    fn best_partner(&self, i: usize, moves_up: bool) -> Option<(f64, usize)> {
        let vi = self.value(i);
        let kii = self.gram.get(i, i);
        let row = self.gram.row(i);
        let mut best: Option<(f64, usize)> = None;
        for t in 0..self.y.len() {
            if t == i {
                continue;
            }
            let gap = if moves_up {
                if !self.in_low(t) {
                    continue;
                }
                vi - self.value(t)
            } else {
                if !self.in_up(t) {
                    continue;
                }
                self.value(t) - vi
            };
            if gap <= 0.0 {
                continue;
            }
            let curvature = (kii + self.gram.get(t, t) - 2.0 * row[t]).max(EPS);
            let gain = gap * gap / curvature;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, t));
            }
        }
        best
    }

    fn refresh_gradient(&mut self) {
        let n = self.y.len();
        for i in 0..n {
            let row = self.gram.row(i);
            self.g[i] = (0..n)
                .filter(|&j| self.alpha[j] != 0.0)
                .map(|j| self.alpha[j] * self.y[j] * row[j])
                .sum();
        }
    }

    /// Mean of `v` over free vectors (midpoint of the extremes when none are
    /// free), clamped so that every point meets its margin condition.
    fn bias(&self) -> f64 {
        let (up, low) = self.extremes();
        let free: Vec<f64> = (0..self.y.len())
            .filter(|&i| self.is_free(i))
            .map(|i| self.value(i))
            .collect();
        let centre = if !free.is_empty() {
            free.iter().sum::<f64>() / free.len() as f64
        } else {
            match (up.is_finite(), low.is_finite()) {
                (true, true) => 0.5 * (up + low),
                (true, false) => up,
                (false, true) => low,
                (false, false) => 0.0,
            }
        };
        let (lo, hi) = (up - self.tol, low + self.tol);
        if lo <= hi {
            centre.clamp(lo, hi)
        } else {
            0.5 * (up + low)
        }
    }

    fn snap(&self, a: f64) -> f64 {
        if a < EPS * self.c {
            0.0
        } else if a > self.c * (1.0 - EPS) {
            self.c
        } else {
            a
        }
    }

    /// Jointly optimises `α_i` and `α_j`; returns whether anything moved.
    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        // E_i − E_j; the bias cancels.
        let e_diff = self.value(j) - self.value(i);
        let c = self.c;
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (c + aj - ai).min(c))
        } else {
            ((ai + aj - c).max(0.0), (ai + aj).min(c))
        };
        if hi - lo < EPS * c {
            return false;
        }
        let (kii, kjj, kij) = (self.gram.get(i, i), self.gram.get(j, j), self.gram.get(i, j));
        let eta = 2.0 * kij - kii - kjj;
        let aj_new = if eta < 0.0 {
            (aj - yj * e_diff / eta).clamp(lo, hi)
        } else {
            // Flat or convex direction: the objective is maximised at an end.
            let s = yi * yj;
            let objective_at = |a: f64| {
                let da_j = a - aj;
                let da_i = -s * da_j;
                // Change in W along the feasible line, relative to the current point.
                da_i + da_j
                    - (yi * da_i * self.g[i] + yj * da_j * self.g[j])
                    - 0.5 * (da_i * da_i * kii + da_j * da_j * kjj + 2.0 * s * da_i * da_j * kij)
            };
            let (w_lo, w_hi) = (objective_at(lo), objective_at(hi));
            if w_lo > w_hi + EPS {
                lo
            } else if w_hi > w_lo + EPS {
                hi
            } else {
                aj
            }
        };
        let aj_new = self.snap(aj_new);
        if (aj_new - aj).abs() < EPS * (1.0 + aj_new + aj) {
            return false;
        }
        let ai_new = self.snap(ai + yi * yj * (aj - aj_new));
        let (dai, daj) = (ai_new - ai, aj_new - aj);

        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        let (row_i, row_j) = (self.gram.row(i), self.gram.row(j));
        for (k, g) in self.g.iter_mut().enumerate() {
            *g += dai * yi * row_i[k] + daj * yj * row_j[k];
        }
        true
    }
}

pub(crate) fn solve(gram: &GramMatrix, y: &[f64], config: &TrainConfig) -> Result<Solution> {
    let n = y.len();
    let mut s = Solver {
        gram,
        y,
        c: config.c_penalty,
        tol: config.tol * TOL_MARGIN,
        alpha: vec![0.0; n],
        g: vec![0.0; n],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut quiet = 0;
    let mut passes = 0;
    loop {
        let (up, low) = s.extremes();
        if up - low <= 2.0 * s.tol || quiet >= config.max_passes {
            break;
        }
        if passes >= config.max_iter {
            return Err(Error::NotConverged { passes });
        }
        passes += 1;
        let mut changed = 0;
        for _ in 0..n {
            let Some((i, partner)) = s.select() else { break };
            if partner.is_some_and(|j| s.take_step(i, j)) {
                changed += 1;
                continue;
            }
            let start = rng.random_range(0..n - 1);
            for off in 0..n - 1 {
                let mut j = (start + off) % (n - 1);
                if j >= i {
                    j += 1;
                }
                if s.take_step(i, j) {
                    changed += 1;
                    break;
                }
            }
        }
        // Drop accumulated round-off before judging convergence.
        s.refresh_gradient();
        quiet = if changed == 0 { quiet + 1 } else { 0 };
    }
    Ok(Solution {
        bias: s.bias(),
        alphas: s.alpha,
    })
}
