//! Limited-memory quasi-Newton minimisation over the non-negative orthant
//! (projected L-BFGS with an Armijo search along the projection arc).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the largest projected-gradient component is below this.
    pub pg_tol: f64,
    /// Stop when the relative objective decrease falls below this.
    pub f_tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 2000,
            pg_tol: 1e-6,
            f_tol: 2.2e-10,
        }
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Gradient with components that would push an active bound outward zeroed.
fn projected_gradient<T: Scalar>(x: &[T], g: &[T]) -> Vec<T> {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| if xi <= T::zero() && gi > T::zero() { T::zero() } else { gi })
        .collect()
}

/// Minimises `f` subject to `x ≥ 0`; `f` returns value and gradient.
pub fn minimize_nonneg<T: Scalar>(
    mut f: impl FnMut(&[T]) -> (T, Vec<T>),
    x0: Vec<T>,
    cfg: &LbfgsConfig,
) -> Vec<T> {
    let zero = T::zero();
    let mut x: Vec<T> = x0.into_iter().map(|v| v.max(zero)).collect();
    let (mut fx, mut g) = f(&x);
    let mut memory: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(cfg.memory);
    let pg_tol = T::lit(cfg.pg_tol);
    let f_tol = T::lit(cfg.f_tol);
    let armijo = T::lit(1e-4);

    for _ in 0..cfg.max_iter {
        let pg = projected_gradient(&x, &g);
        let pg_max = pg.iter().fold(zero, |m, v| m.max(v.abs()));
        if pg_max <= pg_tol {
            break;
        }
        let free: Vec<bool> = pg.iter().zip(&g).map(|(p, gi)| *p != zero || *gi == zero).collect();

        // Two-loop recursion restricted to the free variables.
        let mut q: Vec<T> = pg.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = *rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, &yi)| *qi = *qi - a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = memory.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi = *qi * gamma);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = *rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, &si)| *qi = *qi + (*a - b) * si);
        }
        let mut dir: Vec<T> = q
            .iter()
            .zip(&free)
            .map(|(&qi, &fr)| if fr { -qi } else { zero })
            .collect();
        if dot(&dir, &pg) >= zero {
            memory.clear();
            dir = pg.iter().map(|&v| -v).collect();
        }

        let mut step = if memory.is_empty() {
            T::one().min(T::one() / pg_max)
        } else {
            T::one()
        };
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<T> = x.iter().zip(&dir).map(|(&xi, &di)| (xi + step * di).max(zero)).collect();
            let (fn_, gn) = f(&xn);
            let decrease: T = g.iter().zip(xn.iter().zip(&x)).map(|(&gi, (&a, &b))| gi * (a - b)).sum();
            if fn_ <= fx + armijo * decrease && fn_.is_finite() {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step = step * T::lit(0.5);
        }
        let Some((xn, fn_, gn)) = accepted else { break };

        let s: Vec<T> = xn.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = gn.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * dot(&y, &y) {
            if memory.len() == cfg.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, T::one() / sy));
        }
        let rel = (fx - fn_) / fx.abs().max(fn_.abs()).max(T::one());
        x = xn;
        fx = fn_;
        g = gn;
        if rel <= f_tol {
            break;
        }
    }
    x
}
