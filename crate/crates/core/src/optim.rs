//! Multi-restart ascent over products of complex unit spheres.
//!
//! A point is a list of blocks, each a normalised complex vector. The
//! objective is maximised by Riemannian conjugate gradients with numerical
//! (central difference) gradients, a bracketing golden-section line search
//! and renormalisation after every step. Restarts run in parallel on substreams
//! of the caller's seed; the best restart wins, ties broken by lowest index.

use rayon::prelude::*;

use crate::rng::Stream;
use crate::tensor::{haar_state, C64};

#[derive(Clone, Debug)]
pub struct SearchBudget {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl SearchBudget {
    pub fn new(restarts: usize, seed: u64) -> Self {
        SearchBudget {
            restarts,
            iterations: 500,
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub value: f64,
    pub point: Vec<Vec<C64>>,
    /// Index of the restart that produced `point`. Seeded starting points
    /// come first, followed by random ones.
    pub restart: usize,
}

const FD_STEP: f64 = 1e-6;
const GRAD_TOL: f64 = 1e-10;

fn normalise(v: &mut [C64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
}

/// Riemannian gradient: numerical gradient in real coordinates projected
/// onto the tangent space of each sphere.
fn gradient<F>(f: &F, x: &[Vec<C64>]) -> Vec<Vec<C64>>
where
    F: Fn(&[Vec<C64>]) -> f64,
{
    let mut probe = x.to_vec();
    let mut g: Vec<Vec<C64>> = x.iter().map(|b| vec![C64::new(0.0, 0.0); b.len()]).collect();
    for (bi, block) in x.iter().enumerate() {
        for k in 0..block.len() {
            for unit in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let orig = probe[bi][k];
                probe[bi][k] = orig + unit * FD_STEP;
                let up = f(&probe);
                probe[bi][k] = orig - unit * FD_STEP;
                let down = f(&probe);
                probe[bi][k] = orig;
                g[bi][k] += unit * ((up - down) / (2.0 * FD_STEP));
            }
        }
    }
    project(x, &mut g);
    g
}

fn stepped(x: &[Vec<C64>], d: &[Vec<C64>], t: f64) -> Vec<Vec<C64>> {
    let mut y = x.to_vec();
    for (yb, db) in y.iter_mut().zip(d) {
        for (yk, dk) in yb.iter_mut().zip(db) {
            *yk += dk * t;
        }
        normalise(yb);
    }
    y
}

fn dot(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

fn project(x: &[Vec<C64>], d: &mut [Vec<C64>]) {
    for (db, xb) in d.iter_mut().zip(x) {
        let radial: f64 = xb.iter().zip(db.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        for (dk, xk) in db.iter_mut().zip(xb) {
            *dk -= xk * radial;
        }
    }
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Line maximisation of `t -> f(stepped(x, d, t))`: bracket by doubling or
/// halving from `t0`, then refine by golden-section search.
fn line_search<F>(f: &F, x: &[Vec<C64>], d: &[Vec<C64>], t0: f64, f0: f64) -> Option<(f64, f64)>
where
    F: Fn(&[Vec<C64>]) -> f64,
{
    let phi = |t: f64| f(&stepped(x, d, t));
    let (mut a, mut b, mut fb) = (0.0, t0, phi(t0));
    let mut c;
    if fb > f0 {
        loop {
            c = 2.0 * b;
            let fc = phi(c);
            if fc <= fb || c > 1e12 {
                break;
            }
            (a, b, fb) = (b, c, fc);
        }
    } else {
        loop {
            c = b;
            b *= 0.5;
            fb = phi(b);
            if fb > f0 {
                break;
            }
            if b < 1e-16 {
                return None;
            }
        }
    }
    // golden section on [a, c] keeping the best interior point b
    for _ in 0..40 {
        let left = b - a > c - b;
        let t = if left {
            b - GOLDEN * (b - a)
        } else {
            b + GOLDEN * (c - b)
        };
        let ft = phi(t);
        if ft > fb {
            if left {
                c = b;
            } else {
                a = b;
            }
            (b, fb) = (t, ft);
        } else if left {
            a = t;
        } else {
            c = t;
        }
        if c - a <= 1e-12 * b {
            break;
        }
    }
    Some((b, fb))
}

/// Riemannian conjugate gradient ascent (Polak-Ribiere+, directions
/// transported by tangent projection).
fn ascend<F>(f: &F, mut x: Vec<Vec<C64>>, iterations: usize) -> (f64, Vec<Vec<C64>>)
where
    F: Fn(&[Vec<C64>]) -> f64,
{
    x.iter_mut().for_each(|b| normalise(b));
    let params: usize = x.iter().map(|b| 2 * b.len()).sum();
    let mut value = f(&x);
    let mut step: f64 = 0.1;
    let mut g = gradient(f, &x);
    let mut d = g.clone();
    for it in 0..iterations {
        let g2 = dot(&g, &g);
        if g2.sqrt() < GRAD_TOL {
            break;
        }
        if dot(&d, &g) <= 0.0 {
            d = g.clone();
        }
        let Some((t, fy)) = line_search(f, &x, &d, step, value) else {
            if dot(&d, &g) < g2 {
                // retry along the plain gradient before giving up
                d = g.clone();
                continue;
            }
            break;
        };
        x = stepped(&x, &d, t);
        value = fy;
        step = t;
        let g_new = gradient(f, &x);
        let beta = if (it + 1) % params == 0 {
            0.0
        } else {
            (dot(&g_new, &g_new) - dot(&g_new, &g)) / g2
        }
        .max(0.0);
        project(&x, &mut d);
        for (db, gb) in d.iter_mut().zip(&g_new) {
            for (dk, gk) in db.iter_mut().zip(gb) {
                *dk = gk + *dk * beta;
            }
        }
        g = g_new;
    }
    (value, x)
}

/// Maximises `f` over `blocks.len()` unit spheres of the given complex
/// dimensions. `seeds` are used as the first starting points; the remaining
/// `budget.restarts` starts are Haar-random.
pub fn maximize<F>(f: &F, blocks: &[usize], seeds: &[Vec<Vec<C64>>], budget: &SearchBudget) -> SearchResult
where
    F: Fn(&[Vec<C64>]) -> f64 + Sync,
{
    let root = Stream::new(budget.seed);
    let total = seeds.len() + budget.restarts.max(usize::from(seeds.is_empty()));
    let results: Vec<(f64, Vec<Vec<C64>>)> = (0..total)
        .into_par_iter()
        .map(|r| {
            let start = if r < seeds.len() {
                seeds[r].clone()
            } else {
                let mut s = root.substream(r as u64);
                blocks.iter().map(|&d| haar_state(d, &mut s)).collect()
            };
            ascend(f, start, budget.iterations)
        })
        .collect();
    let mut best = 0;
    for (r, (v, _)) in results.iter().enumerate() {
        if *v > results[best].0 {
            best = r;
        }
    }
    let (value, point) = results.into_iter().nth(best).expect("at least one restart");
    SearchResult {
        value,
        point,
        restart: best,
    }
}

/// Minimisation counterpart of [`maximize`].
pub fn minimize<F>(f: &F, blocks: &[usize], seeds: &[Vec<Vec<C64>>], budget: &SearchBudget) -> SearchResult
where
    F: Fn(&[Vec<C64>]) -> f64 + Sync,
{
    let neg = |x: &[Vec<C64>]| -f(x);
    let mut r = maximize(&neg, blocks, seeds, budget);
    r.value = -r.value;
    r
}
