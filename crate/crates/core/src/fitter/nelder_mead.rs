//! Derivative-free Nelder–Mead simplex minimization with restarts.

/// Settings for a single [`minimize`] call.
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Upper bound on simplex iterations, summed over restarts.
    pub max_iters: usize,
    /// Convergence when `f_worst - f_best <= rel_tol * |f_best| + abs_tol`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Edge length of the initial simplex along each coordinate.
    pub initial_step: f64,
    /// Fresh simplices built around the incumbent after convergence. A
    /// restart that fails to improve the incumbent ends the run early.
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iters: 20_000,
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            initial_step: 0.25,
            max_restarts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evals: usize,
    pub iters: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub history: Vec<f64>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

struct Counter<F> {
    f: F,
    n: usize,
}

impl<F: Fn(&[f64]) -> f64> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.n += 1;
        let v = (self.f)(x);
        // NaN ranks worst so it can never be selected as the incumbent
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Minimizes `f` starting from `x0`.
pub fn minimize<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let mut obj = Counter { f, n: 0 };
    let mut best_x = x0.to_vec();
    let mut best_f = obj.eval(&best_x);
    let mut iters = 0usize;
    let mut converged = false;
    let mut history = Vec::new();

    for restart in 0..=opts.max_restarts {
        if iters >= opts.max_iters {
            break;
        }
        let before = best_f;
        let step = if restart == 0 {
            opts.initial_step
        } else {
            opts.initial_step * 0.1
        };
        let run = simplex_run(&mut obj, &best_x, best_f, step, opts, opts.max_iters - iters, &mut history);
        iters += run.iters;
        converged = run.converged;
        if run.f <= best_f {
            best_f = run.f;
            best_x = run.x;
        }
        if restart > 0 && before - best_f <= opts.rel_tol * best_f.abs() + opts.abs_tol {
            break;
        }
    }

    Minimum {
        x: best_x,
        f: best_f,
        n_evals: obj.n,
        iters,
        converged,
        history,
    }
}

struct Run {
    x: Vec<f64>,
    f: f64,
    iters: usize,
    converged: bool,
}

fn simplex_run<F: Fn(&[f64]) -> f64>(
    obj: &mut Counter<F>,
    x0: &[f64],
    f0: f64,
    step: f64,
    opts: &NelderMeadOptions,
    budget: usize,
    history: &mut Vec<f64>,
) -> Run {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = obj.eval(&x);
        simplex.push((x, fx));
    }

    let mut iters = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];

    while iters < budget {
        // stable sort keeps equal values in insertion order
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[n].1;
        if f_worst - f_best <= opts.rel_tol * f_best.abs() + opts.abs_tol || collapsed(&simplex) {
            converged = true;
            break;
        }
        iters += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let along = |t: f64, out: &mut Vec<f64>| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(&worst) {
                *o = c + t * (c - w);
            }
        };

        along(REFLECT, &mut trial);
        let f_r = obj.eval(&trial);
        if f_r < f_best {
            let reflected = trial.clone();
            along(EXPAND, &mut trial);
            let f_e = obj.eval(&trial);
            simplex[n] = if f_e < f_r {
                (trial.clone(), f_e)
            } else {
                (reflected, f_r)
            };
        } else if f_r < simplex[n - 1].1 {
            simplex[n] = (trial.clone(), f_r);
        } else {
            let outside = f_r < f_worst;
            along(if outside { CONTRACT } else { -CONTRACT }, &mut trial);
            let f_c = obj.eval(&trial);
            if f_c < f_r.min(f_worst) {
                simplex[n] = (trial.clone(), f_c);
            } else {
                let anchor = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (xi, a) in x.iter_mut().zip(&anchor) {
                        *xi = a + SHRINK * (*xi - a);
                    }
                    *fx = obj.eval(x);
                }
            }
        }
        let f_now = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        history.push(f_now);
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Run {
        x,
        f,
        iters,
        converged,
    }
}

/// True once every vertex coincides with the best one to machine precision.
fn collapsed(simplex: &[(Vec<f64>, f64)]) -> bool {
    let best = &simplex[0].0;
    simplex[1..].iter().all(|(x, _)| {
        x.iter()
            .zip(best)
            .all(|(a, b)| (a - b).abs() <= 4.0 * f64::EPSILON * (1.0 + b.abs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let m = minimize(rosenbrock, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!(m.f < 1e-20, "f = {}", m.f);
        assert!((m.x[0] - 1.0).abs() < 1e-9 && (m.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn history_is_non_increasing() {
        let m = minimize(rosenbrock, &[3.0, -2.0], &NelderMeadOptions::default());
        assert!(m.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nan_regions_are_avoided() {
        let f = |x: &[f64]| if x[0] < 0.5 { f64::NAN } else { (x[0] - 2.0).powi(2) };
        let m = minimize(f, &[1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn respects_iteration_budget() {
        let opts = NelderMeadOptions {
            max_iters: 10,
            ..Default::default()
        };
        let m = minimize(rosenbrock, &[-1.2, 1.0], &opts);
        assert!(m.iters <= 10);
        assert!(!m.converged);
    }
}
