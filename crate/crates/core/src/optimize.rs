//! Derivative-free minimization (Nelder–Mead simplex).

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub tolerance: f64,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
}

/// Minimizes `f` from `x0` with initial simplex edge lengths `steps`.
/// Returns the best point and its value.
pub fn nelder_mead(f: &impl Fn(&[f64]) -> f64, x0: &[f64], steps: &[f64], opts: &NelderMead) -> (Vec<f64>, f64) {
    let mut best = x0.to_vec();
    let mut fbest = f(&best);
    let mut evals = 1;
    for _ in 0..=opts.restarts {
        if evals >= opts.max_evals {
            break;
        }
        let (x, fx, used) = simplex_run(f, &best, steps, opts.tolerance, opts.max_evals - evals);
        evals += used;
        if fx < fbest {
            best = x;
            fbest = fx;
        }
    }
    (best, fbest)
}

fn simplex_run(f: &impl Fn(&[f64]) -> f64, x0: &[f64], steps: &[f64], tol: f64, budget: usize) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;

    while evals < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&k| pts[k].clone()).collect();
        vals = order.iter().map(|&k| vals[k]).collect();
        if (vals[n] - vals[0]).abs() <= tol * (1.0 + vals[0].abs()) {
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|d| pts[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = along(0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = f(&x);
            (x, v)
        };
        evals += 1;
        if fc < fr.min(vals[n]) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for k in 1..=n {
            let p: Vec<f64> = pts[0].iter().zip(&pts[k]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            vals[k] = f(&p);
            pts[k] = p;
        }
        evals += n;
    }
    let k = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    (pts[k].clone(), vals[k], evals)
}
