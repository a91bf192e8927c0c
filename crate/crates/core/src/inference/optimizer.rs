//! Derivative-free simplex minimizer (Nelder–Mead, standard coefficients).
//!
//! Used on log-transformed hyperparameters; robust to the kinks introduced
//! by jitter escalation and to rejected regions reported as `+∞`.

/// Outcome of one simplex run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0`, with an axis-aligned initial simplex of
/// edge `step`. Stops when the simplex diameter (max pairwise ∞-norm
/// distance) drops below `diameter_tol` or after `max_evals` evaluations.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    diameter_tol: f64,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |point: &[f64], evaluations: &mut usize| -> f64 {
        *evaluations += 1;
        let value = f(point);
        if value.is_nan() {
            f64::INFINITY
        } else {
            value
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let value = eval(x0, &mut evaluations);
    simplex.push((x0.to_vec(), value));
    for k in 0..dim {
        let mut vertex = x0.to_vec();
        vertex[k] += step;
        let value = eval(&vertex, &mut evaluations);
        simplex.push((vertex, value));
    }

    let mut converged = false;
    while evaluations < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));

        if diameter(&simplex) < diameter_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(v, _)| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();

        let reflected: Vec<f64> = (0..dim)
            .map(|k| centroid[k] + (centroid[k] - worst.0[k]))
            .collect();
        let f_reflected = eval(&reflected, &mut evaluations);

        if f_reflected < simplex[0].1 {
            let expanded: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + 2.0 * (centroid[k] - worst.0[k]))
                .collect();
            let f_expanded = eval(&expanded, &mut evaluations);
            simplex[dim] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_reflected);
            continue;
        }

        let contracted: (Vec<f64>, bool) = if f_reflected < worst.1 {
            // outside contraction
            (
                (0..dim)
                    .map(|k| centroid[k] + 0.5 * (reflected[k] - centroid[k]))
                    .collect(),
                true,
            )
        } else {
            // inside contraction
            (
                (0..dim)
                    .map(|k| centroid[k] - 0.5 * (centroid[k] - worst.0[k]))
                    .collect(),
                false,
            )
        };
        let f_contracted = eval(&contracted.0, &mut evaluations);
        let accept = if contracted.1 {
            f_contracted <= f_reflected
        } else {
            f_contracted < worst.1
        };
        if accept {
            simplex[dim] = (contracted.0, f_contracted);
            continue;
        }

        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (coordinate, &anchor) in vertex.0.iter_mut().zip(&best) {
                *coordinate = anchor + 0.5 * (*coordinate - anchor);
            }
            vertex.1 = eval(&vertex.0, &mut evaluations);
            if evaluations >= max_evals {
                break;
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    SimplexResult {
        point: simplex[0].0.clone(),
        value: simplex[0].1,
        evaluations,
        converged,
    }
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let mut diameter = 0.0f64;
    for a in 0..simplex.len() {
        for b in (a + 1)..simplex.len() {
            let dist = simplex[a]
                .0
                .iter()
                .zip(&simplex[b].0)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            diameter = diameter.max(dist);
        }
    }
    diameter
}
