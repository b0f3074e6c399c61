//! Figures of merit for a conditional detection matrix `p[[k, j]]` =
//! P(detect k | sent j).

use ndarray::Array2;

/// Mean of the diagonal.
pub fn separation_efficiency(p: &Array2<f64>) -> f64 {
    let n = p.nrows().min(p.ncols());
    (0..n).map(|i| p[[i, i]]).sum::<f64>() / n as f64
}

/// Mutual information (bits) between sent and detected index, for a
/// uniform prior over the sent modes. Columns must be normalized.
pub fn mutual_information(p: &Array2<f64>) -> f64 {
    let n = p.ncols() as f64;
    let q: Vec<f64> = p.rows().into_iter().map(|r| r.sum() / n).collect();
    let mut bits = 0.0;
    for ((k, _), &pk) in p.indexed_iter() {
        if pk > 0.0 {
            bits += pk * (pk / q[k]).log2() / n;
        }
    }
    bits
}

/// Mean over sent modes with two neighbours of the power landing in the
/// bins of those neighbours.
pub fn neighbour_fraction(p: &Array2<f64>) -> f64 {
    let n = p.ncols();
    if n < 3 {
        return 0.0;
    }
    (1..n - 1).map(|j| p[[j - 1, j]] + p[[j + 1, j]]).sum::<f64>() / (n - 2) as f64
}

/// Largest single-side leakage `p[[j±1, j]]` over all sent modes.
pub fn max_neighbour_leakage(p: &Array2<f64>) -> f64 {
    let n = p.ncols();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        if j > 0 {
            worst = worst.max(p[[j - 1, j]]);
        }
        if j + 1 < n {
            worst = worst.max(p[[j + 1, j]]);
        }
    }
    worst
}
