//! One-dimensional minimization: a coarse scan to bracket the minimum,
//! then golden-section refinement.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Golden-section search on `[a, b]`, stopping once the bracket is narrower
/// than `rel_tol·|x| + abs_tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_iter: usize,
) -> Minimum {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while iterations < max_iter {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= rel_tol * mid.abs() + abs_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    if fc <= fd {
        Minimum {
            x: c,
            fx: fc,
            iterations,
        }
    } else {
        Minimum {
            x: d,
            fx: fd,
            iterations,
        }
    }
}

/// Result of scanning `f` on a uniform grid over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub points: Vec<(f64, f64)>,
    pub best: usize,
}

impl Scan {
    pub fn new<F: Fn(f64) -> f64 + Sync>(f: F, lo: f64, hi: f64, n: usize) -> Self {
        use rayon::prelude::*;
        let n = n.max(3);
        let points: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (x, f(x))
            })
            .collect();
        let best = points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, _)| i)
            .unwrap();
        Self { points, best }
    }

    pub fn at_right_edge(&self) -> bool {
        self.best + 1 == self.points.len()
    }

    /// Neighbours of the best grid point.
    pub fn bracket(&self) -> (f64, f64) {
        let lo = self.points[self.best.saturating_sub(1)].0;
        let hi = self.points[(self.best + 1).min(self.points.len() - 1)].0;
        (lo, hi)
    }
}

/// Outcome of [`minimize_nonnegative`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedMinimum {
    pub x: f64,
    pub fx: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub at_boundary: bool,
}

/// Minimizes `f` over `[0, upper]`, widening the upper bound ×10 once when
/// the scan minimum sits on it.
pub fn minimize_nonnegative<F: Fn(f64) -> f64 + Sync>(
    f: F,
    upper: f64,
    scan_points: usize,
    rel_tol: f64,
) -> BoundedMinimum {
    let mut upper = upper;
    let mut scan = Scan::new(&f, 0.0, upper, scan_points);
    if scan.at_right_edge() {
        upper *= 10.0;
        scan = Scan::new(&f, 0.0, upper, scan_points);
    }
    let (a, b) = scan.bracket();
    let refined = golden_section(&f, a, b, rel_tol, 1e-12, 200);
    let (x, fx) = if scan.points[scan.best].1 < refined.fx {
        scan.points[scan.best]
    } else {
        (refined.x, refined.fx)
    };
    BoundedMinimum {
        x,
        fx,
        bracket: (0.0, upper),
        iterations: refined.iterations,
        at_boundary: scan.at_right_edge(),
    }
}
