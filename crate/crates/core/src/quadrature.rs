//! One-dimensional quadrature: Gauss–Legendre rules, Gauss–Kronrod (7, 15)
//! pairs and a globally adaptive integrator over user-supplied panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub fn new(value: f64, err: f64) -> Self {
        Self { value, err }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate::new(self.value + o.value, self.err + o.err)
    }
}

impl std::ops::AddAssign for Estimate {
    fn add_assign(&mut self, o: Estimate) {
        self.value += o.value;
        self.err += o.err;
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the three-term recurrence; accurate to rounding
    /// for the orders used here (n ≤ a few hundred).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

/// Legendre polynomial P_n and its derivative at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// Kronrod abscissae (positive half, descending) and weights for the
// 15-point rule, with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Kronrod (7, 15) on `[a, b]`. The error uses the QUADPACK scaling
/// of |K15 − G7| against the mean absolute deviation of f on the panel.
pub fn gk15<F: FnMut(f64) -> f64>(a: f64, b: f64, f: &mut F) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [0.0; 15];
    fv[7] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        fv[j] = f(c - dx);
        fv[14 - j] = f(c + dx);
    }
    let mut k = WGK[7] * fv[7];
    let mut g = WG[3] * fv[7];
    let mut abs = WGK[7] * fv[7].abs();
    for j in 0..7 {
        let s = fv[j] + fv[14 - j];
        k += WGK[j] * s;
        abs += WGK[j] * (fv[j].abs() + fv[14 - j].abs());
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let mean = 0.5 * k;
    let mut asc = WGK[7] * (fv[7] - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let (h_abs, raw) = (h.abs(), ((k - g) * h).abs());
    let (asc, abs) = (asc * h_abs, abs * h_abs);
    let mut err = raw;
    if asc != 0.0 && raw != 0.0 {
        err = asc * (200.0 * raw / asc).powf(1.5).min(1.0);
    }
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs);
    }
    Estimate::new(k * h, err)
}

struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.est.err == o.est.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.est.err.total_cmp(&o.est.err)
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub est: Estimate,
    pub converged: bool,
    pub intervals: usize,
}

/// Globally adaptive GK15 over the given panels: repeatedly bisects the
/// panel with the largest error until the summed error is below `tol`
/// or `max_intervals` panels are in use.
pub fn adaptive<F: FnMut(f64) -> f64>(
    panels: &[(f64, f64)],
    tol: f64,
    max_intervals: usize,
    mut f: F,
) -> Adaptive {
    let mut heap = BinaryHeap::with_capacity(panels.len() * 2);
    let mut total = Estimate::default();
    for &(a, b) in panels {
        if b == a {
            continue;
        }
        let est = gk15(a, b, &mut f);
        total += est;
        heap.push(Piece { a, b, est });
    }
    let mut count = heap.len();
    while total.err > tol && count < max_intervals {
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a.min(p.b) && m < p.a.max(p.b)) || (p.b - p.a).abs() < 1e-15 * m.abs() {
            // No room left to bisect; keep the piece and stop.
            heap.push(p);
            break;
        }
        let l = gk15(p.a, m, &mut f);
        let r = gk15(m, p.b, &mut f);
        total.value += l.value + r.value - p.est.value;
        total.err += l.err + r.err - p.est.err;
        heap.push(Piece { a: p.a, b: m, est: l });
        heap.push(Piece { a: m, b: p.b, est: r });
        count += 1;
    }
    // Recompute sums to shed accumulated cancellation in the running totals.
    let mut sum = Estimate::default();
    for p in heap.iter() {
        sum += p.est;
    }
    Adaptive {
        est: sum,
        converged: sum.err <= tol,
        intervals: count,
    }
}

/// Break points grading geometrically (ratio 1/2) from `a` toward the
/// singular end `b`: a, b−(b−a)/2, b−(b−a)/4, …, b.
pub fn graded_toward(a: f64, b: f64, levels: usize) -> Vec<f64> {
    let mut pts = Vec::with_capacity(levels + 2);
    pts.push(a);
    let mut w = b - a;
    for _ in 0..levels {
        w *= 0.5;
        pts.push(b - w);
    }
    pts.push(b);
    pts
}

/// Panels for `[a, b]` graded toward whichever ends are flagged singular.
pub fn graded_panels(a: f64, b: f64, sing_a: bool, sing_b: bool, levels: usize) -> Vec<(f64, f64)> {
    let pts: Vec<f64> = match (sing_a, sing_b) {
        (false, false) => vec![a, b],
        (false, true) => graded_toward(a, b, levels),
        (true, false) => {
            let mut p = graded_toward(b, a, levels);
            p.reverse();
            p
        }
        (true, true) => {
            let m = 0.5 * (a + b);
            let mut left = graded_toward(m, a, levels);
            left.reverse();
            left.pop();
            left.extend(graded_toward(m, b, levels));
            left
        }
    };
    pts.windows(2).map(|w| (w[0], w[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // Degree 15 is the highest exact degree for 8 nodes.
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-10);
        let sw: f64 = gl.weights.iter().sum();
        assert!((sw - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_high_order_is_accurate() {
        let gl = GaussLegendre::new(64);
        let v = gl.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gk15_is_exact_for_low_degree() {
        let e = gk15(-1.0, 3.0, &mut |x: f64| x.powi(5) - 2.0 * x);
        let exact = (3f64.powi(6) - 1.0) / 6.0 - (9.0 - 1.0);
        assert!((e.value - exact).abs() < 1e-12);
    }

    #[test]
    fn kronrod_and_gauss_degrees() {
        // K15 is exact through degree 22 and G7 through degree 13.
        let k = gk15(-1.0, 1.0, &mut |x: f64| x.powi(22));
        assert!((k.value - 2.0 / 23.0).abs() < 1e-15);
        let k = gk15(-1.0, 1.0, &mut |x: f64| x.powi(12));
        assert!(k.err < 1e-12);
    }

    #[test]
    fn adaptive_handles_endpoint_power_singularity() {
        let panels = graded_panels(0.0, 1.0, true, false, 20);
        let r = adaptive(&panels, 1e-12, 2000, |x| x.powf(-0.5));
        assert!(r.converged);
        assert!((r.est.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn graded_panels_cover_interval() {
        let p = graded_panels(1.0, 3.0, true, true, 5);
        assert_eq!(p.first().unwrap().0, 1.0);
        assert_eq!(p.last().unwrap().1, 3.0);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }
}
