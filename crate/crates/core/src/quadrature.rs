//! Globally adaptive Gauss-Kronrod (10/21) quadrature with breakpoints and
//! infinite tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge: value {value:.6e}, error {error:.3e} after {intervals} intervals")]
    NoConvergence { value: f64, error: f64, intervals: usize },
    #[error("integrand is not finite near {0:.6e}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 0.0, max_intervals: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_943_627_272,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// One 21-point Kronrod panel on [a, b]: (estimate, error).
fn qk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[10];
    let mut rg = 0.0;
    let mut rabs = rk.abs();
    let mut fv = [(0.0, 0.0); 10];
    for j in 0..10 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        fv[j] = (f1, f2);
        rk += WGK[j] * (f1 + f2);
        rabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * rk;
    let mut rasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        rasc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let (rk, rabs, rasc) = (rk * h, rabs * h.abs(), rasc * h.abs());
    let mut err = ((rk - rg * h).abs()).abs();
    if rasc != 0.0 && err != 0.0 {
        err = rasc * (200.0 * err / rasc).powf(1.5).min(1.0);
    }
    if rabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * rabs);
    }
    (rk, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Integrates `f` over consecutive intervals between sorted `points`,
/// refining whichever panel carries the largest error until the total error
/// meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: QuadOptions) -> Result<QuadResult, QuadError> {
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    let mut push = |heap: &mut BinaryHeap<Panel>, a: f64, b: f64| -> Result<(), QuadError> {
        let (value, error) = qk21(&f, a, b);
        evals += 21;
        if !value.is_finite() || !error.is_finite() {
            return Err(QuadError::NonFinite(0.5 * (a + b)));
        }
        heap.push(Panel { a, b, value, error });
        Ok(())
    };
    for w in points.windows(2) {
        if w[1] > w[0] {
            push(&mut heap, w[0], w[1])?;
        }
    }
    let total = |heap: &BinaryHeap<Panel>| -> (f64, f64) {
        // summing in abscissa order keeps the result independent of heap layout
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        (panels.iter().map(|p| p.value).sum(), panels.iter().map(|p| p.error).sum())
    };
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            let (value, error) = total(&heap);
            return Ok(QuadResult { value, error, evaluations: evals });
        }
        if heap.len() >= opts.max_intervals {
            let (value, error) = total(&heap);
            return Err(QuadError::NoConvergence { value, error, intervals: heap.len() });
        }
        let worst = heap.pop().unwrap();
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // panel cannot be split further; accept it as is
            heap.push(worst);
            let (value, error) = total(&heap);
            return Ok(QuadResult { value, error, evaluations: evals });
        }
        push(&mut heap, worst.a, m)?;
        push(&mut heap, m, worst.b)?;
    }
}

/// Integrates over the whole real line. `points` (sorted, at least two)
/// split the finite part; the tails beyond the outer points are mapped onto
/// [0, 1) with ω = b + s·t/(1 − t).
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult, QuadError> {
    let lo = points[0];
    let hi = points[points.len() - 1];
    let s = (hi - lo).max(1.0);
    // map the two tails onto (-1, 0) and (n, n+1) of an extended axis so one
    // adaptive pass controls the total error
    let n = (points.len() - 1) as f64;
    let g = |u: f64| -> f64 {
        if u < 0.0 {
            let t = -u;
            let w = lo - s * t / (1.0 - t);
            f(w) * s / ((1.0 - t) * (1.0 - t))
        } else if u > n {
            let t = u - n;
            let w = hi + s * t / (1.0 - t);
            f(w) * s / ((1.0 - t) * (1.0 - t))
        } else {
            let i = (u.floor() as usize).min(points.len() - 2);
            let frac = u - i as f64;
            let (a, b) = (points[i], points[i + 1]);
            f(a + (b - a) * frac) * (b - a)
        }
    };
    let mut axis = Vec::with_capacity(points.len() + 2);
    axis.push(-1.0);
    for i in 0..points.len() {
        axis.push(i as f64);
    }
    axis.push(n + 1.0);
    integrate(g, &axis, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x + 2.0, &[0.0, 2.0], QuadOptions::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn narrow_lorentzian_on_real_line() {
        let g = 1e-3;
        let c = 1e4;
        let f = |w: f64| g / ((w - c).powi(2) + 0.25 * g * g);
        let pts = [c - 1e3, c - 10.0 * g, c, c + 10.0 * g, c + 1e3];
        let r = integrate_real_line(f, &pts, QuadOptions::default()).unwrap();
        assert!((r.value / (2.0 * PI) - 1.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn reports_no_convergence() {
        let opts = QuadOptions { rel_tol: 1e-15, abs_tol: 0.0, max_intervals: 4 };
        let r = integrate(|x: f64| x.abs().sqrt().sin() / (x.abs() + 1e-9), &[-1.0, 1.0], opts);
        assert!(matches!(r, Err(QuadError::NoConvergence { .. })));
    }
}
