//! Adaptive Gauss–Kronrod (7, 15) quadrature and the backward existence time
//! of the `n4`/`n6` flows.

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
    0.209_482_141_084_728,
];
// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// `(Kronrod estimate, |Kronrod − Gauss|)` on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]` by bisecting the interval with the largest
/// error estimate until the summed estimate is below `abs_tol`.
/// Returns `(value, error estimate)`.
pub fn gauss_kronrod_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..10_000 {
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= abs_tol {
            break;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("nonempty");
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let value = parts.iter().map(|p| p.2 .0).sum();
    let err = parts.iter().map(|p| p.2 .1).sum();
    (value, err)
}

/// `t_min = −(3/2) ∫₀¹ x^{3/2} (2 − x³)^{−5/2} dx`, the left end of the
/// existence interval of the reduced flow through `(1, 1)`.
pub fn t_min_quadrature() -> f64 {
    let (v, _) = gauss_kronrod_adaptive(|x| x.powf(1.5) * (2.0 - x * x * x).powf(-2.5), 0.0, 1.0, 1e-12);
    -1.5 * v
}
