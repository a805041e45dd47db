//! Adaptive Gauss–Kronrod (7/15) integration on finite intervals.

use crate::scalar::{lit, Real};

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

/// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integral with its error estimate and the number of accepted subintervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

/// One 15-point Kronrod rule and its embedded 7-point Gauss rule.
pub fn gauss_kronrod_15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    let fc = f(mid);
    let mut k = fc * lit(WGK[7]);
    let mut g = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = half * lit(XGK[j]);
        let pair = f(mid - dx) + f(mid + dx);
        k = k + pair * lit(WGK[j]);
        if j % 2 == 1 {
            g = g + pair * lit(WG[j / 2]);
        }
    }
    (k * half, g * half)
}

/// Adaptive bisection until each piece's Kronrod–Gauss difference is below
/// its share of `abs_tol` (or rounding-level relative to the piece).
pub fn integrate<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, abs_tol: T) -> Integral<T> {
    if !(b > a) {
        return Integral {
            value: T::zero(),
            error: T::zero(),
            intervals: 0,
        };
    }
    let mut out = Integral {
        value: T::zero(),
        error: T::zero(),
        intervals: 0,
    };
    adapt(f, a, b, abs_tol, 48, &mut out);
    out
}

fn adapt<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, depth: u32, out: &mut Integral<T>) {
    let (k, g) = gauss_kronrod_15(f, a, b);
    let err = (k - g).abs();
    let floor = k.abs() * T::epsilon() * lit(64.0);
    let mid = (a + b) * lit(0.5);
    if err <= tol.max(floor) || depth == 0 || !(mid > a && mid < b) {
        out.value = out.value + k;
        out.error = out.error + err;
        out.intervals += 1;
        return;
    }
    let half_tol = tol * lit(0.5);
    adapt(f, a, mid, half_tol, depth - 1, out);
    adapt(f, mid, b, half_tol, depth - 1, out);
}

/// Integrates over `[a, b]`, splitting first at every breakpoint strictly
/// inside and then into `panels` equal pieces per resulting segment.
pub fn integrate_with_breaks<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    breakpoints: &[T],
    panels: usize,
    abs_tol: T,
) -> Integral<T> {
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    cuts.push(b);
    cuts.sort_by(|p, q| p.partial_cmp(q).expect("finite breakpoints"));
    cuts.dedup();
    let panels = panels.max(1);
    let width = b - a;
    let mut total = Integral {
        value: T::zero(),
        error: T::zero(),
        intervals: 0,
    };
    for w in cuts.windows(2) {
        let seg = w[1] - w[0];
        let step = seg / crate::scalar::from_usize(panels);
        for p in 0..panels {
            let lo = w[0] + step * crate::scalar::from_usize(p);
            let hi = if p + 1 == panels { w[1] } else { lo + step };
            let share = if width > T::zero() { abs_tol * (hi - lo) / width } else { abs_tol };
            let part = integrate(f, lo, hi, share);
            total.value = total.value + part.value;
            total.error = total.error + part.error;
            total.intervals += part.intervals;
        }
    }
    total
}
