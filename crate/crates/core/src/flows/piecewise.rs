use std::fmt::Write as _;

use crate::bounds::{BiLipschitzConstants, Certificate};
use crate::error::{domain, Error, Result};
use crate::scalar::{fmt_real, lit, Real};
use crate::specfun::{normal_interval_mass, normal_pdf};

use super::Flow;

const CSV_TAG: &str = "# bilip piecewise-linear flow v1";

/// Monotone piecewise-linear bijection of ℝ.
///
/// Knots `(x_i, z_i)` are joined by straight segments; beyond the end knots
/// the map continues linearly with the two tail slopes. At a knot the slope
/// (and hence the density) is taken from the segment on its left.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFlow1D<T> {
    knots_x: Vec<T>,
    knots_z: Vec<T>,
    left_slope: T,
    right_slope: T,
}

fn strictly_increasing<T: Real>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

impl<T: Real> PiecewiseLinearFlow1D<T> {
    pub fn new(knots_x: Vec<T>, knots_z: Vec<T>, left_slope: T, right_slope: T) -> Result<Self> {
        if knots_x.len() < 2 || knots_x.len() != knots_z.len() {
            return domain(format!(
                "need two or more knots in each coordinate, got {} x and {} z",
                knots_x.len(),
                knots_z.len()
            ));
        }
        if !strictly_increasing(&knots_x) || !strictly_increasing(&knots_z) {
            return domain("knots must be finite and strictly increasing");
        }
        for s in [left_slope, right_slope] {
            if !(s.is_finite() && s > T::zero()) {
                return domain(format!("tail slopes must be finite and > 0, got {s}"));
            }
        }
        Ok(Self {
            knots_x,
            knots_z,
            left_slope,
            right_slope,
        })
    }

    pub fn identity() -> Self {
        Self::new(vec![T::zero(), T::one()], vec![T::zero(), T::one()], T::one(), T::one())
            .expect("identity knots are valid")
    }

    /// Knots at `knots_x` with the given segment slopes, `z` anchored so that
    /// `F(knots_x[0]) = z0`.
    pub fn from_slopes(knots_x: Vec<T>, slopes: &[T], z0: T, left_slope: T, right_slope: T) -> Result<Self> {
        if slopes.len() + 1 != knots_x.len() {
            return domain("need one slope per segment between knots");
        }
        let mut z = Vec::with_capacity(knots_x.len());
        z.push(z0);
        for (i, &s) in slopes.iter().enumerate() {
            let prev = z[i];
            z.push(prev + s * (knots_x[i + 1] - knots_x[i]));
        }
        Self::new(knots_x, z, left_slope, right_slope)
    }

    pub fn knots_x(&self) -> &[T] {
        &self.knots_x
    }

    pub fn knots_z(&self) -> &[T] {
        &self.knots_z
    }

    pub fn tail_slopes(&self) -> (T, T) {
        (self.left_slope, self.right_slope)
    }

    /// Interior segment slopes, left to right.
    pub fn segment_slopes(&self) -> Vec<T> {
        self.knots_x
            .windows(2)
            .zip(self.knots_z.windows(2))
            .map(|(x, z)| (z[1] - z[0]) / (x[1] - x[0]))
            .collect()
    }

    /// All slopes including the two tails.
    pub fn all_slopes(&self) -> Vec<T> {
        let mut s = vec![self.left_slope];
        s.extend(self.segment_slopes());
        s.push(self.right_slope);
        s
    }

    pub fn forward_1d(&self, x: T) -> T {
        let n = self.knots_x.len();
        if x <= self.knots_x[0] {
            return self.knots_z[0] + self.left_slope * (x - self.knots_x[0]);
        }
        if x >= self.knots_x[n - 1] {
            return self.knots_z[n - 1] + self.right_slope * (x - self.knots_x[n - 1]);
        }
        let j = self.knots_x.partition_point(|&k| k <= x);
        let (x0, x1) = (self.knots_x[j - 1], self.knots_x[j]);
        let (z0, z1) = (self.knots_z[j - 1], self.knots_z[j]);
        z0 + (z1 - z0) * ((x - x0) / (x1 - x0))
    }

    pub fn inverse_1d(&self, z: T) -> T {
        let n = self.knots_z.len();
        if z <= self.knots_z[0] {
            return self.knots_x[0] + (z - self.knots_z[0]) / self.left_slope;
        }
        if z >= self.knots_z[n - 1] {
            return self.knots_x[n - 1] + (z - self.knots_z[n - 1]) / self.right_slope;
        }
        let j = self.knots_z.partition_point(|&k| k <= z);
        let (x0, x1) = (self.knots_x[j - 1], self.knots_x[j]);
        let (z0, z1) = (self.knots_z[j - 1], self.knots_z[j]);
        x0 + (x1 - x0) * ((z - z0) / (z1 - z0))
    }

    /// `F'(x)`, left-segment convention at knots.
    pub fn slope_at(&self, x: T) -> T {
        let n = self.knots_x.len();
        let j = self.knots_x.partition_point(|&k| k < x);
        if j == 0 {
            self.left_slope
        } else if j == n {
            self.right_slope
        } else {
            (self.knots_z[j] - self.knots_z[j - 1]) / (self.knots_x[j] - self.knots_x[j - 1])
        }
    }

    pub fn density_1d(&self, x: T) -> T {
        self.slope_at(x) * normal_pdf(self.forward_1d(x))
    }

    /// `P̂([a, b]) = Q([F(a), F(b)])`.
    pub fn interval_mass(&self, a: T, b: T) -> T {
        if b <= a {
            return T::zero();
        }
        normal_interval_mass(self.forward_1d(a), self.forward_1d(b))
    }

    /// CSV with a version tag, the two tail slopes and one `x,z` row per knot.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CSV_TAG}");
        let _ = writeln!(s, "left_slope,{}", fmt_real(self.left_slope));
        let _ = writeln!(s, "right_slope,{}", fmt_real(self.right_slope));
        let _ = writeln!(s, "x,z");
        for (x, z) in self.knots_x.iter().zip(&self.knots_z) {
            let _ = writeln!(s, "{},{}", fmt_real(*x), fmt_real(*z));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, msg: &str| Error::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (i, tag) = lines.next().ok_or_else(|| perr(0, "empty flow file"))?;
        if tag.trim() != CSV_TAG {
            return Err(perr(i, "missing or unsupported version tag"));
        }
        let mut named = |key: &str| -> Result<T> {
            let (i, l) = lines.next().ok_or_else(|| perr(0, "truncated flow file"))?;
            let (k, v) = l.split_once(',').ok_or_else(|| perr(i, "expected `key,value`"))?;
            if k.trim() != key {
                return Err(perr(i, &format!("expected `{key}`")));
            }
            v.trim().parse::<f64>().map(lit).map_err(|_| perr(i, "bad number"))
        };
        let left = named("left_slope")?;
        let right = named("right_slope")?;
        let (i, header) = lines.next().ok_or_else(|| perr(0, "missing knot header"))?;
        if header.trim() != "x,z" {
            return Err(perr(i, "expected `x,z` header"));
        }
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for (i, l) in lines {
            let (a, b) = l.split_once(',').ok_or_else(|| perr(i, "expected `x,z`"))?;
            xs.push(a.trim().parse::<f64>().map(lit).map_err(|_| perr(i, "bad x"))?);
            zs.push(b.trim().parse::<f64>().map(lit).map_err(|_| perr(i, "bad z"))?);
        }
        Self::new(xs, zs, left, right)
    }
}

impl<T: Real> Flow<T> for PiecewiseLinearFlow1D<T> {
    fn dim(&self) -> usize {
        1
    }

    fn forward(&self, x: &[T]) -> Vec<T> {
        vec![self.forward_1d(x[0])]
    }

    fn inverse(&self, z: &[T]) -> Vec<T> {
        vec![self.inverse_1d(z[0])]
    }

    fn abs_det_jacobian(&self, x: &[T]) -> T {
        self.slope_at(x[0])
    }

    fn certify(&self) -> BiLipschitzConstants<T> {
        let slopes = self.all_slopes();
        let max = slopes.iter().copied().fold(T::zero(), T::max);
        let min = slopes.iter().copied().fold(T::infinity(), T::min);
        BiLipschitzConstants::with_certificate(max, T::one() / min, Certificate::SegmentSlopes)
            .expect("slopes are finite and positive")
    }

    fn model_density(&self, x: &[T]) -> T {
        self.density_1d(x[0])
    }
}
