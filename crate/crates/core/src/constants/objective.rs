//! Objectives for the branch and bound: ratios of block integrals.

use super::bnb::BoxObjective;
use super::span::{max_weighted_average, SpanData};

/// Objectives built from block averages of one or two tracked quantities.
pub(crate) enum RatioObjective {
    /// `X/m`, the average of the single tracked quantity.
    Average,
    /// `(X/m) (Y/m)^(p-1)` with `X = ∫w`, `Y = ∫σ`.
    Ap { p: f64 },
    /// `(X/m) exp(Z/m)` with `Z = ∫ log(1/w)`.
    Exp,
}

/// Closed interval arithmetic for the centered-form bound.
#[derive(Debug, Clone, Copy)]
struct Iv(f64, f64);

impl Iv {
    fn of(r: (f64, f64)) -> Iv {
        Iv(r.0, r.1)
    }
    fn add(self, o: Iv) -> Iv {
        Iv(self.0 + o.0, self.1 + o.1)
    }
    fn scale(self, k: f64) -> Iv {
        if k >= 0.0 {
            Iv(self.0 * k, self.1 * k)
        } else {
            Iv(self.1 * k, self.0 * k)
        }
    }
    fn mul(self, o: Iv) -> Iv {
        let c = [self.0 * o.0, self.0 * o.1, self.1 * o.0, self.1 * o.1];
        Iv(c.iter().copied().fold(f64::INFINITY, f64::min), c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }
    /// Division by an interval with positive lower end.
    fn div(self, o: Iv) -> Iv {
        self.mul(Iv(1.0 / o.1, 1.0 / o.0))
    }
    fn magnitude(self) -> f64 {
        self.0.abs().max(self.1.abs())
    }
}

impl RatioObjective {
    fn quantities(&self) -> usize {
        match self {
            RatioObjective::Average => 1,
            _ => 2,
        }
    }

    fn combine(&self, a: f64, b: f64) -> f64 {
        match self {
            RatioObjective::Average => a,
            RatioObjective::Ap { p } => a * b.powf(p - 1.0),
            RatioObjective::Exp => a * b.exp(),
        }
    }

    /// Bound on `sup |∂_i f|` over the box. `v` holds the ranges of
    /// `(m, X[, Y])`, `g` those of their derivatives in parameter `i`, and
    /// `f_hi` an upper bound of `f` on the box. `None` when some
    /// denominator can vanish.
    fn gradient_magnitude(&self, v: &[(f64, f64)], g: &[(f64, f64)], f_hi: f64) -> Option<f64> {
        let m = Iv::of(v[0]);
        if m.0 <= 0.0 {
            return None;
        }
        let (x, dm, dx) = (Iv::of(v[1]), Iv::of(g[0]), Iv::of(g[1]));
        let out = match self {
            // ∂(X/m) = (X_i - (X/m) m_i) / m
            RatioObjective::Average => dx.add(x.div(m).mul(dm).scale(-1.0)).div(m).magnitude(),
            // ∂ log f = X_i/X + (p-1) Y_i/Y - p m_i/m
            RatioObjective::Ap { p } => {
                let (y, dy) = (Iv::of(v[2]), Iv::of(g[2]));
                if x.0 <= 0.0 || y.0 <= 0.0 {
                    return None;
                }
                f_hi * dx.div(x).add(dy.div(y).scale(p - 1.0)).add(dm.div(m).scale(-p)).magnitude()
            }
            // ∂ log f = X_i/X - m_i/m + (Z_i - (Z/m) m_i)/m
            RatioObjective::Exp => {
                let (z, dz) = (Iv::of(v[2]), Iv::of(g[2]));
                if x.0 <= 0.0 {
                    return None;
                }
                let zbar = z.div(m);
                f_hi * dx
                    .div(x)
                    .add(dm.div(m).scale(-1.0))
                    .add(dz.add(zbar.mul(dm).scale(-1.0)).div(m))
                    .magnitude()
            }
        };
        out.is_finite().then_some(out)
    }

    /// First-order bound: independent weighted averages of each ratio.
    fn average_bound(&self, span: &SpanData, b: &[(f64, f64)]) -> f64 {
        let nq = self.quantities();
        let mut lists: Vec<Vec<(f64, f64, f64)>> = vec![Vec::with_capacity(span.blocks.len()); nq];
        for blk in &span.blocks {
            if blk.mass <= 0.0 {
                continue;
            }
            let (lo, hi) = span.coefficient_range(blk, b);
            for (q, list) in lists.iter_mut().enumerate() {
                list.push((blk.sums[q] / blk.mass, lo * blk.mass, hi * blk.mass));
            }
        }
        let a = max_weighted_average(&mut lists[0]);
        let c = if nq > 1 { max_weighted_average(&mut lists[1]) } else { 0.0 };
        if a == f64::NEG_INFINITY || c == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.combine(a, c)
    }
}

impl BoxObjective for RatioObjective {
    fn value(&self, span: &SpanData, x: &[f64]) -> Option<f64> {
        let mut sums = [0.0; 2];
        let nq = self.quantities();
        let m = span.evaluate(x, &mut sums[..nq]);
        (m > 0.0).then(|| self.combine(sums[0] / m, sums[1] / m))
    }

    /// The smaller of the first-order bound and a centered (mean value)
    /// form `f(c) + Σ_i h_i sup|∂_i f|`, whose excess is quadratic in the
    /// box width near an interior maximum where the gradient vanishes.
    fn bound(&self, span: &SpanData, b: &[(f64, f64)]) -> f64 {
        let first = self.average_bound(span, b);
        if !first.is_finite() || span.dim == 0 {
            return first;
        }
        let (vr, gr) = span.corner_ranges(b);
        let c: Vec<f64> = b.iter().map(|(l, h)| 0.5 * (l + h)).collect();
        let Some(fc) = self.value(span, &c) else { return first };
        let d = span.dim;
        let slots = self.quantities() + 1;
        let mut centered = fc;
        for (i, (l, h)) in b.iter().enumerate() {
            let g: Vec<(f64, f64)> = (0..slots).map(|q| gr[q * d + i]).collect();
            match self.gradient_magnitude(&vr, &g, first.max(0.0)) {
                Some(mag) => centered += 0.5 * (h - l) * mag,
                None => return first,
            }
        }
        first.min(centered)
    }
}
