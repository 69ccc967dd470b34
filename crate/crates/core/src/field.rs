//! Scalar fields on R^d and exact interval arithmetic along lines.
//!
//! Everything that has a superlevel set implements [`Field`]: analytic
//! models, kernel density estimates and their adapters. Integrators only
//! ever ask a field for its superlevel set restricted to a line segment,
//! returned as sorted disjoint closed intervals of the line parameter.

/// Closed interval `[lo, hi]` of a line parameter.
pub type Interval = (f64, f64);

pub trait Field: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// A radius around `center` outside of which `value < level` for
    /// `level > 0`; `None` when no such bound is known.
    fn superlevel_radius(&self, center: &[f64], level: f64) -> Option<f64>;

    /// Smallest length scale of the field; the generic line search samples
    /// at an eighth of it.
    fn resolution(&self) -> f64;

    /// `∫ value`, when known.
    fn total_mass(&self) -> Option<f64> {
        None
    }

    /// Nominal sample size and volume bandwidth of an estimate.
    fn sample_info(&self) -> Option<(usize, f64)> {
        None
    }

    /// `{t ∈ [t0, t1] : value(origin + t·dir) ≥ level}` as sorted disjoint
    /// intervals.
    fn superlevel_on_line(
        &self,
        origin: &[f64],
        dir: &[f64],
        t0: f64,
        t1: f64,
        level: f64,
    ) -> Vec<Interval> {
        sampled_superlevel(self, origin, dir, t0, t1, level)
    }
}

const MAX_LINE_SAMPLES: usize = 1 << 20;

/// Generic line search: samples at `resolution/8` and bisects every sign
/// change of `value − level` to 60 iterations.
pub fn sampled_superlevel<F: Field + ?Sized>(
    field: &F,
    origin: &[f64],
    dir: &[f64],
    t0: f64,
    t1: f64,
    level: f64,
) -> Vec<Interval> {
    if t1 <= t0 {
        return Vec::new();
    }
    let dir_norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let step_t = field.resolution() / 8.0 / dir_norm;
    let steps = (((t1 - t0) / step_t).ceil() as usize).clamp(1, MAX_LINE_SAMPLES);
    let mut x = vec![0.0; origin.len()];
    let mut inside = |t: f64| {
        for ((xi, o), d) in x.iter_mut().zip(origin).zip(dir) {
            *xi = o + t * d;
        }
        field.value(&x) >= level
    };
    let mut out = Vec::new();
    let mut prev_t = t0;
    let mut prev_in = inside(t0);
    let mut start = if prev_in { Some(t0) } else { None };
    for j in 1..=steps {
        let t = if j == steps { t1 } else { t0 + (t1 - t0) * j as f64 / steps as f64 };
        let cur_in = inside(t);
        if cur_in != prev_in {
            // invariant: inside(lo) == prev_in, inside(hi) == cur_in
            let (mut lo, mut hi) = (prev_t, t);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) == prev_in {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if cur_in {
                start = Some(hi);
            } else if let Some(s) = start.take() {
                out.push((s, lo));
            }
        }
        prev_t = t;
        prev_in = cur_in;
    }
    if let Some(s) = start {
        out.push((s, t1));
    }
    out
}

/// `value − shift`: the superlevel set at `level` is that of the wrapped
/// field at `level + shift`.
pub struct ShiftedField<'a> {
    pub inner: &'a dyn Field,
    pub shift: f64,
}

impl Field for ShiftedField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x) - self.shift
    }

    fn superlevel_radius(&self, center: &[f64], level: f64) -> Option<f64> {
        self.inner.superlevel_radius(center, level + self.shift)
    }

    fn resolution(&self) -> f64 {
        self.inner.resolution()
    }

    fn sample_info(&self) -> Option<(usize, f64)> {
        self.inner.sample_info()
    }

    fn superlevel_on_line(
        &self,
        origin: &[f64],
        dir: &[f64],
        t0: f64,
        t1: f64,
        level: f64,
    ) -> Vec<Interval> {
        self.inner.superlevel_on_line(origin, dir, t0, t1, level + self.shift)
    }
}

/// Symmetric difference of two sorted disjoint interval lists, as pieces
/// tagged with the list they belong to (`true` for `a \ b`).
pub fn symmetric_difference(a: &[Interval], b: &[Interval]) -> Vec<(Interval, bool)> {
    // sweep over all endpoints with the parity of membership in each list
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * (a.len() + b.len()));
    for &(lo, hi) in a.iter().chain(b) {
        cuts.push(lo);
        cuts.push(hi);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out: Vec<(Interval, bool)> = Vec::new();
    let (mut ia, mut ib) = (0, 0);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        while ia < a.len() && a[ia].1 < mid {
            ia += 1;
        }
        while ib < b.len() && b[ib].1 < mid {
            ib += 1;
        }
        let in_a = ia < a.len() && a[ia].0 <= mid;
        let in_b = ib < b.len() && b[ib].0 <= mid;
        if in_a != in_b {
            match out.last_mut() {
                Some(((_, last_hi), tag)) if *last_hi == lo && *tag == in_a => *last_hi = hi,
                _ => out.push(((lo, hi), in_a)),
            }
        }
    }
    out
}

/// Intersection of two sorted disjoint interval lists.
pub fn intersection(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Total length.
pub fn measure(a: &[Interval]) -> f64 {
    a.iter().map(|(lo, hi)| hi - lo).sum()
}

/// Number of interval endpoints strictly inside `(t0, t1)`.
pub fn boundary_count(a: &[Interval], t0: f64, t1: f64) -> usize {
    a.iter()
        .map(|&(lo, hi)| usize::from(lo > t0) + usize::from(hi < t1))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn normalize(mut raw: Vec<(f64, f64)>) -> Vec<Interval> {
        for iv in raw.iter_mut() {
            if iv.1 < iv.0 {
                *iv = (iv.1, iv.0);
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<Interval> = Vec::new();
        for (lo, hi) in raw {
            match out.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        out.retain(|(lo, hi)| hi > lo);
        out
    }

    fn indicator(a: &[Interval], t: f64) -> bool {
        a.iter().any(|&(lo, hi)| lo <= t && t <= hi)
    }

    proptest! {
        #[test]
        fn symdiff_matches_pointwise(
            a in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 0..6),
            b in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 0..6),
            probes in prop::collection::vec(-10.0f64..10.0, 50),
        ) {
            let a = normalize(a);
            let b = normalize(b);
            let d = symmetric_difference(&a, &b);
            for &t in &probes {
                let on_edge = a.iter().chain(&b).any(|&(lo, hi)| t == lo || t == hi);
                if on_edge { continue; }
                let expect = indicator(&a, t) != indicator(&b, t);
                let got: Vec<_> = d.iter().filter(|((lo, hi), _)| *lo < t && t < *hi).collect();
                prop_assert_eq!(got.len(), usize::from(expect));
                if let Some((_, tag)) = got.first() {
                    prop_assert_eq!(*tag, indicator(&a, t));
                }
            }
            let len: f64 = d.iter().map(|((lo, hi), _)| hi - lo).sum();
            let inter = measure(&intersection(&a, &b));
            prop_assert!((len - (measure(&a) + measure(&b) - 2.0 * inter)).abs() < 1e-9);
        }
    }

    struct Bump;
    impl Field for Bump {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            (1.0 - x[0] * x[0]).max(0.0)
        }
        fn superlevel_radius(&self, _: &[f64], _: f64) -> Option<f64> {
            Some(1.0)
        }
        fn resolution(&self) -> f64 {
            0.1
        }
    }

    #[test]
    fn sampled_search_locates_crossings() {
        let iv = Bump.superlevel_on_line(&[0.0], &[1.0], -3.0, 3.0, 0.75);
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 0.5).abs() < 1e-12 && (iv[0].1 - 0.5).abs() < 1e-12);
        assert!(Bump.superlevel_on_line(&[0.0], &[1.0], -3.0, 3.0, 2.0).is_empty());
        assert_eq!(boundary_count(&iv, -3.0, 3.0), 2);
    }
}
