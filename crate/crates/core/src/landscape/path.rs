use serde::Serialize;

use super::dropout::half_split;
use crate::datagen::{pool_risk, Pool};
use crate::model::{Network, Objective, Params2L};
use crate::{Error, Result};

/// Segments in the two-layer construction.
pub const PATH_SEGMENTS: usize = 5;

/// Continuous piecewise-linear path given by its segment endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec<N> {
    segments: Vec<(N, N)>,
}

impl<N: Network> PathSpec<N> {
    /// Rejects empty paths, shape changes and knots that differ by more than `1e-12`.
    pub fn new(segments: Vec<(N, N)>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::invalid("a path needs at least one segment"));
        };
        for (i, (a, b)) in segments.iter().enumerate() {
            if !a.same_shape(&first.0) || !b.same_shape(&first.0) {
                return Err(Error::invalid(format!("segment {i} changes the parameter shape")));
            }
            if let Some((_, next)) = segments.get(i + 1).map(|s| (b, &s.0)) {
                let gap = b
                    .as_slice()
                    .iter()
                    .zip(next.as_slice())
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                if !(gap <= 1e-12) {
                    return Err(Error::invalid(format!("knot {} is discontinuous (gap {gap:e})", i + 1)));
                }
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[(N, N)] {
        &self.segments
    }

    pub fn start(&self) -> &N {
        &self.segments[0].0
    }

    pub fn end(&self) -> &N {
        &self.segments[self.segments.len() - 1].1
    }

    /// Point `i` of `steps` uniformly spaced points on segment `seg`.
    ///
    /// Weights are formed from integers, so `i = 0` and `i = steps − 1` return
    /// the knots exactly and a reversed path visits bit-identical points.
    pub fn point(&self, seg: usize, i: usize, steps: usize) -> N {
        let (a, b) = &self.segments[seg];
        let last = (steps - 1) as f64;
        let (wa, wb) = ((steps - 1 - i) as f64 / last, i as f64 / last);
        let mut out = a.clone();
        for (o, (x, y)) in out.as_mut_slice().iter_mut().zip(a.as_slice().iter().zip(b.as_slice())) {
            *o = wa * x + wb * y;
        }
        out
    }

    pub fn reversed(&self) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .rev()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }
}

/// Five-segment path from `w` to `w_prime` through dropout networks.
///
/// With `A` a seeded half of `[n]` and `Aᶜ` its complement the knots are
/// 1. `w` with `w2` zero on `Aᶜ` and doubled on `A` (the dropout network `w_A`);
/// 2. first-layer rows of `Aᶜ`, which are inert, replaced by those of `w_prime`;
/// 3. output weight moved from `A` to `Aᶜ`, giving `w_prime` dropped to `Aᶜ`;
/// 4. inert rows of `A` replaced by those of `w_prime`;
/// 5. `w_prime`.
///
/// Along each segment the output is an average of the knot outputs.
pub fn build_path_2l(w: &Params2L, w_prime: &Params2L, seed: u64) -> Result<PathSpec<Params2L>> {
    if !w.same_shape(w_prime) {
        return Err(Error::invalid("path endpoints must have equal shapes"));
    }
    let (a, ac) = half_split(w.width(), seed)?;
    let k0 = w.clone();
    let mut k1 = w.clone();
    for &j in &ac {
        k1.w2_mut()[j] = 0.0;
    }
    for &j in &a {
        k1.w2_mut()[j] *= 2.0;
    }
    let mut k2 = k1.clone();
    for &j in &ac {
        k2.w1_row_mut(j).copy_from_slice(w_prime.w1_row(j));
    }
    let mut k3 = k2.clone();
    for &j in &a {
        k3.w2_mut()[j] = 0.0;
    }
    for &j in &ac {
        k3.w2_mut()[j] = 2.0 * w_prime.w2()[j];
    }
    let mut k4 = k3.clone();
    for &j in &a {
        k4.w1_row_mut(j).copy_from_slice(w_prime.w1_row(j));
    }
    let k5 = w_prime.clone();
    PathSpec::new(vec![
        (k0, k1.clone()),
        (k1, k2.clone()),
        (k2, k3.clone()),
        (k3, k4.clone()),
        (k4, k5),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    pub segment: usize,
    /// Position within the segment, in `[0, 1]`.
    pub t: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRisk {
    pub points: Vec<PathPoint>,
    pub start_risk: f64,
    pub end_risk: f64,
    pub max_risk: f64,
    /// `max risk − max(start, end)`, floored at zero.
    pub eps_c: f64,
}

/// Pool risk at `steps ≥ 2` uniform points per segment, knots included.
pub fn risk_along_path<N: Network>(path: &PathSpec<N>, pool: &Pool, obj: &Objective, steps: usize) -> Result<PathRisk> {
    if steps < 2 {
        return Err(Error::invalid("at least two points per segment are required"));
    }
    let mut points = Vec::with_capacity(path.segments.len() * steps);
    for seg in 0..path.segments.len() {
        for i in 0..steps {
            let risk = pool_risk(&path.point(seg, i, steps), pool, obj);
            if !risk.is_finite() {
                return Err(Error::NonFinite {
                    step: i as u64,
                    coordinate: seg,
                    context: "path risk",
                });
            }
            points.push(PathPoint {
                segment: seg,
                t: i as f64 / (steps - 1) as f64,
                risk,
            });
        }
    }
    let start_risk = pool_risk(path.start(), pool, obj);
    let end_risk = pool_risk(path.end(), pool, obj);
    let max_risk = points.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.risk));
    Ok(PathRisk {
        eps_c: (max_risk - start_risk.max(end_risk)).max(0.0),
        points,
        start_risk,
        end_risk,
        max_risk,
    })
}
