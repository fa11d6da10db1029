use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::model::{Params2L, Params3L};
use crate::numeric::{euclidean_distance, CompensatedSum};
use crate::{Error, Result};

/// `D_T` on a shared snapshot grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub metric: String,
    pub times: Vec<f64>,
    /// Max over units at each grid time.
    pub values: Vec<f64>,
    /// Max of `values`.
    pub sup: f64,
    /// Grid position of the supremum.
    pub argmax_time: usize,
    /// Parameter block of the worst unit: `neuron`, `w1`, `w2` or `w3`.
    pub argmax_component: &'static str,
    /// Index of the worst unit within its block (`[j]` or `[j1, j2]`).
    pub argmax_unit: Vec<usize>,
}

/// Reference indices `C1(j1)`, `C2(j2)` of a finite three-layer network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexMaps {
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
}

impl IndexMaps {
    pub fn identity(n1: usize, n2: usize) -> Self {
        Self {
            c1: (0..n1).collect(),
            c2: (0..n2).collect(),
        }
    }
}

struct Worst {
    value: f64,
    component: &'static str,
    unit: Vec<usize>,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            component: "neuron",
            unit: vec![0],
        }
    }

    fn offer(&mut self, value: f64, component: &'static str, unit: &[usize]) {
        if value > self.value {
            self.value = value;
            self.component = component;
            self.unit = unit.to_vec();
        }
    }
}

fn check_grids<A, B>(a: &Trajectory<A>, b: &Trajectory<B>) -> Result<()> {
    if a.steps != b.steps || a.eps != b.eps {
        return Err(Error::invalid("trajectories are recorded on different grids"));
    }
    if a.steps.is_empty() {
        return Err(Error::invalid("trajectories are empty"));
    }
    Ok(())
}

fn assemble(metric: &str, times: Vec<f64>, per_time: Vec<Worst>) -> DistanceReport {
    let mut best = 0;
    for (i, w) in per_time.iter().enumerate() {
        if w.value > per_time[best].value {
            best = i;
        }
    }
    DistanceReport {
        metric: metric.to_string(),
        times,
        values: per_time.iter().map(|w| w.value).collect(),
        sup: per_time[best].value,
        argmax_time: best,
        argmax_component: per_time[best].component,
        argmax_unit: per_time[best].unit.clone(),
    }
}

fn times<N>(t: &Trajectory<N>) -> Vec<f64> {
    t.steps.iter().map(|&k| k as f64 * t.eps).collect()
}

/// `max_j sup_t ‖θ^A(t, j) − θ^B(t, j)‖₂` over neurons `(w1(j), w2(j))`.
pub fn dist_2l(a: &Trajectory<Params2L>, b: &Trajectory<Params2L>, metric: &str) -> Result<DistanceReport> {
    check_grids(a, b)?;
    let mut per_time = Vec::with_capacity(a.len());
    for (wa, wb) in a.snapshots.iter().zip(&b.snapshots) {
        if wa.width() != wb.width() || wa.w1().len() != wb.w1().len() {
            return Err(Error::DimensionMismatch {
                what: "trajectory width",
                expected: wa.width(),
                found: wb.width(),
            });
        }
        let mut worst = Worst::new();
        for j in 0..wa.width() {
            let mut s = CompensatedSum::new();
            for (x, y) in wa.w1_row(j).iter().zip(wb.w1_row(j)) {
                s.add((x - y) * (x - y));
            }
            let d2 = wa.w2()[j] - wb.w2()[j];
            s.add(d2 * d2);
            worst.offer(s.value().sqrt(), "neuron", &[j]);
        }
        per_time.push(worst);
    }
    Ok(assemble(metric, times(a), per_time))
}

/// Three-layer `D_T`: the reference side is read at `(C1(j1), C2(j2))`.
///
/// Each time takes the max of the first-layer row distances, the second-layer
/// entry distances and the third-layer entry distances.
pub fn dist_3l(
    reference: &Trajectory<Params3L>,
    finite: &Trajectory<Params3L>,
    maps: &IndexMaps,
    metric: &str,
) -> Result<DistanceReport> {
    check_grids(reference, finite)?;
    let mut per_time = Vec::with_capacity(finite.len());
    for (r, f) in reference.snapshots.iter().zip(&finite.snapshots) {
        let (n1, n2) = f.widths();
        let (r1, r2) = r.widths();
        if maps.c1.len() != n1 || maps.c2.len() != n2 {
            return Err(Error::invalid("index maps do not match the finite widths"));
        }
        if let Some(&j) = maps.c1.iter().find(|&&j| j >= r1) {
            return Err(Error::invalid(format!("C1 index {j} out of range for width {r1}")));
        }
        if let Some(&j) = maps.c2.iter().find(|&&j| j >= r2) {
            return Err(Error::invalid(format!("C2 index {j} out of range for width {r2}")));
        }
        let mut worst = Worst::new();
        for j1 in 0..n1 {
            let c1 = maps.c1[j1];
            worst.offer(euclidean_distance(f.w1_row(j1), r.w1_row(c1)), "w1", &[j1]);
            for j2 in 0..n2 {
                let d = (f.w2_at(j1, j2) - r.w2_at(c1, maps.c2[j2])).abs();
                worst.offer(d, "w2", &[j1, j2]);
            }
        }
        for j2 in 0..n2 {
            worst.offer((f.w3()[j2] - r.w3()[maps.c2[j2]]).abs(), "w3", &[j2]);
        }
        per_time.push(worst);
    }
    Ok(assemble(metric, times(finite), per_time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Network;

    fn traj2(snaps: Vec<Params2L>) -> Trajectory<Params2L> {
        Trajectory {
            eps: 0.1,
            steps: (0..snaps.len() as u64).collect(),
            snapshots: snaps,
        }
    }

    #[test]
    fn translation_gives_per_neuron_norm() {
        let a = Params2L::new(vec![1.0, 2.0, -1.0, 0.5], vec![0.3, -0.2], 2).unwrap();
        let mut b = a.clone();
        b.as_mut_slice().iter_mut().for_each(|v| *v += 0.5);
        let r = dist_2l(&traj2(vec![a.clone(), a.clone()]), &traj2(vec![a.clone(), b]), "x").unwrap();
        assert!((r.sup - (3.0f64 * 0.25).sqrt()).abs() < 1e-15);
        assert_eq!(r.values[0], 0.0);
        assert_eq!(r.argmax_time, 1);
        let same = dist_2l(&traj2(vec![a.clone()]), &traj2(vec![a]), "x").unwrap();
        assert_eq!(same.sup, 0.0);
    }

    #[test]
    fn grid_and_width_mismatch_rejected() {
        let a = Params2L::zeros(2, 2);
        let b = Params2L::zeros(3, 2);
        assert!(dist_2l(&traj2(vec![a.clone()]), &traj2(vec![b]), "x").is_err());
        assert!(dist_2l(&traj2(vec![a.clone()]), &traj2(vec![a.clone(), a]), "x").is_err());
    }

    #[test]
    fn only_output_layer_differs() {
        let a = Params3L::new(vec![0.1, 0.2, 0.3, 0.4], vec![1.0, 2.0, 3.0, 4.0], vec![0.5, -0.5], 2).unwrap();
        let mut b = a.clone();
        b.w3_mut()[1] += 0.25;
        let t = |p: Params3L| Trajectory {
            eps: 0.1,
            steps: vec![0],
            snapshots: vec![p],
        };
        let maps = IndexMaps::identity(2, 2);
        let r = dist_3l(&t(a.clone()), &t(b), &maps, "x").unwrap();
        assert_eq!(r.sup, 0.25);
        assert_eq!((r.argmax_component, r.argmax_unit.clone()), ("w3", vec![1]));
        assert_eq!(dist_3l(&t(a.clone()), &t(a.clone()), &maps, "x").unwrap().sup, 0.0);
        let bad = IndexMaps {
            c1: vec![0, 2],
            c2: vec![0, 1],
        };
        assert!(dist_3l(&t(a.clone()), &t(a), &bad, "x").is_err());
    }
}
