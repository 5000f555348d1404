use serde::Serialize;

use super::group::GroupedDag;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Placement {
    /// Compute units, excluding a dedicated merge unit.
    pub n_units: usize,
    pub unit_of_group: Vec<usize>,
    /// Unit that gathers the output. Equals `n_units` when it is a dedicated
    /// extra unit.
    pub merge_unit: usize,
}

impl Placement {
    pub fn has_dedicated_merge(&self) -> bool {
        self.merge_unit == self.n_units
    }

    /// Units the simulator has to model.
    pub fn total_units(&self) -> usize {
        self.n_units + usize::from(self.has_dedicated_merge())
    }

    pub fn unit_loads(&self, g: &GroupedDag) -> Vec<u64> {
        let mut loads = vec![0u64; self.n_units];
        for (grp, &u) in self.unit_of_group.iter().enumerate() {
            loads[u] += g.group_weights[grp];
        }
        loads
    }

    /// `{"groups": [[...]], "unit_of_group": [...], "merge_unit": m, "n_units": n}`
    pub fn to_json(&self, g: &GroupedDag) -> String {
        serde_json::json!({
            "groups": g.groups,
            "unit_of_group": self.unit_of_group,
            "merge_unit": self.merge_unit,
            "n_units": self.n_units,
        })
        .to_string()
    }
}

/// Longest-processing-time assignment: heaviest group first onto the least
/// loaded unit, lower group and unit indices winning ties.
pub fn place_greedy(g: &GroupedDag, n: usize, dedicated_merge: bool) -> Result<Placement> {
    if n == 0 {
        return Err(Error::config("placement needs at least one unit"));
    }
    let mut order: Vec<usize> = (0..g.n_groups()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(g.group_weights[i]), i));
    let mut loads = vec![0u64; n];
    let mut unit_of_group = vec![0; g.n_groups()];
    for i in order {
        let u = (0..n).min_by_key(|&u| (loads[u], u)).expect("n >= 1");
        unit_of_group[i] = u;
        loads[u] += g.group_weights[i];
    }
    Ok(Placement {
        n_units: n,
        unit_of_group,
        merge_unit: if dedicated_merge { n } else { 0 },
    })
}

/// Normalized Shannon entropy of unit loads, `-sum f ln f / ln n`.
pub fn balance_entropy(p: &Placement, g: &GroupedDag) -> Result<f64> {
    entropy_of_loads(&p.unit_loads(g))
}

pub fn entropy_of_loads(loads: &[u64]) -> Result<f64> {
    if loads.len() < 2 {
        return Err(Error::config("balance entropy needs at least two units"));
    }
    let total: u64 = loads.iter().sum();
    if total == 0 {
        return Ok(1.0);
    }
    let h: f64 = loads
        .iter()
        .filter(|&&w| w > 0)
        .map(|&w| {
            let f = w as f64 / total as f64;
            -f * f.ln()
        })
        .sum();
    Ok(h / (loads.len() as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dagify::ArchDag;
    use crate::deploy::{group_chains, Workload};

    fn groups_with_weights(weights: &[u64]) -> GroupedDag {
        let dag = ArchDag::parallel(weights.len());
        let mut flops = weights.to_vec();
        flops.extend([0, 0]);
        let n = dag.n_vertices();
        group_chains(&Workload::new(dag, flops, vec![1; n]).unwrap())
    }

    #[test]
    fn lpt_hand_trace() {
        let g = groups_with_weights(&[5, 3, 3, 1]);
        let p = place_greedy(&g, 2, false).unwrap();
        assert_eq!(p.unit_of_group, vec![0, 1, 1, 0]);
        assert_eq!(p.unit_loads(&g), vec![6, 6]);
    }

    #[test]
    fn equal_groups_spread_evenly() {
        let g = groups_with_weights(&[4, 4, 4, 4]);
        let p = place_greedy(&g, 4, false).unwrap();
        assert_eq!(p.unit_of_group, vec![0, 1, 2, 3]);
        assert_eq!(balance_entropy(&p, &g).unwrap(), 1.0);
        let one = place_greedy(&g, 1, false).unwrap();
        assert!(one.unit_of_group.iter().all(|&u| u == 0));
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_of_loads(&[9, 0, 0, 0]).unwrap(), 0.0);
        assert!((entropy_of_loads(&[3, 1]).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert_eq!(entropy_of_loads(&[0, 0]).unwrap(), 1.0);
        assert!(entropy_of_loads(&[1]).is_err());
    }

    #[test]
    fn dedicated_merge_unit() {
        let g = groups_with_weights(&[1, 1]);
        let p = place_greedy(&g, 2, true).unwrap();
        assert_eq!(p.merge_unit, 2);
        assert_eq!(p.total_units(), 3);
        let json: serde_json::Value = serde_json::from_str(&p.to_json(&g)).unwrap();
        assert_eq!(json["unit_of_group"], serde_json::json!([0, 1]));
    }
}
