#![allow(dead_code)]

use mps_core::{Dataset, MpsList, VarSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples `m` rows from a random sparse network over `n` variables.
///
/// Each variable gets at most `max_parents` parents among variables earlier
/// in a random topological order. Conditional distributions put most mass on
/// one state per parent configuration so dependencies are detectable.
#[allow(clippy::needless_range_loop)]
pub fn random_dataset(seed: u64, n: usize, m: usize, arity: (usize, usize), max_parents: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arities: Vec<usize> = (0..n).map(|_| rng.gen_range(arity.0..=arity.1)).collect();
    let mut topo: Vec<usize> = (0..n).collect();
    topo.shuffle(&mut rng);

    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, &v) in topo.iter().enumerate() {
        let k = rng.gen_range(0..=max_parents.min(pos));
        let mut pool = topo[..pos].to_vec();
        pool.shuffle(&mut rng);
        parents[v] = pool.into_iter().take(k).collect();
    }

    // One categorical distribution per (variable, parent configuration).
    let mut cpts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
    for v in 0..n {
        let configs: usize = parents[v].iter().map(|&p| arities[p]).product();
        let r = arities[v];
        let table = (0..configs)
            .map(|_| {
                let peak = rng.gen_range(0..r);
                let strength = rng.gen_range(0.3..0.9);
                (0..r)
                    .map(|x| {
                        let base = (1.0 - strength) / r as f64;
                        if x == peak { base + strength } else { base }
                    })
                    .collect()
            })
            .collect();
        cpts.push(table);
    }

    let mut columns = vec![vec![0u32; m]; n];
    for row in 0..m {
        for &v in &topo {
            let mut config = 0;
            for &p in &parents[v] {
                config = config * arities[p] + columns[p][row] as usize;
            }
            let dist = &cpts[v][config];
            let mut u: f64 = rng.gen();
            let mut x = dist.len() - 1;
            for (i, &p) in dist.iter().enumerate() {
                if u < p {
                    x = i;
                    break;
                }
                u -= p;
            }
            columns[v][row] = x as u32;
        }
    }
    from_raw(columns)
}

/// Builds a dataset, recoding every column by first appearance.
pub fn from_raw(columns: Vec<Vec<u32>>) -> Dataset {
    let columns: Vec<Vec<u32>> = columns
        .into_iter()
        .map(|col| {
            let mut seen: Vec<u32> = Vec::new();
            col.iter()
                .map(|x| match seen.iter().position(|s| s == x) {
                    Some(i) => i as u32,
                    None => {
                        seen.push(*x);
                        seen.len() as u32 - 1
                    }
                })
                .collect()
        })
        .collect();
    let names = (0..columns.len()).map(|i| format!("X{i}")).collect();
    Dataset::from_columns(names, columns, None).unwrap()
}

/// Compares engine lists with oracle lists as sets, scores to `tol`.
pub fn lists_match(engine: &[MpsList<f64>], oracle: &[Vec<(VarSet, f64)>], tol: f64) -> Result<(), String> {
    if engine.len() != oracle.len() {
        return Err(format!("{} lists vs {}", engine.len(), oracle.len()));
    }
    for (var, (e, o)) in engine.iter().zip(oracle).enumerate() {
        let mut a: Vec<(VarSet, f64)> = e.entries().iter().map(|x| (x.parents, x.score)).collect();
        let mut b = o.clone();
        a.sort_by_key(|x| x.0);
        b.sort_by_key(|x| x.0);
        let sa: Vec<VarSet> = a.iter().map(|x| x.0).collect();
        let sb: Vec<VarSet> = b.iter().map(|x| x.0).collect();
        if sa != sb {
            return Err(format!("variable {var}: engine {sa:?} oracle {sb:?}"));
        }
        for (x, y) in a.iter().zip(&b) {
            if (x.1 - y.1).abs() > tol {
                return Err(format!("variable {var} set {:?}: {} vs {}", x.0, x.1, y.1));
            }
        }
        if e.entries().iter().any(|x| x.flagged) {
            return Err(format!("variable {var}: flagged entry left after verification"));
        }
    }
    Ok(())
}
