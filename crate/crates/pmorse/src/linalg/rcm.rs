//! Reverse Cuthill-McKee ordering.
//!
//! The polar meshes produce ring-major node numbering whose bandwidth is the
//! ring size; RCM reorders along the short direction and keeps the LDL' fill
//! proportional to the mesh width.

use super::sparse::Csr;

/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(pattern: &Csr) -> Vec<usize> {
    let n = pattern.n;
    let degree = |i: usize| pattern.indptr[i + 1] - pattern.indptr[i];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut visited = vec![false; n];

    let component_seed = |visited: &[bool]| -> Option<usize> {
        (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree(i), i))
    };

    while let Some(seed) = component_seed(&visited) {
        let start = pseudo_peripheral(pattern, seed);
        // Cuthill-McKee BFS, neighbors in ascending degree
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let (cols, _) = pattern.row(u);
            let mut nbrs: Vec<usize> = cols.iter().copied().filter(|&v| v != u && !visited[v]).collect();
            nbrs.sort_unstable_by_key(|&v| (degree(v), v));
            for v in nbrs {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Two-sweep heuristic: BFS from `seed`, restart from a min-degree node of
/// the last level.
fn pseudo_peripheral(pattern: &Csr, seed: usize) -> usize {
    let mut start = seed;
    for _ in 0..2 {
        let levels = bfs_levels(pattern, start);
        let max_level = *levels.iter().filter(|&&l| l != usize::MAX).max().unwrap_or(&0);
        let candidate = (0..pattern.n)
            .filter(|&i| levels[i] == max_level)
            .min_by_key(|&i| (pattern.indptr[i + 1] - pattern.indptr[i], i));
        match candidate {
            Some(c) if c != start => start = c,
            _ => break,
        }
    }
    start
}

fn bfs_levels(pattern: &Csr, start: usize) -> Vec<usize> {
    let mut levels = vec![usize::MAX; pattern.n];
    let mut queue = std::collections::VecDeque::new();
    levels[start] = 0;
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        let (cols, _) = pattern.row(u);
        for &v in cols {
            if levels[v] == usize::MAX {
                levels[v] = levels[u] + 1;
                queue.push_back(v);
            }
        }
    }
    levels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_bandwidth_one() {
        // path 0-1-2-3-4 entered in scrambled order
        let mut t = Vec::new();
        for (i, j) in [(0usize, 1usize), (1, 2), (2, 3), (3, 4)] {
            t.push((i, j, 1.0));
            t.push((j, i, 1.0));
        }
        for i in 0..5 {
            t.push((i, i, 2.0));
        }
        let a = Csr::from_triplets(5, &mut t);
        let perm = reverse_cuthill_mckee(&a);
        let mut iperm = vec![0; 5];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut bw = 0usize;
        for i in 0..5 {
            let (cols, _) = a.row(i);
            for &j in cols {
                bw = bw.max(iperm[i].abs_diff(iperm[j]));
            }
        }
        assert_eq!(bw, 1);
    }
}
