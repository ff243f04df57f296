//! Maximum bipartite matching between counting slots and candidate
//! witnesses, by augmenting paths. Instances are tiny (one slot per
//! successor of a single constant), so the simple algorithm is enough.

/// Size of a maximum matching between `left` slots and `right` candidates,
/// where `adj(i, j)` says slot `i` may be filled by candidate `j`.
pub fn max_matching(left: usize, right: usize, adj: impl Fn(usize, usize) -> bool) -> usize {
    let edges: Vec<Vec<usize>> = (0..left)
        .map(|i| (0..right).filter(|&j| adj(i, j)).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; right];
    let mut size = 0;
    for i in 0..left {
        let mut seen = vec![false; right];
        if augment(i, &edges, &mut owner, &mut seen) {
            size += 1;
        }
    }
    size
}

fn augment(i: usize, edges: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &j in &edges[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        let free = match owner[j] {
            None => true,
            Some(k) => augment(k, edges, owner, seen),
        };
        if free {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}

/// Whether every slot can be assigned a distinct candidate.
pub fn saturates_left(left: usize, right: usize, adj: impl Fn(usize, usize) -> bool) -> bool {
    left <= right && max_matching(left, right, adj) == left
}
