//! Perfect-matching feasibility on small graphs stored as `u64` adjacency
//! bitmasks.

use petgraph::algo::maximum_matching;
use petgraph::graph::UnGraph;

/// Whether the subgraph induced by `mask` has a perfect matching.
///
/// `adj[v]` holds the neighbours of `v`; bits outside `mask` are ignored.
pub(crate) fn has_perfect_matching(adj: &[u64], mask: u64) -> bool {
    let m = mask.count_ones();
    if m == 0 {
        return true;
    }
    if m % 2 == 1 {
        return false;
    }
    let mut min_degree = u32::MAX;
    let mut bits = mask;
    while bits != 0 {
        let v = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        min_degree = min_degree.min((adj[v] & mask).count_ones());
    }
    if min_degree == 0 {
        return false;
    }
    // Dirac: minimum degree >= m/2 gives a Hamiltonian cycle, hence a
    // perfect matching on an even vertex count.
    if 2 * min_degree >= m {
        return true;
    }
    maximum_matching_is_perfect(adj, mask)
}

fn maximum_matching_is_perfect(adj: &[u64], mask: u64) -> bool {
    let vertices: Vec<usize> = (0..64).filter(|&v| mask >> v & 1 == 1).collect();
    let mut local = [usize::MAX; 64];
    for (i, &v) in vertices.iter().enumerate() {
        local[v] = i;
    }
    let mut g = UnGraph::<(), ()>::with_capacity(vertices.len(), vertices.len() * 4);
    let nodes: Vec<_> = vertices.iter().map(|_| g.add_node(())).collect();
    for &v in &vertices {
        let mut nb = adj[v] & mask & !((1u64 << v) | ((1u64 << v) - 1));
        while nb != 0 {
            let u = nb.trailing_zeros() as usize;
            nb &= nb - 1;
            g.add_edge(nodes[local[v]], nodes[local[u]], ());
        }
    }
    maximum_matching(&g).is_perfect()
}
