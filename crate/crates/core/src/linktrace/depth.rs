use super::SampleRecord;

/// Fills `depth` for every row: the mean shortest-path length from the node
/// to every other node of its tree in the recruitment forest. Isolated
/// nodes get `None`.
///
/// Uses the usual two-pass rerooting of distance sums, so the cost is linear
/// in the sample size. Sources always precede their recruits, which makes a
/// reverse sweep post-order and a forward sweep pre-order.
pub fn node_depth(mut record: SampleRecord) -> SampleRecord {
    let n = record.rows.len();
    let index = record.row_index();
    let parent: Vec<Option<usize>> = record
        .rows
        .iter()
        .map(|r| r.source_id.map(|s| index[&s]))
        .collect();

    let mut size = vec![1usize; n];
    let mut down = vec![0usize; n];
    for v in (0..n).rev() {
        if let Some(p) = parent[v] {
            size[p] += size[v];
            down[p] += down[v] + size[v];
        }
    }

    let mut root = vec![0usize; n];
    let mut total = vec![0usize; n];
    for v in 0..n {
        match parent[v] {
            None => {
                root[v] = v;
                total[v] = down[v];
            }
            Some(p) => {
                root[v] = root[p];
                let tree = size[root[v]];
                total[v] = total[p] + tree - 2 * size[v];
            }
        }
    }

    for (v, row) in record.rows.iter_mut().enumerate() {
        let tree = size[root[v]];
        row.depth = if tree > 1 {
            Some(total[v] as f64 / (tree - 1) as f64)
        } else {
            None
        };
    }
    record
}
