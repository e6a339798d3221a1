use crate::tanner::TannerGraph;

/// Toy code with four checks and eight variables:
/// c1 = {v1, v2, v3}, c2 = {v2, v4, v5}, c3 = {v4, v6, v7}, c4 = {v6, v8}.
pub(crate) fn toy_graph() -> TannerGraph {
    TannerGraph::from_check_lists(
        8,
        &[vec![0, 1, 2], vec![1, 3, 4], vec![3, 5, 6], vec![5, 7]],
    )
    .unwrap()
}
