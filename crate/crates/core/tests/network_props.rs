mod common;

use common::*;
use founderlens::community::{build_interaction_graph, compute_outcomes, EventLog, NetworkWindow, OutcomeWindows, Window};
use founderlens::featurizer::{Document, DocumentKind};
use founderlens::graph::InteractionGraph;
use proptest::prelude::*;

fn same(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-12,
        (x, y) => x == y,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metrics_match_all_pairs_oracles(seed in any::<u64>()) {
        let g = random_graph(seed, 12);
        let d = floyd_warshall(g.n, &g.edges);
        let comps = union_find_components(g.n, &g.edges);
        prop_assert_eq!(g.graph.count_components(), comps.len());
        prop_assert_eq!(g.graph.is_connected(), comps.len() == 1);
        for i in 0..g.n {
            let bfs = g.graph.bfs(i);
            for j in 0..g.n {
                let want = (d[i][j] < INF).then_some(d[i][j]);
                prop_assert_eq!(bfs[j], want);
            }
        }
        prop_assert_eq!(g.graph.diameter(), oracle_diameter(g.n, &g.edges));
        prop_assert!(same(g.graph.degree_centralization(), oracle_degree_centralization(g.n, &g.edges)));
        prop_assert!(same(g.graph.closeness_centralization(), oracle_closeness_centralization(g.n, &g.edges)));
    }

    #[test]
    fn relabeling_nodes_changes_nothing(seed in any::<u64>(), shift in 1usize..11) {
        let g = random_graph(seed, 12);
        let names: Vec<String> = (0..g.n).map(|i| format!("m{:02}", (i + shift) % g.n)).collect();
        let mut h = InteractionGraph::new(names.iter().map(String::as_str));
        for &(a, b) in &g.edges {
            h.add_edge(&names[a], &names[b]);
        }
        prop_assert_eq!(g.graph.count_components(), h.count_components());
        prop_assert_eq!(g.graph.n_edges(), h.n_edges());
        prop_assert!(same(g.graph.degree_centralization(), h.degree_centralization()));
        prop_assert!(same(g.graph.closeness_centralization(), h.closeness_centralization()));
        // the diameter tie rule depends on names, but only among equal-size components
        let sizes: Vec<usize> = union_find_components(g.n, &g.edges).iter().map(Vec::len).collect();
        let largest = sizes.iter().max().copied().unwrap_or(0);
        if sizes.iter().filter(|&&s| s == largest).count() == 1 {
            prop_assert_eq!(g.graph.diameter(), h.diameter());
        }
    }

    #[test]
    fn centralization_stays_in_the_unit_interval(seed in any::<u64>()) {
        let g = random_graph(seed, 12);
        for v in [g.graph.degree_centralization(), g.graph.closeness_centralization()].into_iter().flatten() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{v}");
        }
    }
}

const DAY: i64 = 86_400;

fn doc(id: usize, author: &str, ts: i64, parent: Option<usize>) -> Document {
    Document {
        id: format!("e{id}"),
        author_id: author.into(),
        community_id: "c".into(),
        timestamp: ts,
        kind: if parent.is_some() { DocumentKind::Comment } else { DocumentKind::Post },
        parent_id: parent.map(|p| format!("e{p}")),
        text: "hello there".into(),
    }
}

#[test]
fn reply_graph_only_links_authors_active_in_the_window() {
    let t0 = 1_000_000;
    let events = vec![
        doc(0, "alice", t0, None),
        doc(1, "bob", t0 + 400 * DAY, Some(0)),
        doc(2, "carol", t0 + 401 * DAY, None),
        doc(3, "dave", t0 + 402 * DAY, Some(2)),
        doc(4, "erin", t0 + 403 * DAY, Some(3)),
        doc(5, "carol", t0 + 404 * DAY, Some(99)),
    ];
    let log = EventLog::new("c", t0, events).unwrap();
    let window = Window::after(t0, 365, 60);
    let (g, q) = build_interaction_graph(&log, window);
    assert_eq!(g.nodes(), ["bob", "carol", "dave", "erin"]);
    assert!(g.has_edge("carol", "dave") && g.has_edge("dave", "erin"));
    assert_eq!(g.n_edges(), 2);
    assert_eq!(q.inactive_parents, 1);
    assert_eq!(q.missing_parents, 1);
}

#[test]
fn network_window_choice_is_respected() {
    let t0 = 1_000_000;
    let events = vec![
        doc(0, "alice", t0, None),
        doc(1, "bob", t0 + DAY, Some(0)),
        doc(2, "carol", t0 + 370 * DAY, None),
    ];
    let log = EventLog::new("c", t0, events).unwrap();
    let founders = vec!["alice".to_string(), "bob".to_string()];
    let mut windows = OutcomeWindows::default();
    let year = compute_outcomes(&log, &founders, &windows).unwrap();
    windows.network = NetworkWindow::FirstMonth;
    let first = compute_outcomes(&log, &founders, &windows).unwrap();
    assert_eq!(year.diameter, Some(0));
    assert_eq!(first.diameter, Some(1));
    assert_eq!(year.size, first.size);
}
