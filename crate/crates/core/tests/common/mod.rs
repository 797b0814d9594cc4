//! Brute-force reference implementations shared by the integration tests.
//! Each one is written from the definition, without reusing library code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use founderlens::featurizer::{BigramVocabulary, Document, DocumentKind};
use founderlens::graph::InteractionGraph;
use founderlens::lexicons::{AffectNorms, CategoryLexicon};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub const WORDS: &[&str] = &[
    "happy", "happen", "hap", "sad", "sadly", "go", "going", "gone", "we", "we're", "you", "the", "a", "and",
    "work", "worker", "works", "love", "loved", "hate", "friend", "friends", "friendly", "time", "timer",
    "can't", "don't", "i", "me", "my", "game", "games", "win", "won", "lose", "ok", "zebra", "quiet",
];

// ---------------------------------------------------------------- text

pub struct RandomCorpus {
    /// Per-document lowercase tokens.
    pub docs: Vec<Vec<String>>,
    pub documents: Vec<Document>,
    /// (entry, is_prefix) per lexicon.
    pub lexicon_entries: Vec<(String, Vec<(String, bool)>)>,
    pub lexicons: Vec<CategoryLexicon>,
    pub norm_table: HashMap<String, (f64, f64)>,
    pub norms: AffectNorms,
    pub vocab_bigrams: Vec<String>,
}

/// Random tokens split over up to four documents, rendered with mixed case
/// and punctuation so the tokenizer has work to do.
pub fn random_corpus(seed: u64, max_tokens: usize) -> RandomCorpus {
    let mut r = rng(seed);
    let total = r.random_range(20..=max_tokens);
    let n_docs = r.random_range(1..=4usize);
    let mut docs: Vec<Vec<String>> = vec![Vec::new(); n_docs];
    for _ in 0..total {
        let w = WORDS[r.random_range(0..WORDS.len())];
        docs[r.random_range(0..n_docs)].push(w.to_string());
    }
    docs.retain(|d| !d.is_empty());

    let documents = docs
        .iter()
        .enumerate()
        .map(|(i, toks)| {
            let text: Vec<String> = toks
                .iter()
                .map(|t| {
                    let t = if r.random_bool(0.2) { t.to_uppercase() } else { t.clone() };
                    let sep = [" ", ", ", "! ", " -- ", "\n", "? "][r.random_range(0..6)];
                    format!("{t}{sep}")
                })
                .collect();
            Document {
                id: format!("d{i}"),
                author_id: "u".into(),
                community_id: "c".into(),
                timestamp: 1 + i as i64,
                kind: DocumentKind::Post,
                parent_id: None,
                text: text.concat(),
            }
        })
        .collect();

    let mut lexicon_entries = Vec::new();
    let mut lexicons = Vec::new();
    for k in 0..r.random_range(1..=5) {
        let mut entries: Vec<(String, bool)> = Vec::new();
        for _ in 0..r.random_range(1..=6) {
            let w = WORDS[r.random_range(0..WORDS.len())];
            let e = if r.random_bool(0.3) {
                let cut = r.random_range(1..=w.len());
                (w[..cut].to_string(), true)
            } else {
                (w.to_string(), false)
            };
            if !entries.contains(&e) {
                entries.push(e);
            }
        }
        let lines: Vec<String> = entries
            .iter()
            .map(|(e, p)| if *p { format!("{e}*") } else { e.clone() })
            .collect();
        let name = format!("cat{k}");
        lexicons.push(CategoryLexicon::from_entries(name.clone(), &lines).unwrap());
        lexicon_entries.push((name, entries));
    }

    let mut norm_table = HashMap::new();
    for w in WORDS {
        if r.random_bool(0.6) {
            let v = (r.random_range(100..=900) as f64) / 100.0;
            let a = (r.random_range(100..=900) as f64) / 100.0;
            norm_table.insert(w.to_string(), (v, a));
        }
    }
    // guarantee coverage
    norm_table.insert("the".into(), (5.0, 3.0));
    norm_table.insert("and".into(), (5.5, 2.5));
    docs[0].extend(["the".to_string(), "and".to_string()]);
    let norms = AffectNorms::from_entries(norm_table.iter().map(|(w, &(v, a))| (w.clone(), v, a))).unwrap();

    let mut vocab_bigrams = Vec::new();
    for _ in 0..r.random_range(1..=6) {
        let a = WORDS[r.random_range(0..WORDS.len())];
        let b = WORDS[r.random_range(0..WORDS.len())];
        let bg = format!("{a} {b}");
        if !vocab_bigrams.contains(&bg) {
            vocab_bigrams.push(bg);
        }
    }
    if let Some(d) = docs[0].windows(2).next() {
        let bg = format!("{} {}", d[0], d[1]);
        if !vocab_bigrams.contains(&bg) {
            vocab_bigrams.push(bg);
        }
    }

    let mut documents: Vec<Document> = documents;
    // the guaranteed words go into the first rendered document too
    documents[0].text.push_str(" the and");
    RandomCorpus {
        docs,
        documents,
        lexicon_entries,
        lexicons,
        norm_table,
        norms,
        vocab_bigrams,
    }
}

pub fn vocabulary(bigrams: &[String]) -> BigramVocabulary {
    BigramVocabulary {
        bigrams: bigrams.to_vec(),
        user_support: BTreeMap::new(),
        candidates: bigrams.len(),
        min_users: 0,
    }
}

pub fn oracle_category_percent(tokens: &[String], entries: &[(String, bool)]) -> f64 {
    let mut hits = 0usize;
    for t in tokens {
        let mut matched = false;
        for (e, prefix) in entries {
            if (*prefix && t.starts_with(e.as_str())) || (!*prefix && t == e) {
                matched = true;
            }
        }
        if matched {
            hits += 1;
        }
    }
    hits as f64 / tokens.len() as f64 * 100.0
}

/// (valence mean, valence sd, arousal mean, arousal sd), population SD.
pub fn oracle_affect(tokens: &[String], table: &HashMap<String, (f64, f64)>) -> (f64, f64, f64, f64) {
    let rated: Vec<(f64, f64)> = tokens.iter().filter_map(|t| table.get(t).copied()).collect();
    let n = rated.len() as f64;
    let mut vm = 0.0;
    let mut am = 0.0;
    for (v, a) in &rated {
        vm += v;
        am += a;
    }
    vm /= n;
    am /= n;
    let mut vs = 0.0;
    let mut asd = 0.0;
    for (v, a) in &rated {
        vs += (v - vm).powi(2);
        asd += (a - am).powi(2);
    }
    (vm, (vs / n).sqrt(), am, (asd / n).sqrt())
}

pub fn oracle_bigram_percent(docs: &[Vec<String>], bigram: &str) -> f64 {
    let mut total = 0usize;
    let mut hits = 0usize;
    for d in docs {
        for i in 1..d.len() {
            total += 1;
            if format!("{} {}", d[i - 1], d[i]) == bigram {
                hits += 1;
            }
        }
    }
    hits as f64 / total as f64 * 100.0
}

// ---------------------------------------------------------------- graphs

pub struct RandomGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub graph: InteractionGraph,
}

pub fn node_name(i: usize) -> String {
    format!("n{i:02}")
}

pub fn random_graph(seed: u64, max_nodes: usize) -> RandomGraph {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_nodes);
    let density: f64 = r.random_range(0.05..0.7);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(density) {
                edges.push((i, j));
            }
        }
    }
    let names: Vec<String> = (0..n).map(node_name).collect();
    let mut graph = InteractionGraph::new(names.iter().map(String::as_str));
    for &(a, b) in &edges {
        graph.add_edge(&names[a], &names[b]);
    }
    RandomGraph { n, edges, graph }
}

pub const INF: usize = usize::MAX / 4;

pub fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn union_find_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

pub fn oracle_degrees(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut deg = vec![0; n];
    for &(a, b) in edges {
        deg[a] += 1;
        deg[b] += 1;
    }
    deg
}

/// Diameter of the largest component, ties to the component containing the
/// smallest node name; 0 without edges.
pub fn oracle_diameter(n: usize, edges: &[(usize, usize)]) -> usize {
    if edges.is_empty() {
        return 0;
    }
    let d = floyd_warshall(n, edges);
    let comps = union_find_components(n, edges);
    let mut best: Option<&Vec<usize>> = None;
    for c in &comps {
        let better = match best {
            None => true,
            Some(b) => c.len() > b.len() || (c.len() == b.len() && c[0] < b[0]),
        };
        if better {
            best = Some(c);
        }
    }
    let comp = best.unwrap();
    let mut diam = 0;
    for &i in comp {
        for &j in comp {
            diam = diam.max(d[i][j]);
        }
    }
    diam
}

pub fn oracle_degree_centralization(n: usize, edges: &[(usize, usize)]) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let deg = oracle_degrees(n, edges);
    let max = *deg.iter().max().unwrap();
    let spread: usize = deg.iter().map(|d| max - d).sum();
    Some(spread as f64 / ((n - 1) * (n - 2)) as f64)
}

pub fn oracle_closeness_centralization(n: usize, edges: &[(usize, usize)]) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let d = floyd_warshall(n, edges);
    if d.iter().flatten().any(|&v| v >= INF) {
        return None;
    }
    let closeness: Vec<f64> = d
        .iter()
        .map(|row| (n - 1) as f64 / row.iter().sum::<usize>() as f64)
        .collect();
    let max = closeness.iter().cloned().fold(f64::MIN, f64::max);
    let spread: f64 = closeness.iter().map(|c| max - c).sum();
    let star_max = ((n - 1) * (n - 2)) as f64 / (2 * n - 3) as f64;
    Some(spread / star_max)
}

// ---------------------------------------------------------------- algebra

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// OLS with intercept via the normal equations; returns (intercept + slopes, rss).
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let p = x[0].len() + 1;
    let row = |r: &Vec<f64>| -> Vec<f64> { std::iter::once(1.0).chain(r.iter().copied()).collect() };
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (r, &yi) in x.iter().zip(y) {
        let v = row(r);
        for i in 0..p {
            xty[i] += v[i] * yi;
            for j in 0..p {
                xtx[i][j] += v[i] * v[j];
            }
        }
    }
    let beta = solve(xtx, xty).expect("full-rank design");
    let rss = x
        .iter()
        .zip(y)
        .map(|(r, &yi)| {
            let f: f64 = row(r).iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - f).powi(2)
        })
        .sum();
    (beta, rss)
}

pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - sx / n) * (b - sy / n)).sum();
    let vx: f64 = x.iter().map(|a| (a - sx / n).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - sy / n).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Exhaustive best-subset search by AIC `n ln(RSS/n) + 2(k+1)`; returns the
/// winning column indices.
pub fn best_subset_aic(x: &[Vec<f64>], y: &[f64]) -> Vec<usize> {
    let n = y.len();
    let p = x[0].len();
    // Gram matrix of [1, X] and cross products with y
    let aug = |r: &Vec<f64>| -> Vec<f64> { std::iter::once(1.0).chain(r.iter().copied()).collect() };
    let mut g = vec![vec![0.0; p + 1]; p + 1];
    let mut gy = vec![0.0; p + 1];
    let mut yy = 0.0;
    for (r, &yi) in x.iter().zip(y) {
        let v = aug(r);
        for i in 0..=p {
            gy[i] += v[i] * yi;
            for j in 0..=p {
                g[i][j] += v[i] * v[j];
            }
        }
        yy += yi * yi;
    }
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << p) {
        let cols: Vec<usize> = std::iter::once(0)
            .chain((0..p).filter(|j| mask & (1 << j) != 0).map(|j| j + 1))
            .collect();
        let a: Vec<Vec<f64>> = cols.iter().map(|&i| cols.iter().map(|&j| g[i][j]).collect()).collect();
        let b: Vec<f64> = cols.iter().map(|&i| gy[i]).collect();
        let Some(beta) = solve(a, b.clone()) else { continue };
        let rss = yy - beta.iter().zip(&b).map(|(u, v)| u * v).sum::<f64>();
        let aic = n as f64 * (rss / n as f64).ln() + 2.0 * cols.len() as f64;
        if aic < best.0 {
            best = (aic, cols[1..].iter().map(|j| j - 1).collect());
        }
    }
    best.1
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}
