//! Dataset ingestion, synthetic block-model generation, and CSV export.
//!
//! Two on-disk shapes are supported. The citation format is the classic
//! two-file text distribution: a content file with one tab-separated line
//! per document (`id f1 ... fm class_name`) and a cites file with one
//! `cited_id citing_id` pair per line. The generic format is an edge list
//! (`src dst [weight]`), a features CSV with one row per vertex, and an
//! optional labels file (`vertex class`); `#`-prefixed comment lines are
//! ignored in the edge list and labels files.
//!
//! All readers accept LF or CRLF input; all writers emit LF. Numbers are
//! written with the shortest representation that parses back to the same
//! value, so an export/import round trip is exact.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::sparse::Graph;
use crate::spectral::{response, FrequencyResponse, Spectrum};

/// A graph learning instance: topology, vertex features, and ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    /// One row of features per vertex.
    pub features: DenseMatrix,
    /// Class per vertex; `None` marks a vertex without ground truth.
    pub labels: Vec<Option<usize>>,
    /// Class names by label index; synthesized as `"0"`, `"1"`, ... where
    /// the source format is numeric.
    pub class_names: Vec<String>,
    /// Source vertex identifiers, in row order.
    pub vertex_ids: Vec<String>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }
}

/// What a loader saw on the way in. Raw counts refer to source lines before
/// symmetrization and deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadStats {
    /// Edge lines read from the source.
    pub raw_edge_lines: usize,
    /// Undirected edges in the final adjacency.
    pub undirected_edges: usize,
    /// Citation lines skipped because an endpoint id was unknown or the two
    /// endpoints coincided.
    pub skipped_edges: usize,
}

/// Parameters of the stochastic block model used for synthetic datasets.
///
/// Vertices are grouped into blocks; each unordered pair is joined
/// independently with probability `p_in` inside a block and `p_out` across
/// blocks. Feature vectors are Gaussian noise around a block-specific mean:
/// block `b` of `B` has mean `feature_shift` on coordinates
/// `[b*d/B, (b+1)*d/B)` and zero elsewhere. Labels are the block indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub feature_shift: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Load the two-file citation format. Class indices follow first appearance
/// in the content file; citation edges get unit weight, are symmetrized, and
/// duplicates collapse to a single edge. Citation lines naming an unknown
/// document, or citing a document from itself, are skipped and counted in
/// the returned stats.
pub fn load_citation_content(
    content_path: impl AsRef<Path>,
    cites_path: impl AsRef<Path>,
) -> Result<(Dataset, LoadStats)> {
    let content_path = content_path.as_ref();
    let cites_path = cites_path.as_ref();
    let content = read_lines(content_path)?;
    if content.is_empty() {
        return Err(Error::parse(content_path, 1, "file is empty"));
    }

    let mut vertex_ids = Vec::with_capacity(content.len());
    let mut id_to_index = HashMap::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(content.len());
    let mut rows: Vec<f64> = Vec::new();
    let mut width = None;
    for (line_no, line) in numbered(&content) {
        let tokens: Vec<&str> = line.split('\t').collect();
        if tokens.len() < 2 {
            return Err(Error::parse(
                content_path,
                line_no,
                format!("expected `id features... class`, got {} fields", tokens.len()),
            ));
        }
        let m = tokens.len() - 2;
        match width {
            None => width = Some(m),
            Some(w) if w != m => {
                return Err(Error::parse(
                    content_path,
                    line_no,
                    format!("expected {w} feature fields, got {m}"),
                ))
            }
            Some(_) => {}
        }
        let id = tokens[0].to_string();
        if id_to_index.insert(id.clone(), vertex_ids.len()).is_some() {
            return Err(Error::parse(
                content_path,
                line_no,
                format!("duplicate document id `{id}`"),
            ));
        }
        vertex_ids.push(id);
        for &token in &tokens[1..tokens.len() - 1] {
            let value: f64 = token.parse().map_err(|_| {
                Error::parse(content_path, line_no, format!("bad feature value `{token}`"))
            })?;
            rows.push(value);
        }
        let class_name = tokens[tokens.len() - 1];
        let class = match class_names.iter().position(|c| c == class_name) {
            Some(i) => i,
            None => {
                class_names.push(class_name.to_string());
                class_names.len() - 1
            }
        };
        labels.push(Some(class));
    }
    let n = vertex_ids.len();
    let m = width.unwrap_or(0);
    let features = DenseMatrix::from_vec(n, m, rows)?;

    let cites = read_lines(cites_path)?;
    if cites.is_empty() {
        return Err(Error::parse(cites_path, 1, "file is empty"));
    }
    let mut stats = LoadStats::default();
    let mut pairs = BTreeSet::new();
    for (line_no, line) in numbered(&cites) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::parse(
                cites_path,
                line_no,
                format!("expected `cited_id citing_id`, got {} fields", tokens.len()),
            ));
        }
        stats.raw_edge_lines += 1;
        let endpoints = (id_to_index.get(tokens[0]), id_to_index.get(tokens[1]));
        match endpoints {
            (Some(&a), Some(&b)) if a != b => {
                pairs.insert((a.min(b), a.max(b)));
            }
            _ => stats.skipped_edges += 1,
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs.into_iter().map(|(a, b)| (a, b, 1.0)).collect();
    let graph = Graph::from_edges(n, &edges)?;
    stats.undirected_edges = graph.edge_count();
    Ok((
        Dataset {
            graph,
            features,
            labels,
            class_names,
            vertex_ids,
        },
        stats,
    ))
}

/// Load the generic three-file format. The features CSV fixes the vertex
/// count; edge endpoints must index into it. A missing weight field means
/// 1.0; parallel edge lines sum, as in [`Graph::from_edges`]. Without a
/// labels file every vertex is unlabeled.
pub fn load_edge_list(
    edges_path: impl AsRef<Path>,
    features_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
) -> Result<(Dataset, LoadStats)> {
    let edges_path = edges_path.as_ref();
    let features = read_matrix_csv(features_path)?;
    let n = features.n_rows();

    let mut stats = LoadStats::default();
    let mut edges = Vec::new();
    for (line_no, line) in numbered(&read_lines(edges_path)?) {
        if is_comment_or_blank(line) {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 && tokens.len() != 3 {
            return Err(Error::parse(
                edges_path,
                line_no,
                format!("expected `src dst [weight]`, got {} fields", tokens.len()),
            ));
        }
        let src = parse_index(tokens[0], n, edges_path, line_no)?;
        let dst = parse_index(tokens[1], n, edges_path, line_no)?;
        let weight: f64 = match tokens.get(2) {
            Some(&token) => token.parse().map_err(|_| {
                Error::parse(edges_path, line_no, format!("bad weight `{token}`"))
            })?,
            None => 1.0,
        };
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::parse(
                edges_path,
                line_no,
                format!("weight must be finite and nonnegative, got {weight}"),
            ));
        }
        stats.raw_edge_lines += 1;
        edges.push((src, dst, weight));
    }
    let graph = Graph::from_edges(n, &edges)?;
    stats.undirected_edges = graph.edge_count();

    let mut labels = vec![None; n];
    let mut max_class = None;
    if let Some(labels_path) = labels_path {
        for (line_no, line) in numbered(&read_lines(labels_path)?) {
            if is_comment_or_blank(line) {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(Error::parse(
                    labels_path,
                    line_no,
                    format!("expected `vertex class`, got {} fields", tokens.len()),
                ));
            }
            let vertex = parse_index(tokens[0], n, labels_path, line_no)?;
            let class: usize = tokens[1].parse().map_err(|_| {
                Error::parse(labels_path, line_no, format!("bad class `{}`", tokens[1]))
            })?;
            if labels[vertex].is_some() {
                return Err(Error::parse(
                    labels_path,
                    line_no,
                    format!("vertex {vertex} labeled twice"),
                ));
            }
            labels[vertex] = Some(class);
            max_class = Some(max_class.map_or(class, |m: usize| m.max(class)));
        }
    }
    let n_classes = max_class.map_or(0, |m| m + 1);
    let class_names: Vec<String> = (0..n_classes).map(|c| c.to_string()).collect();
    let vertex_ids: Vec<String> = (0..n).map(|v| v.to_string()).collect();
    Ok((
        Dataset {
            graph,
            features,
            labels,
            class_names,
            vertex_ids,
        },
        stats,
    ))
}

/// Sample a stochastic block model. Deterministic per seed: edge draws walk
/// the vertex pairs in order, and feature noise is drawn row by row from a
/// separately derived stream.
pub fn generate_sbm(params: &SbmParams) -> Result<Dataset> {
    validate_sbm(params)?;
    let blocks = params.block_sizes.len();
    let n: usize = params.block_sizes.iter().sum();
    let mut block_of = Vec::with_capacity(n);
    for (block, &size) in params.block_sizes.iter().enumerate() {
        block_of.extend(std::iter::repeat_n(block, size));
    }

    let mut edge_rng = derive_rng(params.seed, "sbm-edges", 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block_of[i] == block_of[j] {
                params.p_in
            } else {
                params.p_out
            };
            if edge_rng.random_bool(p) {
                edges.push((i, j, 1.0));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges)?;

    let d = params.feature_dim;
    let noise = Normal::new(0.0, params.noise_sigma).map_err(|e| Error::InvalidConfig {
        what: format!("feature noise: {e}"),
    })?;
    let mut feature_rng = derive_rng(params.seed, "sbm-features", 0);
    let mut data = Vec::with_capacity(n * d);
    for &block in &block_of {
        let start = block * d / blocks;
        let end = (block + 1) * d / blocks;
        for col in 0..d {
            let mean = if (start..end).contains(&col) {
                params.feature_shift
            } else {
                0.0
            };
            data.push(mean + noise.sample(&mut feature_rng));
        }
    }
    let features = DenseMatrix::from_vec(n, d, data)?;
    Ok(Dataset {
        graph,
        features,
        labels: block_of.iter().map(|&b| Some(b)).collect(),
        class_names: (0..blocks).map(|b| b.to_string()).collect(),
        vertex_ids: (0..n).map(|v| v.to_string()).collect(),
    })
}

/// Scale each feature row to unit sum; rows summing to zero are left alone.
pub fn row_normalize(features: &mut DenseMatrix) {
    for i in 0..features.n_rows() {
        let row = features.row_mut(i);
        let sum: f64 = row.iter().sum();
        if sum != 0.0 {
            for value in row {
                *value /= sum;
            }
        }
    }
}

/// Write a matrix as CSV with header `f0,f1,...`: one row per line, LF
/// endings, values in shortest round-trip form.
pub fn export_matrix_csv(matrix: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let header: Vec<String> = (0..matrix.n_cols()).map(|j| format!("f{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..matrix.n_rows() {
        push_row(&mut out, matrix.row(i));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write `lambda,response` rows for a spectrum under one filter response,
/// in ascending eigenvalue order.
pub fn export_spectrum_csv(
    spectrum: &Spectrum,
    filter: FrequencyResponse,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("lambda,response\n");
    for &lambda in &spectrum.eigenvalues {
        let value = response(filter, lambda)?;
        let _ = writeln!(out, "{lambda},{value}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a CSV of numbers into a matrix. A first line whose fields do not
/// all parse as numbers is treated as a header and skipped, so the output
/// of [`export_matrix_csv`] loads back unchanged.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut rows: Vec<f64> = Vec::new();
    let mut width = None;
    let mut n_rows = 0;
    for (line_no, line) in numbered(&lines) {
        let fields: Vec<&str> = line.split(',').collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.trim().parse::<f64>()).collect();
        let values = match parsed {
            Ok(values) => values,
            Err(_) if line_no == 1 => continue,
            Err(_) => {
                return Err(Error::parse(path, line_no, "unparseable numeric field"));
            }
        };
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected {w} fields, got {}", values.len()),
                ))
            }
            Some(_) => {}
        }
        n_rows += 1;
        rows.extend_from_slice(&values);
    }
    let width = width.ok_or_else(|| Error::parse(path, 1, "no data rows"))?;
    DenseMatrix::from_vec(n_rows, width, rows)
}

/// Write a dataset in the generic three-file format, the inverse of
/// [`load_edge_list`]. Edges are written once per undirected pair with
/// their stored weight; only labeled vertices get a labels line.
pub fn export_dataset(
    dataset: &Dataset,
    edges_path: impl AsRef<Path>,
    features_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let edges_path = edges_path.as_ref();
    let mut edges = String::from("# src dst weight\n");
    let adjacency = dataset.graph.adjacency();
    for i in 0..dataset.n() {
        for (j, w) in adjacency.iter_row(i) {
            if i < j {
                let _ = writeln!(edges, "{i} {j} {w}");
            }
        }
    }
    std::fs::write(edges_path, edges).map_err(|e| Error::io(edges_path, e))?;

    export_matrix_csv(&dataset.features, features_path)?;

    let labels_path = labels_path.as_ref();
    let mut labels = String::from("# vertex class\n");
    for (vertex, class) in dataset.labels.iter().enumerate() {
        if let Some(class) = class {
            let _ = writeln!(labels, "{vertex} {class}");
        }
    }
    std::fs::write(labels_path, labels).map_err(|e| Error::io(labels_path, e))
}

fn validate_sbm(params: &SbmParams) -> Result<()> {
    if params.block_sizes.is_empty() || params.block_sizes.iter().sum::<usize>() == 0 {
        return Err(Error::InvalidConfig {
            what: "block sizes must contain at least one vertex".to_string(),
        });
    }
    let in_range = |p: f64| (0.0..=1.0).contains(&p);
    if !in_range(params.p_in) || !in_range(params.p_out) || params.p_out > params.p_in {
        return Err(Error::InvalidConfig {
            what: format!(
                "edge probabilities must satisfy 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                params.p_in, params.p_out
            ),
        });
    }
    if params.feature_dim == 0 {
        return Err(Error::InvalidConfig {
            what: "feature_dim must be at least 1".to_string(),
        });
    }
    if !params.feature_shift.is_finite() {
        return Err(Error::InvalidConfig {
            what: format!("feature_shift must be finite, got {}", params.feature_shift),
        });
    }
    if !params.noise_sigma.is_finite() || params.noise_sigma < 0.0 {
        return Err(Error::InvalidConfig {
            what: format!(
                "noise_sigma must be finite and nonnegative, got {}",
                params.noise_sigma
            ),
        });
    }
    Ok(())
}

/// Split file content into lines, accepting LF or CRLF and ignoring one
/// trailing newline.
fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|line| line.strip_suffix('\r').unwrap_or(line).to_string())
        .collect())
}

/// Pair lines with their 1-based line numbers.
fn numbered(lines: &[String]) -> impl Iterator<Item = (usize, &str)> {
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| (i + 1, line.as_str()))
}

fn is_comment_or_blank(line: &str) -> bool {
    let trimmed = line.trim_start();
    trimmed.is_empty() || trimmed.starts_with('#')
}

fn parse_index(token: &str, bound: usize, path: &Path, line_no: usize) -> Result<usize> {
    let index: usize = token
        .parse()
        .map_err(|_| Error::parse(path, line_no, format!("bad vertex index `{token}`")))?;
    if index >= bound {
        return Err(Error::parse(
            path,
            line_no,
            format!("vertex index {index} out of range, {bound} vertices exist"),
        ));
    }
    Ok(index)
}

fn push_row(out: &mut String, row: &[f64]) {
    for (j, value) in row.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        let _ = write!(out, "{value}");
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write_temp(dir: &tempfile::TempDir, name: &str, content: &str) -> PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn citation_loader_reads_the_two_file_format() {
        let dir = tempfile::tempdir().unwrap();
        let content = write_temp(
            &dir,
            "toy.content",
            "paper_a\t1\t0\tml\npaper_b\t0\t1\tdb\npaper_c\t1\t1\tml\n",
        );
        let cites = write_temp(&dir, "toy.cites", "paper_a\tpaper_b\npaper_a\tpaper_b\n");
        let (dataset, stats) = load_citation_content(&content, &cites).unwrap();
        assert_eq!(dataset.n(), 3);
        assert_eq!(dataset.features.n_cols(), 2);
        assert_eq!(dataset.class_names, vec!["ml", "db"]);
        assert_eq!(dataset.labels, vec![Some(0), Some(1), Some(0)]);
        assert_eq!(dataset.vertex_ids[2], "paper_c");
        assert_eq!(stats.raw_edge_lines, 2);
        assert_eq!(stats.undirected_edges, 1);
        assert_eq!(stats.skipped_edges, 0);
        assert_eq!(dataset.graph.adjacency().get(0, 1), 1.0);
        assert_eq!(dataset.graph.adjacency().get(1, 0), 1.0);
    }

    #[test]
    fn citation_loader_skips_unknown_ids_and_counts_them() {
        let dir = tempfile::tempdir().unwrap();
        let content = write_temp(&dir, "toy.content", "a\t1\tx\nb\t0\ty\n");
        let cites = write_temp(&dir, "toy.cites", "a\tb\na\tmissing\nb\tb\n");
        let (dataset, stats) = load_citation_content(&content, &cites).unwrap();
        assert_eq!(stats.raw_edge_lines, 3);
        assert_eq!(stats.skipped_edges, 2);
        assert_eq!(dataset.graph.edge_count(), 1);
    }

    #[test]
    fn citation_loader_names_the_malformed_line() {
        let dir = tempfile::tempdir().unwrap();
        let content = write_temp(&dir, "toy.content", "a\t1\tx\nb\tnot_a_number\t0\ty\n");
        let cites = write_temp(&dir, "toy.cites", "a\tb\n");
        let err = load_citation_content(&content, &cites).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn citation_loader_rejects_empty_files() {
        let dir = tempfile::tempdir().unwrap();
        let content = write_temp(&dir, "toy.content", "");
        let cites = write_temp(&dir, "toy.cites", "a\tb\n");
        assert!(matches!(
            load_citation_content(&content, &cites),
            Err(Error::Parse { .. })
        ));
        let content = write_temp(&dir, "toy2.content", "a\t1\tx\n");
        let cites = write_temp(&dir, "toy2.cites", "");
        assert!(matches!(
            load_citation_content(&content, &cites),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn edge_list_loader_defaults_weights_and_reads_labels() {
        let dir = tempfile::tempdir().unwrap();
        let edges = write_temp(&dir, "edges.txt", "# comment\n0 1\n1 2 2.5\n");
        let features = write_temp(&dir, "features.csv", "f0,f1\n1,0\n0,1\n0.5,0.5\n");
        let labels = write_temp(&dir, "labels.txt", "# vertex class\n0 0\n2 1\n");
        let (dataset, stats) = load_edge_list(&edges, &features, Some(&labels)).unwrap();
        assert_eq!(dataset.n(), 3);
        assert_eq!(stats.raw_edge_lines, 2);
        assert_eq!(stats.undirected_edges, 2);
        assert_eq!(dataset.graph.adjacency().get(0, 1), 1.0);
        assert_eq!(dataset.graph.adjacency().get(2, 1), 2.5);
        assert_eq!(dataset.labels, vec![Some(0), None, Some(1)]);
        assert_eq!(dataset.class_names, vec!["0", "1"]);
    }

    #[test]
    fn edge_list_loader_rejects_out_of_range_and_negative_edges() {
        let dir = tempfile::tempdir().unwrap();
        let features = write_temp(&dir, "features.csv", "f0\n1\n2\n");
        let edges = write_temp(&dir, "edges.txt", "0 5\n");
        let err = load_edge_list(&edges, &features, None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected a parse error, got {other:?}"),
        }
        let edges = write_temp(&dir, "edges2.txt", "0 1 -2\n");
        assert!(matches!(
            load_edge_list(&edges, &features, None),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn block_model_with_certain_edges_builds_two_cliques() {
        let params = SbmParams {
            block_sizes: vec![4, 4],
            p_in: 1.0,
            p_out: 0.0,
            feature_dim: 4,
            feature_shift: 1.0,
            noise_sigma: 0.0,
            seed: 1,
        };
        let dataset = generate_sbm(&params).unwrap();
        assert_eq!(dataset.n(), 8);
        assert_eq!(dataset.graph.edge_count(), 2 * 6);
        for v in 0..8 {
            assert_eq!(dataset.graph.degrees()[v], 3.0);
            let block = v / 4;
            assert_eq!(dataset.labels[v], Some(block));
            for (col, &value) in dataset.features.row(v).iter().enumerate() {
                let expected = if col / 2 == block { 1.0 } else { 0.0 };
                assert_eq!(value, expected);
            }
        }
    }

    #[test]
    fn block_model_is_deterministic_and_edgeless_at_zero_probability() {
        let mut params = SbmParams {
            block_sizes: vec![10, 10],
            p_in: 0.5,
            p_out: 0.1,
            feature_dim: 6,
            feature_shift: 2.0,
            noise_sigma: 1.0,
            seed: 42,
        };
        let a = generate_sbm(&params).unwrap();
        let b = generate_sbm(&params).unwrap();
        assert_eq!(a.graph.adjacency().get(0, 1), b.graph.adjacency().get(0, 1));
        assert_eq!(a.graph.edge_count(), b.graph.edge_count());
        assert_eq!(a.features.as_slice(), b.features.as_slice());
        params.p_in = 0.0;
        params.p_out = 0.0;
        let empty = generate_sbm(&params).unwrap();
        assert_eq!(empty.graph.edge_count(), 0);
    }

    #[test]
    fn block_model_edge_count_tracks_the_binomial_expectation() {
        let params = SbmParams {
            block_sizes: vec![100, 100],
            p_in: 0.2,
            p_out: 0.01,
            feature_dim: 2,
            feature_shift: 0.0,
            noise_sigma: 0.0,
            seed: 9,
        };
        let dataset = generate_sbm(&params).unwrap();
        let pairs_in = 2.0 * (100.0 * 99.0 / 2.0);
        let pairs_out = 100.0 * 100.0;
        let mean = 0.2 * pairs_in + 0.01 * pairs_out;
        let variance = 0.2 * 0.8 * pairs_in + 0.01 * 0.99 * pairs_out;
        let observed = dataset.graph.edge_count() as f64;
        assert!(
            (observed - mean).abs() < 4.0 * variance.sqrt(),
            "edge count {observed} strays from expectation {mean}"
        );
    }

    #[test]
    fn block_model_rejects_inverted_probabilities() {
        let params = SbmParams {
            block_sizes: vec![4],
            p_in: 0.1,
            p_out: 0.5,
            feature_dim: 1,
            feature_shift: 0.0,
            noise_sigma: 0.0,
            seed: 0,
        };
        assert!(matches!(
            generate_sbm(&params),
            Err(Error::InvalidConfig { .. })
        ));
    }

    #[test]
    fn matrix_csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("matrix.csv");
        let matrix = DenseMatrix::from_rows(&[
            vec![2.5, -1.0e-17, 3.0],
            vec![1.0 / 3.0, f64::MIN_POSITIVE, 12345.678901234567],
        ])
        .unwrap();
        export_matrix_csv(&matrix, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("f0,f1,f2\n"));
        assert!(!text.contains('\r'));
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(back.as_slice(), matrix.as_slice());
    }

    #[test]
    fn one_by_one_matrix_exports_a_header_and_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("single.csv");
        let matrix = DenseMatrix::from_rows(&[vec![2.5]]).unwrap();
        export_matrix_csv(&matrix, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "f0\n2.5\n");
    }

    #[test]
    fn spectrum_csv_writes_response_per_eigenvalue() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spectrum.csv");
        let spectrum = Spectrum {
            eigenvalues: vec![0.0, 2.0],
            eigenvectors: DenseMatrix::identity(2),
        };
        export_spectrum_csv(&spectrum, FrequencyResponse::Renormalization { k: 2 }, &path)
            .unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "lambda,response\n0,1\n2,1\n"
        );
    }

    #[test]
    fn dataset_export_reloads_identically() {
        let params = SbmParams {
            block_sizes: vec![5, 5],
            p_in: 1.0,
            p_out: 0.0,
            feature_dim: 4,
            feature_shift: 1.5,
            noise_sigma: 0.5,
            seed: 3,
        };
        let dataset = generate_sbm(&params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let edges = dir.path().join("edges.txt");
        let features = dir.path().join("features.csv");
        let labels = dir.path().join("labels.txt");
        export_dataset(&dataset, &edges, &features, &labels).unwrap();
        let (back, _) = load_edge_list(&edges, &features, Some(&labels)).unwrap();
        assert_eq!(back.n(), dataset.n());
        assert_eq!(back.features.as_slice(), dataset.features.as_slice());
        assert_eq!(back.labels, dataset.labels);
        assert_eq!(
            back.graph.adjacency().to_dense().as_slice(),
            dataset.graph.adjacency().to_dense().as_slice()
        );
    }

    #[test]
    fn row_normalization_scales_to_unit_sums() {
        let mut features =
            DenseMatrix::from_rows(&[vec![2.0, 2.0], vec![0.0, 0.0], vec![1.0, 3.0]]).unwrap();
        row_normalize(&mut features);
        assert_eq!(features.row(0), &[0.5, 0.5]);
        assert_eq!(features.row(1), &[0.0, 0.0]);
        assert_eq!(features.row(2), &[0.25, 0.75]);
    }
}
