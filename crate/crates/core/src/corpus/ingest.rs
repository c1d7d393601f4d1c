use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{Corpus, DomainCatalog, DomainEntry, NberSubcategory, PatentRecord};
use crate::{Error, Result};

/// Output of [`ingest`]: the validated corpus, catalog, and the citation pairs
/// (as corpus positions) whose endpoints both exist.
#[derive(Clone, Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub catalog: DomainCatalog,
    pub citations: Vec<(usize, usize)>,
    /// Pairs dropped because one endpoint is not in the corpus.
    pub dangling: usize,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_patents(path: &Path) -> Result<Vec<PatentRecord>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PatentRecord = serde_json::from_str(&line).map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads `citing_id,cited_id` pairs.
pub fn read_citations(path: &Path) -> Result<Vec<(String, String)>> {
    let mut lines = open(path)?.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, header)) => {
            let header = header.map_err(|e| Error::io(path, e))?;
            let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
            if cols != ["citing_id", "cited_id"] {
                return Err(parse_err(path, 1, "expected header `citing_id,cited_id`"));
            }
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.trim().is_empty() && !b.trim().is_empty() => {
                out.push((a.trim().to_string(), b.trim().to_string()))
            }
            _ => return Err(parse_err(path, i + 1, format!("malformed citation row {line:?}"))),
        }
    }
    Ok(out)
}

pub fn read_catalog(path: &Path) -> Result<DomainCatalog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(path, 1, format!("missing column `{name}`")))
    };
    let (code_i, rate_i, sub_i) = (col("code")?, col("improvement_rate")?, col("nber_subcategory")?);

    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(path, line, e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let rate: f64 = field(rate_i)
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad improvement_rate {:?}", field(rate_i))))?;
        let subcategory = NberSubcategory::parse(field(sub_i))?;
        let code = field(code_i).to_string();
        if code.is_empty() {
            return Err(parse_err(path, line, "empty domain code"));
        }
        entries.push(DomainEntry {
            code,
            improvement_rate: rate,
            subcategory,
        });
    }
    DomainCatalog::from_entries(entries)
}

/// Loads the three input files. Citations with an endpoint outside the corpus
/// are counted in [`Ingested::dangling`] and skipped.
pub fn ingest(patents_path: &Path, citations_path: &Path, catalog_path: &Path) -> Result<Ingested> {
    let catalog = read_catalog(catalog_path)?;
    let corpus = Corpus::new(read_patents(patents_path)?)?;
    corpus.validate_domains(&catalog)?;

    let raw = read_citations(citations_path)?;
    let mut citations = Vec::with_capacity(raw.len());
    let mut dangling = 0;
    for (a, b) in &raw {
        match (corpus.position(a), corpus.position(b)) {
            (Some(i), Some(j)) => citations.push((i, j)),
            _ => dangling += 1,
        }
    }
    if dangling > 0 {
        log::warn!("{dangling} citation pairs reference patents outside the corpus");
    }
    Ok(Ingested {
        corpus,
        catalog,
        citations,
        dangling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    const DOMAINS: &str = "code,improvement_rate,nber_subcategory\nA,10.5,22\nB,3.0,Communications\n";

    #[test]
    fn empty_citations_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.jsonl",
            r#"{"id":"1","title":"t","abstract":"","year":2000,"domain":"A"}
{"id":"2","title":"t","abstract":"a","year":2001,"domain":"B"}
{"id":"3","title":"","abstract":"a","year":2002,"domain":"A"}
"#,
        );
        let c = write(dir.path(), "c.csv", "citing_id,cited_id\n");
        let d = write(dir.path(), "d.csv", DOMAINS);
        let got = ingest(&p, &c, &d).unwrap();
        assert_eq!(got.corpus.len(), 3);
        assert!(got.citations.is_empty());
        assert_eq!(got.dangling, 0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.jsonl",
            "{\"id\":\"1\",\"title\":\"t\",\"abstract\":\"\",\"year\":2000,\"domain\":\"A\"}\n{not json\n",
        );
        let c = write(dir.path(), "c.csv", "citing_id,cited_id\n1,1,1\n");
        let d = write(dir.path(), "d.csv", DOMAINS);
        match ingest(&p, &c, &d) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match read_citations(&c) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_domains_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.jsonl",
            r#"{"id":"1","title":"t","abstract":"","year":2000,"domain":"Z"}
{"id":"2","title":"t","abstract":"","year":2000,"domain":"Y"}
{"id":"3","title":"t","abstract":"","year":2000,"domain":"Z"}
"#,
        );
        let c = write(dir.path(), "c.csv", "citing_id,cited_id\n");
        let d = write(dir.path(), "d.csv", DOMAINS);
        match ingest(&p, &c, &d) {
            Err(Error::UnknownDomains(v)) => assert_eq!(v, vec!["Y", "Z"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dangling_citations_are_counted() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.jsonl",
            r#"{"id":"1","title":"t","abstract":"","year":2000,"domain":"A"}
{"id":"2","title":"t","abstract":"","year":2000,"domain":"B"}
"#,
        );
        let c = write(dir.path(), "c.csv", "citing_id,cited_id\n1,2\n1,99\n42,2\n");
        let d = write(dir.path(), "d.csv", DOMAINS);
        let got = ingest(&p, &c, &d).unwrap();
        assert_eq!(got.citations, vec![(0, 1)]);
        assert_eq!(got.dangling, 2);
    }

    #[test]
    fn catalog_rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let d = write(dir.path(), "d.csv", "code,improvement_rate,nber_subcategory\nA,-1,22\n");
        assert!(matches!(read_catalog(&d), Err(Error::Invalid(_))));
        let d = write(dir.path(), "d.csv", "code,improvement_rate,nber_subcategory\nA,1,77\n");
        assert!(matches!(read_catalog(&d), Err(Error::UnknownSubcategory(_))));
        let d = write(
            dir.path(),
            "d.csv",
            "code,improvement_rate,nber_subcategory\nA,1,22\nA,2,22\n",
        );
        assert!(matches!(read_catalog(&d), Err(Error::Duplicate { .. })));
        let d = write(dir.path(), "d.csv", "code,improvement_rate,nber_subcategory\nA,x,22\n");
        assert!(matches!(read_catalog(&d), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn small_fixture_matches_hand_tally() {
        use crate::corpus::{CountOptions, DomainGraph};
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/small");
        let data = ingest(
            &dir.join("patents.jsonl"),
            &dir.join("citations.csv"),
            &dir.join("domains.csv"),
        )
        .unwrap();
        assert_eq!(data.corpus.len(), 10);
        assert_eq!(data.citations.len(), 11);
        assert_eq!(data.dangling, 1);

        let g = DomainGraph::build(&data.corpus, &data.catalog, &data.citations, CountOptions::default()).unwrap();
        assert_eq!(g.counts.to_dense(), vec![vec![2, 3, 1], vec![2, 1, 1], vec![0, 0, 1]]);
        let w = g.weights.to_dense();
        assert_eq!(w[0], vec![2.0 / 6.0, 3.0 / 6.0, 1.0 / 6.0]);
        assert_eq!(w[1], vec![0.5, 0.25, 0.25]);
        assert_eq!(w[2], vec![0.0, 0.0, 1.0]);

        let opts = CountOptions {
            include_intra_domain: false,
        };
        let g = DomainGraph::build(&data.corpus, &data.catalog, &data.citations, opts).unwrap();
        assert_eq!(g.counts.to_dense(), vec![vec![0, 3, 1], vec![2, 0, 1], vec![0, 0, 0]]);
        assert_eq!(g.isolated_out, vec![false, false, true]);
        assert_eq!(g.weights.to_dense()[1], vec![2.0 / 3.0, 0.0, 1.0 / 3.0]);
    }
}
