//! Evaluation dataset directory layout.
//!
//! ```text
//! DIR/corpus.emb      corpus vectors (.emb format)
//! DIR/ids.txt         corpus document ids, one per line
//! DIR/queries.emb     query vectors (.emb format)
//! DIR/query_ids.txt   query ids, one per line
//! DIR/qrels.tsv       query_id<TAB>doc_id<TAB>grade
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::embedding::{load_embeddings, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::metrics::{format_qrels, load_qrels, QrelSet};

pub const CORPUS_FILE: &str = "corpus.emb";
pub const CORPUS_IDS_FILE: &str = "ids.txt";
pub const QUERIES_FILE: &str = "queries.emb";
pub const QUERY_IDS_FILE: &str = "query_ids.txt";
pub const QRELS_FILE: &str = "qrels.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub corpus: EmbeddingMatrix,
    /// Query vectors; row ids are query ids.
    pub queries: EmbeddingMatrix,
    pub qrels: BTreeMap<String, QrelSet>,
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        for f in [
            CORPUS_FILE,
            CORPUS_IDS_FILE,
            QUERIES_FILE,
            QUERY_IDS_FILE,
            QRELS_FILE,
        ] {
            let p = dir.join(f);
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "missing dataset file"),
                ));
            }
        }
        let corpus = load_embeddings(&dir.join(CORPUS_FILE), &dir.join(CORPUS_IDS_FILE))?;
        let queries = load_embeddings(&dir.join(QUERIES_FILE), &dir.join(QUERY_IDS_FILE))?;
        if queries.dim() != corpus.dim() {
            return Err(Error::DimensionMismatch {
                expected: corpus.dim(),
                actual: queries.dim(),
                context: Some("queries vs corpus".into()),
            });
        }
        let qrels = load_qrels(&dir.join(QRELS_FILE))?;
        Ok(Self {
            corpus,
            queries,
            qrels,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.corpus
            .save(&dir.join(CORPUS_FILE), &dir.join(CORPUS_IDS_FILE))?;
        self.queries
            .save(&dir.join(QUERIES_FILE), &dir.join(QUERY_IDS_FILE))?;
        let path = dir.join(QRELS_FILE);
        fs::write(&path, format_qrels(self.qrels.values())).map_err(|e| Error::io(path, e))
    }

    /// Dataset name used in reports: the directory's final component.
    pub fn name_from_dir(dir: &Path) -> String {
        dir.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string())
    }
}
