//! Incremental similarity-search index for data streams.
//!
//! Sliding windows over a stream are reduced to SAX words; words are grouped
//! into lexicographic MBR buckets that form the elements of an order-`m`
//! B-tree. Query visits stamp elements with a logical clock, and once the
//! tree outgrows its height limit the least recently visited elements are
//! pruned and the survivors rebuilt into a fresh balanced tree.
//!
//! ```
//! use std::sync::Arc;
//! use bstree::index::{BsTree, TreeParams};
//! use bstree::prune::IndexBuilder;
//! use bstree::query::{range_search, QueryMode, RangeQuery};
//! use bstree::sax::SaxConfig;
//! use bstree::stream::{SlidingWindow, WindowArchive, WindowSpec};
//!
//! let cfg = SaxConfig::new(16, 4, 4)?;
//! let archive = Arc::new(WindowArchive::unbounded());
//! let mut window = SlidingWindow::new(WindowSpec::tumbling(16)?, cfg.clone(), archive.clone())?;
//! let mut builder = IndexBuilder::new(BsTree::new(cfg, TreeParams::default())?);
//!
//! let stream: Vec<f64> = (0..160).map(|i| (i as f64 / 5.0).sin()).collect();
//! for &v in &stream {
//!     if let Some(rec) = window.push_value(v)? {
//!         builder.feed(&rec.word, rec.window_id)?;
//!     }
//! }
//!
//! let q = RangeQuery::new(stream[32..48].to_vec(), 0.5, QueryMode::Exact)?;
//! let hits = range_search(builder.tree_mut(), &q, &archive)?;
//! assert!(hits.matches.contains(&2));
//! # Ok::<(), bstree::Error>(())
//! ```

pub mod bench;
pub mod error;
pub mod index;
mod normal;
pub mod prune;
pub mod query;
pub mod sax;
pub mod stream;

pub use error::{Error, Result};
pub use normal::inverse_cdf as normal_quantile;
