//! The stream index: catalog ranges, MBR buckets and the B-tree over them.

mod catalog;
mod mbr;
mod tree;

pub use catalog::MbrCatalog;
pub use mbr::{Mbr, MbrInsert, Member};
pub use tree::{BsTree, Node, TreeParams};
