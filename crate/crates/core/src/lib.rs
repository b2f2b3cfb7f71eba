//! Polar code construction with channel-independent partial orders.
//!
//! The `N = 2^n` bit channels are split into information, frozen and
//! undetermined sets using only the partial orders that hold for every
//! symmetric binary-input channel. Dimension reduction then lifts a
//! channel-specific order at a shorter block length to shrink the
//! undetermined set, and a reliability evaluator can finish the job.
//!
//! ```
//! use polarpo::construction::{construct, ConstructOptions};
//!
//! let c = construct(2, 0.5, None, &ConstructOptions::default()).unwrap();
//! assert_eq!(c.information, vec![3, 4]);
//! assert_eq!(c.frozen, vec![1, 2]);
//! ```

pub mod cache;
pub mod construction;
pub mod dimension_reduction;
pub mod index;
pub mod order;
pub mod par;
pub mod reliability;

pub use construction::{construct, Construction, ConstructOptions};
pub use index::BitIndex;
pub use order::{po_relation_matrix, RelationMatrix};
pub use reliability::{rank_channels, ChannelModel, ReliabilityRanking};
