pub mod casestudies;
pub mod ddengine;
pub mod dsl;
pub mod group;
pub mod model;
pub mod partition;
pub mod symbolic;
pub mod synthesis;
pub mod verify;

pub use ddengine::{DdManager, DdNode, Snapshot};
pub use model::{SynthesisResult, SynthesisStats, SystemSpec};
pub use symbolic::{encode, Encoding, StateSet, TransitionSet};
pub use synthesis::{synthesize, Mode, SynthError, SynthesisOptions};
