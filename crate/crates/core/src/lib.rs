pub mod cocycle;
pub mod error;
pub mod fixtures;
pub mod holonomy;
pub mod io;
pub mod lipmaps;
pub mod par;
pub mod report;
pub mod rigidity;
pub mod scalar;
pub mod stats;
pub mod symbolic;
pub mod transfer;
