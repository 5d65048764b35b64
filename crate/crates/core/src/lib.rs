//! Two-phase active set solver for smooth objectives over polyhedra.

pub mod linalg;
pub mod model;
pub mod objective;
pub mod testfns;
pub mod projection;
pub mod stationarity;
pub mod phase1;
pub mod phase2;
pub mod driver;
pub mod io;
pub mod bench;
