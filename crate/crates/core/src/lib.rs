//! Planning engine for coherent alien-wavelength super-channels carried over
//! a fixed-grid DWDM host network.

pub mod adaptation;
pub mod fixtures;
pub mod iofmt;
pub mod perfmodel;
pub mod planner;
pub mod spectrum;
pub mod topology;
