//! Hardware-free human-swarm interaction platform: message hub, TUIO tracking,
//! omnidirectional robot simulation, intent decoders and swarm behaviors.

pub mod behaviors;
pub mod broker;
pub mod emg;
pub mod gateway;
pub mod gaze;
pub mod robot;
pub mod ssvep;
pub mod tracking;
pub mod tuio;
pub mod world;
