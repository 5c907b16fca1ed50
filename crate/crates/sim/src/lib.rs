//! Deterministic 2D simulation substrate: walls and landmarks, a 360 degree
//! LiDAR, a holonomic robot, and a linear KF-SLAM with known heading.

pub mod consistency;
pub mod fixtures;
pub mod kf;
pub mod lidar;
pub mod sim;
pub mod world;

pub use fixtures::Fixture;
pub use kf::{kf_predict, kf_update, pose_belief, KfState, NoiseParams, Observation};
pub use lidar::{raycast_scan, LidarSpec};
pub use sim::{Sensed, SimConfig, Simulator};
pub use world::{Extent, Landmark, WorldModel};
