//! Experiment runner: configuration, simulated scenes, sweeps and link
//! budgets.

pub mod config;
pub mod linkbudget;
pub mod scene;
pub mod sweep;

pub use config::{apply_override, ExperimentConfig, FrameSource, SnrKind, TimingSource, CONFIG_ENV};
pub use linkbudget::{corridor_profile, link_budget, Corridor, CorridorPoint, LinkBudget, LinkPowers};
pub use scene::{
    decode_capture, decode_iq, ingest_iq, receive_iq, scene_payloads, write_packet_row, Capture, PacketTruth,
    Reception, Scene, SceneLayout, PACKET_CSV_HEADER,
};
pub use sweep::{calibrate, job_seed, run_sweep, write_sweep_csv, DecisionCalibration, PacketRecord, SweepResult, SweepRow};
