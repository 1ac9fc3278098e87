//! Capture ingestion, session assembly, TLS inspection, feature extraction
//! and dataset preparation for encrypted traffic detection.

pub mod capture;
pub mod dataset;
pub mod features;
pub mod filter;
pub mod flow;
pub mod packet;
pub mod pipeline;
pub mod tls;
pub mod tls_features;
