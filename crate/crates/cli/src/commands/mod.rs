pub mod bench;
pub mod compare;
pub mod heatmap;
pub mod oracle;
pub mod simulate;
pub mod sweep;
