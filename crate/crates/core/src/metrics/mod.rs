//! Resource-accounting and fairness analytics: the waste ledger charged on
//! every AQM drop, Jain's index, time-series recording and run exports.

pub mod oracle;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AqmKind, PipelineCostModel, SimTime, TrafficClass};

/// Per-AQM (ingress, egress) cycle and weight constants, weights in tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AqmCostConstants {
    pub ingress_cycles: u64,
    pub egress_cycles: u64,
    pub ingress_weight_tenths: u64,
    pub egress_weight_tenths: u64,
}

impl AqmCostConstants {
    pub fn for_kind(kind: AqmKind) -> AqmCostConstants {
        let (ic, ec, iw, ew) = kind.block_costs();
        AqmCostConstants {
            ingress_cycles: ic,
            egress_cycles: ec,
            ingress_weight_tenths: iw,
            egress_weight_tenths: ew,
        }
    }

    pub fn total_cycles(&self) -> u64 {
        self.ingress_cycles + self.egress_cycles
    }

    pub fn total_weight_tenths(&self) -> u64 {
        self.ingress_weight_tenths + self.egress_weight_tenths
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropLocus {
    Ingress,
    Egress,
}

/// Accumulators for the four waste metrics plus per-locus drop counters.
/// Accumulators only increase; every AQM drop lands in exactly one locus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WasteLedger {
    pub wasted_memory_bytes: u64,
    pub wasted_time_ns: u64,
    pub wasted_cycles: u64,
    pub wasted_weight_tenths: u64,
    pub ingress_drops: u64,
    pub egress_drops: u64,
    pub tail_drops: u64,
}

impl WasteLedger {
    pub fn new() -> WasteLedger {
        WasteLedger::default()
    }

    /// Charge one AQM drop.
    ///
    /// Egress drops consumed the whole pipeline: double the packet size in
    /// buffer memory, the packet's queue delay in time, and both blocks'
    /// cycles and weight. Ingress drops consumed the ingress buffer plus,
    /// for the disaggregated AQM, the 48-byte notification and its
    /// recirculation latency; the dropped packet itself never queued.
    pub fn charge_drop(
        &mut self,
        aqm: AqmKind,
        locus: DropLocus,
        pkt_bytes: u64,
        queue_delay: SimTime,
    ) {
        let cost = PipelineCostModel::for_aqm(aqm);
        match locus {
            DropLocus::Egress => {
                self.egress_drops += 1;
                self.wasted_memory_bytes += cost.egress_drop_memory_multiplier * pkt_bytes;
                self.wasted_time_ns += queue_delay.as_nanos();
                self.wasted_cycles += cost.ingress_cycles + cost.egress_cycles;
                self.wasted_weight_tenths +=
                    cost.ingress_weight_tenths + cost.egress_weight_tenths;
            }
            DropLocus::Ingress => {
                self.ingress_drops += 1;
                let notif = match aqm {
                    AqmKind::IredDelay | AqmKind::IredDepth => {
                        self.wasted_time_ns += cost.recirc_latency.as_nanos();
                        cost.notification_bytes as u64
                    }
                    // ghost variant: no notification, no recirculation
                    _ => 0,
                };
                self.wasted_memory_bytes += pkt_bytes + notif;
                self.wasted_cycles += cost.ingress_cycles;
                self.wasted_weight_tenths += cost.ingress_weight_tenths;
            }
        }
    }

    /// A tail drop at the Traffic Manager: the packet consumed the ingress
    /// buffer and TM admission, so memory is charged like an Egress drop,
    /// but no egress cycles or weight.
    pub fn charge_tail_drop(&mut self, aqm: AqmKind, pkt_bytes: u64) {
        let cost = PipelineCostModel::for_aqm(aqm);
        self.tail_drops += 1;
        self.wasted_memory_bytes += cost.egress_drop_memory_multiplier * pkt_bytes;
        self.wasted_cycles += cost.ingress_cycles;
        self.wasted_weight_tenths += cost.ingress_weight_tenths;
    }

    pub fn wasted_weight(&self) -> f64 {
        self.wasted_weight_tenths as f64 / 10.0
    }

    pub fn wasted_memory_mb(&self) -> f64 {
        // MB means 10^6 bytes throughout.
        self.wasted_memory_bytes as f64 / 1e6
    }
}

/// Jain's fairness index: (Σx)² / (n·Σx²), in (1/n, 1] for positive input.
pub fn jain_index(rates: &[f64]) -> Result<f64, MetricsError> {
    if rates.is_empty() || rates.iter().all(|&x| x == 0.0) {
        return Err(MetricsError::UndefinedIndex);
    }
    let n = rates.len() as f64;
    let sum: f64 = rates.iter().sum();
    let sum_sq: f64 = rates.iter().map(|x| x * x).sum();
    Ok(sum * sum / (n * sum_sq))
}

/// One 1-second series bucket.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesBucket {
    pub t_s: u64,
    pub delay_p50_ms: f64,
    pub delay_p99_ms: f64,
    pub classic_depth_bytes: u64,
    pub l4s_depth_bytes: u64,
    pub classic_mbps: f64,
    pub scalable_mbps: f64,
}

/// Collects per-second queue-delay and throughput samples during a run.
#[derive(Debug, Default)]
pub struct SeriesRecorder {
    delay_samples_ns: Vec<u64>,
    classic_bytes: u64,
    scalable_bytes: u64,
    pub buckets: Vec<SeriesBucket>,
}

impl SeriesRecorder {
    pub fn new() -> SeriesRecorder {
        SeriesRecorder::default()
    }

    pub fn record_delay(&mut self, delay: SimTime) {
        self.delay_samples_ns.push(delay.as_nanos());
    }

    pub fn record_delivery(&mut self, class: TrafficClass, bytes: u64) {
        match class {
            TrafficClass::Classic => self.classic_bytes += bytes,
            TrafficClass::Scalable => self.scalable_bytes += bytes,
        }
    }

    /// Close the current 1 s bucket.
    pub fn tick(&mut self, t_s: u64, classic_depth: u64, l4s_depth: u64) {
        self.delay_samples_ns.sort_unstable();
        let pct = |samples: &[u64], p: f64| -> f64 {
            if samples.is_empty() {
                return 0.0;
            }
            let idx = ((samples.len() - 1) as f64 * p).round() as usize;
            samples[idx] as f64 / 1e6
        };
        self.buckets.push(SeriesBucket {
            t_s,
            delay_p50_ms: pct(&self.delay_samples_ns, 0.50),
            delay_p99_ms: pct(&self.delay_samples_ns, 0.99),
            classic_depth_bytes: classic_depth,
            l4s_depth_bytes: l4s_depth,
            classic_mbps: self.classic_bytes as f64 * 8.0 / 1e6,
            scalable_mbps: self.scalable_bytes as f64 * 8.0 / 1e6,
        });
        self.delay_samples_ns.clear();
        self.classic_bytes = 0;
        self.scalable_bytes = 0;
    }
}

/// Per-class drop/mark/delivery counts for the summary record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub delivered: u64,
    pub ingress_aqm_drops: u64,
    pub egress_aqm_drops: u64,
    pub tail_drops: u64,
    pub ce_marks: u64,
}

/// The flat summary record exported after every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub aqm: String,
    pub seed: u64,
    pub duration_s: f64,
    pub injected: u64,
    pub delivered: u64,
    pub ingress_aqm_drops: u64,
    pub egress_aqm_drops: u64,
    pub tail_drops: u64,
    pub noroute_drops: u64,
    pub notifications_emitted: u64,
    pub notifications_consumed: u64,
    pub classic: ClassCounts,
    pub scalable: ClassCounts,
    pub wasted_memory_bytes: u64,
    pub wasted_time_ns: u64,
    pub wasted_cycles: u64,
    pub wasted_weight_tenths: u64,
    pub classic_mean_mbps: f64,
    pub scalable_mean_mbps: f64,
    /// Jain index between the Cubic aggregate and the Prague aggregate,
    /// one value per load phase.
    pub jain_per_phase: Vec<f64>,
    pub trace_hash: String,
    pub events_processed: u64,
}

impl RunSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(
            "scenario,aqm,seed,duration_s,injected,delivered,ingress_aqm_drops,\
             egress_aqm_drops,tail_drops,noroute_drops,notifications_emitted,\
             notifications_consumed,ce_marks_scalable,wasted_memory_bytes,wasted_time_ns,\
             wasted_cycles,wasted_weight_tenths,classic_mean_mbps,scalable_mean_mbps,\
             jain_per_phase,trace_hash\n",
        );
        let jain = self
            .jain_per_phase
            .iter()
            .map(|j| format!("{j:.4}"))
            .collect::<Vec<_>>()
            .join("|");
        out.push_str(&format!(
            "{},{},{},{:.3},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.4},{:.4},{},{}\n",
            self.scenario,
            self.aqm,
            self.seed,
            self.duration_s,
            self.injected,
            self.delivered,
            self.ingress_aqm_drops,
            self.egress_aqm_drops,
            self.tail_drops,
            self.noroute_drops,
            self.notifications_emitted,
            self.notifications_consumed,
            self.scalable.ce_marks,
            self.wasted_memory_bytes,
            self.wasted_time_ns,
            self.wasted_cycles,
            self.wasted_weight_tenths,
            self.classic_mean_mbps,
            self.scalable_mean_mbps,
            jain,
            self.trace_hash,
        ));
        out
    }
}

pub fn series_to_csv(buckets: &[SeriesBucket]) -> String {
    let mut out = String::from(
        "t_s,delay_p50_ms,delay_p99_ms,classic_depth_bytes,l4s_depth_bytes,classic_mbps,scalable_mbps\n",
    );
    for b in buckets {
        out.push_str(&format!(
            "{},{:.4},{:.4},{},{},{:.4},{:.4}\n",
            b.t_s,
            b.delay_p50_ms,
            b.delay_p99_ms,
            b.classic_depth_bytes,
            b.l4s_depth_bytes,
            b.classic_mbps,
            b.scalable_mbps
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExportFormat {
    Csv,
    Json,
}

/// Write the summary and series files for one run. Returns the paths written.
pub fn export_run(
    out_dir: &Path,
    summary: &RunSummary,
    series: &[SeriesBucket],
) -> Result<Vec<PathBuf>, MetricsError> {
    fs::create_dir_all(out_dir).map_err(|e| MetricsError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let mut paths = Vec::new();
    let write = |name: &str, contents: &str| -> Result<PathBuf, MetricsError> {
        let path = out_dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| MetricsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        f.write_all(contents.as_bytes()).map_err(|e| MetricsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(path)
    };
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    paths.push(write("summary.json", &json)?);
    paths.push(write("summary.csv", &summary.to_csv())?);
    paths.push(write("series.csv", &series_to_csv(series))?);
    Ok(paths)
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("Jain index undefined for all-zero rates")]
    UndefinedIndex,
    #[error("drop-count table is missing cells: {0:?}")]
    MissingCells(Vec<String>),
    #[error("fewer than 3 probe points ({0})")]
    InsufficientData(usize),
    #[error("I/O error at {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed fixture: {0}")]
    BadFixture(String),
}
