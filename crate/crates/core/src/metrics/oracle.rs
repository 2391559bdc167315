//! Standalone accounting oracle: reproduces the hardware waste tables from
//! drop counts alone, by pure arithmetic over the per-AQM cost constants.
//!
//! The bundled fixture carries reference drop counts measured on switch
//! hardware for the twelve preset configurations and four AQM implementations, plus
//! the published waste tables for cross-checking. A handful of published
//! cells are inconsistent with their own drop counts; the oracle reports the
//! computed value and flags those cells.

use std::collections::BTreeMap;
use std::fmt;

use crate::metrics::{AqmCostConstants, MetricsError};
use crate::model::{AqmKind, Preset, ALL_PRESETS, NOTIFICATION_BYTES};

/// The four columns of the reference measurement tables.
pub const ORACLE_AQMS: [AqmKind; 4] = [
    AqmKind::IredDelay,
    AqmKind::Pi2,
    AqmKind::Codel,
    AqmKind::IredGhost,
];

fn column_index(kind: AqmKind) -> Option<usize> {
    match kind {
        AqmKind::IredDelay => Some(0),
        AqmKind::Pi2 => Some(1),
        AqmKind::Codel => Some(2),
        AqmKind::IredGhost => Some(3),
        _ => None,
    }
}

/// Measured drops per (configuration, AQM).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DropCountTable {
    cells: BTreeMap<(String, String), u64>,
}

impl DropCountTable {
    pub fn get(&self, preset: Preset, aqm: AqmKind) -> Option<u64> {
        self.cells
            .get(&(preset.name().to_string(), aqm.key().to_string()))
            .copied()
    }

    pub fn set(&mut self, preset: Preset, aqm: AqmKind, drops: u64) {
        self.cells
            .insert((preset.name().to_string(), aqm.key().to_string()), drops);
    }
}

/// Parse the flat `conf,ired,pi2,codel,iredg` CSV fixture.
pub fn parse_drop_counts(text: &str) -> Result<DropCountTable, MetricsError> {
    let mut table = DropCountTable::default();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| MetricsError::BadFixture("empty file".into()))?;
    if header.trim() != "conf,ired,pi2,codel,iredg" {
        return Err(MetricsError::BadFixture(format!(
            "unexpected header `{header}`"
        )));
    }
    for line in lines {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 5 {
            return Err(MetricsError::BadFixture(format!("bad row `{line}`")));
        }
        let preset: Preset = fields[0]
            .parse()
            .map_err(|_| MetricsError::BadFixture(format!("bad configuration `{}`", fields[0])))?;
        for (i, kind) in ORACLE_AQMS.iter().enumerate() {
            let drops: u64 = fields[i + 1]
                .parse()
                .map_err(|_| MetricsError::BadFixture(format!("bad count `{}`", fields[i + 1])))?;
            table.set(preset, *kind, drops);
        }
    }
    Ok(table)
}

/// The drop counts shipped with the repository.
pub fn bundled_drop_counts() -> DropCountTable {
    parse_drop_counts(include_str!("../../data/reference_drop_counts.csv"))
        .expect("bundled fixture parses")
}

/// Per-drop memory charge in bytes for one AQM at a given MTU.
pub fn memory_per_drop(aqm: AqmKind, mtu_bytes: u32) -> u64 {
    match aqm {
        // disaggregated: ingress buffer + 48-byte notification
        AqmKind::IredDelay | AqmKind::IredDepth => mtu_bytes as u64 + NOTIFICATION_BYTES as u64,
        // ghost: ingress buffer only
        AqmKind::IredGhost => mtu_bytes as u64,
        // egress drop: ingress buffer + traffic manager
        _ => 2 * mtu_bytes as u64,
    }
}

/// Per-drop cycle charge: ingress only for ingress-dropping AQMs.
pub fn cycles_per_drop(aqm: AqmKind) -> u64 {
    let c = AqmCostConstants::for_kind(aqm);
    match aqm {
        AqmKind::IredDelay | AqmKind::IredDepth | AqmKind::IredGhost => c.ingress_cycles,
        _ => c.total_cycles(),
    }
}

/// Per-drop weight charge in tenths: ingress only for ingress-dropping AQMs.
pub fn weight_tenths_per_drop(aqm: AqmKind) -> u64 {
    let c = AqmCostConstants::for_kind(aqm);
    match aqm {
        AqmKind::IredDelay | AqmKind::IredDepth | AqmKind::IredGhost => c.ingress_weight_tenths,
        _ => c.total_weight_tenths(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WasteCell {
    pub drops: u64,
    pub memory_bytes: u64,
    pub cycles: u64,
    pub weight_tenths: u64,
}

/// Computed waste per (configuration, AQM) cell.
#[derive(Debug, Clone, Default)]
pub struct WasteTables {
    cells: BTreeMap<(String, String), WasteCell>,
}

impl WasteTables {
    pub fn get(&self, preset: Preset, aqm: AqmKind) -> Option<&WasteCell> {
        self.cells
            .get(&(preset.name().to_string(), aqm.key().to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Preset, AqmKind, &WasteCell)> {
        ALL_PRESETS.into_iter().flat_map(move |p| {
            ORACLE_AQMS
                .into_iter()
                .filter_map(move |a| self.get(p, a).map(|c| (p, a, c)))
        })
    }
}

/// Compute the full waste tables from drop counts alone: pure arithmetic,
/// no simulation. Every (preset, AQM) cell must be present.
pub fn accounting_oracle(counts: &DropCountTable) -> Result<WasteTables, MetricsError> {
    let mut missing = Vec::new();
    let mut out = WasteTables::default();
    for preset in ALL_PRESETS {
        let mtu = preset.link().2;
        for aqm in ORACLE_AQMS {
            match counts.get(preset, aqm) {
                None => missing.push(format!("{}/{}", preset.name(), aqm.key())),
                Some(drops) => {
                    out.cells.insert(
                        (preset.name().to_string(), aqm.key().to_string()),
                        WasteCell {
                            drops,
                            memory_bytes: drops * memory_per_drop(aqm, mtu),
                            cycles: drops * cycles_per_drop(aqm),
                            weight_tenths: drops * weight_tenths_per_drop(aqm),
                        },
                    );
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(MetricsError::MissingCells(missing));
    }
    Ok(out)
}

/// Published reference tables, columns [iRED, PI2, CoDel, iRED+G].
/// Memory in MB (10^6 bytes), cycles in units, weight in tenths.
pub const PUBLISHED_MEMORY_MB: [[f64; 4]; 12] = [
    [55.09, 175.24, 107.58, 56.34],
    [17.5, 68.2, 53.84, 17.36],
    [14.69, 22.78, 109.8, 68.58],
    [6.34, 5.4, 27.24, 19.89],
    [23.59, 60.89, 34.05, 23.21],
    [6.46, 30.79, 33.06, 6.46],
    [5.19, 7.26, 53.01, 22.69],
    [6.15, 3.8, 24.48, 12.48],
    [8.19, 21.33, 26.43, 8.73],
    [2.44, 9.48, 8.34, 2.38],
    [2.09, 2.11, 19.18, 7.06],
    [5.4, 1.2, 23.89, 7.89],
];

pub const PUBLISHED_CYCLES: [[u64; 4]; 12] = [
    [3_844_476, 12_851_740, 9_180_416, 7_962_932],
    [1_221_588, 5_001_700, 4_594_432, 2_453_900],
    [1_025_460, 1_660_120, 9_370_112, 9_693_700],
    [443_124, 396_440, 2_326_016, 2_812_392],
    [3_005_208, 8_373_200, 5_448_192, 6_151_392],
    [823_500, 4_234_120, 5_290_240, 1_712_324],
    [663_228, 998_360, 8_482_816, 6_013_804],
    [787_968, 523_160, 3_917_056, 3_309_744],
    [1_977_912, 5_865_860, 8_459_264, 4_630_292],
    [589_140, 2_607_440, 2_670_080, 1_266_276],
    [505_872, 580_580, 6_137_600, 3_745_828],
    [1_304_640, 332_200, 7_646_720, 4_185_728],
];

pub const PUBLISHED_WEIGHT_TENTHS: [[u64; 4]; 12] = [
    [40_046_625, 149_898_022, 60_497_507, 78_126_880],
    [12_724_875, 56_746_560, 30_276_589, 24_076_000],
    [10_681_875, 18_834_816, 61_747_574, 95_108_000],
    [4_615_875, 4_497_792, 15_328_082, 27_593_280],
    [31_304_250, 94_997_760, 35_902_734, 60_353_280],
    [8_578_125, 48_038_016, 34_861_855, 16_800_160],
    [6_908_625, 11_326_848, 55_900_432, 59_003_360],
    [8_208_000, 5_935_488, 25_812_787, 32_472_960],
    [20_603_250, 66_550_848, 55_745_228, 45_429_280],
    [6_136_875, 29_582_592, 17_595_410, 12_423_840],
    [5_269_500, 6_586_944, 40_445_825, 36_751_520],
    [13_590_000, 3_768_960, 50_390_690, 41_067_520],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WasteMetric {
    Memory,
    Cycles,
    Weight,
}

impl fmt::Display for WasteMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WasteMetric::Memory => "memory",
            WasteMetric::Cycles => "cycles",
            WasteMetric::Weight => "weight",
        })
    }
}

/// One cell compared against the published reference.
#[derive(Debug, Clone)]
pub struct CellComparison {
    pub preset: Preset,
    pub aqm: AqmKind,
    pub metric: WasteMetric,
    pub computed: f64,
    pub published: f64,
    /// True when the published value disagrees with the fixture's own drop
    /// count times the per-drop constant beyond tolerance.
    pub flagged: bool,
}

/// Tolerance for the memory comparison: the reference prints MB to two
/// decimals.
pub const MEMORY_TOLERANCE_MB: f64 = 0.02;

/// Compare computed tables against the published reference. Cycles and
/// weight compare exactly; memory within [`MEMORY_TOLERANCE_MB`].
pub fn compare_with_published(tables: &WasteTables) -> Vec<CellComparison> {
    let mut out = Vec::new();
    for (row, preset) in ALL_PRESETS.into_iter().enumerate() {
        for aqm in ORACLE_AQMS {
            let col = column_index(aqm).unwrap();
            let cell = match tables.get(preset, aqm) {
                Some(c) => *c,
                None => continue,
            };
            let mem_mb = cell.memory_bytes as f64 / 1e6;
            let pub_mem = PUBLISHED_MEMORY_MB[row][col];
            out.push(CellComparison {
                preset,
                aqm,
                metric: WasteMetric::Memory,
                computed: mem_mb,
                published: pub_mem,
                flagged: (mem_mb - pub_mem).abs() > MEMORY_TOLERANCE_MB,
            });
            let pub_cycles = PUBLISHED_CYCLES[row][col];
            out.push(CellComparison {
                preset,
                aqm,
                metric: WasteMetric::Cycles,
                computed: cell.cycles as f64,
                published: pub_cycles as f64,
                flagged: cell.cycles != pub_cycles,
            });
            let pub_weight = PUBLISHED_WEIGHT_TENTHS[row][col];
            out.push(CellComparison {
                preset,
                aqm,
                metric: WasteMetric::Weight,
                computed: cell.weight_tenths as f64 / 10.0,
                published: pub_weight as f64 / 10.0,
                flagged: cell.weight_tenths != pub_weight,
            });
        }
    }
    out
}

/// Savings of the disaggregated AQM versus one egress-based competitor for a
/// single configuration: competitor waste divided by iRED waste.
#[derive(Debug, Clone, Copy)]
pub struct SavingsRow {
    pub preset: Preset,
    pub versus: AqmKind,
    pub memory_ratio: f64,
    pub cycles_ratio: f64,
    pub weight_ratio: f64,
}

/// Ratio tables behind the consolidated savings comparison.
pub fn savings_ratios(tables: &WasteTables) -> Vec<SavingsRow> {
    let mut out = Vec::new();
    for preset in ALL_PRESETS {
        let ired = match tables.get(preset, AqmKind::IredDelay) {
            Some(c) => *c,
            None => continue,
        };
        for versus in [AqmKind::Pi2, AqmKind::Codel] {
            if let Some(other) = tables.get(preset, versus) {
                out.push(SavingsRow {
                    preset,
                    versus,
                    memory_ratio: other.memory_bytes as f64 / ired.memory_bytes as f64,
                    cycles_ratio: other.cycles as f64 / ired.cycles as f64,
                    weight_ratio: other.weight_tenths as f64 / ired.weight_tenths as f64,
                });
            }
        }
    }
    out
}

/// Render one metric of the waste tables as CSV (rows: configurations).
pub fn tables_to_csv(tables: &WasteTables, metric: WasteMetric) -> String {
    let mut out = String::from("conf,ired,pi2,codel,iredg\n");
    for preset in ALL_PRESETS {
        let mut row = vec![preset.name().to_string()];
        for aqm in ORACLE_AQMS {
            let cell = tables.get(preset, aqm).expect("complete table");
            row.push(match metric {
                WasteMetric::Memory => format!("{:.2}", cell.memory_bytes as f64 / 1e6),
                WasteMetric::Cycles => format!("{}", cell.cycles),
                WasteMetric::Weight => format!("{:.1}", cell.weight_tenths as f64 / 10.0),
            });
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn savings_to_csv(rows: &[SavingsRow]) -> String {
    let mut out = String::from("conf,versus,memory_ratio,cycles_ratio,weight_ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4}\n",
            r.preset.name(),
            r.versus.key(),
            r.memory_ratio,
            r.cycles_ratio,
            r.weight_ratio
        ));
    }
    out
}

pub fn comparison_to_csv(cells: &[CellComparison]) -> String {
    let mut out = String::from("conf,aqm,metric,computed,published,flagged\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4},{}\n",
            c.preset.name(),
            c.aqm.key(),
            c.metric,
            c.computed,
            c.published,
            c.flagged
        ));
    }
    out
}
