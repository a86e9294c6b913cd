//! Fixed colour scale for signal-strength rasters.

use serde::{Deserialize, Serialize};

pub const LEGEND_MIN_DBM: f64 = -120.0;
pub const LEGEND_MAX_DBM: f64 = -20.0;
pub const LEGEND_BIN_DBM: f64 = 10.0;

const BIN_COLORS: [&str; 10] = [
    "#313695", "#4575b4", "#74add1", "#abd9e9", "#e0f3f8", "#fee090", "#fdae61", "#f46d43", "#d73027", "#a50026",
];

/// Colour of nodes no concentrator covers.
pub const NO_COVERAGE_COLOR: &str = "#00000000";

/// Best-server colours, cycled by concentrator index.
pub const SERVER_COLORS: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendBin {
    /// Inclusive lower edge, dBm.
    pub lower: f64,
    /// Exclusive upper edge, dBm; the last bin includes it.
    pub upper: f64,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Legend {
    pub unit: String,
    pub bins: Vec<LegendBin>,
    pub no_coverage: String,
}

impl Default for Legend {
    fn default() -> Self {
        Self {
            unit: "dBm".into(),
            bins: BIN_COLORS
                .iter()
                .enumerate()
                .map(|(k, c)| LegendBin {
                    lower: LEGEND_MIN_DBM + LEGEND_BIN_DBM * k as f64,
                    upper: LEGEND_MIN_DBM + LEGEND_BIN_DBM * (k + 1) as f64,
                    color: (*c).into(),
                })
                .collect(),
            no_coverage: NO_COVERAGE_COLOR.into(),
        }
    }
}

impl Legend {
    /// Bin of a level; levels beyond the scale fall into the end bins.
    pub fn bin_index(&self, dbm: f64) -> usize {
        let last = self.bins.len() - 1;
        self.bins
            .iter()
            .position(|b| dbm < b.upper)
            .unwrap_or(last)
    }

    pub fn color(&self, dbm: f64) -> &str {
        &self.bins[self.bin_index(dbm)].color
    }
}

/// `#rrggbb` or `#rrggbbaa` as RGBA bytes.
pub(crate) fn parse_color(hex: &str) -> [u8; 4] {
    let h = hex.trim_start_matches('#');
    let byte = |k: usize| u8::from_str_radix(h.get(2 * k..2 * k + 2).unwrap_or("ff"), 16).unwrap_or(255);
    [byte(0), byte(1), byte(2), if h.len() >= 8 { byte(3) } else { 255 }]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_bins_of_ten_db() {
        let l = Legend::default();
        assert_eq!(l.bins.len(), 10);
        assert_eq!(l.bins[0].lower, -120.0);
        assert_eq!(l.bins[9].upper, -20.0);
        assert_eq!(l.bin_index(-120.0), 0);
        assert_eq!(l.bin_index(-110.0), 1);
        assert_eq!(l.bin_index(-20.0), 9);
        assert_eq!(l.bin_index(-150.0), 0);
        assert_eq!(l.bin_index(5.0), 9);
    }

    #[test]
    fn colors_parse() {
        assert_eq!(parse_color("#a50026"), [0xa5, 0x00, 0x26, 0xff]);
        assert_eq!(parse_color(NO_COVERAGE_COLOR), [0, 0, 0, 0]);
    }
}
