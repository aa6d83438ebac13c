//! Delimited-text readers and writers for quote panels and surfaces.
//!
//! Both formats are comma-separated with a mandatory header row; lines
//! starting with `#` are metadata comments (schema/config stamps) and are
//! ignored by the parsers.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use super::{DayQuotes, LatticeNode, LiquidLattice, RawQuote, RawQuotePanel, SurfacePanel};
use crate::error::{Error, Result};

/// Write bytes via a temp file and rename, so readers never see a partial
/// artifact.
pub(crate) fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("{}:{}", path.display(), line),
        message: msg.into(),
    }
}

const RAW_HEADER: &str = "date,tau_days,delta,call_price,forward,discount,spot,underlying";

/// Write a raw quote panel: one record per `(date, expiry, delta)`.
pub fn write_raw_panel(path: &Path, panel: &RawQuotePanel, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str(RAW_HEADER);
    out.push('\n');
    for day in panel.days() {
        for q in &day.quotes {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                day.date, q.tau_days, q.delta, q.call_price, q.forward, q.discount, day.spot, day.label
            )
            .unwrap();
        }
    }
    atomic_write(path, &out)
}

/// Read a raw quote panel, grouping records into days per underlying.
pub fn read_raw_panel(path: &Path) -> Result<RawQuotePanel> {
    let text = std::fs::read_to_string(path)?;
    let mut days: Vec<DayQuotes> = Vec::new();
    let mut header_seen = false;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != RAW_HEADER {
                return Err(parse_err(
                    path,
                    ln + 1,
                    format!("expected header `{RAW_HEADER}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(parse_err(
                path,
                ln + 1,
                format!("expected 8 fields, got {}", fields.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
            .map_err(|e| parse_err(path, ln + 1, format!("bad date: {e}")))?;
        let num = |i: usize, name: &str| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| parse_err(path, ln + 1, format!("bad {name}: {e}")))
        };
        let tau_days: u32 = fields[1]
            .parse()
            .map_err(|e| parse_err(path, ln + 1, format!("bad tau_days: {e}")))?;
        let quote = RawQuote {
            tau_days,
            delta: num(2, "delta")?,
            call_price: num(3, "call_price")?,
            forward: num(4, "forward")?,
            discount: num(5, "discount")?,
        };
        let spot = num(6, "spot")?;
        let label = fields[7].to_string();
        match days.last_mut() {
            Some(d) if d.date == date && d.label == label => d.quotes.push(quote),
            _ => days.push(DayQuotes {
                date,
                label,
                spot,
                quotes: vec![quote],
            }),
        }
    }
    if !header_seen {
        return Err(parse_err(path, 1, "missing header row"));
    }
    RawQuotePanel::new(days)
}

/// Write a surface panel: lattice triples in the header row, then one row
/// per date with its label, spot and N prices.
pub fn write_surface_panel(path: &Path, panel: &SurfacePanel, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    writeln!(out, "# dt = {}", panel.dt).unwrap();
    out.push_str("date,underlying,spot");
    for n in panel.lattice.nodes() {
        write!(out, ",{};{};{}", n.tau, n.m, n.delta_label).unwrap();
    }
    out.push('\n');
    for i in 0..panel.num_rows() {
        write!(out, "{},{},{}", panel.dates[i], panel.labels[i], panel.spots[i]).unwrap();
        for j in 0..panel.lattice.len() {
            write!(out, ",{}", panel.prices[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    atomic_write(path, &out)
}

/// Read a surface panel produced by [`write_surface_panel`].
pub fn read_surface_panel(path: &Path) -> Result<SurfacePanel> {
    let text = std::fs::read_to_string(path)?;
    let mut dt = super::DT_DAY;
    let mut lattice: Option<LiquidLattice> = None;
    let mut dates = Vec::new();
    let mut labels = Vec::new();
    let mut spots = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("dt =") {
                dt = v
                    .trim()
                    .parse()
                    .map_err(|e| parse_err(path, ln + 1, format!("bad dt: {e}")))?;
            }
            continue;
        }
        if lattice.is_none() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 4 || fields[0] != "date" {
                return Err(parse_err(path, ln + 1, "expected surface header row"));
            }
            let mut nodes = Vec::with_capacity(fields.len() - 3);
            for f in &fields[3..] {
                let parts: Vec<&str> = f.split(';').collect();
                if parts.len() != 3 {
                    return Err(parse_err(path, ln + 1, "lattice triple must be tau;m;delta"));
                }
                let p = |s: &str| -> Result<f64> {
                    s.parse()
                        .map_err(|e| parse_err(path, ln + 1, format!("bad lattice value: {e}")))
                };
                nodes.push(LatticeNode {
                    tau: p(parts[0])?,
                    m: p(parts[1])?,
                    delta_label: p(parts[2])?,
                });
            }
            lattice = Some(LiquidLattice::new(nodes)?);
            continue;
        }
        let n = lattice.as_ref().unwrap().len();
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 3 {
            return Err(parse_err(
                path,
                ln + 1,
                format!("expected {} fields, got {}", n + 3, fields.len()),
            ));
        }
        dates.push(
            NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
                .map_err(|e| parse_err(path, ln + 1, format!("bad date: {e}")))?,
        );
        labels.push(fields[1].to_string());
        spots.push(
            fields[2]
                .parse()
                .map_err(|e| parse_err(path, ln + 1, format!("bad spot: {e}")))?,
        );
        for f in &fields[3..] {
            rows.push(
                f.parse()
                    .map_err(|e| parse_err(path, ln + 1, format!("bad price: {e}")))?,
            );
        }
    }
    let lattice = lattice.ok_or_else(|| parse_err(path, 1, "missing header row"))?;
    let n = lattice.len();
    let l = dates.len();
    let prices = DMatrix::from_row_slice(l, n, &rows);
    SurfacePanel::new(lattice, dates, labels, spots, prices, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::DT_DAY;

    fn tiny_panel() -> SurfacePanel {
        let lattice = LiquidLattice::new(vec![
            LatticeNode {
                tau: 30.0 * DT_DAY,
                m: -0.02,
                delta_label: 0.6,
            },
            LatticeNode {
                tau: 30.0 * DT_DAY,
                m: 0.02,
                delta_label: 0.4,
            },
        ])
        .unwrap();
        SurfacePanel::new(
            lattice,
            vec![
                NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(),
                NaiveDate::from_ymd_opt(2020, 1, 3).unwrap(),
            ],
            vec!["U".into(), "U".into()],
            vec![100.0, 101.0],
            DMatrix::from_row_slice(2, 2, &[0.05, 0.03, 0.055, 0.033]),
            DT_DAY,
        )
        .unwrap()
    }

    #[test]
    fn surface_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        let panel = tiny_panel();
        write_surface_panel(&path, &panel, &["config=abc".into()]).unwrap();
        let back = read_surface_panel(&path).unwrap();
        assert_eq!(back.dates, panel.dates);
        assert_eq!(back.labels, panel.labels);
        assert_eq!(back.prices, panel.prices);
        assert_eq!(back.lattice, panel.lattice);
    }

    #[test]
    fn raw_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        let panel = RawQuotePanel::new(vec![DayQuotes {
            date: NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(),
            label: "U".into(),
            spot: 100.0,
            quotes: vec![RawQuote {
                tau_days: 30,
                delta: 0.5,
                call_price: 2.5,
                forward: 100.0,
                discount: 0.999,
            }],
        }])
        .unwrap();
        write_raw_panel(&path, &panel, &[]).unwrap();
        let back = read_raw_panel(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back.days()[0].quotes.len(), 1);
        assert_eq!(back.days()[0].quotes[0].tau_days, 30);
    }
}
