//! Persistence of decoded factor models as sectioned delimited text.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{FactorModel, VegaWeights};
use crate::error::{Error, Result};
use crate::market_data::{LatticeNode, LiquidLattice};
use crate::static_arbitrage::FactorConstraintSystem;

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    writeln!(out, "[{name}] {} {}", m.nrows(), m.ncols()).unwrap();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
}

fn write_vector(out: &mut String, name: &str, v: &[f64]) {
    writeln!(out, "[{name}] {}", v.len()).unwrap();
    let row: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    writeln!(out, "{}", row.join(",")).unwrap();
}

/// Persist a factor model: manifest, lattice, weights, bases, series,
/// residuals and the projected constraint system.
pub fn write_factor_model(path: &Path, model: &FactorModel, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    writeln!(
        out,
        "[manifest] d={} d_sec={} lattice_hash={} redundancy_removed={}",
        model.d_primary(),
        model.d_secondary(),
        model.lattice.content_hash(),
        model.factor_constraints.redundancy_removed,
    )
    .unwrap();
    writeln!(out, "[lattice] {}", model.lattice.len()).unwrap();
    for n in model.lattice.nodes() {
        writeln!(out, "{},{},{}", n.tau, n.m, n.delta_label).unwrap();
    }
    write_vector(&mut out, "g0", model.g0.as_slice());
    write_vector(&mut out, "lambdas", &model.weights.lambdas);
    write_matrix(&mut out, "basis", &model.basis);
    write_matrix(&mut out, "secondary_basis", &model.secondary_basis);
    write_matrix(&mut out, "primary_series", &model.primary_series);
    write_matrix(&mut out, "secondary_series", &model.secondary_series);
    write_matrix(&mut out, "residuals", &model.residuals);
    write_matrix(&mut out, "constraints_a", &model.factor_constraints.a_proj);
    write_vector(
        &mut out,
        "constraints_b",
        model.factor_constraints.b.as_slice(),
    );
    let flags: Vec<String> = model
        .arbitrage_flagged
        .iter()
        .map(|f| if *f { "1".into() } else { "0".into() })
        .collect();
    writeln!(out, "[flags] {}", flags.len()).unwrap();
    writeln!(out, "{}", flags.join(",")).unwrap();
    crate::market_data::io_atomic_write(path, &out)
}

struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            location: format!("{}:{}", self.path.display(), self.pos),
            message: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        while self.pos < self.lines.len() {
            let l = self.lines[self.pos].trim();
            self.pos += 1;
            if !l.is_empty() && !l.starts_with('#') {
                return Ok(l);
            }
        }
        Err(Error::Parse {
            location: format!("{}:eof", self.path.display()),
            message: "unexpected end of file".into(),
        })
    }

    fn section(&mut self, name: &str) -> Result<Vec<&'a str>> {
        let header = self.next_line()?;
        if !header.starts_with(&format!("[{name}]")) {
            return Err(self.err(format!("expected section [{name}], got `{header}`")));
        }
        Ok(header.split_whitespace().skip(1).collect())
    }

    fn floats(&mut self) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        line.split(',')
            .map(|v| v.parse::<f64>().map_err(|e| self.err(format!("bad float: {e}"))))
            .collect()
    }
}

/// Read a factor model written by [`write_factor_model`].
pub fn read_factor_model(path: &Path) -> Result<FactorModel> {
    let text = std::fs::read_to_string(path)?;
    let mut r = Reader {
        lines: text.lines().collect(),
        pos: 0,
        path,
    };
    let manifest = r.section("manifest")?;
    let mut redundancy_removed = false;
    for kv in &manifest {
        if let Some(v) = kv.strip_prefix("redundancy_removed=") {
            redundancy_removed = v == "true";
        }
    }
    let lattice_args = r.section("lattice")?;
    let n_nodes: usize = lattice_args
        .first()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| r.err("lattice section needs a node count"))?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let vals = r.floats()?;
        if vals.len() != 3 {
            return Err(r.err("lattice row needs tau,m,delta"));
        }
        nodes.push(LatticeNode {
            tau: vals[0],
            m: vals[1],
            delta_label: vals[2],
        });
    }
    let lattice = LiquidLattice::new(nodes)?;

    let read_vector = |r: &mut Reader, name: &str| -> Result<Vec<f64>> {
        r.section(name)?;
        r.floats()
    };
    let g0 = read_vector(&mut r, "g0")?;
    let lambdas = read_vector(&mut r, "lambdas")?;

    let read_matrix = |r: &mut Reader, name: &str| -> Result<DMatrix<f64>> {
        let args = r.section(name)?;
        let rows: usize = args
            .first()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| r.err("matrix needs row count"))?;
        let cols: usize = args
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| r.err("matrix needs column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let vals = r.floats()?;
            if vals.len() != cols {
                return Err(r.err(format!("expected {cols} values per row")));
            }
            data.extend(vals);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    };
    let basis = read_matrix(&mut r, "basis")?;
    let secondary_basis = read_matrix(&mut r, "secondary_basis")?;
    let primary_series = read_matrix(&mut r, "primary_series")?;
    let secondary_series = read_matrix(&mut r, "secondary_series")?;
    let residuals = read_matrix(&mut r, "residuals")?;
    let constraints_a = read_matrix(&mut r, "constraints_a")?;
    let constraints_b = {
        r.section("constraints_b")?;
        r.floats()?
    };
    r.section("flags")?;
    let flags: Vec<bool> = r
        .next_line()?
        .split(',')
        .map(|v| v.trim() == "1")
        .collect();

    let weights = VegaWeights {
        mean_vegas: lambdas.iter().map(|l| 1.0 / l).collect(),
        lambdas,
    };
    Ok(FactorModel {
        g0: DVector::from_vec(g0),
        basis,
        secondary_basis,
        primary_series,
        secondary_series,
        residuals,
        arbitrage_flagged: flags,
        weights,
        factor_constraints: FactorConstraintSystem {
            a_proj: constraints_a,
            b: DVector::from_vec(constraints_b),
            redundancy_removed,
        },
        lattice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::DT_DAY;

    #[test]
    fn model_round_trip() {
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
            LatticeNode {
                tau: 60.0 * DT_DAY,
                m: -0.03,
                delta_label: 0.6,
            },
            LatticeNode {
                tau: 60.0 * DT_DAY,
                m: 0.03,
                delta_label: 0.4,
            },
        ])
        .unwrap();
        let model = FactorModel {
            g0: DVector::from_vec(vec![0.05, 0.03, 0.06, 0.04]),
            basis: DMatrix::from_row_slice(2, 4, &[0.5, 0.5, 0.5, 0.5, 0.5, -0.5, 0.5, -0.5]),
            secondary_basis: DMatrix::from_row_slice(1, 4, &[0.5, 0.5, -0.5, -0.5]),
            primary_series: DMatrix::from_row_slice(3, 2, &[0.1, 0.0, 0.2, -0.1, 0.3, 0.05]),
            secondary_series: DMatrix::from_row_slice(3, 1, &[0.01, 0.0, -0.01]),
            residuals: DMatrix::zeros(3, 4),
            arbitrage_flagged: vec![false, true, false],
            weights: VegaWeights::identity(4),
            factor_constraints: FactorConstraintSystem {
                a_proj: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
                b: DVector::from_vec(vec![-1.0, -2.0]),
                redundancy_removed: true,
            },
            lattice,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        write_factor_model(&path, &model, &["config=xyz".into()]).unwrap();
        let back = read_factor_model(&path).unwrap();
        assert_eq!(back.basis, model.basis);
        assert_eq!(back.primary_series, model.primary_series);
        assert_eq!(back.arbitrage_flagged, model.arbitrage_flagged);
        assert_eq!(back.factor_constraints.a_proj, model.factor_constraints.a_proj);
        assert_eq!(back.lattice, model.lattice);
        assert_eq!(back.weights.lambdas, model.weights.lambdas);
        assert!(back.factor_constraints.redundancy_removed);
    }
}
