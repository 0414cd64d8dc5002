use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use graphkdv::{GraphFunction, GraphGrid, Side};

/// Parameters echoed into every CSV header.
#[derive(Clone, Debug)]
pub struct Header {
    pub z: f64,
    pub l: f64,
    pub n: usize,
    pub extra: Vec<(String, String)>,
}

impl Header {
    fn line(&self, quantity: &str, edge: Option<(usize, Side, f64, f64)>) -> String {
        let mut s = format!("# quantity={quantity} Z={} L={} N={}", self.z, self.l, self.n);
        if let Some((e, side, a, b)) = edge {
            let side = match side {
                Side::Minus => "minus",
                Side::Plus => "plus",
            };
            let _ = write!(s, " edge={e} side={side} alpha={a} beta={b}");
        }
        for (k, v) in &self.extra {
            let _ = write!(s, " {k}={v}");
        }
        s.push_str(" units=dimensionless\n");
        s
    }
}

/// Writes `<stem>_e<edge>.csv` with columns `(x, value)` for every edge.
pub fn write_edges(dir: &Path, stem: &str, u: &GraphFunction<f64>, header: &Header) -> Result<Vec<PathBuf>> {
    let grid: &GraphGrid = &u.grid;
    let g = &grid.graph;
    let mut files = Vec::new();
    for e in 0..grid.edge_count() {
        let mut s = header.line(stem, Some((e, g.side(e), g.alpha[e], g.beta[e])));
        s.push_str("x,value\n");
        for k in 0..=grid.n {
            let _ = writeln!(s, "{:.10e},{:.12e}", grid.x(e, k), u.values[e][k]);
        }
        let path = dir.join(format!("{stem}_e{e}.csv"));
        fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
    }
    Ok(files)
}

/// Writes a `(t, value)` series.
pub fn write_series(dir: &Path, stem: &str, t: &[f64], v: &[f64], header: &Header) -> Result<PathBuf> {
    let mut s = header.line(stem, None);
    s.push_str("t,value\n");
    for (a, b) in t.iter().zip(v) {
        let _ = writeln!(s, "{a:.10e},{b:.12e}");
    }
    let path = dir.join(format!("{stem}.csv"));
    fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Writes a table with a header row.
pub fn write_table(path: &Path, comment: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut s = format!("# {comment}\n{}\n", columns.join(","));
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}
