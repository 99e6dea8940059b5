//! Flat `key = value` configuration, kernel round-trips, trajectory CSV and binary snapshots.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::eigen_solver::EigenResult;
use crate::error::{Error, Result};
use crate::group_core::{Field, LatticeDomain};
use crate::nonlocal_grid_solver::{KernelShape, KernelSpec, Trajectory};

/// `key = value` lines; `#` starts a comment, sections are key prefixes such as `kernel.`.
/// Every lookup records the value it resolved (default or given) for provenance.
#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::Config(format!("line {}: bad key '{k}'", i + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(Self {
            entries,
            resolved: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn record(&self, key: &str, value: String) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn require_str(&self, key: &str) -> Result<String> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))?
            .to_string();
        self.record(key, v.clone());
        Ok(v)
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        let v = self.raw(key).unwrap_or(default).to_string();
        self.record(key, v.clone());
        v
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        let v = match self.raw(key) {
            Some(s) => parse_f64(key, s)?,
            None => default,
        };
        self.record(key, format_f64(v));
        Ok(v)
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        let s = self
            .raw(key)
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))?;
        let v = parse_f64(key, s)?;
        self.record(key, format_f64(v));
        Ok(v)
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        let v = match self.raw(key) {
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| Error::param(key, format!("'{s}' is not a nonnegative integer")))?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        let v = match self.raw(key) {
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| Error::param(key, format!("'{s}' is not a nonnegative integer")))?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    /// Comma-separated reals.
    pub fn get_f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|x| parse_f64(key, x.trim()))
                .collect::<Result<Vec<_>>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(Error::param(key, "empty list"));
        }
        self.record(key, v.iter().map(|x| format_f64(*x)).collect::<Vec<_>>().join(", "));
        Ok(v)
    }

    /// Keys present in the file that no lookup asked for.
    pub fn unused_keys(&self) -> Vec<String> {
        let r = self.resolved.borrow();
        self.entries.keys().filter(|k| !r.contains_key(*k)).cloned().collect()
    }

    /// Every resolved key, defaults included, as `key = value` lines in key order.
    pub fn echo(&self) -> String {
        self.resolved
            .borrow()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::param(key, format!("'{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::param(key, "must be finite"));
    }
    Ok(v)
}

/// Shortest representation that parses back to the same double.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

impl KernelShape {
    pub fn name(&self) -> &'static str {
        match self {
            KernelShape::BallBump => "ball_bump",
            KernelShape::ProductBump => "product_bump",
        }
    }
}

impl std::str::FromStr for KernelShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball_bump" => Ok(KernelShape::BallBump),
            "product_bump" => Ok(KernelShape::ProductBump),
            other => Err(Error::param("kernel.shape", format!("unknown shape '{other}'"))),
        }
    }
}

/// `kernel.*` lines that `kernel_from_config` reads back to an identical spec.
pub fn kernel_to_config(j: &KernelSpec) -> String {
    format!(
        "kernel.n = {}\nkernel.shape = {}\nkernel.r_z = {}\nkernel.r_s = {}\nkernel.scale = {}\n\
         kernel.mass = {}\nkernel.c1 = {}\nkernel.eps = {}\n",
        j.n,
        j.shape.name(),
        format_f64(j.r_z),
        format_f64(j.r_s),
        format_f64(j.scale),
        format_f64(j.mass),
        format_f64(j.c1),
        format_f64(j.eps)
    )
}

pub fn kernel_from_config(c: &Config) -> Result<KernelSpec> {
    let n = c.get_usize("kernel.n", 0)?;
    if n == 0 {
        return Err(Error::Config("kernel.n must be given and positive".into()));
    }
    let shape: KernelShape = c.require_str("kernel.shape")?.parse()?;
    let j = KernelSpec {
        n,
        shape,
        r_z: c.require_f64("kernel.r_z")?,
        r_s: c.require_f64("kernel.r_s")?,
        scale: c.require_f64("kernel.scale")?,
        mass: c.require_f64("kernel.mass")?,
        c1: c.require_f64("kernel.c1")?,
        eps: c.require_f64("kernel.eps")?,
    };
    for (name, v) in [("r_z", j.r_z), ("r_s", j.r_s), ("scale", j.scale), ("c1", j.c1), ("eps", j.eps)] {
        if !(v > 0.0) {
            return Err(Error::param(&format!("kernel.{name}"), "must be positive"));
        }
    }
    Ok(j)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Columns t, node, value; one row per stored time and Ω node.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "node", "value"]).map_err(csv_err)?;
    for (t, st) in traj.times.iter().zip(&traj.states) {
        for (p, v) in traj.omega.iter().zip(st) {
            out.write_record([format!("{t:e}"), p.to_string(), format!("{v:e}")])
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Rows (t, node, value) of a trajectory CSV.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<(f64, usize, f64)>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let bad = |what: &str| Error::Io(format!("trajectory csv: bad {what} in '{}'", rec.iter().collect::<Vec<_>>().join(",")));
        let t = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("t"))?;
        let p = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("node"))?;
        let v = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("value"))?;
        rows.push((t, p, v));
    }
    Ok(rows)
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"HSNP";
const SNAPSHOT_VERSION: u32 = 1;

/// Full-lattice field as read from a binary snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    pub h: Vec<f64>,
    pub counts: Vec<usize>,
    pub values: Vec<f64>,
}

/// Little-endian: magic "HSNP", u32 version, u32 n, f64 t, 2n+1 f64 spacings,
/// 2n+1 u64 counts, then every node value in lattice (row-major, s fastest) order.
pub fn write_snapshot<W: Write>(field: &Field, lattice: &LatticeDomain, mut w: W) -> Result<()> {
    field.check(lattice)?;
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(lattice.n() as u32).to_le_bytes())?;
    w.write_all(&field.t.to_le_bytes())?;
    for h in lattice.h() {
        w.write_all(&h.to_le_bytes())?;
    }
    for c in lattice.counts() {
        w.write_all(&(*c as u64).to_le_bytes())?;
    }
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if &b4 != SNAPSHOT_MAGIC {
        return Err(Error::Io("not a snapshot file".into()));
    }
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Io(format!("unsupported snapshot version {version}")));
    }
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    if n == 0 || n > 64 {
        return Err(Error::Io(format!("implausible dimension n={n}")));
    }
    let d = 2 * n + 1;
    let mut f64s = |k: usize| -> Result<Vec<f64>> {
        (0..k)
            .map(|_| {
                r.read_exact(&mut b8)?;
                Ok(f64::from_le_bytes(b8))
            })
            .collect()
    };
    let t = f64s(1)?[0];
    let h = f64s(d)?;
    let mut counts = Vec::with_capacity(d);
    for _ in 0..d {
        r.read_exact(&mut b8)?;
        counts.push(u64::from_le_bytes(b8) as usize);
    }
    let total = counts
        .iter()
        .try_fold(1usize, |a, c| a.checked_mul(*c))
        .ok_or_else(|| Error::Io("snapshot node count overflows".into()))?;
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok(Snapshot {
        n,
        t,
        h,
        counts,
        values,
    })
}

/// Columns field, node, value: the eigenvalue and residual rows come first, then one
/// eigenfunction row per Ω node.
pub fn write_eigen_csv<W: Write>(e: &EigenResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["field", "node", "value"]).map_err(csv_err)?;
    out.write_record(["eigenvalue", "", &format!("{:e}", e.value)]).map_err(csv_err)?;
    out.write_record(["residual", "", &format!("{:e}", e.residual)]).map_err(csv_err)?;
    for (p, v) in e.omega.iter().zip(&e.vector) {
        out.write_record(["eigenfunction", &p.to_string(), &format!("{v:e}")])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
