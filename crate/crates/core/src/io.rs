//! Run artifacts: binary field snapshots, stamped CSV files and run directories.
//!
//! Snapshot layout: the 8-byte magic `HSTRIP01`, a little-endian `u64` header
//! length, a JSON [`SnapshotHeader`], then the coefficients as little-endian
//! `f64` (re, im) pairs, horizontal mode major.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::band::{BandKind, BandState};
use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::field::{Parity, SpectralField};
use crate::grid::StripGrid;
use crate::limit::{limit_series, LimitParams, LimitRun, LimitSnapshot, RunStatus};
use crate::lp::{chemin_lerner_norm, DyadicFilterBank, NormSeries, TimeExponent};
use crate::pe::{pe_series, PeParams, PeRun, PeSnapshot};
use crate::verify::{write_certificates_csv, CertificateReport, SweepResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const MAGIC: &[u8; 8] = b"HSTRIP01";

/// Provenance written at the top of every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub config_hash: String,
    pub schema: u32,
    pub version: String,
}

impl Stamp {
    pub fn of(config: &RunConfig) -> Self {
        Self {
            config_hash: config.hash(),
            schema: SCHEMA_VERSION,
            version: VERSION.to_string(),
        }
    }

    /// `#`-prefixed preamble lines preceding the CSV header row.
    pub fn write_preamble(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# config_hash={}", self.config_hash)?;
        writeln!(w, "# schema={}", self.schema)?;
        writeln!(w, "# version={}", self.version)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub t: f64,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub name: String,
    pub parity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Analytic radius of the run at `t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(flatten)]
    pub stamp: Stamp,
}

impl SnapshotHeader {
    pub fn new(name: &str, t: f64, field: &SpectralField, stamp: &Stamp) -> Self {
        let g = field.grid();
        Self {
            t,
            nx: g.nx(),
            ny: g.ny(),
            lx: g.lx(),
            name: name.to_string(),
            parity: field.parity().name().to_string(),
            eps: None,
            radius: None,
            stamp: stamp.clone(),
        }
    }
}

pub fn write_snapshot(path: &Path, header: &SnapshotHeader, field: &SpectralField) -> Result<()> {
    let g = field.grid();
    if (header.nx, header.ny) != (g.nx(), g.ny()) || header.parity != field.parity().name() {
        return Err(Error::Format("header does not describe the field".into()));
    }
    let json = serde_json::to_vec(header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for c in field.data() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, SpectralField)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("{} is not a snapshot", path.display())));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(Error::Format(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: SnapshotHeader = serde_json::from_slice(&json)?;
    let parity = Parity::from_name(&header.parity)
        .ok_or_else(|| Error::Format(format!("unknown parity `{}`", header.parity)))?;
    let grid = StripGrid::new(header.nx, header.ny, header.lx)?;
    let n = header.nx * parity.vertical_len(header.ny);
    let mut bytes = Vec::with_capacity(16 * n);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * n {
        return Err(Error::Format(format!(
            "expected {} coefficient bytes, found {}",
            16 * n,
            bytes.len()
        )));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    let data = bytes
        .chunks_exact(16)
        .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
        .collect();
    Ok((header, SpectralField::from_coefficients(grid, parity, data)?))
}

/// Rows of a stamped CSV file: `#` lines are skipped, the first other line is the header.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let r = BufReader::new(File::open(path)?);
    let mut header = None;
    let mut rows = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(str::to_string).collect();
        if header.is_none() {
            header = Some(cells);
        } else {
            rows.push(cells);
        }
    }
    let header = header.ok_or_else(|| Error::Format(format!("{} has no header row", path.display())))?;
    Ok((header, rows))
}

/// Which system a run directory holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Limit,
    Pe,
    Sweep,
}

/// Contents of `config.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub kind: RunKind,
    pub config: RunConfig,
    pub lambda: f64,
    /// Fitted constant used for certificate budgets.
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhausted_at: Option<f64>,
}

/// One output directory: `config.json`, `fields/`, `norms.csv`, `band.csv`, `certificates.csv`.
#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    /// `{root}/{kind}-{hash prefix}` (plus `-eps{ε}` for PE runs), created if absent.
    pub fn create(root: &Path, manifest: &RunManifest) -> Result<Self> {
        let kind = match manifest.kind {
            RunKind::Limit => "limit",
            RunKind::Pe => "pe",
            RunKind::Sweep => "sweep",
        };
        let mut name = format!("{kind}-{}", &manifest.stamp.config_hash[..12]);
        if let Some(e) = manifest.eps {
            name.push_str(&format!("-eps{e}"));
        }
        let path = root.join(name);
        fs::create_dir_all(path.join("fields"))?;
        let dir = Self { path };
        let mut w = BufWriter::new(File::create(dir.path.join("config.json"))?);
        serde_json::to_writer_pretty(&mut w, manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(dir)
    }

    pub fn open(path: &Path) -> Result<(Self, RunManifest)> {
        let text = fs::read_to_string(path.join("config.json"))?;
        let manifest: RunManifest = serde_json::from_str(&text)?;
        if manifest.stamp.schema != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "schema {} in {}, expected {SCHEMA_VERSION}",
                manifest.stamp.schema,
                path.display()
            )));
        }
        Ok((
            Self {
                path: path.to_path_buf(),
            },
            manifest,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn stamped(&self, name: &str, stamp: &Stamp) -> Result<BufWriter<File>> {
        let mut w = BufWriter::new(File::create(self.path.join(name))?);
        stamp.write_preamble(&mut w)?;
        Ok(w)
    }

    pub fn write_certificates(&self, reports: &[CertificateReport], stamp: &Stamp) -> Result<PathBuf> {
        let mut w = self.stamped("certificates.csv", stamp)?;
        write_certificates_csv(reports, &mut w)?;
        w.flush()?;
        Ok(self.path.join("certificates.csv"))
    }

    pub fn write_sweep(&self, result: &SweepResult, stamp: &Stamp) -> Result<PathBuf> {
        let mut w = self.stamped("sweep.csv", stamp)?;
        result.write_csv(&mut w)?;
        w.flush()?;
        let mut j = BufWriter::new(File::create(self.path.join("sweep.json"))?);
        serde_json::to_writer_pretty(&mut j, result)?;
        j.flush()?;
        Ok(self.path.join("sweep.csv"))
    }

    fn write_band(&self, band: &BandState, eps: Option<f64>, stamp: &Stamp) -> Result<()> {
        let mut w = self.stamped("band.csv", stamp)?;
        match eps {
            None => band.write_csv(&mut w)?,
            Some(e) => {
                writeln!(w, "t,integrand,accumulated,radius,eps")?;
                for s in band.history() {
                    writeln!(
                        w,
                        "{:e},{:e},{:e},{:e},{e:e}",
                        s.t, s.integrand, s.accumulated, s.radius
                    )?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `norms.csv` (`name,s,p,value`, plus `eps` for PE runs) and one `series/{name}.csv` per series.
    fn write_norms(&self, series: &[(String, NormSeries)], eps: Option<f64>, stamp: &Stamp) -> Result<()> {
        let mut w = self.stamped("norms.csv", stamp)?;
        let extra = eps.map_or(String::new(), |e| format!(",{e:.6e}"));
        writeln!(w, "name,s,p,value{}", if eps.is_some() { ",eps" } else { "" })?;
        for (name, s) in series {
            for p in [TimeExponent::Inf, TimeExponent::Two] {
                let value = chemin_lerner_norm(s, p)?;
                writeln!(w, "{name},{},{},{value:.12e}{extra}", s.s(), p.label())?;
            }
        }
        w.flush()?;
        fs::create_dir_all(self.path.join("series"))?;
        for (name, s) in series {
            let mut w = self.stamped(&format!("series/{name}.csv"), stamp)?;
            s.write_csv(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }

    fn snapshot(&self, name: &str, n: usize, header: SnapshotHeader, f: &SpectralField) -> Result<()> {
        write_snapshot(&self.path.join("fields").join(format!("{name}_{n:05}.bin")), &header, f)
    }

    pub fn write_limit_run(&self, run: &LimitRun, stamp: &Stamp) -> Result<()> {
        for (n, s) in run.samples.iter().enumerate() {
            for (name, f) in [("u", &s.u), ("temp", &s.temp), ("du_dt", &s.du_dt)] {
                let mut h = SnapshotHeader::new(name, s.t, f, stamp);
                h.radius = Some(s.radius);
                self.snapshot(name, n, h, f)?;
            }
        }
        self.write_norms(&run.series, None, stamp)?;
        self.write_band(&run.band, None, stamp)
    }

    pub fn write_pe_run(&self, run: &PeRun, stamp: &Stamp) -> Result<()> {
        let eps = run.params.eps;
        for (n, s) in run.samples.iter().enumerate() {
            for (name, f) in [("u", &s.u), ("temp", &s.temp)] {
                let mut h = SnapshotHeader::new(name, s.t, f, stamp);
                h.radius = Some(s.radius);
                h.eps = Some(eps);
                self.snapshot(name, n, h, f)?;
            }
        }
        self.write_norms(&run.series, Some(eps), stamp)?;
        self.write_band(&run.band, Some(eps), stamp)
    }

    /// Snapshots `fields/{name}_*.bin` in sample order with their headers.
    fn read_fields(&self, name: &str) -> Result<Vec<(SnapshotHeader, SpectralField)>> {
        let mut paths: Vec<PathBuf> = fs::read_dir(self.path.join("fields"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|s| s.to_str())
                    .is_some_and(|s| s.starts_with(&format!("{name}_")) && s.ends_with(".bin"))
            })
            .collect();
        paths.sort();
        paths.iter().map(|p| read_snapshot(p)).collect()
    }

    fn read_band(&self, kind: BandKind, a: f64, lambda: f64, dt: f64) -> Result<BandState> {
        let (_, rows) = read_csv(&self.path.join("band.csv"))?;
        let mut band = BandState::new(kind, a, lambda)?;
        for row in rows {
            let integrand: f64 = row
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format("malformed band row".into()))?;
            band = band.advance_with(integrand, dt)?;
        }
        Ok(band)
    }

    /// Rebuilds a limit run from its artifacts; norm series are recomputed from the snapshots.
    pub fn read_limit_run(&self, manifest: &RunManifest) -> Result<LimitRun> {
        let cfg = &manifest.config;
        let u = self.read_fields("u")?;
        let temp = self.read_fields("temp")?;
        let du = self.read_fields("du_dt")?;
        if u.is_empty() || u.len() != temp.len() || u.len() != du.len() {
            return Err(Error::Format(format!("incomplete fields in {}", self.path.display())));
        }
        let samples = u
            .into_iter()
            .zip(temp)
            .zip(du)
            .map(|(((h, u), (_, temp)), (_, du_dt))| LimitSnapshot {
                t: h.t,
                radius: h.radius.unwrap_or(cfg.a),
                u,
                temp,
                du_dt,
            })
            .collect::<Vec<_>>();
        let bank = DyadicFilterBank::new(cfg.grid)?;
        let series = limit_series(&samples, &bank)?;
        Ok(LimitRun {
            grid: cfg.grid,
            params: LimitParams::from_config(cfg),
            a: cfg.a,
            lambda: manifest.lambda,
            band: self.read_band(BandKind::ThetaLimit, cfg.a, manifest.lambda, cfg.dt)?,
            status: status_of(manifest),
            diagnostics: Vec::new(),
            samples,
            series,
        })
    }

    pub fn read_pe_run(&self, manifest: &RunManifest) -> Result<PeRun> {
        let cfg = &manifest.config;
        let eps = manifest
            .eps
            .ok_or_else(|| Error::Format("PE manifest without eps".into()))?;
        let u = self.read_fields("u")?;
        let temp = self.read_fields("temp")?;
        if u.is_empty() || u.len() != temp.len() {
            return Err(Error::Format(format!("incomplete fields in {}", self.path.display())));
        }
        let samples = u
            .into_iter()
            .zip(temp)
            .map(|((h, u), (_, temp))| PeSnapshot {
                t: h.t,
                radius: h.radius.unwrap_or(cfg.a),
                u,
                temp,
            })
            .collect::<Vec<_>>();
        let bank = DyadicFilterBank::new(cfg.grid)?;
        let series = pe_series(&samples, eps, &bank)?;
        Ok(PeRun {
            grid: cfg.grid,
            params: PeParams::from_config(cfg, eps),
            a: cfg.a,
            lambda: manifest.lambda,
            band: self.read_band(BandKind::TauPe, cfg.a, manifest.lambda, cfg.dt)?,
            status: status_of(manifest),
            diagnostics: Vec::new(),
            samples,
            series,
        })
    }
}

fn status_of(manifest: &RunManifest) -> RunStatus {
    match manifest.exhausted_at {
        Some(t) => RunStatus::BandExhausted { t },
        None => RunStatus::Completed,
    }
}

/// Run directories (containing `config.json`) directly below `root`, sorted by name.
pub fn list_runs(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.exists() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("config.json").is_file())
        .collect();
    out.sort();
    Ok(out)
}
