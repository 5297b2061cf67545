//! Binary snapshots, energy CSV, patch-layout CSV and checkpoints.
//!
//! Snapshot block, little endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `WSC1` |
//! | 4 | version `u32` |
//! | 4 | field id `u32` |
//! | 8 | `nx`, `ny` as `u32` |
//! | 40 | `hx`, `hy`, `x0`, `y0`, `t` as `f64` |
//! | 8 | step `n` as `u64` |
//! | 8 per value | row-major `f64` payload |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use crate::amr::Patch;
use crate::grid::{EdgeField, StaggeredGrid};
use crate::stepper::WaveState;
use crate::{Error, Result};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"WSC1";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const CHECKPOINT_MAGIC: [u8; 4] = *b"WCK1";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const SNAPSHOT_HEADER_BYTES: usize = 68;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u32)]
pub enum FieldId {
    Pressure = 0,
    PressurePrev = 1,
    LambdaX = 2,
    LambdaY = 3,
    LambdaPrevX = 4,
    LambdaPrevY = 5,
    Psi = 6,
}

impl FieldId {
    fn from_u32(v: u32) -> Option<Self> {
        use FieldId::*;
        [Pressure, PressurePrev, LambdaX, LambdaY, LambdaPrevX, LambdaPrevY, Psi].into_iter().find(|f| *f as u32 == v)
    }

    /// Payload length on an `nx x ny` cell grid.
    pub fn len(self, nx: usize, ny: usize) -> usize {
        match self {
            FieldId::LambdaX | FieldId::LambdaPrevX => (nx - 1) * ny,
            FieldId::LambdaY | FieldId::LambdaPrevY => nx * (ny - 1),
            _ => nx * ny,
        }
    }
}

/// One field with the grid metadata needed to interpret it.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub field: FieldId,
    pub grid: StaggeredGrid,
    pub t: f64,
    pub n: u64,
    pub data: Vec<f64>,
}

impl Snapshot {
    pub fn new(field: FieldId, grid: StaggeredGrid, t: f64, n: u64, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), field.len(grid.nx, grid.ny), "payload length does not match {field:?}");
        Self { field, grid, t, n, data }
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let g = &self.grid;
        w.write_all(&SNAPSHOT_MAGIC)?;
        for v in [SNAPSHOT_VERSION, self.field as u32, g.nx as u32, g.ny as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [g.hx, g.hy, g.x0, g.y0, self.t] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.n.to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.data.len());
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    /// Reads one block; `Err(detail)` describes malformed input.
    pub fn read_from(r: &mut impl Read) -> std::result::Result<Self, String> {
        let mut head = [0u8; SNAPSHOT_HEADER_BYTES];
        r.read_exact(&mut head).map_err(|e| format!("truncated header: {e}"))?;
        if head[..4] != SNAPSHOT_MAGIC {
            return Err(format!("bad magic {:?}", &head[..4]));
        }
        let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != SNAPSHOT_VERSION {
            return Err(format!("unsupported snapshot version {version}"));
        }
        let field = FieldId::from_u32(u32_at(8)).ok_or_else(|| format!("unknown field id {}", u32_at(8)))?;
        let (nx, ny) = (u32_at(12) as usize, u32_at(16) as usize);
        if nx < 2 || ny < 2 {
            return Err(format!("degenerate grid {nx}x{ny}"));
        }
        let grid = StaggeredGrid { nx, ny, hx: f64_at(20), hy: f64_at(28), x0: f64_at(36), y0: f64_at(44) };
        let t = f64_at(52);
        let n = u64::from_le_bytes(head[60..68].try_into().unwrap());
        let len = field.len(nx, ny);
        let mut buf = vec![0u8; 8 * len];
        r.read_exact(&mut buf).map_err(|e| format!("truncated payload: {e}"))?;
        let data = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { field, grid, t, n, data })
    }
}

pub fn write_snapshot(path: &Path, s: &Snapshot) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    s.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Snapshot::read_from(&mut BufReader::new(f)).map_err(|d| Error::format(path, d))
}

/// One line of the energy time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub n: u64,
    pub t: f64,
    pub e_embed: f64,
    pub d: f64,
    pub r: f64,
    pub residual: f64,
    pub e_phys_level0: f64,
    pub e_phys_all: f64,
    pub solver_iters: usize,
}

pub const ENERGY_HEADER: &str = "n,t,E_embed,D,R,residual,E_phys_level0,E_phys_all,solver_iters";

impl EnergyRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.n, self.t, self.e_embed, self.d, self.r, self.residual, self.e_phys_level0, self.e_phys_all, self.solver_iters
        )
    }

    pub fn parse_csv(line: &str) -> Option<Self> {
        let v: Vec<&str> = line.trim().split(',').collect();
        if v.len() != 9 {
            return None;
        }
        let f = |i: usize| v[i].parse::<f64>().ok();
        Some(Self {
            n: v[0].parse().ok()?,
            t: f(1)?,
            e_embed: f(2)?,
            d: f(3)?,
            r: f(4)?,
            residual: f(5)?,
            e_phys_level0: f(6)?,
            e_phys_all: f(7)?,
            solver_iters: v[8].parse().ok()?,
        })
    }
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(ENERGY_HEADER) {
        return Err(Error::format(path, "missing energy header"));
    }
    lines.enumerate().map(|(i, l)| EnergyRow::parse_csv(l).ok_or_else(|| Error::format(path, format!("bad row {}", i + 2)))).collect()
}

pub const LAYOUT_HEADER: &str = "step,level,i0,j0,i1,j1";

enum Job {
    Snapshot(PathBuf, Snapshot),
    Energy(EnergyRow),
    Layout(u64, Vec<(usize, Patch)>),
}

/// Output files written on a background thread.
pub struct OutputSink {
    tx: Option<mpsc::Sender<Job>>,
    handle: Option<JoinHandle<Result<()>>>,
    dir: PathBuf,
}

impl OutputSink {
    /// Creates `dir` and opens `energy.csv` and `layout.csv` in it.
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let energy_path = dir.join("energy.csv");
        let layout_path = dir.join("layout.csv");
        let open = |p: &Path, header: &str| -> Result<BufWriter<File>> {
            let mut w = BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?);
            writeln!(w, "{header}").map_err(|e| Error::io(p, e))?;
            Ok(w)
        };
        let mut energy = open(&energy_path, ENERGY_HEADER)?;
        let mut layout = open(&layout_path, LAYOUT_HEADER)?;
        let (tx, rx) = mpsc::channel::<Job>();
        let handle = std::thread::spawn(move || -> Result<()> {
            for job in rx {
                match job {
                    Job::Snapshot(p, s) => write_snapshot(&p, &s)?,
                    Job::Energy(r) => writeln!(energy, "{}", r.to_csv()).map_err(|e| Error::io(&energy_path, e))?,
                    Job::Layout(step, rows) => {
                        for (l, p) in rows {
                            writeln!(layout, "{step},{l},{},{},{},{}", p.i0, p.j0, p.i1, p.j1).map_err(|e| Error::io(&layout_path, e))?;
                        }
                    }
                }
            }
            energy.flush().map_err(|e| Error::io(&energy_path, e))?;
            layout.flush().map_err(|e| Error::io(&layout_path, e))
        });
        Ok(Self { tx: Some(tx), handle: Some(handle), dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn send(&self, job: Job) -> Result<()> {
        // a closed channel means the writer already failed; finish() reports why
        let _ = self.tx.as_ref().expect("sink is open").send(job);
        Ok(())
    }

    pub fn energy(&self, row: EnergyRow) -> Result<()> {
        self.send(Job::Energy(row))
    }

    pub fn layout(&self, step: u64, rows: Vec<(usize, Patch)>) -> Result<()> {
        self.send(Job::Layout(step, rows))
    }

    /// Queues `snapshot` as `<dir>/<name>`.
    pub fn snapshot(&self, name: &str, snapshot: Snapshot) -> Result<()> {
        self.send(Job::Snapshot(self.dir.join(name), snapshot))
    }

    /// Drains the queue and reports the first write error.
    pub fn finish(mut self) -> Result<()> {
        self.close()
    }

    fn close(&mut self) -> Result<()> {
        drop(self.tx.take());
        match self.handle.take() {
            Some(h) => h.join().unwrap_or_else(|_| Err(Error::format(&self.dir, "writer thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for OutputSink {
    fn drop(&mut self) {
        if let Err(e) = self.close() {
            log::error!("output writer: {e}");
        }
    }
}

/// Window and patch list of one stored level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelManifest {
    pub oi: usize,
    pub oj: usize,
    pub nx: usize,
    pub ny: usize,
    pub patches: Vec<Patch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub version: u32,
    /// Base grid `nx, ny` and extent `x0, x1, y0, y1`.
    pub grid: [usize; 2],
    pub extent: [f64; 4],
    pub tau: f64,
    pub t: f64,
    pub n: u64,
    pub next_snapshot: u64,
    pub levels: Vec<LevelManifest>,
    pub ledger_tail: Vec<EnergyRow>,
}

/// Manifest plus the two time levels of every stored level.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub states: Vec<WaveState>,
}

fn state_blocks(g: &StaggeredGrid, s: &WaveState) -> [Snapshot; 6] {
    let blk = |f, d: &Vec<f64>| Snapshot::new(f, *g, s.t, s.n, d.clone());
    [
        blk(FieldId::PressurePrev, &s.p_prev.data),
        blk(FieldId::Pressure, &s.p_curr.data),
        blk(FieldId::LambdaPrevX, &s.lambda_prev.x),
        blk(FieldId::LambdaPrevY, &s.lambda_prev.y),
        blk(FieldId::LambdaX, &s.lambda_curr.x),
        blk(FieldId::LambdaY, &s.lambda_curr.y),
    ]
}

/// Writes `WCK1`, version, manifest length and JSON, then six snapshot blocks per level.
pub fn write_checkpoint(path: &Path, ck: &Checkpoint, grids: &[StaggeredGrid]) -> Result<()> {
    let json = serde_json::to_vec(&ck.manifest).map_err(|e| Error::format(path, e.to_string()))?;
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    w.write_all(&CHECKPOINT_MAGIC).map_err(io)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    for (g, s) in grids.iter().zip(&ck.states) {
        for b in state_blocks(g, s) {
            b.write_to(&mut w).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let bad = |d: String| Error::format(path, d);
    let mut head = [0u8; 16];
    r.read_exact(&mut head).map_err(|e| bad(format!("truncated checkpoint: {e}")))?;
    if head[..4] != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let len = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(|e| bad(format!("truncated manifest: {e}")))?;
    let manifest: CheckpointManifest = serde_json::from_slice(&json).map_err(|e| bad(e.to_string()))?;
    let mut states = Vec::with_capacity(manifest.levels.len());
    for lm in &manifest.levels {
        let mut blocks = Vec::with_capacity(6);
        for _ in 0..6 {
            let b = Snapshot::read_from(&mut r).map_err(&bad)?;
            if (b.grid.nx, b.grid.ny) != (lm.nx, lm.ny) {
                return Err(bad("block dimensions disagree with manifest".into()));
            }
            blocks.push(b);
        }
        let (nx, ny) = (lm.nx, lm.ny);
        let cells = |b: &Snapshot| crate::grid::CellField { nx, ny, data: b.data.clone() };
        let edges = |x: &Snapshot, y: &Snapshot| EdgeField { nx, ny, x: x.data.clone(), y: y.data.clone() };
        states.push(WaveState {
            p_prev: cells(&blocks[0]),
            p_curr: cells(&blocks[1]),
            lambda_prev: edges(&blocks[2], &blocks[3]),
            lambda_curr: edges(&blocks[4], &blocks[5]),
            t: blocks[1].t,
            n: blocks[1].n,
        });
    }
    Ok(Checkpoint { manifest, states })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> StaggeredGrid {
        StaggeredGrid::new(5, 4, (-1.0, 1.5), (0.0, 2.0)).unwrap()
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let data: Vec<f64> = (0..20).map(|k| (k as f64 * 0.37).sin() / 3.0).collect();
        let s = Snapshot::new(FieldId::Pressure, g(), 0.125, 7, data);
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let back = Snapshot::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, s);
        for (a, b) in back.data.iter().zip(&s.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn zero_field_is_header_plus_zero_payload() {
        let s = Snapshot::new(FieldId::Pressure, g(), 0.0, 0, vec![0.0; 20]);
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), SNAPSHOT_HEADER_BYTES + 20 * 8);
        assert!(buf[SNAPSHOT_HEADER_BYTES..].iter().all(|b| *b == 0));
        assert_eq!(&buf[..4], b"WSC1");
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        std::fs::write(&p, b"WSC2".repeat(30)).unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn energy_rows_round_trip() {
        let r = EnergyRow {
            n: 3,
            t: 0.03,
            e_embed: 1.0 / 3.0,
            d: 1e-300,
            r: -0.0,
            residual: 2.5e-17,
            e_phys_level0: 0.1,
            e_phys_all: 0.2,
            solver_iters: 17,
        };
        assert_eq!(EnergyRow::parse_csv(&r.to_csv()), Some(r));
    }
}
