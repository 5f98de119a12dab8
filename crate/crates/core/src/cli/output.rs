//! Output files. Every CSV starts with a `# config_sha256=` comment line
//! followed by a header row; JSON summaries carry the same hash as a field.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dynamics::{configuration_at, once_infected_set, Trajectory};
use crate::error::{Error, Result};
use crate::topology::{Graph, LatticeBox, Point, TruncatedTree};

/// How sites of a graph are laid out in CSV columns.
pub trait SiteColumns: Graph {
    fn columns(&self) -> String;
    fn row(&self, x: Self::Site) -> String;

    /// The coordinate of a site on a line, for `r_t` and `l_t`.
    fn line_coord(&self, _x: Self::Site) -> Option<i32> {
        None
    }
}

impl SiteColumns for LatticeBox {
    fn columns(&self) -> String {
        ["x", "y", "z", "w"][..self.dim()].join(",")
    }

    fn row(&self, x: Point) -> String {
        let c: Vec<String> = x.coords(self.dim()).iter().map(i32::to_string).collect();
        c.join(",")
    }

    fn line_coord(&self, x: Point) -> Option<i32> {
        (self.dim() == 1).then_some(x.0[0])
    }
}

impl SiteColumns for TruncatedTree {
    fn columns(&self) -> String {
        "site,level".into()
    }

    fn row(&self, x: crate::topology::TreeSite) -> String {
        format!("{},{}", self.format_site(x), x.level())
    }
}

fn comment(hash: &str) -> String {
    format!("# config_sha256={hash}")
}

fn write_csv<I>(path: &Path, hash: &str, columns: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", comment(hash))?;
    writeln!(w, "{columns}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the requested configurations of `traj` as `snap_t{time}.csv` in
/// `dir`, one row per site. With `once_infected` the sets `H_t` are written
/// instead of `ξ_t`.
pub fn emit_snapshots<G: SiteColumns>(
    graph: &G,
    traj: &Trajectory<G::Site>,
    times: &[f64],
    once_infected: bool,
    dir: &Path,
    hash: &str,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(times.len());
    for &t in times {
        let stored = traj.snapshots.iter().find(|s| s.0 == t).map(|s| s.1.clone());
        let sites = match (once_infected, stored) {
            (true, _) => once_infected_set(traj, t)?,
            (false, Some(s)) => s,
            (false, None) => configuration_at(traj, t)?,
        };
        let path = dir.join(format!("snap_t{t}.csv"));
        write_csv(&path, hash, &graph.columns(), sites.into_iter().map(|x| graph.row(x)))?;
        files.push(path);
    }
    Ok(files)
}

/// Maximal time intervals `[start, end)` during which each site is
/// infected, ordered by site then start.
pub fn infection_intervals<S: Copy + Ord>(traj: &Trajectory<S>) -> Result<Vec<(S, f64, f64)>> {
    let deltas = traj
        .deltas
        .as_ref()
        .ok_or_else(|| Error::Unsupported("intervals need recorded state changes".into()))?;
    let mut open: BTreeMap<S, f64> = traj.initial.iter().map(|&x| (x, traj.start)).collect();
    let mut out = Vec::new();
    for d in deltas {
        let x = d.site;
        if d.infected {
            open.entry(x).or_insert(d.time);
        } else if let Some(s) = open.remove(&x) {
            out.push((x, s, d.time));
        }
    }
    out.extend(open.into_iter().map(|(x, s)| (x, s, traj.end)));
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(out)
}

/// The output directory of one run.
pub struct Output {
    dir: PathBuf,
    hash: String,
    files: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path, hash: &str) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), hash: hash.to_string(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn csv<I>(&mut self, name: &str, columns: &str, rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        write_csv(&path, &self.hash, columns, rows)?;
        self.files.push(path.clone());
        Ok(path)
    }

    /// Pretty JSON with a top-level `config_sha256` key added to objects.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_value(value).map_err(|e| Error::Invariant(format!("summary does not serialize: {e}")))?;
        if let Some(obj) = v.as_object_mut() {
            obj.insert("config_sha256".into(), self.hash.clone().into());
        }
        let text = serde_json::to_string_pretty(&v).expect("values serialize");
        self.text(name, &(text + "\n"))
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn snapshots<G: SiteColumns>(
        &mut self,
        sub: &str,
        graph: &G,
        traj: &Trajectory<G::Site>,
        times: &[f64],
        once_infected: bool,
    ) -> Result<()> {
        let files = emit_snapshots(graph, traj, times, once_infected, &self.dir.join(sub), &self.hash)?;
        self.files.extend(files);
        Ok(())
    }
}
