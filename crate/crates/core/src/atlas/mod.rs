//! Embedding vectors, 2-D map coordinates, exact kNN queries, and
//! neighbor-preservation measurement between the two spaces.

mod kdtree;
mod projection;

pub use kdtree::KdTree2;
pub use projection::fallback_project;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PaperId};
use crate::error::{Error, Result};

/// Anything that exposes points keyed by paper id. Implementations keep
/// entries sorted by id, which makes index order the deterministic
/// tie-break order for equal distances.
pub trait PointSpace: Sync {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn coords_into(&self, idx: usize, out: &mut [f64]);
    fn id(&self, idx: usize) -> &PaperId;
    fn index_of(&self, id: &PaperId) -> Option<usize>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn point_vec(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.coords_into(idx, &mut out);
        out
    }

    fn ids(&self) -> Vec<&PaperId> {
        (0..self.len()).map(|i| self.id(i)).collect()
    }
}

/// Dense high-dimensional embedding vectors keyed by paper id.
#[derive(Debug, Clone)]
pub struct VectorStore {
    dim: usize,
    ids: Vec<PaperId>,
    index: HashMap<PaperId, usize>,
    data: Vec<f32>,
}

impl VectorStore {
    /// Builds a store from `(id, vector)` entries; entries are sorted by id.
    pub fn from_parts(dim: usize, mut entries: Vec<(PaperId, Vec<f32>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("vector dimension must be positive"));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut ids = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len() * dim);
        for (id, v) in entries {
            if v.len() != dim {
                return Err(Error::invalid(format!(
                    "vector for {id} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("vector for {id} has non-finite values")));
            }
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::invalid(format!("duplicate vector id {id}")));
            }
            ids.push(id);
            data.extend_from_slice(&v);
        }
        Ok(VectorStore {
            dim,
            ids,
            index,
            data,
        })
    }

    pub fn row(&self, idx: usize) -> &[f32] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn ids(&self) -> &[PaperId] {
        &self.ids
    }

    /// Checks that every stored id exists in the corpus.
    pub fn check_against(&self, corpus: &Corpus) -> Result<()> {
        for id in &self.ids {
            if !corpus.contains(id) {
                return Err(Error::invalid(format!("vector id {id} not present in corpus")));
            }
        }
        Ok(())
    }
}

impl PointSpace for VectorStore {
    fn len(&self) -> usize {
        self.ids.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn coords_into(&self, idx: usize, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(self.row(idx)) {
            *o = *v as f64;
        }
    }

    fn id(&self, idx: usize) -> &PaperId {
        &self.ids[idx]
    }

    fn index_of(&self, id: &PaperId) -> Option<usize> {
        self.index.get(id).copied()
    }
}

/// Where a set of map coordinates came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapProvenance {
    Imported,
    FallbackProjection,
}

/// Per-paper 2-D map coordinates.
#[derive(Debug, Clone)]
pub struct MapCoordinates {
    ids: Vec<PaperId>,
    index: HashMap<PaperId, usize>,
    points: Vec<[f64; 2]>,
    pub provenance: MapProvenance,
}

impl MapCoordinates {
    pub fn from_parts(
        ids: Vec<PaperId>,
        points: Vec<[f64; 2]>,
        provenance: MapProvenance,
    ) -> Result<Self> {
        if ids.len() != points.len() {
            return Err(Error::invalid("coordinate ids and points length mismatch"));
        }
        let mut entries: Vec<(PaperId, [f64; 2])> =
            ids.into_iter().zip(points).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut ids = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        let mut pts = Vec::with_capacity(entries.len());
        for (id, p) in entries {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::invalid(format!("non-finite coordinates for {id}")));
            }
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::invalid(format!("duplicate coordinate id {id}")));
            }
            ids.push(id);
            pts.push(p);
        }
        Ok(MapCoordinates {
            ids,
            index,
            points: pts,
            provenance,
        })
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        self.points[idx]
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn ids(&self) -> &[PaperId] {
        &self.ids
    }

    pub fn point_of(&self, id: &PaperId) -> Option<[f64; 2]> {
        self.index.get(id).map(|&i| self.points[i])
    }

    pub fn check_against(&self, corpus: &Corpus) -> Result<()> {
        for id in &self.ids {
            if !corpus.contains(id) {
                return Err(Error::invalid(format!(
                    "coordinate id {id} not present in corpus"
                )));
            }
        }
        Ok(())
    }
}

impl PointSpace for MapCoordinates {
    fn len(&self) -> usize {
        self.ids.len()
    }

    fn dim(&self) -> usize {
        2
    }

    fn coords_into(&self, idx: usize, out: &mut [f64]) {
        out[0] = self.points[idx][0];
        out[1] = self.points[idx][1];
    }

    fn id(&self, idx: usize) -> &PaperId {
        &self.ids[idx]
    }

    fn index_of(&self, id: &PaperId) -> Option<usize> {
        self.index.get(id).copied()
    }
}

/// Exact nearest-neighbor index over a point space (or a subset of it): a
/// KD-tree in two dimensions, exhaustive scan otherwise. Both paths produce
/// identical results (ascending distance, ties by index).
pub struct NeighborIndex {
    dim: usize,
    /// Original space indices of the indexed points, ascending; `None` when
    /// the whole space is indexed.
    members: Option<Vec<usize>>,
    coords: Vec<f64>,
    kd: Option<KdTree2>,
}

impl NeighborIndex {
    pub fn build<S: PointSpace + ?Sized>(space: &S) -> Self {
        let members: Vec<usize> = (0..space.len()).collect();
        let mut idx = Self::build_subset(space, &members);
        idx.members = None;
        idx
    }

    /// Indexes only `members` (original space indices; sorted internally so
    /// distance ties still break by ascending id). Query results report
    /// original indices.
    pub fn build_subset<S: PointSpace + ?Sized>(space: &S, members: &[usize]) -> Self {
        let mut members: Vec<usize> = members.to_vec();
        members.sort_unstable();
        members.dedup();
        let dim = space.dim();
        let mut coords = vec![0.0; members.len() * dim];
        for (local, &orig) in members.iter().enumerate() {
            space.coords_into(orig, &mut coords[local * dim..(local + 1) * dim]);
        }
        let kd = if dim == 2 {
            let pts: Vec<[f64; 2]> = (0..members.len())
                .map(|i| [coords[2 * i], coords[2 * i + 1]])
                .collect();
            Some(KdTree2::build(&pts))
        } else {
            None
        };
        NeighborIndex {
            dim,
            members: Some(members),
            coords,
            kd,
        }
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn to_local(&self, original: usize) -> Option<usize> {
        match &self.members {
            None => Some(original),
            Some(m) => m.binary_search(&original).ok(),
        }
    }

    fn to_original(&self, local: usize) -> usize {
        match &self.members {
            None => local,
            Some(m) => m[local],
        }
    }

    /// The k nearest indexed points to `query`, ascending by (distance,
    /// index), reported as original space indices with Euclidean distances.
    /// `exclude` is an original index.
    pub fn query(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        let exclude_local = exclude.and_then(|e| self.to_local(e));
        if let Some(kd) = &self.kd {
            return kd
                .knn_sq([query[0], query[1]], k, exclude_local)
                .into_iter()
                .map(|(i, d2)| (self.to_original(i), d2.sqrt()))
                .collect();
        }
        let n = self.len();
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for i in 0..n {
            if Some(i) == exclude_local {
                continue;
            }
            let row = &self.coords[i * self.dim..(i + 1) * self.dim];
            let mut d2 = 0.0;
            for (a, b) in query.iter().zip(row) {
                let diff = a - b;
                d2 += diff * diff;
            }
            if best.len() < k {
                best.push((d2, i));
                best.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            } else if let Some(&worst) = best.last() {
                if (d2, i) < worst {
                    best.pop();
                    let pos = best
                        .binary_search_by(|probe| {
                            probe.0.total_cmp(&d2).then(probe.1.cmp(&i))
                        })
                        .unwrap_or_else(|e| e);
                    best.insert(pos, (d2, i));
                }
            }
        }
        best.into_iter()
            .map(|(d2, i)| (self.to_original(i), d2.sqrt()))
            .collect()
    }

    /// kNN of an indexed point (original index), excluding itself.
    pub fn knn_of(&self, original: usize, k: usize) -> Vec<(usize, f64)> {
        let local = self.to_local(original).expect("point not in index");
        let q = self.coords[local * self.dim..(local + 1) * self.dim].to_vec();
        self.query(&q, k, Some(original))
    }
}

/// The k nearest other papers to `query_id`, ascending by distance (ties by
/// id). Exact. `k` must be smaller than the number of stored points.
pub fn knn<S: PointSpace + ?Sized>(
    space: &S,
    query_id: &PaperId,
    k: usize,
) -> Result<Vec<(PaperId, f64)>> {
    let n = space.len();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "k out of range: k={k} with {n} points (need 1 <= k <= {})",
            n.saturating_sub(1)
        )));
    }
    let idx = space
        .index_of(query_id)
        .ok_or_else(|| Error::invalid(format!("unknown query id {query_id}")))?;
    let index = NeighborIndex::build(space);
    Ok(index
        .knn_of(idx, k)
        .into_iter()
        .map(|(i, d)| (space.id(i).clone(), d))
        .collect())
}

/// Per-paper share of common k-nearest neighbors between two spaces over the
/// same id set, plus the corpus mean.
#[derive(Debug, Clone)]
pub struct OverlapReport {
    /// (id, share) sorted by id.
    pub per_paper: Vec<(PaperId, f64)>,
    pub mean: f64,
    pub k: usize,
}

pub fn neighbor_overlap<A, B>(a: &A, b: &B, k: usize) -> Result<OverlapReport>
where
    A: PointSpace + ?Sized,
    B: PointSpace + ?Sized,
{
    let n = a.len();
    if n != b.len() {
        return Err(Error::invalid(format!(
            "id set mismatch: {n} vs {} points",
            b.len()
        )));
    }
    for i in 0..n {
        if a.id(i) != b.id(i) {
            return Err(Error::invalid(format!(
                "id set mismatch at position {i}: {} vs {}",
                a.id(i),
                b.id(i)
            )));
        }
    }
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "k out of range: k={k} with {n} points"
        )));
    }

    let ia = NeighborIndex::build(a);
    let ib = NeighborIndex::build(b);
    // Entries are id-sorted in both spaces, so index sets are comparable.
    let shares: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let na: Vec<usize> = ia.knn_of(i, k).into_iter().map(|(j, _)| j).collect();
            let nb: std::collections::HashSet<usize> =
                ib.knn_of(i, k).into_iter().map(|(j, _)| j).collect();
            let common = na.iter().filter(|j| nb.contains(j)).count();
            common as f64 / k as f64
        })
        .collect();

    let mean = shares.iter().sum::<f64>() / n as f64;
    Ok(OverlapReport {
        per_paper: (0..n).map(|i| (a.id(i).clone(), shares[i])).collect(),
        mean,
        k,
    })
}

const VECTORS_MAGIC: &[u8; 4] = b"SMV1";

/// Writes the binary `vectors.f32` format: magic, count (u64 LE), dim
/// (u32 LE), then per record a length-prefixed UTF-8 id (u32 LE) and `dim`
/// little-endian f32 values. Records are id-sorted.
pub fn write_vectors(store: &VectorStore, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let werr = |e: std::io::Error| Error::io(path, e);
    out.write_all(VECTORS_MAGIC).map_err(werr)?;
    out.write_all(&(store.len() as u64).to_le_bytes()).map_err(werr)?;
    out.write_all(&(store.dim() as u32).to_le_bytes()).map_err(werr)?;
    for i in 0..store.len() {
        let id = store.id(i).as_str().as_bytes();
        out.write_all(&(id.len() as u32).to_le_bytes()).map_err(werr)?;
        out.write_all(id).map_err(werr)?;
        for v in store.row(i) {
            out.write_all(&v.to_le_bytes()).map_err(werr)?;
        }
    }
    out.flush().map_err(werr)
}

/// Reads `vectors.f32`, either the binary format (detected via magic) or the
/// textual CSV alternative (`id,v0,...`). Validates the dimension and, when
/// a corpus is given, that every id is known.
pub fn import_vectors(
    path: &Path,
    expected_dim: usize,
    corpus: Option<&Corpus>,
) -> Result<VectorStore> {
    let mut file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut magic = [0u8; 4];
    let is_binary = match file.read_exact(&mut magic) {
        Ok(()) => &magic == VECTORS_MAGIC,
        Err(_) => false,
    };
    let store = if is_binary {
        read_vectors_binary(&mut file, path, expected_dim)?
    } else {
        drop(file);
        read_vectors_csv(path, expected_dim)?
    };
    if let Some(corpus) = corpus {
        store.check_against(corpus)?;
    }
    Ok(store)
}

fn read_vectors_binary(
    file: &mut impl Read,
    path: &Path,
    expected_dim: usize,
) -> Result<VectorStore> {
    let rerr = |e: std::io::Error| Error::io(path, e);
    let mut u64buf = [0u8; 8];
    file.read_exact(&mut u64buf).map_err(rerr)?;
    let count = u64::from_le_bytes(u64buf) as usize;
    let mut u32buf = [0u8; 4];
    file.read_exact(&mut u32buf).map_err(rerr)?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    if dim != expected_dim {
        return Err(Error::invalid(format!(
            "vector file declares dimension {dim}, expected {expected_dim}"
        )));
    }
    let mut entries = Vec::with_capacity(count);
    for rec in 0..count {
        file.read_exact(&mut u32buf).map_err(rerr)?;
        let id_len = u32::from_le_bytes(u32buf) as usize;
        let mut id_bytes = vec![0u8; id_len];
        file.read_exact(&mut id_bytes).map_err(rerr)?;
        let id = String::from_utf8(id_bytes)
            .map_err(|_| Error::parse(path, rec + 1, "id is not valid UTF-8"))?;
        let mut row = vec![0f32; dim];
        let mut f32buf = [0u8; 4];
        for v in &mut row {
            file.read_exact(&mut f32buf).map_err(rerr)?;
            *v = f32::from_le_bytes(f32buf);
        }
        entries.push((PaperId::new(id), row));
    }
    VectorStore::from_parts(expected_dim, entries)
}

fn read_vectors_csv(path: &Path, expected_dim: usize) -> Result<VectorStore> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (row_no, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, row_no + 2, e.to_string()))?;
        if row.is_empty() {
            continue;
        }
        let id = PaperId::new(&row[0]);
        if row.len() - 1 != expected_dim {
            return Err(Error::invalid(format!(
                "vector for {id} has dimension {}, expected {expected_dim}",
                row.len() - 1
            )));
        }
        let mut v = Vec::with_capacity(expected_dim);
        for field in row.iter().skip(1) {
            let x: f32 = field
                .parse()
                .map_err(|e| Error::parse(path, row_no + 2, format!("bad float: {e}")))?;
            v.push(x);
        }
        entries.push((id, v));
    }
    VectorStore::from_parts(expected_dim, entries)
}

/// Writes `coords.csv` (`id,x,y` with header), id-sorted.
pub fn write_coords(coords: &MapCoordinates, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["id", "x", "y"])
        .map_err(|e| Error::invalid(format!("write coords: {e}")))?;
    for i in 0..coords.len() {
        let p = coords.point(i);
        w.write_record([
            coords.id(i).as_str(),
            &format!("{:?}", p[0]),
            &format!("{:?}", p[1]),
        ])
        .map_err(|e| Error::invalid(format!("write coords: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `coords.csv`; ids are checked against the corpus when given.
pub fn import_coords(path: &Path, corpus: Option<&Corpus>) -> Result<MapCoordinates> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    let mut ids = Vec::new();
    let mut points = Vec::new();
    for (row_no, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, row_no + 2, e.to_string()))?;
        if row.len() != 3 {
            return Err(Error::parse(
                path,
                row_no + 2,
                format!("expected 3 columns, found {}", row.len()),
            ));
        }
        let x: f64 = row[1]
            .parse()
            .map_err(|e| Error::parse(path, row_no + 2, format!("bad x: {e}")))?;
        let y: f64 = row[2]
            .parse()
            .map_err(|e| Error::parse(path, row_no + 2, format!("bad y: {e}")))?;
        ids.push(PaperId::new(&row[0]));
        points.push([x, y]);
    }
    let coords = MapCoordinates::from_parts(ids, points, MapProvenance::Imported)?;
    if let Some(corpus) = corpus {
        coords.check_against(corpus)?;
    }
    Ok(coords)
}
