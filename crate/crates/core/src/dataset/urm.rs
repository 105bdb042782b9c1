//! Binary user rating matrix in compressed sparse row form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::parse::InteractionLog;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

const URM_MAGIC: &[u8; 4] = b"URMB";
const URM_VERSION: u32 = 1;

/// Implicit-feedback interaction matrix. A stored `(user, item)` entry means
/// the user interacted with the item; everything else is zero.
///
/// Rows are canonical: item ids strictly increasing. Raw ids are kept in
/// lexicographic order so `user_ids[u]` is the raw id of dense row `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Urm {
    n_users: usize,
    n_items: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
}

/// Row counts and sparsity as reported in dataset summaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub interactions: usize,
    pub users: usize,
    pub items: usize,
    /// Percentage of empty cells, `100 * (1 - nnz / (users * items))`.
    pub sparsity: f64,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {:.2}%",
            self.interactions, self.users, self.items, self.sparsity
        )
    }
}

/// Zero-padded ids so that lexicographic order equals numeric order.
pub fn numbered_ids(prefix: &str, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

impl Urm {
    /// Builds a matrix from per-user item lists; rows are sorted and
    /// deduplicated. Raw ids are generated as `u000`, `i000`, ...
    pub fn from_rows(n_items: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let n_users = rows.len();
        Self::from_rows_with_ids(rows, numbered_ids("u", n_users), numbered_ids("i", n_items))
    }

    pub fn from_rows_with_ids(
        mut rows: Vec<Vec<u32>>,
        user_ids: Vec<String>,
        item_ids: Vec<String>,
    ) -> Result<Self> {
        if rows.len() != user_ids.len() {
            return Err(Error::shape(format!(
                "{} rows but {} user ids",
                rows.len(),
                user_ids.len()
            )));
        }
        let n_items = item_ids.len();
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for (u, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            if let Some(&last) = row.last() {
                if last as usize >= n_items {
                    return Err(Error::Index(format!(
                        "user {u} has item {last}, matrix has {n_items} items"
                    )));
                }
            }
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        let urm = Self {
            n_users: rows.len(),
            n_items,
            indptr,
            indices,
            user_ids,
            item_ids,
        };
        urm.validate()?;
        Ok(urm)
    }

    /// Same id tables and shape, different interactions.
    pub fn with_rows(&self, rows: Vec<Vec<u32>>) -> Result<Self> {
        Self::from_rows_with_ids(rows, self.user_ids.clone(), self.item_ids.clone())
    }

    /// Interactions of `self` that are not in `other`.
    pub fn without(&self, other: &Urm) -> Result<Self> {
        if !self.same_index_space(other) {
            return Err(Error::Consistency("matrices differ in shape or ids".into()));
        }
        let rows = (0..self.n_users)
            .map(|u| {
                let drop = other.row(u);
                self.row(u).iter().copied().filter(|i| drop.binary_search(i).is_err()).collect()
            })
            .collect();
        self.with_rows(rows)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(msg));
        if self.indptr.len() != self.n_users + 1 || self.indptr[0] != 0 {
            return bad("indptr length or origin".into());
        }
        if *self.indptr.last().unwrap() != self.indices.len() {
            return bad("indptr does not end at nnz".into());
        }
        if self.user_ids.len() != self.n_users || self.item_ids.len() != self.n_items {
            return bad("id table length".into());
        }
        for u in 0..self.n_users {
            if self.indptr[u] > self.indptr[u + 1] {
                return bad(format!("indptr decreases at row {u}"));
            }
            let row = self.row(u);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {u} is not strictly increasing"));
            }
            if row.last().is_some_and(|&i| i as usize >= self.n_items) {
                return bad(format!("row {u} has an out-of-range item"));
            }
        }
        Ok(())
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_index(&self, raw: &str) -> Option<usize> {
        lookup(&self.user_ids, raw)
    }

    pub fn item_index(&self, raw: &str) -> Option<usize> {
        lookup(&self.item_ids, raw)
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[u32] {
        &self.indices[self.indptr[u]..self.indptr[u + 1]]
    }

    #[inline]
    pub fn row_len(&self, u: usize) -> usize {
        self.indptr[u + 1] - self.indptr[u]
    }

    pub fn contains(&self, u: usize, i: usize) -> bool {
        u < self.n_users && self.row(u).binary_search(&(i as u32)).is_ok()
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        (0..self.n_users).map(|u| self.row(u).to_vec()).collect()
    }

    /// Interactions per item.
    pub fn item_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_items];
        for &i in &self.indices {
            counts[i as usize] += 1;
        }
        counts
    }

    /// Dense 0/1 copy of the given rows.
    pub fn dense_rows(&self, users: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(users.len(), self.n_items);
        for (b, &u) in users.iter().enumerate() {
            let row = out.row_mut(b);
            for &i in self.row(u) {
                row[i as usize] = 1.0;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let all: Vec<usize> = (0..self.n_users).collect();
        self.dense_rows(&all)
    }

    /// Users swapped with items.
    pub fn transpose(&self) -> Urm {
        let mut counts = vec![0usize; self.n_items + 1];
        for &i in &self.indices {
            counts[i as usize + 1] += 1;
        }
        for i in 0..self.n_items {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0u32; self.indices.len()];
        // rows are visited in increasing user order, so each output row is sorted
        for u in 0..self.n_users {
            for &i in self.row(u) {
                let slot = &mut next[i as usize];
                indices[*slot] = u as u32;
                *slot += 1;
            }
        }
        Urm {
            n_users: self.n_items,
            n_items: self.n_users,
            indptr,
            indices,
            user_ids: self.item_ids.clone(),
            item_ids: self.user_ids.clone(),
        }
    }

    pub fn stats(&self) -> DatasetStats {
        let cells = self.n_users as f64 * self.n_items as f64;
        let sparsity = if cells > 0.0 {
            100.0 * (1.0 - self.nnz() as f64 / cells)
        } else {
            100.0
        };
        DatasetStats {
            interactions: self.nnz(),
            users: self.n_users,
            items: self.n_items,
            sparsity,
        }
    }

    /// All interactions as raw-id triples with unit weight.
    pub fn triples(&self) -> InteractionLog {
        let mut log = InteractionLog::new("urm");
        for u in 0..self.n_users {
            for &i in self.row(u) {
                log.push(self.user_ids[u].clone(), self.item_ids[i as usize].clone(), 1.0);
            }
        }
        log
    }

    /// True when both matrices index the same users and items.
    pub fn same_index_space(&self, other: &Urm) -> bool {
        self.n_users == other.n_users
            && self.n_items == other.n_items
            && self.user_ids == other.user_ids
            && self.item_ids == other.item_ids
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.indptr.len() + 4 * self.indices.len());
        out.extend_from_slice(URM_MAGIC);
        out.extend_from_slice(&URM_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_users as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_items as u64).to_le_bytes());
        out.extend_from_slice(&(self.nnz() as u64).to_le_bytes());
        for &p in &self.indptr {
            out.extend_from_slice(&(p as u64).to_le_bytes());
        }
        for &i in &self.indices {
            out.extend_from_slice(&i.to_le_bytes());
        }
        for id in self.user_ids.iter().chain(&self.item_ids) {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { buf: bytes, pos: 0 };
        if cur.take(4)? != URM_MAGIC {
            return Err(Error::Format("missing URMB magic".into()));
        }
        let version = cur.u32()?;
        if version != URM_VERSION {
            return Err(Error::Format(format!("unsupported URM version {version}")));
        }
        let n_users = cur.u64()? as usize;
        let n_items = cur.u64()? as usize;
        let nnz = cur.u64()? as usize;
        let indptr = (0..=n_users)
            .map(|_| cur.u64().map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let indices = (0..nnz).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
        let mut ids = (0..n_users + n_items)
            .map(|_| {
                let len = cur.u32()? as usize;
                let raw = cur.take(len)?;
                String::from_utf8(raw.to_vec()).map_err(|_| Error::Format("raw id is not UTF-8".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        if cur.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after id table".into()));
        }
        let item_ids = ids.split_off(n_users);
        let urm = Urm {
            n_users,
            n_items,
            indptr,
            indices,
            user_ids: ids,
            item_ids,
        };
        urm.validate()?;
        Ok(urm)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_bytes(&buf)
    }
}

fn lookup(ids: &[String], raw: &str) -> Option<usize> {
    ids.binary_search_by(|probe| probe.as_str().cmp(raw)).ok()
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("truncated URM file".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Binarizes a log into a matrix, dropping users with fewer than
/// `min_interactions` distinct items. Dense ids follow the lexicographic
/// order of raw ids, so the result does not depend on line order.
pub fn build_urm(log: &InteractionLog, min_interactions: usize) -> Result<Urm> {
    if log.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut per_user: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for t in &log.triples {
        per_user.entry(t.user.as_str()).or_default().insert(t.item.as_str());
    }
    per_user.retain(|_, items| items.len() >= min_interactions);
    if per_user.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let items: BTreeSet<&str> = per_user.values().flatten().copied().collect();
    let item_ids: Vec<String> = items.iter().map(|s| s.to_string()).collect();
    let item_pos: BTreeMap<&str, u32> = items.iter().enumerate().map(|(k, s)| (*s, k as u32)).collect();
    let mut user_ids = Vec::with_capacity(per_user.len());
    let mut rows = Vec::with_capacity(per_user.len());
    for (user, its) in &per_user {
        user_ids.push(user.to_string());
        rows.push(its.iter().map(|s| item_pos[s]).collect());
    }
    Urm::from_rows_with_ids(rows, user_ids, item_ids)
}
