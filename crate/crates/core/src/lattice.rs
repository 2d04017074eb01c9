//! Hypercubic lattices, boundary-aware distances and block partitions.
//!
//! Sites are addressed by a 0-based index. The index of the site with 1-based
//! coordinates `(x_1, ..., x_D)` is `Σ_k (x_k - 1) L^(D-k)`, i.e. row-major
//! with the last axis varying fastest. In 1D site index `i` is the site
//! labelled `i + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Site = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    size: usize,
    boundary: Boundary,
}

impl Lattice {
    /// Builds `{1..L}^D`. The memory check on `d^V` happens at assembly time.
    pub fn new(dim: usize, size: usize, boundary: Boundary) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidLattice("dimension must be >= 1".into()));
        }
        if size < 2 {
            return Err(Error::InvalidLattice(format!("linear size must be >= 2, got {size}")));
        }
        if size.checked_pow(dim as u32).is_none() {
            return Err(Error::InvalidLattice("site count overflows".into()));
        }
        Ok(Lattice { dim, size, boundary })
    }

    pub fn chain(size: usize, boundary: Boundary) -> Result<Self> {
        Lattice::new(1, size, boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of sites `V = L^D`.
    pub fn sites(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn check_site(&self, site: Site) -> Result<()> {
        if site < self.sites() {
            Ok(())
        } else {
            Err(Error::InvalidSite {
                site,
                sites: self.sites(),
            })
        }
    }

    /// 1-based coordinates of a site.
    pub fn coords(&self, site: Site) -> Result<Vec<usize>> {
        self.check_site(site)?;
        let mut c = vec![0; self.dim];
        let mut rest = site;
        for k in (0..self.dim).rev() {
            c[k] = rest % self.size + 1;
            rest /= self.size;
        }
        Ok(c)
    }

    /// Site index of 1-based coordinates.
    pub fn site_at(&self, coords: &[usize]) -> Result<Site> {
        if coords.len() != self.dim || coords.iter().any(|&x| x == 0 || x > self.size) {
            return Err(Error::InvalidLattice(format!(
                "coordinates {coords:?} outside {{1..{}}}^{}",
                self.size, self.dim
            )));
        }
        Ok(coords.iter().fold(0, |acc, &x| acc * self.size + (x - 1)))
    }

    /// Per-axis displacement magnitudes under the boundary condition.
    fn axis_offsets(&self, i: Site, j: Site) -> Result<Vec<usize>> {
        let (a, b) = (self.coords(i)?, self.coords(j)?);
        Ok(a.iter()
            .zip(&b)
            .map(|(&x, &y)| {
                let delta = x.abs_diff(y);
                match self.boundary {
                    Boundary::Open => delta,
                    Boundary::Periodic => delta.min(self.size - delta),
                }
            })
            .collect())
    }

    /// Euclidean distance; periodic lattices take the nearest image.
    pub fn distance(&self, i: Site, j: Site) -> Result<f64> {
        let offsets = self.axis_offsets(i, j)?;
        Ok((offsets.iter().map(|&o| (o * o) as f64).sum::<f64>()).sqrt())
    }

    /// Squared distance as an exact integer.
    pub fn distance_sq(&self, i: Site, j: Site) -> Result<usize> {
        Ok(self.axis_offsets(i, j)?.iter().map(|o| o * o).sum())
    }

    /// Nearest-neighbour bonds `(i, i + e_k)` along every axis. On a periodic
    /// lattice the wrap-around bond is included, so `L = 2` lists each
    /// neighbour pair twice (once per direction).
    pub fn nearest_neighbor_bonds(&self) -> Vec<(Site, Site)> {
        let mut bonds = Vec::new();
        for site in 0..self.sites() {
            let c = self.coords(site).expect("valid site");
            for k in 0..self.dim {
                let mut n = c.clone();
                if c[k] < self.size {
                    n[k] += 1;
                } else if self.boundary == Boundary::Periodic {
                    n[k] = 1;
                } else {
                    continue;
                }
                bonds.push((site, self.site_at(&n).expect("valid neighbour")));
            }
        }
        bonds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    /// `l` must divide `L`; blocks cover the lattice exactly.
    Strict,
    /// Blocks of side `l` start at coordinate 1; leftover sites are reported.
    Lenient,
}

/// Disjoint hypercubic blocks of side `l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    block_size: usize,
    blocks: Vec<Vec<Site>>,
    remainder: Vec<Site>,
    owner: Vec<Option<usize>>,
}

impl Partition {
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn blocks(&self) -> &[Vec<Site>] {
        &self.blocks
    }

    pub fn block(&self, index: usize) -> Option<&[Site]> {
        self.blocks.get(index).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Sites not covered by any block (empty for strict partitions).
    pub fn remainder(&self) -> &[Site] {
        &self.remainder
    }

    /// Block containing `site`, if any.
    pub fn block_of(&self, site: Site) -> Option<usize> {
        self.owner.get(site).copied().flatten()
    }

    pub fn sites(&self) -> usize {
        self.owner.len()
    }

    fn same_block(&self, i: Site, j: Site) -> bool {
        matches!((self.block_of(i), self.block_of(j)), (Some(a), Some(b)) if a == b)
    }
}

/// Splits the lattice into translated hypercubes of side `l`.
///
/// Blocks are ordered row-major by their corner coordinate, and each block's
/// sites are sorted by index.
pub fn partition_hypercubes(lattice: &Lattice, l: usize, mode: PartitionMode) -> Result<Partition> {
    let size = lattice.size();
    if l == 0 || l > size {
        return Err(Error::Partition(format!("block size {l} must lie in 1..={size}")));
    }
    if mode == PartitionMode::Strict && !size.is_multiple_of(l) {
        return Err(Error::Partition(format!(
            "block size {l} does not divide linear size {size}"
        )));
    }
    let per_axis = size / l;
    let nblocks = per_axis.pow(lattice.dim() as u32);
    let mut blocks = vec![Vec::new(); nblocks];
    let mut owner = vec![None; lattice.sites()];
    let mut remainder = Vec::new();
    for (site, slot) in owner.iter_mut().enumerate() {
        let c = lattice.coords(site)?;
        if c.iter().any(|&x| x > per_axis * l) {
            remainder.push(site);
            continue;
        }
        let b = c.iter().fold(0, |acc, &x| acc * per_axis + (x - 1) / l);
        blocks[b].push(site);
        *slot = Some(b);
    }
    Ok(Partition {
        block_size: l,
        blocks,
        remainder,
        owner,
    })
}

/// Unordered pairs `(i, j)`, `i < j`, not contained in a common block. Pairs
/// touching a remainder site count as cut.
pub fn cut_pairs(lattice: &Lattice, partition: &Partition) -> Result<Vec<(Site, Site)>> {
    check_partition(lattice, partition)?;
    let v = lattice.sites();
    let mut pairs = Vec::new();
    for i in 0..v {
        for j in i + 1..v {
            if !partition.same_block(i, j) {
                pairs.push((i, j));
            }
        }
    }
    Ok(pairs)
}

/// Unordered pairs `(i, j)`, `i < j`, inside a common block.
pub fn within_block_pairs(lattice: &Lattice, partition: &Partition) -> Result<Vec<(Site, Site)>> {
    check_partition(lattice, partition)?;
    let mut pairs = Vec::new();
    for block in partition.blocks() {
        for (a, &i) in block.iter().enumerate() {
            for &j in &block[a + 1..] {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    Ok(pairs)
}

pub(crate) fn check_partition(lattice: &Lattice, partition: &Partition) -> Result<()> {
    if partition.sites() != lattice.sites() {
        return Err(Error::Partition(format!(
            "partition built for {} sites, lattice has {}",
            partition.sites(),
            lattice.sites()
        )));
    }
    Ok(())
}
