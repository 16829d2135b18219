//! Finite simple configurations: subsets of the site set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A simple configuration on `n` sites, stored as a sorted list of occupied
/// site indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    n: usize,
    sites: Vec<usize>,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Self { n, sites: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        Self { n, sites: (0..n).collect() }
    }

    /// Builds a configuration from site indices; rejects repeats and
    /// out-of-range indices.
    pub fn from_sites<I: IntoIterator<Item = usize>>(n: usize, sites: I) -> Result<Self> {
        let mut sites: Vec<usize> = sites.into_iter().collect();
        sites.sort_unstable();
        if let Some(&bad) = sites.iter().find(|&&s| s >= n) {
            return Err(Error::InvalidConfiguration(format!(
                "site {bad} out of range for {n} sites"
            )));
        }
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfiguration(
                "configuration is not simple (repeated site)".into(),
            ));
        }
        Ok(Self { n, sites })
    }

    /// Bit `i` of `mask` marks site `i` as occupied.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= 64, "bitmask configurations support at most 64 sites");
        assert!(n == 64 || mask >> n == 0, "mask has bits beyond site {n}");
        let sites = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        Self { n, sites }
    }

    pub fn mask(&self) -> u64 {
        assert!(self.n <= 64, "bitmask configurations support at most 64 sites");
        self.sites.iter().fold(0u64, |m, &s| m | 1 << s)
    }

    pub fn from_occupancy(occupied: &[bool]) -> Self {
        Self {
            n: occupied.len(),
            sites: occupied.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| i).collect(),
        }
    }

    pub fn occupancy(&self) -> Vec<bool> {
        let mut occ = vec![false; self.n];
        for &s in &self.sites {
            occ[s] = true;
        }
        occ
    }

    /// Number of sites in the underlying space.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of particles.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    /// `γ ∪ x`.
    pub fn with(&self, site: usize) -> Result<Self> {
        if site >= self.n {
            return Err(Error::InvalidConfiguration(format!("site {site} out of range")));
        }
        match self.sites.binary_search(&site) {
            Ok(_) => Err(Error::SiteOccupied { site }),
            Err(pos) => {
                let mut sites = self.sites.clone();
                sites.insert(pos, site);
                Ok(Self { n: self.n, sites })
            }
        }
    }

    /// `γ ∖ x`.
    pub fn without(&self, site: usize) -> Result<Self> {
        match self.sites.binary_search(&site) {
            Ok(pos) => {
                let mut sites = self.sites.clone();
                sites.remove(pos);
                Ok(Self { n: self.n, sites })
            }
            Err(_) => Err(Error::SiteVacant { site }),
        }
    }

    /// Sites not in the configuration.
    pub fn vacant(&self) -> impl Iterator<Item = usize> + '_ {
        let mut next = self.sites.iter().peekable();
        (0..self.n).filter(move |&i| {
            if next.peek() == Some(&&i) {
                next.next();
                false
            } else {
                true
            }
        })
    }

    /// Occupancy as a `0`/`1` string, character `i` describing site `i`.
    pub fn bit_string(&self) -> String {
        self.occupancy().iter().map(|&o| if o { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.sites.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}
