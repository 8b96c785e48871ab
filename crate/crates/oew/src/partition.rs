//! Separability structures: ordered partitions of the parties into blocks,
//! one block per partition optionally left free (un-contracted).
//!
//! A structure may hold several partitions; a witness is required to be
//! positive on product vectors of every partition. Full separability uses
//! the single partition into singletons, m-separability the set of all
//! partitions with blocks of at most `m` parties (refinements pruned).

use crate::linalg::DimsSpec;
use crate::{Error, Result};

/// One partition of the parties `{0..n-1}` into disjoint covering blocks,
/// with an optional free block (index into `blocks`) left un-contracted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
    pub free: Option<usize>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, free: Option<usize>) -> Self {
        Self { blocks, free }
    }

    pub fn validate(&self, dims: &DimsSpec) -> Result<()> {
        let n = dims.n_parties();
        let mut seen = vec![false; n];
        for block in &self.blocks {
            if block.is_empty() {
                return Err(Error::Partition("empty block".into()));
            }
            for &p in block {
                if p >= n {
                    return Err(Error::Partition(format!("party {} out of range", p + 1)));
                }
                if seen[p] {
                    return Err(Error::Partition(format!("party {} repeated", p + 1)));
                }
                seen[p] = true;
            }
        }
        if let Some(pos) = seen.iter().position(|s| !s) {
            return Err(Error::Partition(format!("party {} not covered", pos + 1)));
        }
        if let Some(f) = self.free {
            if f >= self.blocks.len() {
                return Err(Error::Partition(format!("free block {} out of range", f + 1)));
            }
        }
        Ok(())
    }

    pub fn block_dim(&self, dims: &DimsSpec, block: usize) -> usize {
        self.blocks[block].iter().map(|&p| dims.dim_of(p)).product()
    }

    /// Dimension of the LMI block this partition induces (1 when fully
    /// contracted).
    pub fn free_dim(&self, dims: &DimsSpec) -> usize {
        self.free.map_or(1, |f| self.block_dim(dims, f))
    }

    pub fn contracted_blocks(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.blocks
            .iter()
            .enumerate()
            .filter(move |(i, _)| Some(*i) != self.free)
            .map(|(_, b)| b)
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).max().unwrap_or(0)
    }

    /// True when every block of `self` is contained in some block of `other`
    /// and the partitions differ. The product vectors of a refinement are a
    /// subset of the coarser partition's, so its constraints are redundant.
    pub fn is_strict_refinement_of(&self, other: &Partition) -> bool {
        if normalized_blocks(&self.blocks) == normalized_blocks(&other.blocks) {
            return false;
        }
        self.blocks.iter().all(|small| {
            other
                .blocks
                .iter()
                .any(|big| small.iter().all(|p| big.contains(p)))
        })
    }

    /// Grammar form: parties 1-based, commas inside blocks, `|` between
    /// blocks, `!k` marking the free block when it is not the last one.
    pub fn grammar(&self) -> String {
        let body: Vec<String> = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(","))
            .collect();
        let mut s = body.join("|");
        if let Some(f) = self.free {
            s.push_str(&format!("!{}", f + 1));
        }
        s
    }
}

fn normalized_blocks(blocks: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b
        })
        .collect();
    out.sort();
    out
}

/// A family of partitions sharing one dimension spec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionStructure {
    pub dims: DimsSpec,
    pub partitions: Vec<Partition>,
}

impl PartitionStructure {
    pub fn new(dims: DimsSpec, partitions: Vec<Partition>) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::Partition("structure has no partitions".into()));
        }
        for p in &partitions {
            p.validate(&dims)?;
        }
        Ok(Self { dims, partitions })
    }

    pub fn single(dims: DimsSpec, partition: Partition) -> Result<Self> {
        Self::new(dims, vec![partition])
    }

    pub fn grammar(&self) -> String {
        self.partitions.iter().map(Partition::grammar).collect::<Vec<_>>().join(";")
    }
}

/// Index of the largest-dimension block, ties broken by the lowest party
/// index contained in the block.
fn default_free_block(dims: &DimsSpec, blocks: &[Vec<usize>]) -> usize {
    let mut best = 0;
    let mut best_dim = 0;
    let mut best_min = usize::MAX;
    for (i, b) in blocks.iter().enumerate() {
        let d: usize = b.iter().map(|&p| dims.dim_of(p)).product();
        let m = *b.iter().min().unwrap();
        if d > best_dim || (d == best_dim && m < best_min) {
            best = i;
            best_dim = d;
            best_min = m;
        }
    }
    best
}

/// Full separability: singleton blocks, party n left free.
pub fn full_separability_structure(dims: &DimsSpec) -> Result<PartitionStructure> {
    let n = dims.n_parties();
    if n < 2 {
        return Err(Error::Domain("full separability needs at least 2 parties".into()));
    }
    let blocks: Vec<Vec<usize>> = (0..n).map(|p| vec![p]).collect();
    let partition = Partition::new(blocks, Some(n - 1));
    PartitionStructure::single(dims.clone(), partition)
}

/// All set-partitions of the parties into blocks of size at most `m`, with
/// refinements of other included partitions pruned. The free block of each
/// partition is the largest-dimension block (ties: lowest party index).
pub fn m_separability_structure(dims: &DimsSpec, m: usize) -> Result<PartitionStructure> {
    let n = dims.n_parties();
    if m < 1 || m >= n {
        return Err(Error::Domain(format!("m-separability needs 1 <= m < n, got m={m}, n={n}")));
    }
    let mut all: Vec<Vec<Vec<usize>>> = Vec::new();
    enumerate_partitions(n, m, &mut vec![], &mut all);
    // prune partitions that refine another candidate
    let candidates: Vec<Partition> = all
        .into_iter()
        .map(|blocks| {
            let free = default_free_block(dims, &blocks);
            Partition::new(blocks, Some(free))
        })
        .collect();
    let kept: Vec<Partition> = candidates
        .iter()
        .filter(|p| !candidates.iter().any(|q| p.is_strict_refinement_of(q)))
        .cloned()
        .collect();
    PartitionStructure::new(dims.clone(), kept)
}

// Standard restricted-growth enumeration: party k joins an existing block or
// opens a new one.
fn enumerate_partitions(
    n: usize,
    max_block: usize,
    current: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    let k = current.iter().map(|b| b.len()).sum::<usize>();
    if k == n {
        out.push(current.clone());
        return;
    }
    for i in 0..current.len() {
        if current[i].len() < max_block {
            current[i].push(k);
            enumerate_partitions(n, max_block, current, out);
            current[i].pop();
        }
    }
    current.push(vec![k]);
    enumerate_partitions(n, max_block, current, out);
    current.pop();
}

/// Parses the CLI structure grammar against the given dims.
///
/// Accepted forms: `full`, `m-sep:K`, or an explicit partition such as
/// `1|2,3` (parties 1-based, blocks separated by `|`) with an optional `!k`
/// suffix marking block `k` (1-based) as free. Without `!k` the free block
/// is the largest-dimension block. Several explicit partitions may be given
/// separated by `;`.
pub fn parse_structure(dims: &DimsSpec, text: &str) -> Result<PartitionStructure> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("full") {
        return full_separability_structure(dims);
    }
    if let Some(rest) = text
        .strip_prefix("m-sep:")
        .or_else(|| text.strip_prefix("msep:"))
    {
        let m: usize = rest
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad m-separability level {rest:?}")))?;
        return m_separability_structure(dims, m);
    }
    let mut partitions = Vec::new();
    for part in text.split(';') {
        let (body, free_override) = match part.rsplit_once('!') {
            Some((body, k)) => {
                let k: usize = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad free-block marker {k:?}")))?;
                if k == 0 {
                    return Err(Error::Parse("free-block marker is 1-based".into()));
                }
                (body, Some(k - 1))
            }
            None => (part, None),
        };
        let mut blocks = Vec::new();
        for block in body.split('|') {
            let mut parties = Vec::new();
            for tok in block.split(',') {
                let p: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad party index {tok:?}")))?;
                if p == 0 {
                    return Err(Error::Parse("party indices are 1-based".into()));
                }
                parties.push(p - 1);
            }
            blocks.push(parties);
        }
        // validate party indices before default_free_block touches dims
        Partition::new(blocks.clone(), None).validate(dims)?;
        let free = match free_override {
            Some(f) => f,
            None => default_free_block(dims, &blocks),
        };
        partitions.push(Partition::new(blocks, Some(free)));
    }
    PartitionStructure::new(dims.clone(), partitions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(v: &[usize]) -> DimsSpec {
        DimsSpec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn full_separability_shapes() {
        let s = full_separability_structure(&dims(&[3, 3])).unwrap();
        assert_eq!(s.partitions.len(), 1);
        let p = &s.partitions[0];
        assert_eq!(p.blocks, vec![vec![0], vec![1]]);
        assert_eq!(p.free, Some(1));
        assert_eq!(p.free_dim(&s.dims), 3);

        let s = full_separability_structure(&dims(&[2, 2, 2])).unwrap();
        let p = &s.partitions[0];
        assert_eq!(p.contracted_blocks().count(), 2);
        assert_eq!(p.free_dim(&s.dims), 2);

        // free block is party n even when another party has larger dimension
        let s = full_separability_structure(&dims(&[2, 3])).unwrap();
        assert_eq!(s.partitions[0].free, Some(1));
        assert_eq!(s.partitions[0].free_dim(&s.dims), 3);
    }

    #[test]
    fn m_separability_three_parties() {
        let d = dims(&[2, 2, 2]);
        let s = m_separability_structure(&d, 2).unwrap();
        // 1|23, 2|13, 3|12 survive; the refinement 1|2|3 is pruned
        assert_eq!(s.partitions.len(), 3);
        let grammars: Vec<String> = s.partitions.iter().map(Partition::grammar).collect();
        for p in &s.partitions {
            assert_eq!(p.blocks.len(), 2);
            assert!(p.max_block_size() <= 2);
            // free block is the two-party one
            let f = p.free.unwrap();
            assert_eq!(p.blocks[f].len(), 2);
        }
        assert!(grammars.iter().all(|g| !g.contains("1|2|3")));

        let s1 = m_separability_structure(&d, 1).unwrap();
        assert_eq!(s1.partitions.len(), 1);
        assert_eq!(s1.partitions[0].blocks.len(), 3);

        let s2 = m_separability_structure(&dims(&[2, 2]), 1).unwrap();
        assert_eq!(s2.partitions.len(), 1);
        assert_eq!(s2.partitions[0].blocks, vec![vec![0], vec![1]]);
    }

    #[test]
    fn refinement_detection() {
        let fine = Partition::new(vec![vec![0], vec![1], vec![2]], Some(2));
        let coarse = Partition::new(vec![vec![0], vec![1, 2]], Some(1));
        assert!(fine.is_strict_refinement_of(&coarse));
        assert!(!coarse.is_strict_refinement_of(&fine));
        assert!(!coarse.is_strict_refinement_of(&coarse));
    }

    #[test]
    fn grammar_roundtrip() {
        let d = dims(&[2, 2, 2]);
        let s = parse_structure(&d, "1|2,3").unwrap();
        assert_eq!(s.partitions[0].blocks, vec![vec![0], vec![1, 2]]);
        // default free block: largest dimension
        assert_eq!(s.partitions[0].free, Some(1));
        let s = parse_structure(&d, "1|2,3!1").unwrap();
        assert_eq!(s.partitions[0].free, Some(0));
        let s = parse_structure(&d, "full").unwrap();
        assert_eq!(s.partitions[0].blocks.len(), 3);
        let s = parse_structure(&d, "m-sep:2").unwrap();
        assert_eq!(s.partitions.len(), 3);
        let s = parse_structure(&d, "1|2,3;2|1,3").unwrap();
        assert_eq!(s.partitions.len(), 2);
        assert!(parse_structure(&d, "1|2").is_err()); // party 3 missing
        assert!(parse_structure(&d, "1|2,3,4").is_err());
        assert!(parse_structure(&d, "0|1,2").is_err());
    }

    #[test]
    fn validate_rejects_bad_partitions() {
        let d = dims(&[2, 2]);
        assert!(Partition::new(vec![vec![0], vec![0]], Some(0)).validate(&d).is_err());
        assert!(Partition::new(vec![vec![0]], Some(0)).validate(&d).is_err());
        assert!(Partition::new(vec![vec![0], vec![1]], Some(5)).validate(&d).is_err());
    }
}
