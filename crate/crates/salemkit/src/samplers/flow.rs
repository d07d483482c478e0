use std::collections::{HashMap, VecDeque};

use num::{BigInt, BigRational, BigUint, Integer, One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::{Error, Point, Result};

/// The `s → ℬ → ℛ → t` network: one arc per block and one per ground element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    pub n_b: usize,
    pub n_r: usize,
    /// `(B index, R index)` for each ground element.
    pub elements: Vec<(usize, usize)>,
}

fn block_index(n: usize, part: &[Vec<usize>], name: &str) -> Result<Vec<usize>> {
    let mut owner = vec![usize::MAX; n];
    for (k, cell) in part.iter().enumerate() {
        if cell.is_empty() {
            return Err(Error::NotAPartition(format!("{name} has an empty cell")));
        }
        for &u in cell {
            if u >= n {
                return Err(Error::NotAPartition(format!("{name} mentions element {u} of {n}")));
            }
            if owner[u] != usize::MAX {
                return Err(Error::NotAPartition(format!("{name} covers element {u} twice")));
            }
            owner[u] = k;
        }
    }
    if let Some(u) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::NotAPartition(format!("{name} misses element {u}")));
    }
    Ok(owner)
}

impl FlowNetwork {
    pub fn from_partitions(n: usize, b_part: &[Vec<usize>], r_part: &[Vec<usize>]) -> Result<Self> {
        let bo = block_index(n, b_part, "first partition")?;
        let ro = block_index(n, r_part, "second partition")?;
        Ok(FlowNetwork {
            n_b: b_part.len(),
            n_r: r_part.len(),
            elements: bo.into_iter().zip(ro).collect(),
        })
    }

    /// Arcs `s → B`, `B → R` and `R → t`.
    pub fn num_arcs(&self) -> usize {
        self.n_b + self.elements.len() + self.n_r
    }

    /// Arc values induced by element values: `(s→B, R→t)` sums.
    pub fn block_sums<T: Clone + Zero + std::ops::AddAssign>(&self, y: &[T]) -> (Vec<T>, Vec<T>) {
        let mut sb = vec![T::zero(); self.n_b];
        let mut sr = vec![T::zero(); self.n_r];
        for (u, &(b, r)) in self.elements.iter().enumerate() {
            sb[b] += y[u].clone();
            sr[r] += y[u].clone();
        }
        (sb, sr)
    }

    /// The element set of an integral flow is doubly sparse with `T` elements.
    pub fn is_admissible(&self, members: &[usize], t: usize) -> bool {
        let mut g = vec![0u32; self.elements.len()];
        for &u in members {
            g[u] += 1;
        }
        let (sb, sr) = self.block_sums(&g);
        members.len() == t && g.iter().all(|&x| x <= 1) && sb.iter().chain(&sr).all(|&x| x <= 1)
    }
}

/// Dinic max-flow on integer capacities.
struct MaxFlow {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl MaxFlow {
    fn new(n: usize) -> Self {
        MaxFlow { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: i64) -> usize {
        let id = self.to.len();
        self.head[u].push(id);
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0);
        id
    }

    fn run(&mut self, s: usize, t: usize) -> i64 {
        let n = self.head.len();
        let mut total = 0;
        loop {
            let mut level = vec![-1i64; n];
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &e in &self.head[u] {
                    if self.cap[e] > 0 && level[self.to[e]] < 0 {
                        level[self.to[e]] = level[u] + 1;
                        queue.push_back(self.to[e]);
                    }
                }
            }
            if level[t] < 0 {
                return total;
            }
            let mut it = vec![0usize; n];
            loop {
                let f = self.augment(s, t, i64::MAX, &level, &mut it);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
    }

    fn augment(&mut self, u: usize, t: usize, f: i64, level: &[i64], it: &mut [usize]) -> i64 {
        if u == t {
            return f;
        }
        while it[u] < self.head[u].len() {
            let e = self.head[u][it[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && level[v] == level[u] + 1 {
                let got = self.augment(v, t, f.min(self.cap[e]), level, it);
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            it[u] += 1;
        }
        0
    }
}

/// Bounds `[lo, hi]` on every arc of the network.
struct Bounds {
    elem: Vec<(i64, i64)>,
    b: Vec<(i64, i64)>,
    r: Vec<(i64, i64)>,
}

/// Integral circulation respecting the bounds with `t → s` carrying exactly `t`.
fn integral_flow(net: &FlowNetwork, bounds: &Bounds, t: i64) -> Option<Vec<bool>> {
    let (s_node, t_node) = (0, 1);
    let b0 = 2;
    let r0 = 2 + net.n_b;
    let ss = r0 + net.n_r;
    let tt = ss + 1;
    let mut mf = MaxFlow::new(tt + 1);
    let mut excess = vec![0i64; tt + 1];
    let mut add = |mf: &mut MaxFlow, u: usize, v: usize, lo: i64, hi: i64| -> usize {
        excess[v] += lo;
        excess[u] -= lo;
        mf.add_edge(u, v, hi - lo)
    };
    for (k, &(lo, hi)) in bounds.b.iter().enumerate() {
        add(&mut mf, s_node, b0 + k, lo, hi);
    }
    let mut elem_edges = Vec::with_capacity(net.elements.len());
    for (u, &(b, r)) in net.elements.iter().enumerate() {
        let (lo, hi) = bounds.elem[u];
        elem_edges.push(add(&mut mf, b0 + b, r0 + r, lo, hi));
    }
    for (k, &(lo, hi)) in bounds.r.iter().enumerate() {
        add(&mut mf, r0 + k, t_node, lo, hi);
    }
    add(&mut mf, t_node, s_node, t, t);
    let mut need = 0;
    for (v, &e) in excess.iter().enumerate().take(ss) {
        if e > 0 {
            mf.add_edge(ss, v, e);
            need += e;
        } else if e < 0 {
            mf.add_edge(v, tt, -e);
        }
    }
    if mf.run(ss, tt) != need {
        return None;
    }
    Some(
        elem_edges
            .iter()
            .enumerate()
            .map(|(u, &e)| bounds.elem[u].0 + mf.cap[e ^ 1] > 0)
            .collect(),
    )
}

/// Convex combination of doubly block-sparse `T`-subsets with exact weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingDistribution {
    pub ground: Vec<Point>,
    pub t: usize,
    /// Element indices of each atom, increasing.
    pub atoms: Vec<Vec<usize>>,
    /// `weights[k] = weight_num[k] / weight_den`.
    pub weight_num: Vec<BigInt>,
    pub weight_den: BigInt,
    pub num_arcs: usize,
}

impl SamplingDistribution {
    pub fn weights(&self) -> Vec<BigRational> {
        self.weight_num
            .iter()
            .map(|w| BigRational::new(w.clone(), self.weight_den.clone()))
            .collect()
    }

    pub fn atom_points(&self, k: usize) -> Vec<Point> {
        self.atoms[k].iter().map(|&u| self.ground[u].clone()).collect()
    }

    /// `Σ_S λ_S 1_S(u)` for every element.
    pub fn marginals(&self) -> Vec<BigRational> {
        let mut acc = vec![BigInt::zero(); self.ground.len()];
        for (atom, w) in self.atoms.iter().zip(&self.weight_num) {
            for &u in atom {
                acc[u] += w;
            }
        }
        acc.into_iter().map(|a| BigRational::new(a, self.weight_den.clone())).collect()
    }

    /// Checks the exact marginal identity, atom sizes, sparsity and weights.
    pub fn verify(&self, p: &[BigRational], b_part: &[Vec<usize>], r_part: &[Vec<usize>]) -> bool {
        let Ok(net) = FlowNetwork::from_partitions(self.ground.len(), b_part, r_part) else {
            return false;
        };
        let t = BigRational::from_integer(BigInt::from(self.t));
        let total: BigInt = self.weight_num.iter().sum();
        total == self.weight_den
            && self.weight_num.iter().all(|w| w.is_positive())
            && self.atoms.iter().all(|a| net.is_admissible(a, self.t))
            && self.marginals().iter().zip(p).all(|(m, q)| *m == &t * q)
    }
}

/// Exact decomposition of `y = T p` into vertices of the two-partition polytope.
///
/// Vertex peeling: each round finds an integral flow agreeing with `y` on its
/// integral coordinates and tight blocks, then removes the largest multiple
/// that keeps the remainder feasible. Every round makes one more element
/// integral or one more block tight, so the number of atoms is at most the
/// number of arcs plus one.
pub fn two_partition_decompose(
    ground: &[Point],
    b_part: &[Vec<usize>],
    r_part: &[Vec<usize>],
    t: usize,
    p: &[BigRational],
) -> Result<SamplingDistribution> {
    let n = ground.len();
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.len() });
    }
    let net = FlowNetwork::from_partitions(n, b_part, r_part)?;
    if t == 0 || t > n {
        return Err(Error::InvalidParameters(format!("target size {t} outside 1..={n}")));
    }
    if p.iter().any(|x| x.is_negative()) {
        return Err(Error::InvalidParameters("negative mass".into()));
    }
    let total: BigRational = p.iter().cloned().sum();
    if !total.is_one() {
        return Err(Error::InvalidParameters(format!("masses sum to {total}")));
    }
    let cap = BigRational::new(BigInt::one(), BigInt::from(t));
    let (sb, sr) = net.block_sums(p);
    for m in sb.iter().chain(&sr) {
        if *m > cap {
            return Err(Error::InfeasibleMarginals { block_mass: m.to_string(), target: t });
        }
    }

    let tb = BigInt::from(t);
    let d0 = p.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut b: Vec<BigInt> = p.iter().map(|x| &tb * x.numer() * (&d0 / x.denom())).collect();
    let mut dd = d0.clone();
    let mut atoms: Vec<Vec<usize>> = Vec::new();
    let mut weights: Vec<BigInt> = Vec::new();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let zero = BigInt::zero();

    while dd.is_positive() {
        let (bs, rs) = net.block_sums(&b);
        let flag = |v: &BigInt| ((v == &dd) as i64, v.is_positive() as i64);
        let bounds = Bounds {
            elem: b.iter().map(flag).collect(),
            b: bs.iter().map(flag).collect(),
            r: rs.iter().map(flag).collect(),
        };
        let g = integral_flow(&net, &bounds, t as i64)
            .ok_or_else(|| Error::InvalidParameters("flow polytope face is empty".into()))?;
        let gi: Vec<i64> = g.iter().map(|&x| x as i64).collect();
        let (gb, gr) = net.block_sums(&gi);
        let mut a = dd.clone();
        for (u, &on) in g.iter().enumerate() {
            if on && b[u] < dd {
                a = a.min(b[u].clone());
            }
            if !on && b[u] > zero {
                a = a.min(&dd - &b[u]);
            }
        }
        for (k, s) in bs.iter().enumerate() {
            if gb[k] == 0 {
                a = a.min(&dd - s);
            }
        }
        for (k, s) in rs.iter().enumerate() {
            if gr[k] == 0 {
                a = a.min(&dd - s);
            }
        }
        debug_assert!(a.is_positive());
        for (u, &on) in g.iter().enumerate() {
            if on {
                b[u] -= &a;
            }
        }
        dd -= &a;
        let members: Vec<usize> = (0..n).filter(|&u| g[u]).collect();
        match index.get(&members) {
            Some(&k) => weights[k] += &a,
            None => {
                index.insert(members.clone(), atoms.len());
                atoms.push(members);
                weights.push(a);
            }
        }
    }
    let g = weights.iter().fold(d0.clone(), |acc, w| acc.gcd(w));
    Ok(SamplingDistribution {
        ground: ground.to_vec(),
        t,
        atoms,
        weight_num: weights.into_iter().map(|w| w / &g).collect(),
        weight_den: d0 / g,
        num_arcs: net.num_arcs(),
    })
}

/// Uniform integer in `[0, bound)`.
pub fn uniform_below<R: Rng + ?Sized>(bound: &BigInt, rng: &mut R) -> BigInt {
    if let Some(b) = bound.to_u64() {
        return BigInt::from(rng.gen_range(0..b));
    }
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top = bits - 32 * (words as u64 - 1);
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
        if top < 32 {
            digits[words - 1] &= (1u32 << top) - 1;
        }
        let v = BigInt::from(BigUint::new(digits));
        if &v < bound {
            return v;
        }
    }
}

/// Index of an atom drawn with probability equal to its weight.
pub fn two_partition_draw_index<R: Rng + ?Sized>(dist: &SamplingDistribution, rng: &mut R) -> usize {
    let x = uniform_below(&dist.weight_den, rng);
    let mut acc = BigInt::zero();
    for (k, w) in dist.weight_num.iter().enumerate() {
        acc += w;
        if x < acc {
            return k;
        }
    }
    dist.atoms.len() - 1
}

pub fn two_partition_draw<R: Rng + ?Sized>(dist: &SamplingDistribution, rng: &mut R) -> Vec<Point> {
    dist.atom_points(two_partition_draw_index(dist, rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn forced_single_atom() {
        let ground: Vec<Point> = (0..4).map(|i| vec![i]).collect();
        let singles: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
        let p = vec![q(1, 4); 4];
        let dist = two_partition_decompose(&ground, &singles, &singles, 4, &p).unwrap();
        assert_eq!(dist.atoms, vec![vec![0, 1, 2, 3]]);
        assert_eq!(dist.weights(), vec![q(1, 1)]);
    }

    #[test]
    fn rows_and_columns() {
        let ground = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        let rows = vec![vec![0, 1], vec![2, 3]];
        let cols = vec![vec![0, 2], vec![1, 3]];
        let p = vec![q(1, 4); 4];
        let dist = two_partition_decompose(&ground, &rows, &cols, 2, &p).unwrap();
        let mut atoms = dist.atoms.clone();
        atoms.sort();
        assert_eq!(atoms, vec![vec![0, 3], vec![1, 2]]);
        assert_eq!(dist.weights(), vec![q(1, 2), q(1, 2)]);
        assert!(dist.verify(&p, &rows, &cols));
    }

    #[test]
    fn three_point_example() {
        let ground = vec![vec![0], vec![1], vec![2]];
        let singles = vec![vec![0], vec![1], vec![2]];
        let r = vec![vec![0, 1], vec![2]];
        let p = vec![q(1, 4), q(1, 4), q(1, 2)];
        let dist = two_partition_decompose(&ground, &singles, &r, 2, &p).unwrap();
        let mut atoms = dist.atoms.clone();
        atoms.sort();
        assert_eq!(atoms, vec![vec![0, 2], vec![1, 2]]);
        assert_eq!(dist.marginals(), vec![q(1, 2), q(1, 2), q(1, 1)]);
    }

    #[test]
    fn infeasible_and_bad_partition() {
        let ground = vec![vec![0], vec![1]];
        let p = vec![q(1, 2), q(1, 2)];
        let one = vec![vec![0, 1]];
        let singles = vec![vec![0], vec![1]];
        assert!(matches!(
            two_partition_decompose(&ground, &one, &singles, 2, &p),
            Err(Error::InfeasibleMarginals { .. })
        ));
        assert!(matches!(
            two_partition_decompose(&ground, &[vec![0]], &singles, 1, &p),
            Err(Error::NotAPartition(_))
        ));
    }
}
